#pragma once

// Paragraph vectors: distributed memory (PV-DM) and distributed bag of words
// (PV-DBOW), trained by plain SGD with a full softmax output layer (negative
// sampling optional).
//
// Objective, averaged over every target position t of every document:
//     J = (1/T) * sum_t log p(w_t | context_t, p_doc)
//     p(w | .) = exp(y_w) / sum_v exp(y_v),   y = U h + b
// where h is the input layer:
//   PV-DM concatenate: [p_doc ; w_{t-k} ; ... ; w_{t-1}]  (width dim*(k+1))
//   PV-DM average:     (p_doc + sum of context vectors) / (1 + #context)
//   PV-DBOW:           p_doc
// Context windows hold the k tokens preceding the target and are truncated at
// the start of the document; in concatenate mode missing slots read as zero.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vapipe/common.hpp"
#include "vapipe/corpus.hpp"

namespace vapipe {

enum class PvMode { dm, dbow };
enum class DmCombine { concatenate, average };
enum class OutputLayer { softmax, negative_sampling };

inline const char* pv_mode_name(PvMode m) { return m == PvMode::dm ? "dm" : "dbow"; }

struct EmbeddingConfig {
  std::size_t dim = 50;
  std::size_t window = 9;
  std::size_t epochs = 20;
  double learning_rate = 0.025;
  double min_learning_rate = 1e-4;
  PvMode mode = PvMode::dm;
  DmCombine dm_combine = DmCombine::concatenate;
  OutputLayer output = OutputLayer::softmax;
  std::size_t negative = 5;
  std::uint64_t seed = 1;
  std::size_t min_count = 1;

  void validate() const {
    require(dim >= 1, ErrorKind::config, "embedding dim must be >= 1");
    require(window >= 1, ErrorKind::config, "window must be >= 1");
    require(epochs >= 1, ErrorKind::config, "epochs must be >= 1");
    require(learning_rate > 0 && std::isfinite(learning_rate), ErrorKind::config,
            "learning_rate must be positive");
    require(min_learning_rate > 0 && min_learning_rate <= learning_rate, ErrorKind::config,
            "min_learning_rate must lie in (0, learning_rate]");
    require(min_count >= 1, ErrorKind::config, "min_count must be >= 1");
    require(output != OutputLayer::negative_sampling || negative >= 1, ErrorKind::config,
            "negative sampling needs at least one negative");
  }

  std::size_t input_width() const {
    if (mode == PvMode::dm && dm_combine == DmCombine::concatenate) return dim * window + dim;
    return dim;
  }

  // Linear decay from learning_rate towards min_learning_rate, one value per epoch.
  double epoch_learning_rate(std::size_t epoch, std::size_t total) const {
    const double frac = static_cast<double>(epoch) / static_cast<double>(total);
    return learning_rate - (learning_rate - min_learning_rate) * frac;
  }
};

struct Vocabulary {
  std::vector<std::string> tokens;   // index -> token
  std::vector<std::size_t> counts;   // index -> corpus frequency
  std::unordered_map<std::string, std::size_t> index;
  std::size_t min_count = 1;

  std::size_t size() const { return tokens.size(); }

  std::optional<std::size_t> find(const std::string& token) const {
    auto it = index.find(token);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  // In-vocabulary indices of `tokens`, out-of-vocabulary tokens dropped.
  std::vector<std::size_t> encode(const std::vector<std::string>& doc) const {
    std::vector<std::size_t> ids;
    ids.reserve(doc.size());
    for (const auto& t : doc)
      if (auto i = find(t)) ids.push_back(*i);
    return ids;
  }
};

// Training input: a tag naming the paragraph vector plus tokens. Labels are
// deliberately absent.
struct TrainingDoc {
  std::size_t tag = 0;
  std::vector<std::string> tokens;
};

inline std::vector<TrainingDoc> to_training_docs(const std::vector<TokenizedDoc>& docs) {
  std::vector<TrainingDoc> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back({d.doc_id, d.tokens});
  return out;
}

// Order: descending count, ties lexicographic.
template <typename Doc>
Vocabulary build_vocabulary(const std::vector<Doc>& corpus, std::size_t min_count) {
  require(!corpus.empty(), ErrorKind::empty_corpus, "build_vocabulary: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus)
    for (const auto& t : doc.tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, n] : counts)
    if (n >= min_count) kept.emplace_back(token, n);
  require(!kept.empty(), ErrorKind::config,
          format("empty vocabulary after filtering with min_count=%zu", min_count));
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  v.min_count = min_count;
  for (auto& [token, n] : kept) {
    v.index.emplace(token, v.tokens.size());
    v.tokens.push_back(token);
    v.counts.push_back(n);
  }
  return v;
}

struct ParagraphModel {
  EmbeddingConfig config;
  Vocabulary vocab;
  std::vector<std::size_t> tags;  // sorted; row i of paragraph_vectors belongs to tags[i]
  Matrix word_vectors;            // |V| x dim
  Matrix paragraph_vectors;       // |D| x dim
  Matrix output_weights;          // |V| x input_width
  std::vector<double> output_bias;  // |V|, unused by negative sampling
  std::vector<double> epoch_objective;  // mean per-position training objective

  std::size_t dim() const { return config.dim; }

  std::optional<std::size_t> paragraph_row(std::size_t tag) const {
    auto it = std::lower_bound(tags.begin(), tags.end(), tag);
    if (it == tags.end() || *it != tag) return std::nullopt;
    return static_cast<std::size_t>(it - tags.begin());
  }

  std::span<const double> paragraph_vector(std::size_t tag) const {
    auto row = paragraph_row(tag);
    require(row.has_value(), ErrorKind::config, format("unknown paragraph tag %zu", tag));
    return paragraph_vectors.row(*row);
  }
};

struct DocVector {
  std::size_t doc_id = 0;
  std::vector<double> values;
  bool degenerate = false;  // no in-vocabulary tokens; values are all zero
};

// exp(y_i) / sum_j exp(y_j) with the maximum subtracted first.
inline std::vector<double> softmax_predict(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) z += (out[i] = std::exp(scores[i] - m));
  for (auto& v : out) v /= z;
  return out;
}

namespace detail {

struct Position {
  std::span<const std::size_t> ids;
  std::size_t target;
};

// Fills h from the paragraph vector `para` and the context preceding the target.
inline void build_input(const ParagraphModel& m, std::span<const double> para,
                        const Position& pos, std::vector<double>& h) {
  const auto& cfg = m.config;
  const std::size_t dim = cfg.dim;
  h.assign(cfg.input_width(), 0.0);
  std::copy(para.begin(), para.end(), h.begin());
  if (cfg.mode == PvMode::dbow) return;
  const std::size_t first = pos.target >= cfg.window ? pos.target - cfg.window : 0;
  if (cfg.dm_combine == DmCombine::concatenate) {
    // slot j holds position target - window + j
    for (std::size_t c = first; c < pos.target; ++c) {
      const std::size_t slot = c + cfg.window - pos.target;
      auto w = m.word_vectors.row(pos.ids[c]);
      std::copy(w.begin(), w.end(), h.begin() + static_cast<std::ptrdiff_t>(dim * (slot + 1)));
    }
  } else {
    for (std::size_t c = first; c < pos.target; ++c) {
      auto w = m.word_vectors.row(pos.ids[c]);
      for (std::size_t i = 0; i < dim; ++i) h[i] += w[i];
    }
    const double inv = 1.0 / static_cast<double>(1 + pos.target - first);
    for (auto& v : h) v *= inv;
  }
}

// Routes the input-layer gradient dh back to its sources:
// on_para(span) receives the paragraph share, on_word(id, span, scale) each
// context word's share.
template <typename OnPara, typename OnWord>
void scatter_input(const ParagraphModel& m, const Position& pos, std::span<const double> dh,
                   OnPara&& on_para, OnWord&& on_word) {
  const auto& cfg = m.config;
  const std::size_t dim = cfg.dim;
  if (cfg.mode == PvMode::dbow) {
    on_para(dh.subspan(0, dim), 1.0);
    return;
  }
  const std::size_t first = pos.target >= cfg.window ? pos.target - cfg.window : 0;
  if (cfg.dm_combine == DmCombine::concatenate) {
    on_para(dh.subspan(0, dim), 1.0);
    for (std::size_t c = first; c < pos.target; ++c) {
      const std::size_t slot = c + cfg.window - pos.target;
      on_word(pos.ids[c], dh.subspan(dim * (slot + 1), dim), 1.0);
    }
  } else {
    const double inv = 1.0 / static_cast<double>(1 + pos.target - first);
    on_para(dh.subspan(0, dim), inv);
    for (std::size_t c = first; c < pos.target; ++c) on_word(pos.ids[c], dh.subspan(0, dim), inv);
  }
}

// Full-softmax forward pass. Leaves d(-log p)/dy = q - e_target in `ds` and
// returns log p(target).
inline double softmax_forward(const ParagraphModel& m, std::span<const double> h,
                              std::size_t target, std::vector<double>& ds) {
  const std::size_t V = m.vocab.size();
  ds.resize(V);
  for (std::size_t v = 0; v < V; ++v) ds[v] = m.output_bias[v] + dot(m.output_weights.row(v), h);
  const double mx = *std::max_element(ds.begin(), ds.end());
  double z = 0.0;
  for (auto& s : ds) z += std::exp(s - mx);
  const double log_z = mx + std::log(z);
  const double log_p = ds[target] - log_z;
  for (auto& s : ds) s = std::exp(s - log_z);
  ds[target] -= 1.0;
  return log_p;
}

// dh = U^T ds
inline void output_backward(const ParagraphModel& m, std::span<const double> ds,
                            std::vector<double>& dh) {
  dh.assign(m.output_weights.cols(), 0.0);
  for (std::size_t v = 0; v < ds.size(); ++v) {
    const double g = ds[v];
    if (g == 0.0) continue;
    auto row = m.output_weights.row(v);
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += g * row[i];
  }
}

// Cumulative unigram^0.75 distribution for negative sampling.
inline std::vector<double> noise_distribution(const Vocabulary& vocab) {
  std::vector<double> cdf(vocab.size());
  double total = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i)
    cdf[i] = (total += std::pow(static_cast<double>(vocab.counts[i]), 0.75));
  for (auto& c : cdf) c /= total;
  return cdf;
}

inline std::size_t sample_noise(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

// One SGD step at `pos`. Output-layer parameters are written through
// `out` when it is non-null (it may alias `m`); the input gradient, already
// multiplied by -lr, is scattered through the callbacks. Returns the
// position's objective term.
template <typename OnPara, typename OnWord>
double sgd_step(const ParagraphModel& m, ParagraphModel* out, std::span<const double> para,
                const Position& pos, double lr, const std::vector<double>& noise, Rng& rng,
                std::vector<double>& h, std::vector<double>& ds, std::vector<double>& dh,
                OnPara&& on_para, OnWord&& on_word) {
  build_input(m, para, pos, h);
  const std::size_t target = pos.ids[pos.target];
  double objective;
  if (m.config.output == OutputLayer::softmax) {
    objective = softmax_forward(m, h, target, ds);
    output_backward(m, ds, dh);
    if (out) {
      for (std::size_t v = 0; v < ds.size(); ++v) {
        const double g = lr * ds[v];
        if (g == 0.0) continue;
        auto row = out->output_weights.row(v);
        for (std::size_t i = 0; i < h.size(); ++i) row[i] -= g * h[i];
        out->output_bias[v] -= g;
      }
    }
  } else {
    // Negative sampling: maximize log s(u_t.h) + sum log s(-u_n.h).
    dh.assign(h.size(), 0.0);
    objective = 0.0;
    for (std::size_t k = 0; k <= m.config.negative; ++k) {
      std::size_t word = target;
      double label = 1.0;
      if (k) {
        word = sample_noise(noise, rng);
        if (word == target) continue;
        label = 0.0;
      }
      auto row = m.output_weights.row(word);
      const double score = dot(row, h);
      const double f = sigmoid(score);
      objective += label ? -softplus(-score) : -softplus(score);
      const double g = f - label;  // d(-objective)/dscore
      for (std::size_t i = 0; i < h.size(); ++i) dh[i] += g * row[i];
      if (out) {
        auto w = out->output_weights.row(word);
        for (std::size_t i = 0; i < h.size(); ++i) w[i] -= lr * g * h[i];
      }
    }
  }
  for (auto& v : dh) v *= -lr;
  scatter_input(m, pos, dh, on_para, on_word);
  return objective;
}

}  // namespace detail

// Mean log-probability of every target under the full softmax. Documents are
// matched to paragraph vectors by tag.
inline double avg_log_prob(const ParagraphModel& model, const std::vector<TrainingDoc>& corpus) {
  double total = 0.0;
  std::size_t positions = 0;
  std::vector<double> h, ds;
  for (const auto& doc : corpus) {
    const auto para = model.paragraph_vector(doc.tag);
    const auto ids = model.vocab.encode(doc.tokens);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      detail::build_input(model, para, {ids, t}, h);
      total += detail::softmax_forward(model, h, ids[t], ds);
      ++positions;
    }
  }
  require(positions > 0, ErrorKind::degenerate,
          "avg_log_prob: objective undefined, no valid target positions");
  return total / static_cast<double>(positions);
}

inline double avg_log_prob(const ParagraphModel& model, const std::vector<TokenizedDoc>& corpus) {
  return avg_log_prob(model, to_training_docs(corpus));
}

// Gradient of avg_log_prob (ascent direction) with respect to every parameter.
struct ObjectiveGradient {
  double objective = 0.0;
  Matrix word_vectors;
  Matrix paragraph_vectors;
  Matrix output_weights;
  std::vector<double> output_bias;
};

inline ObjectiveGradient objective_gradient(const ParagraphModel& model,
                                            const std::vector<TrainingDoc>& corpus) {
  ObjectiveGradient g;
  g.word_vectors = Matrix(model.word_vectors.rows(), model.word_vectors.cols());
  g.paragraph_vectors = Matrix(model.paragraph_vectors.rows(), model.paragraph_vectors.cols());
  g.output_weights = Matrix(model.output_weights.rows(), model.output_weights.cols());
  g.output_bias.assign(model.output_bias.size(), 0.0);

  std::size_t positions = 0;
  for (const auto& doc : corpus) positions += model.vocab.encode(doc.tokens).size();
  require(positions > 0, ErrorKind::degenerate,
          "objective_gradient: objective undefined, no valid target positions");
  const double scale = 1.0 / static_cast<double>(positions);

  std::vector<double> h, ds, dh;
  for (const auto& doc : corpus) {
    const std::size_t prow = *model.paragraph_row(doc.tag);
    const auto para = model.paragraph_vectors.row(prow);
    const auto ids = model.vocab.encode(doc.tokens);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const detail::Position pos{ids, t};
      detail::build_input(model, para, pos, h);
      g.objective += scale * detail::softmax_forward(model, h, ids[t], ds);
      detail::output_backward(model, ds, dh);
      for (std::size_t v = 0; v < ds.size(); ++v) {
        auto row = g.output_weights.row(v);
        for (std::size_t i = 0; i < h.size(); ++i) row[i] -= scale * ds[v] * h[i];
        g.output_bias[v] -= scale * ds[v];
      }
      detail::scatter_input(
          model, pos, dh,
          [&](std::span<const double> part, double s) {
            auto row = g.paragraph_vectors.row(prow);
            for (std::size_t i = 0; i < part.size(); ++i) row[i] -= scale * s * part[i];
          },
          [&](std::size_t id, std::span<const double> part, double s) {
            auto row = g.word_vectors.row(id);
            for (std::size_t i = 0; i < part.size(); ++i) row[i] -= scale * s * part[i];
          });
    }
  }
  return g;
}

// Model with initialized (untrained) parameters for `corpus`.
inline ParagraphModel init_paragraph_model(const std::vector<TrainingDoc>& corpus,
                                           const EmbeddingConfig& cfg) {
  cfg.validate();
  ParagraphModel m;
  m.config = cfg;
  m.vocab = build_vocabulary(corpus, cfg.min_count);
  for (const auto& d : corpus) m.tags.push_back(d.tag);
  std::sort(m.tags.begin(), m.tags.end());
  m.tags.erase(std::unique(m.tags.begin(), m.tags.end()), m.tags.end());

  Rng rng(cfg.seed);
  const double r = 0.5 / static_cast<double>(cfg.dim);
  m.word_vectors = Matrix(m.vocab.size(), cfg.dim);
  for (auto& v : m.word_vectors.data()) v = rng.uniform(-r, r);
  m.paragraph_vectors = Matrix(m.tags.size(), cfg.dim);
  for (auto& v : m.paragraph_vectors.data()) v = rng.uniform(-r, r);
  m.output_weights = Matrix(m.vocab.size(), cfg.input_width());
  m.output_bias.assign(m.vocab.size(), 0.0);
  return m;
}

inline ParagraphModel train_paragraph_model(const std::vector<TrainingDoc>& corpus,
                                            const EmbeddingConfig& cfg) {
  require(!corpus.empty(), ErrorKind::empty_corpus, "train_paragraph_model: empty corpus");
  ParagraphModel m = init_paragraph_model(corpus, cfg);
  Rng rng(derive_seed(cfg.seed, 1));

  struct Encoded {
    std::size_t row;
    std::vector<std::size_t> ids;
  };
  std::vector<Encoded> docs;
  for (const auto& d : corpus) docs.push_back({*m.paragraph_row(d.tag), m.vocab.encode(d.tokens)});
  const auto noise = cfg.output == OutputLayer::negative_sampling
                         ? detail::noise_distribution(m.vocab)
                         : std::vector<double>{};

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> h, ds, dh;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.epoch_learning_rate(epoch, cfg.epochs);
    rng.shuffle(order);
    double total = 0.0;
    std::size_t positions = 0;
    for (std::size_t di : order) {
      const auto& doc = docs[di];
      auto para = m.paragraph_vectors.row(doc.row);
      for (std::size_t t = 0; t < doc.ids.size(); ++t) {
        // Copy of the paragraph vector: the input is read before any update lands.
        const std::vector<double> para_in(para.begin(), para.end());
        total += detail::sgd_step(
            m, &m, para_in, {doc.ids, t}, lr, noise, rng, h, ds, dh,
            [&](std::span<const double> d, double s) {
              for (std::size_t i = 0; i < d.size(); ++i) para[i] += s * d[i];
            },
            [&](std::size_t id, std::span<const double> d, double s) {
              auto w = m.word_vectors.row(id);
              for (std::size_t i = 0; i < d.size(); ++i) w[i] += s * d[i];
            });
        ++positions;
      }
    }
    if (!std::isfinite(total) || !all_finite(m.output_weights.data()))
      fail(ErrorKind::divergence,
           format("paragraph model diverged at epoch %zu (learning rate %g)", epoch + 1, lr));
    m.epoch_objective.push_back(positions ? total / static_cast<double>(positions) : 0.0);
  }
  return m;
}

inline ParagraphModel train_paragraph_model(const std::vector<TokenizedDoc>& corpus,
                                            const EmbeddingConfig& cfg) {
  return train_paragraph_model(to_training_docs(corpus), cfg);
}

// Fits a fresh paragraph vector for `tokens` against frozen word vectors and
// output weights. Out-of-vocabulary tokens are skipped.
inline DocVector infer_vector(const ParagraphModel& model, const std::vector<std::string>& tokens,
                              std::size_t infer_epochs, std::uint64_t seed,
                              std::size_t doc_id = 0) {
  DocVector out;
  out.doc_id = doc_id;
  const std::size_t dim = model.dim();
  const auto ids = model.vocab.encode(tokens);
  if (ids.empty()) {
    out.values.assign(dim, 0.0);
    out.degenerate = true;
    return out;
  }
  require(infer_epochs >= 1, ErrorKind::config, "infer_epochs must be >= 1");
  Rng rng(seed);
  const double r = 0.5 / static_cast<double>(dim);
  std::vector<double> para(dim);
  for (auto& v : para) v = rng.uniform(-r, r);
  const auto noise = model.config.output == OutputLayer::negative_sampling
                         ? detail::noise_distribution(model.vocab)
                         : std::vector<double>{};

  std::vector<double> h, ds, dh;
  for (std::size_t epoch = 0; epoch < infer_epochs; ++epoch) {
    const double lr = model.config.epoch_learning_rate(epoch, infer_epochs);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const std::vector<double> para_in = para;
      detail::sgd_step(
          model, nullptr, para_in, {ids, t}, lr, noise, rng, h, ds, dh,
          [&](std::span<const double> d, double s) {
            for (std::size_t i = 0; i < d.size(); ++i) para[i] += s * d[i];
          },
          [](std::size_t, std::span<const double>, double) {});
    }
  }
  out.values = std::move(para);
  return out;
}

inline std::vector<double> concat_vectors(const std::vector<std::vector<double>>& parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace vapipe
