#pragma once

// The four compared classifiers behind one probability contract:
// L2-regularized logistic regression, random forest, second-order gradient
// boosting on logistic loss (the "XGBoost" arm), and a ReLU multilayer
// perceptron.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "vapipe/common.hpp"
#include "vapipe/dataset.hpp"
#include "vapipe/tree.hpp"

namespace vapipe {

enum class ClassifierKind { logistic, random_forest, gradient_boosting, mlp };

inline constexpr std::array<ClassifierKind, 4> kAllClassifiers = {
    ClassifierKind::logistic, ClassifierKind::random_forest, ClassifierKind::gradient_boosting,
    ClassifierKind::mlp};

inline const char* classifier_key(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::logistic: return "logistic";
    case ClassifierKind::random_forest: return "random_forest";
    case ClassifierKind::gradient_boosting: return "xgboost";
    case ClassifierKind::mlp: return "neural_network";
  }
  return "";
}

inline const char* classifier_display_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::logistic: return "Logistic Regression";
    case ClassifierKind::random_forest: return "Random Forest";
    case ClassifierKind::gradient_boosting: return "XGBoost";
    case ClassifierKind::mlp: return "Neural Network";
  }
  return "";
}

inline ClassifierKind parse_classifier_kind(const std::string& s) {
  for (auto k : kAllClassifiers)
    if (s == classifier_key(k)) return k;
  if (s == "gbt" || s == "gradient_boosting") return ClassifierKind::gradient_boosting;
  if (s == "forest" || s == "rf") return ClassifierKind::random_forest;
  if (s == "mlp" || s == "nn") return ClassifierKind::mlp;
  if (s == "logreg" || s == "lr") return ClassifierKind::logistic;
  fail(ErrorKind::config, "unknown classifier '" + s + "'");
}

struct LogisticParams {
  double l2 = 0.1;
  double learning_rate = 1.0;  // initial step; halved on insufficient decrease
  std::size_t max_iter = 500;
  double tolerance = 1e-6;  // gradient-norm stopping threshold
  bool standardize = true;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = floor(sqrt(d))
  bool bootstrap = true;
};

struct BoostingParams {
  double learning_rate = 0.1;
  std::size_t n_rounds = 50;
  std::size_t max_depth = 3;
  double l2_leaf = 1.0;
  double min_child_weight = 1.0;
  std::size_t min_samples_leaf = 1;
};

struct MlpParams {
  std::vector<std::size_t> hidden = {32};
  double learning_rate = 0.05;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double l2 = 1e-4;
  bool standardize = true;
};

struct TrainConfig {
  LogisticParams logistic;
  ForestParams forest;
  BoostingParams boosting;
  MlpParams mlp;
  std::uint64_t seed = 0;
};

// Per-feature affine map fitted on training data; identity when unused.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer identity(std::size_t d) {
    return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  }

  static Standardizer fit(const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) s.mean[c] += x(r, c);
    for (auto& m : s.mean) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) var[c] += (x(r, c) - s.mean[c]) * (x(r, c) - s.mean[c]);
    for (std::size_t c = 0; c < d; ++c) {
      const double sd = std::sqrt(var[c] / static_cast<double>(n));
      s.scale[c] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
    return out;
  }

  bool operator==(const Standardizer&) const = default;
};

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticModel {
  std::vector<double> weights;  // in standardized feature space
  double bias = 0.0;
  double l2 = 0.0;
  Standardizer standardizer;
  std::size_t iterations = 0;

  std::size_t n_features() const { return weights.size(); }
};

// Mean negative log-likelihood plus (l2/2)|w|^2; the bias is unpenalized.
inline double logistic_objective(std::span<const double> w, double b, const Matrix& x,
                                 const std::vector<std::uint8_t>& y, double l2) {
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double z = dot(w, x.row(r)) + b;
    loss += softplus(z) - y[r] * z;
  }
  loss /= static_cast<double>(x.rows());
  return loss + 0.5 * l2 * dot(w, w);
}

// Gradient of logistic_objective; the last entry is the bias component.
inline std::vector<double> logistic_gradient(std::span<const double> w, double b, const Matrix& x,
                                             const std::vector<std::uint8_t>& y, double l2) {
  const std::size_t d = w.size();
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    const double err = sigmoid(dot(w, xr) + b) - y[r];
    for (std::size_t c = 0; c < d; ++c) g[c] += err * xr[c];
    g[d] += err;
  }
  for (auto& v : g) v /= static_cast<double>(x.rows());
  for (std::size_t c = 0; c < d; ++c) g[c] += l2 * w[c];
  return g;
}

// Full-batch gradient descent with backtracking (Armijo) step control.
inline LogisticModel fit_logistic(const LabeledDataset& data, const TrainConfig& cfg) {
  const auto& p = cfg.logistic;
  require(data.size() >= 1, ErrorKind::empty_corpus, "fit_logistic: no rows");
  require(p.l2 >= 0 && p.learning_rate > 0, ErrorKind::config, "fit_logistic: invalid parameters");
  LogisticModel m;
  m.l2 = p.l2;
  m.standardizer = p.standardize ? Standardizer::fit(data.features)
                                 : Standardizer::identity(data.width());
  const Matrix x = m.standardizer.apply(data.features);
  const std::size_t d = data.width();
  m.weights.assign(d, 0.0);

  double step = p.learning_rate;
  double f = logistic_objective(m.weights, m.bias, x, data.labels, p.l2);
  std::vector<double> w_try(d);
  for (std::size_t it = 0; it < p.max_iter; ++it) {
    const auto g = logistic_gradient(m.weights, m.bias, x, data.labels, p.l2);
    const double gnorm2 = std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    m.iterations = it;
    if (std::sqrt(gnorm2) < p.tolerance) break;
    for (;;) {
      for (std::size_t c = 0; c < d; ++c) w_try[c] = m.weights[c] - step * g[c];
      const double b_try = m.bias - step * g[d];
      const double f_try = logistic_objective(w_try, b_try, x, data.labels, p.l2);
      if (std::isfinite(f_try) && f_try <= f - 0.5 * step * gnorm2) {
        m.weights = w_try;
        m.bias = b_try;
        f = f_try;
        step = std::min(step * 1.25, p.learning_rate * 16);
        break;
      }
      step *= 0.5;
      if (step < 1e-14) {
        if (!std::isfinite(f))
          fail(ErrorKind::divergence,
               format("logistic regression diverged at iteration %zu (step %g)", it, step));
        return m;  // no further progress possible in floating point
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Random forest

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
};

inline std::size_t resolved_max_features(const ForestParams& p, std::size_t d) {
  if (p.max_features) return std::min(p.max_features, d);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
}

inline RandomForestModel fit_random_forest(const LabeledDataset& data, const TrainConfig& cfg) {
  const auto& p = cfg.forest;
  require(data.size() >= 1, ErrorKind::empty_corpus, "fit_random_forest: no rows");
  require(p.n_trees >= 1, ErrorKind::config, "n_trees must be >= 1");
  RandomForestModel m;
  m.params = p;
  m.seed = cfg.seed;
  m.n_features = data.width();
  TreeParams tp;
  tp.max_depth = p.max_depth;
  tp.min_samples_leaf = p.min_samples_leaf;
  tp.max_features = resolved_max_features(p, data.width());
  const std::size_t n = data.size();
  for (std::size_t t = 0; t < p.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(cfg.seed, t);
    Rng rng(tree_seed);
    std::vector<std::size_t> rows(n);
    if (p.bootstrap) {
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    m.trees.push_back(fit_decision_tree(data, tp, nullptr, std::move(rows), rng.next()));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Gradient boosting

struct GradientBoostedModel {
  double initial_score = 0.0;  // prior log-odds
  std::vector<DecisionTree> stages;
  BoostingParams params;
  std::vector<double> training_loss;  // [0] prior only, [r] after r rounds
  std::size_t n_features = 0;

  double raw_score(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : stages) s += t.predict(x);
    return initial_score + params.learning_rate * s;
  }
};

inline double mean_log_loss(const std::vector<double>& scores, const std::vector<std::uint8_t>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += softplus(scores[i]) - y[i] * scores[i];
  return total / static_cast<double>(y.size());
}

// First and second derivatives of the logistic loss in the raw score:
// g = p - y, h = p(1 - p).
inline GradientPairs logistic_gradient_pairs(const std::vector<double>& scores,
                                             const std::vector<std::uint8_t>& y) {
  GradientPairs gp;
  gp.grad.resize(y.size());
  gp.hess.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = sigmoid(scores[i]);
    gp.grad[i] = p - y[i];
    gp.hess[i] = p * (1.0 - p);
  }
  return gp;
}

inline GradientBoostedModel fit_gradient_boosting(const LabeledDataset& data, const TrainConfig& cfg) {
  const auto& p = cfg.boosting;
  require(data.size() >= 1, ErrorKind::empty_corpus, "fit_gradient_boosting: no rows");
  require(p.learning_rate >= 0, ErrorKind::config, "boosting learning_rate must be >= 0");
  const std::size_t n = data.size();
  const double base = static_cast<double>(data.count(1)) / static_cast<double>(n);
  require(base > 0.0 && base < 1.0, ErrorKind::degenerate,
          "gradient boosting needs both classes (prior log-odds would be infinite)");

  GradientBoostedModel m;
  m.params = p;
  m.n_features = data.width();
  m.initial_score = std::log(base / (1.0 - base));
  std::vector<double> scores(n, m.initial_score);
  m.training_loss.push_back(mean_log_loss(scores, data.labels));

  TreeParams tp;
  tp.max_depth = p.max_depth;
  tp.min_samples_leaf = p.min_samples_leaf;
  tp.l2_leaf = p.l2_leaf;
  tp.min_child_weight = p.min_child_weight;
  for (std::size_t round = 0; round < p.n_rounds; ++round) {
    const auto gp = logistic_gradient_pairs(scores, data.labels);
    m.stages.push_back(fit_decision_tree(data, tp, &gp));
    const auto& tree = m.stages.back();
    for (std::size_t i = 0; i < n; ++i) scores[i] += p.learning_rate * tree.predict(data.features.row(i));
    const double loss = mean_log_loss(scores, data.labels);
    require(std::isfinite(loss), ErrorKind::divergence,
            format("gradient boosting diverged at round %zu", round + 1));
    m.training_loss.push_back(loss);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Multilayer perceptron

struct MlpModel {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., 1
  std::vector<Matrix> weights;           // weights[l] is sizes[l+1] x sizes[l]
  std::vector<std::vector<double>> biases;
  Standardizer standardizer;
  double l2 = 0.0;

  std::size_t n_features() const { return layer_sizes.front(); }

  // Output probability for an already-standardized row; keeps activations
  // when `acts` is provided.
  double forward(std::span<const double> x, std::vector<std::vector<double>>* acts = nullptr) const {
    std::vector<double> a(x.begin(), x.end());
    if (acts) {
      acts->clear();
      acts->push_back(a);
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const auto& w = weights[l];
      std::vector<double> z(w.rows());
      for (std::size_t o = 0; o < w.rows(); ++o) z[o] = biases[l][o] + dot(w.row(o), a);
      const bool last = l + 1 == weights.size();
      if (!last)
        for (auto& v : z) v = std::max(0.0, v);
      a = std::move(z);
      if (acts) acts->push_back(a);
    }
    return sigmoid(a[0]);
  }
};

struct MlpGradient {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Mean binary cross-entropy plus (l2/2) * sum of squared weights, on
// standardized inputs.
inline double mlp_loss(const MlpModel& m, const Matrix& x, const std::vector<std::uint8_t>& y) {
  std::vector<std::vector<double>> acts;
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    m.forward(x.row(r), &acts);
    const double z = acts.back()[0];
    loss += softplus(z) - y[r] * z;
  }
  loss /= static_cast<double>(x.rows());
  double reg = 0.0;
  for (const auto& w : m.weights) reg += dot(w.data(), w.data());
  return loss + 0.5 * m.l2 * reg;
}

// Backpropagated gradient of mlp_loss over `rows` of x (all rows when empty).
inline MlpGradient mlp_gradient(const MlpModel& m, const Matrix& x, const std::vector<std::uint8_t>& y,
                                std::span<const std::size_t> rows = {}) {
  MlpGradient g;
  for (const auto& w : m.weights) g.weights.emplace_back(w.rows(), w.cols());
  for (const auto& b : m.biases) g.biases.emplace_back(b.size(), 0.0);
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(x.rows());
    std::iota(all.begin(), all.end(), 0);
    rows = all;
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  std::vector<std::vector<double>> acts;
  for (auto r : rows) {
    const double p = m.forward(x.row(r), &acts);
    std::vector<double> delta{(p - y[r]) * inv};
    for (std::size_t l = m.weights.size(); l-- > 0;) {
      const auto& a_in = acts[l];
      auto& gw = g.weights[l];
      for (std::size_t o = 0; o < delta.size(); ++o) {
        auto row = gw.row(o);
        for (std::size_t i = 0; i < a_in.size(); ++i) row[i] += delta[o] * a_in[i];
        g.biases[l][o] += delta[o];
      }
      if (l == 0) break;
      std::vector<double> prev(a_in.size(), 0.0);
      const auto& w = m.weights[l];
      for (std::size_t o = 0; o < delta.size(); ++o) {
        auto row = w.row(o);
        for (std::size_t i = 0; i < prev.size(); ++i) prev[i] += delta[o] * row[i];
      }
      // ReLU derivative: zero where the activation was clipped.
      for (std::size_t i = 0; i < prev.size(); ++i)
        if (a_in[i] <= 0.0) prev[i] = 0.0;
      delta = std::move(prev);
    }
  }
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    auto& gw = g.weights[l].data();
    const auto& w = m.weights[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) gw[i] += m.l2 * w[i];
  }
  return g;
}

// He-uniform initialization for ReLU layers, Glorot-uniform for the output.
inline MlpModel init_mlp(std::size_t n_features, const MlpParams& p, std::uint64_t seed) {
  MlpModel m;
  m.l2 = p.l2;
  m.layer_sizes.push_back(n_features);
  for (auto h : p.hidden) m.layer_sizes.push_back(h);
  m.layer_sizes.push_back(1);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const std::size_t in = m.layer_sizes[l], out = m.layer_sizes[l + 1];
    const bool last = l + 2 == m.layer_sizes.size();
    const double limit = last ? std::sqrt(6.0 / static_cast<double>(in + out))
                              : std::sqrt(6.0 / static_cast<double>(in));
    Matrix w(out, in);
    for (auto& v : w.data()) v = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, 0.0);
  }
  m.standardizer = Standardizer::identity(n_features);
  return m;
}

inline MlpModel fit_mlp(const LabeledDataset& data, const TrainConfig& cfg) {
  const auto& p = cfg.mlp;
  require(data.size() >= 1, ErrorKind::empty_corpus, "fit_mlp: no rows");
  require(p.learning_rate > 0 && p.batch_size >= 1 && p.epochs >= 1, ErrorKind::config,
          "fit_mlp: invalid parameters");
  for (auto h : p.hidden) require(h >= 1, ErrorKind::config, "hidden layer sizes must be >= 1");
  MlpModel m = init_mlp(data.width(), p, cfg.seed);
  if (p.standardize) m.standardizer = Standardizer::fit(data.features);
  const Matrix x = m.standardizer.apply(data.features);

  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += p.batch_size) {
      const std::size_t end = std::min(order.size(), start + p.batch_size);
      const auto g = mlp_gradient(m, x, data.labels,
                                  std::span<const std::size_t>(order).subspan(start, end - start));
      for (std::size_t l = 0; l < m.weights.size(); ++l) {
        auto& w = m.weights[l].data();
        const auto& gw = g.weights[l].data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= p.learning_rate * gw[i];
        for (std::size_t o = 0; o < m.biases[l].size(); ++o)
          m.biases[l][o] -= p.learning_rate * g.biases[l][o];
      }
    }
    bool finite = true;
    for (const auto& w : m.weights) finite = finite && all_finite(w.data());
    require(finite, ErrorKind::divergence, format("neural network diverged at epoch %zu", epoch + 1));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Uniform contract

using TrainedClassifier =
    std::variant<LogisticModel, RandomForestModel, GradientBoostedModel, MlpModel>;

inline ClassifierKind classifier_kind(const TrainedClassifier& c) {
  return static_cast<ClassifierKind>(c.index());
}

inline std::size_t classifier_width(const TrainedClassifier& c) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticModel> || std::is_same_v<T, MlpModel>)
          return m.n_features();
        else
          return m.n_features;
      },
      c);
}

inline TrainedClassifier fit_classifier(ClassifierKind kind, const LabeledDataset& data,
                                        const TrainConfig& cfg) {
  switch (kind) {
    case ClassifierKind::logistic: return fit_logistic(data, cfg);
    case ClassifierKind::random_forest: return fit_random_forest(data, cfg);
    case ClassifierKind::gradient_boosting: return fit_gradient_boosting(data, cfg);
    case ClassifierKind::mlp: return fit_mlp(data, cfg);
  }
  fail(ErrorKind::config, "unknown classifier kind");
}

inline std::vector<double> predict_proba(const TrainedClassifier& model, const Matrix& features) {
  const std::size_t width = classifier_width(model);
  require(features.cols() == width || features.rows() == 0, ErrorKind::shape,
          format("predict_proba: model expects %zu features, got %zu", width, features.cols()));
  std::vector<double> out(features.rows());
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          const Matrix x = m.standardizer.apply(features);
          for (std::size_t r = 0; r < x.rows(); ++r) out[r] = sigmoid(dot(m.weights, x.row(r)) + m.bias);
        } else if constexpr (std::is_same_v<T, RandomForestModel>) {
          for (std::size_t r = 0; r < features.rows(); ++r) {
            double s = 0.0;
            for (const auto& t : m.trees) s += t.predict(features.row(r));
            out[r] = s / static_cast<double>(m.trees.size());
          }
        } else if constexpr (std::is_same_v<T, GradientBoostedModel>) {
          for (std::size_t r = 0; r < features.rows(); ++r) out[r] = sigmoid(m.raw_score(features.row(r)));
        } else {
          const Matrix x = m.standardizer.apply(features);
          for (std::size_t r = 0; r < x.rows(); ++r) out[r] = m.forward(x.row(r));
        }
      },
      model);
  return out;
}

inline std::vector<std::uint8_t> predict_label(const std::vector<double>& probs, double threshold = 0.5) {
  require(threshold >= 0.0 && threshold <= 1.0, ErrorKind::config, "threshold must lie in [0,1]");
  std::vector<std::uint8_t> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1 : 0;
  return out;
}

}  // namespace vapipe
