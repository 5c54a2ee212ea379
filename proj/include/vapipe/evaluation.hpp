#pragma once

// Stratified k-fold cross-validation over the binary, text and combined
// feature settings. Everything fitted from data (embeddings, resampling,
// classifiers) sees training-fold rows only; each fold audits that property
// and fails hard when it does not hold.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vapipe/classifiers.hpp"
#include "vapipe/common.hpp"
#include "vapipe/corpus.hpp"
#include "vapipe/dataset.hpp"
#include "vapipe/embeddings.hpp"
#include "vapipe/metrics.hpp"
#include "vapipe/resampling.hpp"

namespace vapipe {

enum class FeatureSetting { binary, text, combined };

inline constexpr std::array<FeatureSetting, 3> kAllSettings = {
    FeatureSetting::binary, FeatureSetting::text, FeatureSetting::combined};

inline const char* setting_key(FeatureSetting s) {
  switch (s) {
    case FeatureSetting::binary: return "binary";
    case FeatureSetting::text: return "text";
    case FeatureSetting::combined: return "combined";
  }
  return "";
}

inline FeatureSetting parse_setting(const std::string& s) {
  for (auto v : kAllSettings)
    if (s == setting_key(v)) return v;
  fail(ErrorKind::config, "unknown feature setting '" + s + "'");
}

inline bool uses_text(FeatureSetting s) { return s != FeatureSetting::binary; }

// ---------------------------------------------------------------------------
// Folds

struct FoldSplit {
  struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
  };
  std::vector<Fold> folds;

  std::size_t size() const { return folds.size(); }
};

// Shuffles each class by seed, then deals its members round-robin into the
// folds; the second class continues where the first stopped so fold sizes
// stay within one of each other.
inline FoldSplit stratified_kfold_split(const std::vector<std::uint8_t>& labels, std::size_t k,
                                        std::uint64_t seed) {
  require(k >= 2, ErrorKind::config, "stratified_kfold_split: k must be >= 2");
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i] ? 1 : 0].push_back(i);
  for (int c = 0; c < 2; ++c)
    require(members[c].size() >= k, ErrorKind::degenerate,
            format("degenerate stratification: class %d has %zu members for %zu folds", c,
                   members[c].size(), k));
  Rng rng(seed);
  FoldSplit split;
  split.folds.resize(k);
  std::size_t next = 0;
  for (int c = 0; c < 2; ++c) {
    rng.shuffle(members[c]);
    for (auto i : members[c]) {
      split.folds[next].test.push_back(i);
      next = (next + 1) % k;
    }
  }
  for (auto& f : split.folds) {
    std::sort(f.test.begin(), f.test.end());
    std::vector<bool> in_test(labels.size(), false);
    for (auto i : f.test) in_test[i] = true;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!in_test[i]) f.train.push_back(i);
  }
  return split;
}

// ---------------------------------------------------------------------------
// Inputs

// Records after preprocessing: what the cross-validation loop consumes.
struct PreparedCorpus {
  std::vector<std::vector<std::string>> tokens;
  Matrix structured;  // n x kStructuredWidth
  std::vector<std::uint8_t> labels;
  std::vector<bool> degenerate;

  std::size_t size() const { return labels.size(); }

  static PreparedCorpus from_records(const std::vector<VARecord>& records,
                                     const PreprocessConfig& pre = PreprocessConfig::defaults(),
                                     AgeScale age = {}) {
    require(!records.empty(), ErrorKind::empty_corpus, "empty corpus");
    PreparedCorpus c;
    for (const auto& doc : tokenize_corpus(records, pre)) {
      c.tokens.push_back(doc.tokens);
      c.labels.push_back(doc.label);
      c.degenerate.push_back(doc.degenerate);
    }
    for (const auto& r : records) c.structured.append_row(encode_structured(r, age));
    return c;
  }
};

struct TextFeatureConfig {
  // Document vector = concatenation of one inferred vector per model.
  std::vector<EmbeddingConfig> models;
  std::size_t infer_epochs = 20;
  bool reinfer_training = true;   // re-infer training documents like test documents
  bool global_embedding = false;  // fit embeddings once on every document (leaky)
  bool tag_by_class = false;      // one paragraph vector per class instead of per document

  static TextFeatureConfig defaults() {
    TextFeatureConfig t;
    EmbeddingConfig dm;
    dm.mode = PvMode::dm;
    EmbeddingConfig dbow;
    dbow.mode = PvMode::dbow;
    t.models = {dm, dbow};
    return t;
  }
};

enum class Aggregation { mean, pooled };
enum class SelectionMetric { f1, auc };

struct PipelineConfig {
  TextFeatureConfig text = TextFeatureConfig::defaults();
  ResampleConfig resample;  // seed is derived per fold
  bool resample_training = true;
  TrainConfig train;  // seed is derived per fold
  std::size_t folds = 5;
  double threshold = 0.5;
  Aggregation aggregation = Aggregation::mean;
  std::size_t threads = 1;
};

// ---------------------------------------------------------------------------
// Outputs

struct MetricsReport {
  FeatureSetting setting = FeatureSetting::binary;
  ClassifierKind classifier = ClassifierKind::logistic;
  int fold = -1;  // -1 for the aggregate
  ConfusionMatrix confusion;
  double precision = 0, recall = 0, f1 = 0, accuracy = 0, auc = 0;
  bool degenerate = false;
  std::vector<RocPoint> roc;
  std::vector<std::size_t> test_rows;
  std::vector<double> probabilities;
};

struct FoldAudit {
  std::size_t fold = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::vector<std::size_t> vocabulary_docs;  // documents fed to vocabulary construction
  std::vector<std::set<std::string>> vocabularies;  // one per embedding model
  std::vector<std::size_t> smote_parents;   // row ids of every synthetic row's parents
  std::size_t synthetic_rows = 0;
};

// Training and test design matrices of one fold for one setting.
struct FoldDesign {
  LabeledDataset train;  // after resampling
  Matrix test;
  std::vector<std::uint8_t> test_labels;
};

struct FoldData {
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> test_rows;
  std::map<FeatureSetting, FoldDesign> designs;
  std::vector<ParagraphModel> embeddings;
  FoldAudit audit;
};

struct CellResult {
  FeatureSetting setting;
  ClassifierKind classifier;
  TrainConfig train;
  std::vector<MetricsReport> folds;
  MetricsReport aggregate;
  std::vector<TrainedClassifier> models;  // one per fold
};

// ---------------------------------------------------------------------------

namespace detail {

inline void check_leakage(const FoldAudit& audit, bool strict_vocabulary) {
  std::vector<bool> train(0);
  std::size_t n = 0;
  for (auto r : audit.train_rows) n = std::max(n, r + 1);
  for (auto r : audit.test_rows) n = std::max(n, r + 1);
  train.assign(n, false);
  for (auto r : audit.train_rows) train[r] = true;
  for (auto p : audit.smote_parents)
    require(p < n && train[p], ErrorKind::leakage,
            format("fold %zu: synthetic row has parent %zu outside the training fold", audit.fold, p));
  if (strict_vocabulary)
    for (auto d : audit.vocabulary_docs)
      require(d < n && train[d], ErrorKind::leakage,
              format("fold %zu: vocabulary built from non-training document %zu", audit.fold, d));
}

inline Matrix text_features(const std::vector<ParagraphModel>& models, const PreparedCorpus& corpus,
                            std::span<const std::size_t> rows, const TextFeatureConfig& cfg,
                            const std::vector<std::uint64_t>& infer_seeds, bool from_training) {
  std::size_t width = 0;
  for (const auto& m : models) width += m.dim();
  Matrix out(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    std::size_t offset = 0;
    for (std::size_t j = 0; j < models.size(); ++j) {
      const auto& m = models[j];
      std::vector<double> v;
      if (from_training && !cfg.reinfer_training && !cfg.tag_by_class && m.paragraph_row(r) &&
          !m.vocab.encode(corpus.tokens[r]).empty()) {
        auto p = m.paragraph_vector(r);
        v.assign(p.begin(), p.end());
      } else {
        v = infer_vector(m, corpus.tokens[r], cfg.infer_epochs, derive_seed(infer_seeds[j], r), r).values;
      }
      std::copy(v.begin(), v.end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
      offset += m.dim();
    }
  }
  return out;
}

inline Matrix hstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy(a.row(r).begin(), a.row(r).end(), out.row(r).begin());
    std::copy(b.row(r).begin(), b.row(r).end(),
              out.row(r).begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

inline std::vector<ParagraphModel> fit_embeddings(const PreparedCorpus& corpus,
                                                  std::span<const std::size_t> rows,
                                                  const TextFeatureConfig& cfg, std::uint64_t seed,
                                                  std::vector<std::uint64_t>& infer_seeds) {
  std::vector<TrainingDoc> docs;
  for (auto r : rows) docs.push_back({cfg.tag_by_class ? corpus.labels[r] : r, corpus.tokens[r]});
  std::vector<ParagraphModel> models;
  infer_seeds.clear();
  for (std::size_t j = 0; j < cfg.models.size(); ++j) {
    EmbeddingConfig ec = cfg.models[j];
    ec.seed = derive_seed(seed, 100 + j);
    infer_seeds.push_back(derive_seed(ec.seed, 2));
    models.push_back(train_paragraph_model(docs, ec));
  }
  return models;
}

}  // namespace detail

// Builds every requested design for one fold, audited for leakage.
// `global_models` replaces per-fold embedding fits when the text config asks
// for the global protocol.
inline FoldData prepare_fold(const PreparedCorpus& corpus, const FoldSplit::Fold& fold,
                             std::size_t fold_index, const std::vector<FeatureSetting>& settings,
                             const PipelineConfig& cfg, std::uint64_t master_seed) {
  FoldData fd;
  fd.fold = fold_index;
  fd.seed = derive_seed(master_seed, fold_index);
  fd.test_rows = fold.test;
  fd.audit.fold = fold_index;
  fd.audit.train_rows = fold.train;
  fd.audit.test_rows = fold.test;

  const bool need_text = std::any_of(settings.begin(), settings.end(), uses_text);
  Matrix text_train, text_test;
  if (need_text) {
    require(!cfg.text.models.empty(), ErrorKind::config, "text setting requested without embedding models");
    std::vector<std::size_t> embed_rows = fold.train;
    std::uint64_t embed_seed = derive_seed(fd.seed, 11);
    if (cfg.text.global_embedding) {
      embed_rows.resize(corpus.size());
      std::iota(embed_rows.begin(), embed_rows.end(), 0);
      embed_seed = derive_seed(master_seed, 11);
    }
    std::vector<std::uint64_t> infer_seeds;
    fd.embeddings = detail::fit_embeddings(corpus, embed_rows, cfg.text, embed_seed, infer_seeds);
    fd.audit.vocabulary_docs = embed_rows;
    for (const auto& m : fd.embeddings)
      fd.audit.vocabularies.emplace_back(m.vocab.tokens.begin(), m.vocab.tokens.end());
    text_train = detail::text_features(fd.embeddings, corpus, fold.train, cfg.text, infer_seeds, true);
    text_test = detail::text_features(fd.embeddings, corpus, fold.test, cfg.text, infer_seeds, false);
  }

  std::vector<std::uint8_t> train_labels, test_labels;
  for (auto r : fold.train) train_labels.push_back(corpus.labels[r]);
  for (auto r : fold.test) test_labels.push_back(corpus.labels[r]);
  const Matrix bin_train = select_rows(corpus.structured, fold.train);
  const Matrix bin_test = select_rows(corpus.structured, fold.test);

  for (auto s : settings) {
    FoldDesign design;
    Matrix train_x;
    switch (s) {
      case FeatureSetting::binary:
        train_x = bin_train;
        design.test = bin_test;
        break;
      case FeatureSetting::text:
        train_x = text_train;
        design.test = text_test;
        break;
      case FeatureSetting::combined:
        train_x = detail::hstack(bin_train, text_train);
        design.test = detail::hstack(bin_test, text_test);
        break;
    }
    design.test_labels = test_labels;
    LabeledDataset train(std::move(train_x), train_labels);
    train.row_ids = fold.train;
    if (cfg.resample_training) {
      ResampleConfig rc = cfg.resample;
      rc.seed = derive_seed(fd.seed, 21 + static_cast<std::uint64_t>(s));
      train = smote_tomek_resample(train, rc);
    }
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.provenance[i] != Provenance::synthetic) continue;
      fd.audit.smote_parents.push_back(train.parents[i].base);
      fd.audit.smote_parents.push_back(train.parents[i].neighbor);
      ++fd.audit.synthetic_rows;
    }
    design.train = std::move(train);
    fd.designs.emplace(s, std::move(design));
  }
  detail::check_leakage(fd.audit, !cfg.text.global_embedding);
  return fd;
}

inline std::vector<FoldData> prepare_folds(const PreparedCorpus& corpus,
                                           const std::vector<FeatureSetting>& settings,
                                           const PipelineConfig& cfg, std::uint64_t seed) {
  const auto split = stratified_kfold_split(corpus.labels, cfg.folds, derive_seed(seed, 0xF01D));
  std::vector<FoldData> folds(split.size());
  parallel_for(split.size(), cfg.threads, [&](std::size_t f) {
    folds[f] = prepare_fold(corpus, split.folds[f], f, settings, cfg, seed);
  });
  return folds;
}

inline MetricsReport evaluate_predictions(FeatureSetting setting, ClassifierKind kind, int fold,
                                          std::vector<double> probs,
                                          const std::vector<std::uint8_t>& truth, double threshold) {
  MetricsReport r;
  r.setting = setting;
  r.classifier = kind;
  r.fold = fold;
  r.confusion = confusion_matrix(predict_label(probs, threshold), truth);
  const auto m = classification_metrics(r.confusion);
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.accuracy = m.accuracy;
  r.degenerate = m.degenerate;
  r.roc = roc_curve(probs, truth);
  r.auc = auc(probs, truth);
  r.probabilities = std::move(probs);
  return r;
}

inline MetricsReport aggregate_reports(const std::vector<MetricsReport>& folds,
                                       const std::vector<std::vector<std::uint8_t>>& truths,
                                       Aggregation how, double threshold) {
  // Pooled predictions always provide the aggregate ROC curve.
  std::vector<double> probs;
  std::vector<std::uint8_t> truth;
  std::vector<std::size_t> rows;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    probs.insert(probs.end(), folds[f].probabilities.begin(), folds[f].probabilities.end());
    truth.insert(truth.end(), truths[f].begin(), truths[f].end());
    rows.insert(rows.end(), folds[f].test_rows.begin(), folds[f].test_rows.end());
  }
  MetricsReport agg = evaluate_predictions(folds.front().setting, folds.front().classifier, -1,
                                           std::move(probs), truth, threshold);
  agg.test_rows = std::move(rows);
  if (how == Aggregation::mean) {
    const double k = static_cast<double>(folds.size());
    agg.precision = agg.recall = agg.f1 = agg.accuracy = agg.auc = 0;
    agg.degenerate = false;
    for (const auto& f : folds) {
      agg.precision += f.precision / k;
      agg.recall += f.recall / k;
      agg.f1 += f.f1 / k;
      agg.accuracy += f.accuracy / k;
      agg.auc += f.auc / k;
      agg.degenerate = agg.degenerate || f.degenerate;
    }
  }
  return agg;
}

inline std::uint64_t classifier_seed(std::uint64_t fold_seed, ClassifierKind kind) {
  return derive_seed(fold_seed, 31 + static_cast<std::uint64_t>(kind));
}

// Fits and scores one (setting, classifier, hyperparameters) cell on prepared folds.
inline CellResult evaluate_cell(const std::vector<FoldData>& folds, FeatureSetting setting,
                                ClassifierKind kind, const PipelineConfig& cfg,
                                const TrainConfig& train) {
  CellResult cell{setting, kind, train, {}, {}, {}};
  cell.folds.resize(folds.size());
  cell.models.resize(folds.size());
  parallel_for(folds.size(), cfg.threads, [&](std::size_t f) {
    const auto& fd = folds[f];
    const auto& design = fd.designs.at(setting);
    TrainConfig tc = train;
    tc.seed = classifier_seed(fd.seed, kind);
    cell.models[f] = fit_classifier(kind, design.train, tc);
    cell.folds[f] = evaluate_predictions(setting, kind, static_cast<int>(f),
                                         predict_proba(cell.models[f], design.test),
                                         design.test_labels, cfg.threshold);
    cell.folds[f].test_rows = fd.test_rows;
  });
  std::vector<std::vector<std::uint8_t>> truths;
  for (const auto& fd : folds) truths.push_back(fd.designs.at(setting).test_labels);
  cell.aggregate = aggregate_reports(cell.folds, truths, cfg.aggregation, cfg.threshold);
  return cell;
}

struct CrossValidationRun {
  std::vector<FoldData> folds;
  std::vector<CellResult> cells;  // settings-major, classifiers in the given order
};

// Every (setting, classifier) cell over shared folds: embeddings and
// resampling run once per fold and setting.
inline CrossValidationRun cross_validate(const PreparedCorpus& corpus,
                                         const std::vector<FeatureSetting>& settings,
                                         const std::vector<ClassifierKind>& classifiers,
                                         const PipelineConfig& cfg, std::uint64_t seed) {
  require(!settings.empty() && !classifiers.empty(), ErrorKind::config,
          "cross_validate: need at least one setting and one classifier");
  CrossValidationRun run;
  run.folds = prepare_folds(corpus, settings, cfg, seed);
  for (auto s : settings)
    for (auto k : classifiers) run.cells.push_back(evaluate_cell(run.folds, s, k, cfg, cfg.train));
  return run;
}

struct PipelineResult {
  std::vector<MetricsReport> folds;
  MetricsReport aggregate;
};

inline PipelineResult cross_validate_pipeline(const PreparedCorpus& corpus, FeatureSetting setting,
                                              ClassifierKind kind, const PipelineConfig& cfg,
                                              std::uint64_t seed) {
  auto run = cross_validate(corpus, {setting}, {kind}, cfg, seed);
  return {std::move(run.cells[0].folds), std::move(run.cells[0].aggregate)};
}

inline PipelineResult cross_validate_pipeline(const std::vector<VARecord>& records,
                                              FeatureSetting setting, ClassifierKind kind,
                                              const PipelineConfig& cfg, std::uint64_t seed) {
  return cross_validate_pipeline(PreparedCorpus::from_records(records), setting, kind, cfg, seed);
}

// ---------------------------------------------------------------------------
// Grid search

struct GridSpec {
  std::vector<double> logistic_l2 = {0.01, 0.1, 1.0};
  std::vector<std::size_t> forest_n_trees = {100, 300};
  std::vector<std::size_t> forest_max_depth = {8, 0};  // 0 = unlimited
  std::vector<double> boosting_learning_rate = {0.1, 0.3};
  std::vector<std::size_t> boosting_n_rounds = {50, 200};
  std::vector<std::size_t> boosting_max_depth = {3, 6};
  std::vector<std::size_t> mlp_hidden = {16, 32};
  std::vector<double> mlp_learning_rate = {0.01, 0.1};
  SelectionMetric metric = SelectionMetric::f1;

  // Cartesian product in declaration order, last list varying fastest.
  std::vector<TrainConfig> expand(ClassifierKind kind, const TrainConfig& base) const {
    std::vector<TrainConfig> cells;
    auto nonempty = [](bool ok) { require(ok, ErrorKind::config, "grid lists must be nonempty"); };
    switch (kind) {
      case ClassifierKind::logistic:
        nonempty(!logistic_l2.empty());
        for (double l2 : logistic_l2) {
          TrainConfig c = base;
          c.logistic.l2 = l2;
          cells.push_back(c);
        }
        break;
      case ClassifierKind::random_forest:
        nonempty(!forest_n_trees.empty() && !forest_max_depth.empty());
        for (auto n : forest_n_trees)
          for (auto d : forest_max_depth) {
            TrainConfig c = base;
            c.forest.n_trees = n;
            c.forest.max_depth = d;
            cells.push_back(c);
          }
        break;
      case ClassifierKind::gradient_boosting:
        nonempty(!boosting_learning_rate.empty() && !boosting_n_rounds.empty() &&
                 !boosting_max_depth.empty());
        for (double lr : boosting_learning_rate)
          for (auto n : boosting_n_rounds)
            for (auto d : boosting_max_depth) {
              TrainConfig c = base;
              c.boosting.learning_rate = lr;
              c.boosting.n_rounds = n;
              c.boosting.max_depth = d;
              cells.push_back(c);
            }
        break;
      case ClassifierKind::mlp:
        nonempty(!mlp_hidden.empty() && !mlp_learning_rate.empty());
        for (auto h : mlp_hidden)
          for (double lr : mlp_learning_rate) {
            TrainConfig c = base;
            c.mlp.hidden = {h};
            c.mlp.learning_rate = lr;
            cells.push_back(c);
          }
        break;
    }
    return cells;
  }
};

inline std::string describe_params(ClassifierKind kind, const TrainConfig& c) {
  switch (kind) {
    case ClassifierKind::logistic: return format("l2=%g", c.logistic.l2);
    case ClassifierKind::random_forest:
      return format("n_trees=%zu;max_depth=%zu", c.forest.n_trees, c.forest.max_depth);
    case ClassifierKind::gradient_boosting:
      return format("learning_rate=%g;n_rounds=%zu;max_depth=%zu", c.boosting.learning_rate,
                    c.boosting.n_rounds, c.boosting.max_depth);
    case ClassifierKind::mlp: {
      std::string h;
      for (auto v : c.mlp.hidden) h += (h.empty() ? "" : "x") + std::to_string(v);
      return format("hidden=%s;learning_rate=%g", h.c_str(), c.mlp.learning_rate);
    }
  }
  return "";
}

struct GridSearchResult {
  TrainConfig best;
  std::size_t best_index = 0;
  std::vector<CellResult> table;  // every grid cell, in grid order
};

inline double selection_value(const MetricsReport& r, SelectionMetric m) {
  return m == SelectionMetric::f1 ? r.f1 : r.auc;
}

// Ties keep the earliest grid cell.
inline GridSearchResult grid_search_on_folds(const std::vector<FoldData>& folds,
                                             FeatureSetting setting, ClassifierKind kind,
                                             const GridSpec& grid, const PipelineConfig& cfg) {
  GridSearchResult out;
  const auto cells = grid.expand(kind, cfg.train);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out.table.push_back(evaluate_cell(folds, setting, kind, cfg, cells[i]));
    if (i == 0 || selection_value(out.table[i].aggregate, grid.metric) >
                      selection_value(out.table[out.best_index].aggregate, grid.metric))
      out.best_index = i;
  }
  out.best = cells[out.best_index];
  return out;
}

inline GridSearchResult grid_search(const PreparedCorpus& corpus, FeatureSetting setting,
                                    ClassifierKind kind, const GridSpec& grid,
                                    const PipelineConfig& cfg, std::uint64_t seed) {
  const auto folds = prepare_folds(corpus, {setting}, cfg, seed);
  return grid_search_on_folds(folds, setting, kind, grid, cfg);
}

}  // namespace vapipe
