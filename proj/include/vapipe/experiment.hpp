#pragma once

// Experiment configuration and the five pipeline commands. Every command is a
// pure function of (config, input files, seed): outputs carry no timestamps
// and are written in a fixed order.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vapipe/classifiers.hpp"
#include "vapipe/corpus.hpp"
#include "vapipe/csv.hpp"
#include "vapipe/embeddings.hpp"
#include "vapipe/evaluation.hpp"
#include "vapipe/pca.hpp"
#include "vapipe/persistence.hpp"

namespace vapipe {

inline constexpr const char* kToolVersion = "1.0.0";

namespace fs = std::filesystem;

struct SweepConfig {
  std::vector<std::size_t> dims = {25, 50, 100};
  EmbeddingConfig dm = [] {
    EmbeddingConfig c;
    c.mode = PvMode::dm;
    return c;
  }();
  EmbeddingConfig dbow = [] {
    EmbeddingConfig c;
    c.mode = PvMode::dbow;
    return c;
  }();
};

struct ProjectConfig {
  std::size_t top_n = 150;
  std::string what = "words";  // words | docs
};

struct ExperimentConfig {
  std::optional<std::string> input;  // VA CSV; the synthetic spec is used when absent
  SynthSpec synth;
  bool synth_seed_set = false;  // otherwise the synthetic corpus uses the master seed
  PreprocessConfig preprocess = PreprocessConfig::defaults();
  std::optional<std::string> stop_words_file;
  double age_divisor = 100.0;
  PipelineConfig pipeline;
  std::vector<FeatureSetting> settings = {kAllSettings.begin(), kAllSettings.end()};
  std::vector<ClassifierKind> classifiers = {kAllClassifiers.begin(), kAllClassifiers.end()};
  bool grid_search = false;
  GridSpec grid;
  SweepConfig sweep;
  ProjectConfig project;
  std::uint64_t seed = 7;
  std::string out = "out";

  void validate() const {
    require(!settings.empty(), ErrorKind::config, "at least one feature setting is required");
    require(!classifiers.empty(), ErrorKind::config, "at least one classifier is required");
    require(pipeline.folds >= 2, ErrorKind::config, "folds must be >= 2");
    require(pipeline.threshold >= 0 && pipeline.threshold <= 1, ErrorKind::config,
            "threshold must lie in [0,1]");
    require(age_divisor > 0, ErrorKind::config, "age_divisor must be positive");
    require(project.what == "words" || project.what == "docs", ErrorKind::config,
            "project.what must be 'words' or 'docs'");
    require(!sweep.dims.empty(), ErrorKind::config, "sweep.dims must be nonempty");
    preprocess.validate();
    pipeline.resample.validate();
    for (const auto& m : pipeline.text.models) m.validate();
    synth.validate();
  }
};

// ---------------------------------------------------------------------------
// Config (de)serialization

inline std::vector<std::string> sorted_list(const std::set<std::string>& s) {
  return {s.begin(), s.end()};
}

// The snapshot written next to results omits `out`, so identical runs into
// different directories produce identical files.
inline Json to_json(const ExperimentConfig& c, bool with_out = true) {
  Json j;
  j["seed"] = c.seed;
  if (with_out) j["out"] = c.out;
  j["input"] = c.input ? Json(*c.input) : Json(nullptr);
  Json synth{{"n_records", c.synth.n_records},
             {"positive_rate", c.synth.positive_rate},
             {"signal_strength", c.synth.signal_strength},
             {"binary_feature_flip_prob", c.synth.binary_feature_flip_prob},
             {"signal_tokens_pos", c.synth.signal_tokens_pos},
             {"signal_tokens_neg", c.synth.signal_tokens_neg},
             {"neutral_tokens", c.synth.neutral_tokens}};
  synth["rng_seed"] = c.synth_seed_set ? Json(c.synth.rng_seed) : Json(nullptr);
  j["synth"] = synth;
  Json pre{{"min_token_len", c.preprocess.min_token_len},
           {"masked_keywords", sorted_list(c.preprocess.masked_keywords)}};
  if (c.stop_words_file)
    pre["stop_words_file"] = *c.stop_words_file;
  else
    pre["stop_words"] = sorted_list(c.preprocess.stop_words);
  pre["age_divisor"] = c.age_divisor;
  j["preprocess"] = pre;

  const auto& t = c.pipeline.text;
  Json models = Json::array();
  for (const auto& m : t.models) models.push_back(to_json(m));
  j["text"] = Json{{"models", models},
                   {"infer_epochs", t.infer_epochs},
                   {"reinfer_training", t.reinfer_training},
                   {"global_embedding", t.global_embedding},
                   {"tag_by_class", t.tag_by_class}};
  j["resample"] = to_json(c.pipeline.resample);
  j["resample"]["enabled"] = c.pipeline.resample_training;
  j["train"] = to_json(c.pipeline.train);
  Json settings = Json::array(), classifiers = Json::array();
  for (auto s : c.settings) settings.push_back(setting_key(s));
  for (auto k : c.classifiers) classifiers.push_back(classifier_key(k));
  j["evaluation"] = Json{{"settings", settings},
                         {"classifiers", classifiers},
                         {"folds", c.pipeline.folds},
                         {"threshold", c.pipeline.threshold},
                         {"aggregation", c.pipeline.aggregation == Aggregation::mean ? "mean" : "pooled"},
                         {"threads", c.pipeline.threads},
                         {"grid_search", c.grid_search}};
  const auto& g = c.grid;
  j["grid"] = Json{{"logistic_l2", g.logistic_l2},
                   {"forest_n_trees", g.forest_n_trees},
                   {"forest_max_depth", g.forest_max_depth},
                   {"boosting_learning_rate", g.boosting_learning_rate},
                   {"boosting_n_rounds", g.boosting_n_rounds},
                   {"boosting_max_depth", g.boosting_max_depth},
                   {"mlp_hidden", g.mlp_hidden},
                   {"mlp_learning_rate", g.mlp_learning_rate},
                   {"metric", g.metric == SelectionMetric::f1 ? "f1" : "auc"}};
  j["sweep"] = Json{{"dims", c.sweep.dims}, {"dm", to_json(c.sweep.dm)}, {"dbow", to_json(c.sweep.dbow)}};
  j["project"] = Json{{"top_n", c.project.top_n}, {"what", c.project.what}};
  return j;
}

// Keys absent from `j` keep their defaults; unknown keys are rejected.
// Relative paths resolve against `base_dir`.
inline ExperimentConfig experiment_config_from_json(const Json& j, const fs::path& base_dir = {}) {
  ExperimentConfig c;
  Fields f(j, "config");
  f.read("seed", c.seed);
  f.read("out", c.out);
  auto resolve = [&](const std::string& p) {
    return (fs::path(p).is_absolute() || base_dir.empty()) ? p : (base_dir / p).lexically_normal().string();
  };
  if (f.optional("input")) c.input = resolve(f.require_value<std::string>("input"));
  if (f.has("synth")) {
    Fields s(f.at("synth"), "config.synth");
    s.read("n_records", c.synth.n_records);
    s.read("positive_rate", c.synth.positive_rate);
    s.read("signal_strength", c.synth.signal_strength);
    s.read("binary_feature_flip_prob", c.synth.binary_feature_flip_prob);
    s.read("signal_tokens_pos", c.synth.signal_tokens_pos);
    s.read("signal_tokens_neg", c.synth.signal_tokens_neg);
    s.read("neutral_tokens", c.synth.neutral_tokens);
    if (s.optional("rng_seed")) {
      c.synth.rng_seed = s.require_value<std::uint64_t>("rng_seed");
      c.synth_seed_set = true;
    }
    s.finish();
  }
  if (f.has("preprocess")) {
    Fields p(f.at("preprocess"), "config.preprocess");
    p.read("min_token_len", c.preprocess.min_token_len);
    p.read("age_divisor", c.age_divisor);
    if (p.has("masked_keywords")) {
      const auto v = p.require_value<std::vector<std::string>>("masked_keywords");
      c.preprocess.masked_keywords = {v.begin(), v.end()};
    }
    require(!(p.has("stop_words") && p.has("stop_words_file")), ErrorKind::config,
            "config.preprocess: give either stop_words or stop_words_file");
    if (p.has("stop_words")) {
      const auto v = p.require_value<std::vector<std::string>>("stop_words");
      c.preprocess.stop_words = {v.begin(), v.end()};
    }
    if (p.has("stop_words_file")) {
      c.stop_words_file = resolve(p.require_value<std::string>("stop_words_file"));
      c.preprocess.stop_words = load_word_list(*c.stop_words_file);
    }
    p.finish();
  }
  if (f.has("text")) {
    auto& t = c.pipeline.text;
    Fields p(f.at("text"), "config.text");
    if (p.has("models")) {
      const auto& models = p.at("models");
      require(models.is_array(), ErrorKind::config, "config.text.models must be an array");
      t.models.clear();
      for (std::size_t i = 0; i < models.size(); ++i)
        t.models.push_back(embedding_config_from_json(models[i], format("config.text.models[%zu]", i)));
    }
    p.read("infer_epochs", t.infer_epochs);
    p.read("reinfer_training", t.reinfer_training);
    p.read("global_embedding", t.global_embedding);
    p.read("tag_by_class", t.tag_by_class);
    p.finish();
  }
  if (f.has("resample")) {
    Json r = f.at("resample");
    if (r.is_object() && r.contains("enabled")) {
      require(r["enabled"].is_boolean(), ErrorKind::config, "config.resample.enabled: wrong type");
      c.pipeline.resample_training = r["enabled"].get<bool>();
      r.erase("enabled");
    }
    c.pipeline.resample = resample_config_from_json(r, "config.resample");
  }
  if (f.has("train")) c.pipeline.train = train_config_from_json(f.at("train"), "config.train");
  if (f.has("evaluation")) {
    Fields e(f.at("evaluation"), "config.evaluation");
    if (e.has("settings")) {
      c.settings.clear();
      for (const auto& s : e.require_value<std::vector<std::string>>("settings"))
        c.settings.push_back(parse_setting(s));
    }
    if (e.has("classifiers")) {
      c.classifiers.clear();
      for (const auto& s : e.require_value<std::vector<std::string>>("classifiers"))
        c.classifiers.push_back(parse_classifier_kind(s));
    }
    e.read("folds", c.pipeline.folds);
    e.read("threshold", c.pipeline.threshold);
    std::string agg = "mean";
    e.read("aggregation", agg);
    require(agg == "mean" || agg == "pooled", ErrorKind::config,
            "config.evaluation.aggregation must be 'mean' or 'pooled'");
    c.pipeline.aggregation = agg == "mean" ? Aggregation::mean : Aggregation::pooled;
    e.read("threads", c.pipeline.threads);
    e.read("grid_search", c.grid_search);
    e.finish();
  }
  if (f.has("grid")) {
    auto& g = c.grid;
    Fields e(f.at("grid"), "config.grid");
    e.read("logistic_l2", g.logistic_l2);
    e.read("forest_n_trees", g.forest_n_trees);
    e.read("forest_max_depth", g.forest_max_depth);
    e.read("boosting_learning_rate", g.boosting_learning_rate);
    e.read("boosting_n_rounds", g.boosting_n_rounds);
    e.read("boosting_max_depth", g.boosting_max_depth);
    e.read("mlp_hidden", g.mlp_hidden);
    e.read("mlp_learning_rate", g.mlp_learning_rate);
    std::string metric = "f1";
    e.read("metric", metric);
    require(metric == "f1" || metric == "auc", ErrorKind::config, "config.grid.metric must be 'f1' or 'auc'");
    g.metric = metric == "f1" ? SelectionMetric::f1 : SelectionMetric::auc;
    e.finish();
  }
  if (f.has("sweep")) {
    Fields s(f.at("sweep"), "config.sweep");
    s.read("dims", c.sweep.dims);
    if (s.has("dm")) c.sweep.dm = embedding_config_from_json(s.at("dm"), "config.sweep.dm");
    if (s.has("dbow")) c.sweep.dbow = embedding_config_from_json(s.at("dbow"), "config.sweep.dbow");
    s.finish();
    require(c.sweep.dm.mode == PvMode::dm && c.sweep.dbow.mode == PvMode::dbow, ErrorKind::config,
            "config.sweep: dm and dbow entries must use their own modes");
  }
  if (f.has("project")) {
    Fields p(f.at("project"), "config.project");
    p.read("top_n", c.project.top_n);
    p.read("what", c.project.what);
    p.finish();
  }
  f.finish();
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(read_json_file(path), fs::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Output bookkeeping

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string read_file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Collects files written by one command and emits the manifest last.
class OutputDir {
 public:
  OutputDir(fs::path root, std::string command) : root_(std::move(root)), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    require(!ec, ErrorKind::io, "cannot create " + root_.string() + ": " + ec.message());
  }

  const fs::path& root() const { return root_; }

  fs::path path(const std::string& rel) {
    const fs::path p = root_ / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    require(!ec, ErrorKind::io, "cannot create " + p.parent_path().string());
    files_.push_back(rel);
    return p;
  }

  void write(const std::string& rel, const std::string& text) { write_text_file(path(rel).string(), text); }

  void finish(const ExperimentConfig& cfg) {
    write("config.json", to_json(cfg, false).dump(2) + "\n");
    Json files = Json::array();
    std::sort(files_.begin(), files_.end());
    for (const auto& rel : files_) {
      const auto bytes = read_file_bytes(root_ / rel);
      files.push_back(Json{{"path", rel}, {"bytes", bytes.size()},
                           {"fnv1a64", format("%016llx", static_cast<unsigned long long>(fnv1a64(bytes)))}});
    }
    const Json manifest{{"tool", "vapipe"}, {"version", kToolVersion}, {"command", command_},
                        {"seed", cfg.seed}, {"files", files}};
    write_text_file((root_ / "manifest.json").string(), manifest.dump(2) + "\n");
  }

 private:
  fs::path root_;
  std::string command_;
  std::vector<std::string> files_;
};

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::ostringstream ss;
  csv::write_row(ss, fields);
  return ss.str();
}

inline std::string fixed6(double v) { return format("%.6f", v); }

// ---------------------------------------------------------------------------
// Corpus preparation

inline std::vector<VARecord> load_records(const ExperimentConfig& cfg) {
  if (cfg.input) return parse_va_csv(*cfg.input);
  SynthSpec spec = cfg.synth;
  if (!cfg.synth_seed_set) spec.rng_seed = cfg.seed;
  return generate_synthetic_corpus(spec);
}

inline PreparedCorpus prepare_corpus(const ExperimentConfig& cfg) {
  return PreparedCorpus::from_records(load_records(cfg), cfg.preprocess, AgeScale{cfg.age_divisor});
}

inline std::string tokens_tsv(const PreparedCorpus& c) {
  std::string out = "doc_id\tlabel\tdegenerate\ttokens\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    out += std::to_string(i) + "\t" + std::to_string(c.labels[i]) + "\t" + (c.degenerate[i] ? "1" : "0") + "\t";
    for (std::size_t t = 0; t < c.tokens[i].size(); ++t) out += (t ? " " : "") + c.tokens[i][t];
    out += "\n";
  }
  return out;
}

inline std::string features_csv(const PreparedCorpus& c) {
  std::vector<std::string> header = {"doc_id"};
  for (const auto& n : kBinaryFeatureNames) header.emplace_back(n);
  header.emplace_back("age");
  header.emplace_back("class");
  std::string out = csv_line(header);
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<std::string> row = {std::to_string(i)};
    for (double v : c.structured.row(i)) row.push_back(format_exact(v));
    row.push_back(std::to_string(c.labels[i]));
    out += csv_line(row);
  }
  return out;
}

inline PreparedCorpus read_prepared(const fs::path& dir) {
  const auto tok_path = dir / "tokens.tsv", feat_path = dir / "features.csv";
  PreparedCorpus c;
  std::istringstream tok(read_file_bytes(tok_path));
  std::string line;
  std::getline(tok, line);
  require(line == "doc_id\tlabel\tdegenerate\ttokens", ErrorKind::schema, tok_path.string() + ": bad header");
  std::size_t lineno = 1;
  while (std::getline(tok, line)) {
    ++lineno;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t p; (p = line.find('\t', start)) != std::string::npos; start = p + 1)
      cols.push_back(line.substr(start, p - start));
    cols.push_back(line.substr(start));
    require(cols.size() == 4 && cols[0] == std::to_string(c.size()) && (cols[1] == "0" || cols[1] == "1") &&
                (cols[2] == "0" || cols[2] == "1"),
            ErrorKind::parse, format("%s: line %zu malformed", tok_path.string().c_str(), lineno));
    c.labels.push_back(cols[1] == "1");
    c.degenerate.push_back(cols[2] == "1");
    std::vector<std::string> tokens;
    std::istringstream ts(cols[3]);
    for (std::string t; ts >> t;) tokens.push_back(t);
    c.tokens.push_back(std::move(tokens));
  }
  require(c.size() > 0, ErrorKind::empty_corpus, tok_path.string() + ": no documents");

  std::istringstream feat(read_file_bytes(feat_path));
  csv::Reader reader(feat);
  csv::Row row;
  require(reader.next(row) && row.fields.size() == kStructuredWidth + 2, ErrorKind::schema,
          feat_path.string() + ": bad header");
  std::vector<double> values(kStructuredWidth);
  std::size_t i = 0;
  while (reader.next(row)) {
    require(i < c.size() && row.fields.size() == kStructuredWidth + 2 && row.fields[0] == std::to_string(i),
            ErrorKind::parse, format("%s: line %zu malformed", feat_path.string().c_str(), row.line));
    for (std::size_t k = 0; k < kStructuredWidth; ++k) {
      char* end = nullptr;
      values[k] = std::strtod(row.fields[k + 1].c_str(), &end);
      require(end && *end == '\0' && std::isfinite(values[k]), ErrorKind::parse,
              format("%s: line %zu: bad number", feat_path.string().c_str(), row.line));
    }
    require(row.fields.back() == std::to_string(c.labels[i]), ErrorKind::parse,
            format("%s: line %zu: label disagrees with tokens.tsv", feat_path.string().c_str(), row.line));
    c.structured.append_row(values);
    ++i;
  }
  require(i == c.size(), ErrorKind::parse, feat_path.string() + ": row count disagrees with tokens.tsv");
  return c;
}

inline fs::path prepared_dir(const ExperimentConfig& cfg) { return fs::path(cfg.out) / "prepared"; }

// Prepared files from an earlier `prepare` run are reused when present.
inline PreparedCorpus load_or_prepare(const ExperimentConfig& cfg) {
  const auto dir = prepared_dir(cfg);
  if (fs::exists(dir / "tokens.tsv") && fs::exists(dir / "features.csv")) return read_prepared(dir);
  return prepare_corpus(cfg);
}

// ---------------------------------------------------------------------------
// Commands

inline std::string cmd_synth(const ExperimentConfig& cfg, std::ostream& log) {
  SynthSpec spec = cfg.synth;
  if (!cfg.synth_seed_set) spec.rng_seed = cfg.seed;
  const auto records = generate_synthetic_corpus(spec);
  OutputDir out(fs::path(cfg.out) / "synth", "synth");
  std::ostringstream csv;
  write_va_csv(csv, records);
  out.write("synthetic.csv", csv.str());
  out.finish(cfg);
  std::size_t pos = 0;
  for (const auto& r : records) pos += r.class_label;
  log << format("synth: %zu records (%zu positive) -> %s\n", records.size(), pos,
                (out.root() / "synthetic.csv").string().c_str());
  return (out.root() / "synthetic.csv").string();
}

inline void cmd_prepare(const ExperimentConfig& cfg, std::ostream& log) {
  const auto corpus = prepare_corpus(cfg);
  OutputDir out(prepared_dir(cfg), "prepare");
  out.write("tokens.tsv", tokens_tsv(corpus));
  out.write("features.csv", features_csv(corpus));
  out.finish(cfg);
  std::size_t degenerate = 0;
  for (bool d : corpus.degenerate) degenerate += d;
  log << format("prepare: %zu documents, %zu with empty narratives -> %s\n", corpus.size(), degenerate,
                out.root().string().c_str());
}

inline std::string metrics_header() {
  return csv_line({"features", "classifier", "fold", "recall", "precision", "f1", "auc", "accuracy", "tp", "fp",
                   "tn", "fn"});
}

inline std::string metrics_row(const MetricsReport& r) {
  const auto& cm = r.confusion;
  return csv_line({setting_key(r.setting), classifier_key(r.classifier),
                   r.fold < 0 ? std::string("mean") : std::to_string(r.fold), fixed6(r.recall),
                   fixed6(r.precision), fixed6(r.f1), fixed6(r.auc), fixed6(r.accuracy), std::to_string(cm.tp),
                   std::to_string(cm.fp), std::to_string(cm.tn), std::to_string(cm.fn)});
}

inline std::string roc_csv(const CellResult& cell) {
  std::string out = csv_line({"fold", "threshold", "fpr", "tpr"});
  auto emit = [&](const std::string& fold, const std::vector<RocPoint>& roc) {
    for (const auto& p : roc)
      out += csv_line({fold, std::isinf(p.threshold) ? std::string("inf") : format_exact(p.threshold),
                       format_exact(p.fpr), format_exact(p.tpr)});
  };
  for (const auto& f : cell.folds) emit(std::to_string(f.fold), f.roc);
  emit("pooled", cell.aggregate.roc);
  return out;
}

inline std::string cell_name(FeatureSetting s, ClassifierKind k) {
  return std::string(setting_key(s)) + "_" + classifier_key(k);
}

// Test-fold features and probabilities recorded next to a persisted model.
inline Json recorded_predictions(const FoldData& fold, FeatureSetting s, const MetricsReport& r) {
  return Json{{"fold", r.fold}, {"test_rows", fold.test_rows},
              {"features", to_json(fold.designs.at(s).test)}, {"probabilities", r.probabilities}};
}

struct EvaluateResult {
  std::vector<CellResult> cells;
};

inline EvaluateResult cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log) {
  const auto corpus = load_or_prepare(cfg);
  OutputDir out(fs::path(cfg.out) / "evaluate", "evaluate");
  const auto folds = prepare_folds(corpus, cfg.settings, cfg.pipeline, cfg.seed);
  for (const auto& fd : folds)
    for (std::size_t j = 0; j < fd.embeddings.size(); ++j)
      save_paragraph_model(fd.embeddings[j],
                           out.path(format("models/embeddings/fold%zu_%zu_%s.json", fd.fold, j,
                                           pv_mode_name(fd.embeddings[j].config.mode)))
                               .string());

  EvaluateResult result;
  std::string grid_table = csv_line({"features", "classifier", "cell", "params", "recall", "precision", "f1",
                                     "auc", "accuracy", "selected"});
  for (auto s : cfg.settings)
    for (auto k : cfg.classifiers) {
      if (cfg.grid_search) {
        auto gs = grid_search_on_folds(folds, s, k, cfg.grid, cfg.pipeline);
        for (std::size_t i = 0; i < gs.table.size(); ++i) {
          const auto& a = gs.table[i].aggregate;
          grid_table += csv_line({setting_key(s), classifier_key(k), std::to_string(i),
                                  describe_params(k, gs.table[i].train), fixed6(a.recall), fixed6(a.precision),
                                  fixed6(a.f1), fixed6(a.auc), fixed6(a.accuracy),
                                  i == gs.best_index ? "1" : "0"});
        }
        result.cells.push_back(std::move(gs.table[gs.best_index]));
      } else {
        result.cells.push_back(evaluate_cell(folds, s, k, cfg.pipeline, cfg.pipeline.train));
      }
    }

  std::string metrics = metrics_header();
  for (const auto& cell : result.cells) {
    for (const auto& f : cell.folds) metrics += metrics_row(f);
    metrics += metrics_row(cell.aggregate);
  }
  out.write("metrics.csv", metrics);
  if (cfg.grid_search) out.write("grid.csv", grid_table);
  for (const auto& cell : result.cells) {
    const auto name = cell_name(cell.setting, cell.classifier);
    out.write("roc/" + name + ".csv", roc_csv(cell));
    // Best fold by F1, earliest on ties.
    std::size_t best = 0;
    for (std::size_t f = 1; f < cell.folds.size(); ++f)
      if (cell.folds[f].f1 > cell.folds[best].f1) best = f;
    TrainConfig tc = cell.train;
    tc.seed = classifier_seed(folds[best].seed, cell.classifier);
    out.write("models/" + name + ".model.json", to_json(cell.models[best], tc).dump() + "\n");
    out.write("models/" + name + ".predictions.json",
              recorded_predictions(folds[best], cell.setting, cell.folds[best]).dump() + "\n");
  }
  out.finish(cfg);

  log << format("%-10s %-16s %8s %9s %8s %8s %8s\n", "features", "classifier", "recall", "precision", "f1",
                "auc", "accuracy");
  for (const auto& cell : result.cells) {
    const auto& a = cell.aggregate;
    log << format("%-10s %-16s %8.4f %9.4f %8.4f %8.4f %8.4f\n", setting_key(cell.setting),
                  classifier_key(cell.classifier), a.recall, a.precision, a.f1, a.auc, a.accuracy);
  }
  return result;
}

struct SweepRow {
  std::string method;
  std::size_t dims = 0;
  MetricsReport aggregate;
};

inline std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  const auto corpus = load_or_prepare(cfg);
  OutputDir out(fs::path(cfg.out) / "sweep", "sweep");
  std::vector<SweepRow> rows;
  for (int method = 0; method < 3; ++method)
    for (auto d : cfg.sweep.dims) {
      PipelineConfig pc = cfg.pipeline;
      EmbeddingConfig dm = cfg.sweep.dm, dbow = cfg.sweep.dbow;
      dm.dim = dbow.dim = d;
      if (method == 0) pc.text.models = {dm};
      if (method == 1) pc.text.models = {dbow};
      if (method == 2) pc.text.models = {dm, dbow};
      const auto folds = prepare_folds(corpus, {FeatureSetting::text}, pc, cfg.seed);
      TrainConfig tc = pc.train;
      tc.forest = ForestParams{};
      auto cell = evaluate_cell(folds, FeatureSetting::text, ClassifierKind::random_forest, pc, tc);
      static const char* names[] = {"PV-DM", "PV-DBOW", "PV-DM + PV-DBOW"};
      rows.push_back({names[method], d, std::move(cell.aggregate)});
      const auto& a = rows.back().aggregate;
      log << format("sweep: %-16s dims=%zu f1=%.4f auc=%.4f\n", names[method], d, a.f1, a.auc);
    }
  std::string table = csv_line({"method", "dims", "recall", "precision", "f1", "auc", "accuracy"});
  for (const auto& r : rows) {
    const auto& a = r.aggregate;
    table += csv_line({r.method, std::to_string(r.dims), fixed6(a.recall), fixed6(a.precision), fixed6(a.f1),
                       fixed6(a.auc), fixed6(a.accuracy)});
  }
  out.write("sweep.csv", table);
  out.finish(cfg);
  return rows;
}

// Rows to project: word vectors for PV-DM; for PV-DBOW, whose input word
// vectors are never trained, the output-layer rows that score each word.
inline Matrix projectable_word_rows(const ParagraphModel& m, std::size_t n) {
  const Matrix& src = m.config.mode == PvMode::dm ? m.word_vectors : m.output_weights;
  Matrix out(n, m.dim());
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(src.row(i).begin(), m.dim(), out.row(i).begin());
  return out;
}

inline void cmd_project(const ExperimentConfig& cfg, const std::string& model_path, std::ostream& log) {
  require(fs::exists(model_path), ErrorKind::io, "model file not found: " + model_path);
  const auto model = load_paragraph_model(model_path);
  OutputDir out(fs::path(cfg.out) / "project", "project");
  std::vector<std::string> labels;
  Matrix points;
  if (cfg.project.what == "words") {
    // Vocabulary order is by descending frequency.
    const std::size_t n = std::min(cfg.project.top_n, model.vocab.size());
    points = projectable_word_rows(model, n);
    labels.assign(model.vocab.tokens.begin(), model.vocab.tokens.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    const std::size_t n = std::min(cfg.project.top_n, model.tags.size());
    points = select_rows(model.paragraph_vectors, [&] {
      std::vector<std::size_t> r(n);
      std::iota(r.begin(), r.end(), 0);
      return r;
    }());
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(model.tags[i]));
  }
  const auto pca = fit_pca(points, 2);
  const auto xy = project_pca(pca, points);
  std::string csv = csv_line({cfg.project.what == "words" ? "token" : "doc_id", "x", "y"});
  for (std::size_t i = 0; i < labels.size(); ++i)
    csv += csv_line({labels[i], format_exact(xy(i, 0)), format_exact(xy(i, 1))});
  out.write("projection.csv", csv);
  const auto ratio = pca.explained_variance_ratio();
  out.write("pca.json", Json{{"source", fs::path(model_path).filename().string()},
                             {"mode", pv_mode_name(model.config.mode)},
                             {"what", cfg.project.what},
                             {"rows", labels.size()},
                             {"explained_variance", pca.explained_variance},
                             {"explained_variance_ratio", ratio}}
                            .dump(2) + "\n");
  out.finish(cfg);
  log << format("project: %zu %s, explained variance ratio %.4f + %.4f\n", labels.size(), cfg.project.what.c_str(),
                ratio[0], ratio[1]);
}

}  // namespace vapipe
