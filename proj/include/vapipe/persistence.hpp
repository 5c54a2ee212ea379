#pragma once

// JSON containers for configurations, paragraph models and trained
// classifiers. Doubles are written in shortest round-trip form, so
// load(save(m)) restores every parameter bit for bit.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vapipe/classifiers.hpp"
#include "vapipe/common.hpp"
#include "vapipe/corpus.hpp"
#include "vapipe/embeddings.hpp"
#include "vapipe/resampling.hpp"

namespace vapipe {

using Json = nlohmann::ordered_json;

inline constexpr int kContainerVersion = 1;
inline constexpr const char* kEmbeddingFormat = "vapipe.paragraph_model";
inline constexpr const char* kClassifierFormat = "vapipe.classifier";

// Strict view over a JSON object: unknown keys are an error so that typos in
// config files do not silently fall back to defaults.
class Fields {
 public:
  Fields(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
    require(j.is_object(), ErrorKind::config, context_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorKind::config, context_ + "." + key + ": wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  // Null or absent both read as "not given".
  const Json* optional(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  const Json& at(const char* key) {
    seen_.insert(key);
    require(j_.contains(key), ErrorKind::config, context_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  template <typename T>
  T require_value(const char* key) {
    T out{};
    at(key);
    read(key, out);
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      require(seen_.count(it.key()) > 0, ErrorKind::config,
              context_ + ": unknown key '" + it.key() + "'");
  }

  const std::string& context() const { return context_; }

 private:
  const Json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot write " + path);
  out << text;
  require(out.good(), ErrorKind::io, "write failed: " + path);
}

inline void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Enums

inline PvMode parse_pv_mode(const std::string& s) {
  if (s == "dm" || s == "pv-dm") return PvMode::dm;
  if (s == "dbow" || s == "pv-dbow") return PvMode::dbow;
  fail(ErrorKind::config, "unknown paragraph-vector mode '" + s + "'");
}

inline const char* dm_combine_name(DmCombine c) {
  return c == DmCombine::concatenate ? "concatenate" : "average";
}

inline DmCombine parse_dm_combine(const std::string& s) {
  if (s == "concatenate") return DmCombine::concatenate;
  if (s == "average") return DmCombine::average;
  fail(ErrorKind::config, "unknown dm_combine '" + s + "'");
}

inline const char* output_layer_name(OutputLayer o) {
  return o == OutputLayer::softmax ? "softmax" : "negative_sampling";
}

inline OutputLayer parse_output_layer(const std::string& s) {
  if (s == "softmax") return OutputLayer::softmax;
  if (s == "negative_sampling") return OutputLayer::negative_sampling;
  fail(ErrorKind::config, "unknown output layer '" + s + "'");
}

// ---------------------------------------------------------------------------
// Configs

inline Json to_json(const EmbeddingConfig& c) {
  return Json{{"mode", pv_mode_name(c.mode)},
              {"dim", c.dim},
              {"window", c.window},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"min_learning_rate", c.min_learning_rate},
              {"dm_combine", dm_combine_name(c.dm_combine)},
              {"output", output_layer_name(c.output)},
              {"negative", c.negative},
              {"min_count", c.min_count},
              {"seed", c.seed}};
}

inline EmbeddingConfig embedding_config_from_json(const Json& j, const std::string& ctx) {
  EmbeddingConfig c;
  Fields f(j, ctx);
  std::string mode = pv_mode_name(c.mode), combine = dm_combine_name(c.dm_combine),
              output = output_layer_name(c.output);
  f.read("mode", mode);
  f.read("dim", c.dim);
  f.read("window", c.window);
  f.read("epochs", c.epochs);
  f.read("learning_rate", c.learning_rate);
  f.read("min_learning_rate", c.min_learning_rate);
  f.read("dm_combine", combine);
  f.read("output", output);
  f.read("negative", c.negative);
  f.read("min_count", c.min_count);
  f.read("seed", c.seed);
  f.finish();
  c.mode = parse_pv_mode(mode);
  c.dm_combine = parse_dm_combine(combine);
  c.output = parse_output_layer(output);
  c.validate();
  return c;
}

inline Json to_json(const TrainConfig& c) {
  Json hidden = Json::array();
  for (auto h : c.mlp.hidden) hidden.push_back(h);
  return Json{
      {"logistic",
       {{"l2", c.logistic.l2},
        {"learning_rate", c.logistic.learning_rate},
        {"max_iter", c.logistic.max_iter},
        {"tolerance", c.logistic.tolerance},
        {"standardize", c.logistic.standardize}}},
      {"random_forest",
       {{"n_trees", c.forest.n_trees},
        {"max_depth", c.forest.max_depth},
        {"min_samples_leaf", c.forest.min_samples_leaf},
        {"max_features", c.forest.max_features},
        {"bootstrap", c.forest.bootstrap}}},
      {"xgboost",
       {{"learning_rate", c.boosting.learning_rate},
        {"n_rounds", c.boosting.n_rounds},
        {"max_depth", c.boosting.max_depth},
        {"l2_leaf", c.boosting.l2_leaf},
        {"min_child_weight", c.boosting.min_child_weight},
        {"min_samples_leaf", c.boosting.min_samples_leaf}}},
      {"neural_network",
       {{"hidden", hidden},
        {"learning_rate", c.mlp.learning_rate},
        {"epochs", c.mlp.epochs},
        {"batch_size", c.mlp.batch_size},
        {"l2", c.mlp.l2},
        {"standardize", c.mlp.standardize}}},
      {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const Json& j, const std::string& ctx) {
  TrainConfig c;
  Fields f(j, ctx);
  if (f.has("logistic")) {
    Fields g(f.at("logistic"), ctx + ".logistic");
    g.read("l2", c.logistic.l2);
    g.read("learning_rate", c.logistic.learning_rate);
    g.read("max_iter", c.logistic.max_iter);
    g.read("tolerance", c.logistic.tolerance);
    g.read("standardize", c.logistic.standardize);
    g.finish();
  }
  if (f.has("random_forest")) {
    Fields g(f.at("random_forest"), ctx + ".random_forest");
    g.read("n_trees", c.forest.n_trees);
    g.read("max_depth", c.forest.max_depth);
    g.read("min_samples_leaf", c.forest.min_samples_leaf);
    g.read("max_features", c.forest.max_features);
    g.read("bootstrap", c.forest.bootstrap);
    g.finish();
  }
  if (f.has("xgboost")) {
    Fields g(f.at("xgboost"), ctx + ".xgboost");
    g.read("learning_rate", c.boosting.learning_rate);
    g.read("n_rounds", c.boosting.n_rounds);
    g.read("max_depth", c.boosting.max_depth);
    g.read("l2_leaf", c.boosting.l2_leaf);
    g.read("min_child_weight", c.boosting.min_child_weight);
    g.read("min_samples_leaf", c.boosting.min_samples_leaf);
    g.finish();
  }
  if (f.has("neural_network")) {
    Fields g(f.at("neural_network"), ctx + ".neural_network");
    g.read("hidden", c.mlp.hidden);
    g.read("learning_rate", c.mlp.learning_rate);
    g.read("epochs", c.mlp.epochs);
    g.read("batch_size", c.mlp.batch_size);
    g.read("l2", c.mlp.l2);
    g.read("standardize", c.mlp.standardize);
    g.finish();
  }
  f.read("seed", c.seed);
  f.finish();
  return c;
}

inline Json to_json(const ResampleConfig& c) {
  Json j{{"k_neighbors", c.k_neighbors}, {"target_ratio", c.target_ratio}, {"seed", c.seed}};
  if (c.fixed_lambda) j["fixed_lambda"] = *c.fixed_lambda;
  return j;
}

inline ResampleConfig resample_config_from_json(const Json& j, const std::string& ctx) {
  ResampleConfig c;
  Fields f(j, ctx);
  f.read("k_neighbors", c.k_neighbors);
  f.read("target_ratio", c.target_ratio);
  f.read("seed", c.seed);
  if (f.has("fixed_lambda")) c.fixed_lambda = f.require_value<double>("fixed_lambda");
  f.finish();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Building blocks

inline Json to_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const Json& j, const std::string& ctx) {
  Fields f(j, ctx);
  const auto rows = f.require_value<std::size_t>("rows");
  const auto cols = f.require_value<std::size_t>("cols");
  const auto data = f.require_value<std::vector<double>>("data");
  f.finish();
  require(data.size() == rows * cols, ErrorKind::schema, ctx + ": matrix data length mismatch");
  Matrix m(rows, cols);
  m.data() = data;
  return m;
}

inline Json to_json(const Standardizer& s) { return Json{{"mean", s.mean}, {"scale", s.scale}}; }

inline Standardizer standardizer_from_json(const Json& j, const std::string& ctx) {
  Fields f(j, ctx);
  Standardizer s;
  s.mean = f.require_value<std::vector<double>>("mean");
  s.scale = f.require_value<std::vector<double>>("scale");
  f.finish();
  require(s.mean.size() == s.scale.size(), ErrorKind::schema, ctx + ": standardizer length mismatch");
  return s;
}

// Column-wise node arrays keep tree files compact.
inline Json to_json(const DecisionTree& t) {
  Json feature = Json::array(), threshold = Json::array(), left = Json::array(),
       right = Json::array(), value = Json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return Json{{"max_depth", t.max_depth}, {"min_samples_leaf", t.min_samples_leaf},
              {"n_features", t.n_features}, {"feature", feature}, {"threshold", threshold},
              {"left", left}, {"right", right}, {"value", value}};
}

inline DecisionTree tree_from_json(const Json& j, const std::string& ctx) {
  Fields f(j, ctx);
  DecisionTree t;
  t.max_depth = f.require_value<std::size_t>("max_depth");
  t.min_samples_leaf = f.require_value<std::size_t>("min_samples_leaf");
  t.n_features = f.require_value<std::size_t>("n_features");
  const auto feature = f.require_value<std::vector<std::int32_t>>("feature");
  const auto threshold = f.require_value<std::vector<double>>("threshold");
  const auto left = f.require_value<std::vector<std::uint32_t>>("left");
  const auto right = f.require_value<std::vector<std::uint32_t>>("right");
  const auto value = f.require_value<std::vector<double>>("value");
  f.finish();
  const std::size_t n = feature.size();
  require(n >= 1 && threshold.size() == n && left.size() == n && right.size() == n &&
              value.size() == n,
          ErrorKind::schema, ctx + ": inconsistent node arrays");
  for (std::size_t i = 0; i < n; ++i) {
    if (feature[i] >= 0)
      require(static_cast<std::size_t>(feature[i]) < t.n_features && left[i] > i && right[i] > i &&
                  left[i] < n && right[i] < n,
              ErrorKind::schema, ctx + format(": malformed node %zu", i));
    t.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Paragraph models

inline Json to_json(const ParagraphModel& m) {
  return Json{{"format", kEmbeddingFormat},
              {"version", kContainerVersion},
              {"config", to_json(m.config)},
              {"vocabulary", {{"tokens", m.vocab.tokens}, {"counts", m.vocab.counts},
                              {"min_count", m.vocab.min_count}}},
              {"tags", m.tags},
              {"word_vectors", to_json(m.word_vectors)},
              {"paragraph_vectors", to_json(m.paragraph_vectors)},
              {"output_weights", to_json(m.output_weights)},
              {"output_bias", m.output_bias},
              {"epoch_objective", m.epoch_objective}};
}

inline void check_container(Fields& f, const char* format_name) {
  const auto fmt = f.require_value<std::string>("format");
  require(fmt == format_name, ErrorKind::schema,
          f.context() + ": expected format '" + format_name + "', found '" + fmt + "'");
  const auto version = f.require_value<int>("version");
  require(version == kContainerVersion, ErrorKind::schema,
          f.context() + format(": unsupported container version %d", version));
}

inline ParagraphModel paragraph_model_from_json(const Json& j, const std::string& ctx = "model") {
  Fields f(j, ctx);
  check_container(f, kEmbeddingFormat);
  ParagraphModel m;
  m.config = embedding_config_from_json(f.at("config"), ctx + ".config");
  {
    Fields v(f.at("vocabulary"), ctx + ".vocabulary");
    m.vocab.tokens = v.require_value<std::vector<std::string>>("tokens");
    m.vocab.counts = v.require_value<std::vector<std::size_t>>("counts");
    m.vocab.min_count = v.require_value<std::size_t>("min_count");
    v.finish();
    require(m.vocab.tokens.size() == m.vocab.counts.size(), ErrorKind::schema,
            ctx + ": vocabulary length mismatch");
    for (std::size_t i = 0; i < m.vocab.tokens.size(); ++i)
      require(m.vocab.index.emplace(m.vocab.tokens[i], i).second, ErrorKind::schema,
              ctx + ": duplicate vocabulary token '" + m.vocab.tokens[i] + "'");
  }
  m.tags = f.require_value<std::vector<std::size_t>>("tags");
  m.word_vectors = matrix_from_json(f.at("word_vectors"), ctx + ".word_vectors");
  m.paragraph_vectors = matrix_from_json(f.at("paragraph_vectors"), ctx + ".paragraph_vectors");
  m.output_weights = matrix_from_json(f.at("output_weights"), ctx + ".output_weights");
  m.output_bias = f.require_value<std::vector<double>>("output_bias");
  m.epoch_objective = f.require_value<std::vector<double>>("epoch_objective");
  f.finish();
  const std::size_t V = m.vocab.size(), D = m.config.dim;
  require(std::is_sorted(m.tags.begin(), m.tags.end()), ErrorKind::schema, ctx + ": tags unsorted");
  require(m.word_vectors.rows() == V && m.word_vectors.cols() == D &&
              m.paragraph_vectors.rows() == m.tags.size() && m.paragraph_vectors.cols() == D &&
              m.output_weights.rows() == V && m.output_weights.cols() == m.config.input_width() &&
              m.output_bias.size() == V,
          ErrorKind::schema, ctx + ": matrix shapes disagree with config and vocabulary");
  return m;
}

inline void save_paragraph_model(const ParagraphModel& m, const std::string& path) {
  write_text_file(path, to_json(m).dump() + "\n");
}

inline ParagraphModel load_paragraph_model(const std::string& path) {
  return paragraph_model_from_json(read_json_file(path), path);
}

// ---------------------------------------------------------------------------
// Classifiers

inline Json model_body(const LogisticModel& m) {
  return Json{{"weights", m.weights}, {"bias", m.bias}, {"l2", m.l2},
              {"standardizer", to_json(m.standardizer)}, {"iterations", m.iterations}};
}

inline Json model_body(const RandomForestModel& m) {
  Json trees = Json::array();
  for (const auto& t : m.trees) trees.push_back(to_json(t));
  return Json{{"n_features", m.n_features}, {"seed", m.seed}, {"trees", trees}};
}

inline Json model_body(const GradientBoostedModel& m) {
  Json stages = Json::array();
  for (const auto& t : m.stages) stages.push_back(to_json(t));
  return Json{{"n_features", m.n_features}, {"initial_score", m.initial_score},
              {"training_loss", m.training_loss}, {"stages", stages}};
}

inline Json model_body(const MlpModel& m) {
  Json weights = Json::array();
  for (const auto& w : m.weights) weights.push_back(to_json(w));
  return Json{{"layer_sizes", m.layer_sizes}, {"weights", weights}, {"biases", m.biases},
              {"standardizer", to_json(m.standardizer)}, {"l2", m.l2}};
}

// `train` holds the hyperparameters and seed the model was fitted with.
inline Json to_json(const TrainedClassifier& model, const TrainConfig& train) {
  const auto kind = classifier_kind(model);
  return Json{{"format", kClassifierFormat},
              {"version", kContainerVersion},
              {"kind", classifier_key(kind)},
              {"seed", train.seed},
              {"hyperparameters", to_json(train)},
              {"model", std::visit([](const auto& m) { return model_body(m); }, model)}};
}

struct LoadedClassifier {
  TrainedClassifier model;
  TrainConfig train;
};

inline LoadedClassifier classifier_from_json(const Json& j, const std::string& ctx = "classifier") {
  Fields f(j, ctx);
  check_container(f, kClassifierFormat);
  const auto kind = parse_classifier_kind(f.require_value<std::string>("kind"));
  LoadedClassifier out;
  out.train = train_config_from_json(f.at("hyperparameters"), ctx + ".hyperparameters");
  out.train.seed = f.require_value<std::uint64_t>("seed");
  Fields b(f.at("model"), ctx + ".model");
  switch (kind) {
    case ClassifierKind::logistic: {
      LogisticModel m;
      m.weights = b.require_value<std::vector<double>>("weights");
      m.bias = b.require_value<double>("bias");
      m.l2 = b.require_value<double>("l2");
      m.standardizer = standardizer_from_json(b.at("standardizer"), ctx + ".standardizer");
      m.iterations = b.require_value<std::size_t>("iterations");
      require(m.standardizer.mean.size() == m.weights.size(), ErrorKind::schema,
              ctx + ": logistic width mismatch");
      out.model = std::move(m);
      break;
    }
    case ClassifierKind::random_forest: {
      RandomForestModel m;
      m.params = out.train.forest;
      m.n_features = b.require_value<std::size_t>("n_features");
      m.seed = b.require_value<std::uint64_t>("seed");
      const auto& trees = b.at("trees");
      require(trees.is_array() && !trees.empty(), ErrorKind::schema, ctx + ": forest has no trees");
      for (std::size_t i = 0; i < trees.size(); ++i)
        m.trees.push_back(tree_from_json(trees[i], ctx + format(".trees[%zu]", i)));
      out.model = std::move(m);
      break;
    }
    case ClassifierKind::gradient_boosting: {
      GradientBoostedModel m;
      m.params = out.train.boosting;
      m.n_features = b.require_value<std::size_t>("n_features");
      m.initial_score = b.require_value<double>("initial_score");
      m.training_loss = b.require_value<std::vector<double>>("training_loss");
      const auto& stages = b.at("stages");
      require(stages.is_array(), ErrorKind::schema, ctx + ": stages must be an array");
      for (std::size_t i = 0; i < stages.size(); ++i)
        m.stages.push_back(tree_from_json(stages[i], ctx + format(".stages[%zu]", i)));
      out.model = std::move(m);
      break;
    }
    case ClassifierKind::mlp: {
      MlpModel m;
      m.layer_sizes = b.require_value<std::vector<std::size_t>>("layer_sizes");
      const auto& weights = b.at("weights");
      require(weights.is_array(), ErrorKind::schema, ctx + ": weights must be an array");
      for (std::size_t i = 0; i < weights.size(); ++i)
        m.weights.push_back(matrix_from_json(weights[i], ctx + format(".weights[%zu]", i)));
      m.biases = b.require_value<std::vector<std::vector<double>>>("biases");
      m.standardizer = standardizer_from_json(b.at("standardizer"), ctx + ".standardizer");
      m.l2 = b.require_value<double>("l2");
      const std::size_t L = m.layer_sizes.size();
      require(L >= 2 && m.weights.size() == L - 1 && m.biases.size() == L - 1, ErrorKind::schema,
              ctx + ": layer count mismatch");
      for (std::size_t l = 0; l + 1 < L; ++l)
        require(m.weights[l].rows() == m.layer_sizes[l + 1] && m.weights[l].cols() == m.layer_sizes[l] &&
                    m.biases[l].size() == m.layer_sizes[l + 1],
                ErrorKind::schema, ctx + format(": layer %zu shape mismatch", l));
      out.model = std::move(m);
      break;
    }
  }
  b.finish();
  f.finish();
  return out;
}

inline void save_classifier(const TrainedClassifier& model, const TrainConfig& train,
                            const std::string& path) {
  write_text_file(path, to_json(model, train).dump() + "\n");
}

inline LoadedClassifier load_classifier(const std::string& path) {
  return classifier_from_json(read_json_file(path), path);
}

}  // namespace vapipe
