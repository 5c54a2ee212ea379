#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "vapipe/corpus.hpp"
#include "vapipe/embeddings.hpp"

using namespace vapipe;

namespace {

std::vector<TrainingDoc> docs_of(const std::vector<std::vector<std::string>>& t) {
  std::vector<TrainingDoc> out;
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back({i, t[i]});
  return out;
}

// Small corpus with every token shared across documents.
std::vector<TrainingDoc> tiny_corpus() {
  return docs_of({{"fever", "cough", "water", "thirst", "cough", "fever", "weak"},
                  {"water", "thirst", "urine", "weak", "water", "thirst"},
                  {"cough", "fever", "pain", "cough", "pain", "fever", "urine"}});
}

EmbeddingConfig small_config(PvMode mode, DmCombine combine = DmCombine::concatenate) {
  EmbeddingConfig c;
  c.mode = mode;
  c.dm_combine = combine;
  c.dim = 4;
  c.window = 2;
  c.epochs = 20;
  c.seed = 3;
  return c;
}

void randomize(ParagraphModel& m, std::uint64_t seed, double scale = 0.8) {
  Rng rng(seed);
  for (auto* mat : {&m.word_vectors, &m.paragraph_vectors, &m.output_weights})
    for (auto& v : mat->data()) v = rng.uniform(-scale, scale);
  for (auto& v : m.output_bias) v = rng.uniform(-scale, scale);
}

double mean_cosine(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                   bool same) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (same && j <= i) continue;
      s += cosine_similarity(a[i], b[j]);
      ++n;
    }
  return s / static_cast<double>(n);
}

}  // namespace

TEST(Vocabulary, CountsAndThreshold) {
  const auto corpus = docs_of({{"a", "b", "a"}, {"b", "c"}});
  const auto v2 = build_vocabulary(corpus, 2);
  EXPECT_EQ(v2.tokens, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(v2.counts[*v2.find("a")], 2u);
  const auto v1 = build_vocabulary(corpus, 1);
  EXPECT_EQ(v1.tokens, (std::vector<std::string>{"a", "b", "c"}));
  try {
    build_vocabulary(corpus, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Vocabulary, OrderByCountThenLexicographic) {
  const auto v = build_vocabulary(docs_of({{"zeta", "beta", "alpha", "zeta", "gamma", "beta"}}), 1);
  EXPECT_EQ(v.tokens, (std::vector<std::string>{"beta", "zeta", "alpha", "gamma"}));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(*v.find(v.tokens[i]), i);
  EXPECT_EQ(v.encode({"alpha", "unknown", "zeta"}), (std::vector<std::size_t>{2, 1}));
}

TEST(Softmax, Examples) {
  const auto u = softmax_predict(std::vector<double>{0, 0, 0});
  for (double p : u) EXPECT_NEAR(p, 1.0 / 3, 1e-15);
  const auto two = softmax_predict(std::vector<double>{std::log(2.0), 0});
  EXPECT_NEAR(two[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(two[1], 1.0 / 3, 1e-15);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.normal(0, 3), b = rng.normal(0, 3), c = rng.normal(0, 300);
    const auto p = softmax_predict(std::vector<double>{a, b});
    const auto q = softmax_predict(std::vector<double>{c + a, c + b});
    EXPECT_NEAR(p[0], q[0], 1e-12);
    EXPECT_NEAR(p[1], q[1], 1e-12);
  }
}

TEST(Softmax, SumsToOneOnRandomScores) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> s(1 + rng.below(40));
    for (auto& v : s) v = rng.normal(0, 1 + trial % 50);
    const auto p = softmax_predict(s);
    double sum = 0;
    for (double v : p) {
      ASSERT_GT(v, 0.0 - 1e-300);
      ASSERT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Objective, SingleWordVocabularyIsZero) {
  const auto corpus = docs_of({{"only", "only", "only"}});
  const auto m = init_paragraph_model(corpus, small_config(PvMode::dm));
  EXPECT_EQ(avg_log_prob(m, corpus), 0.0);
}

TEST(Objective, ZeroOutputWeightsGiveUniform) {
  const auto corpus = docs_of({{"a", "b", "c", "d", "a"}});
  auto m = init_paragraph_model(corpus, small_config(PvMode::dm));
  ASSERT_EQ(m.vocab.size(), 4u);
  EXPECT_NEAR(avg_log_prob(m, corpus), -std::log(4.0), 1e-15);
}

TEST(Objective, NoPositionsIsAnError) {
  const auto train = docs_of({{"a", "b"}});
  const auto m = init_paragraph_model(train, small_config(PvMode::dbow));
  try {
    avg_log_prob(m, docs_of({{"zzz"}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate);
  }
}

TEST(Objective, MatchesDirectEvaluationInEveryMode) {
  for (auto [mode, combine] : {std::pair{PvMode::dm, DmCombine::concatenate},
                               std::pair{PvMode::dm, DmCombine::average},
                               std::pair{PvMode::dbow, DmCombine::concatenate}}) {
    auto cfg = small_config(mode, combine);
    cfg.window = 3;
    const auto corpus = tiny_corpus();
    auto m = init_paragraph_model(corpus, cfg);
    randomize(m, 5);
    const double got = avg_log_prob(m, corpus);
    EXPECT_NEAR(got, oracle::avg_log_prob(m, corpus), 1e-12);
    EXPECT_LE(got, 0.0);
  }
}

TEST(Objective, GradientsMatchFiniteDifferences) {
  const auto corpus = docs_of({{"a", "b", "c", "a", "d", "e"}, {"c", "f", "a", "b", "f"}});
  for (auto [mode, combine] : {std::pair{PvMode::dm, DmCombine::concatenate},
                               std::pair{PvMode::dm, DmCombine::average},
                               std::pair{PvMode::dbow, DmCombine::concatenate}}) {
    auto cfg = small_config(mode, combine);
    cfg.dim = 3;
    cfg.window = 2;
    auto m = init_paragraph_model(corpus, cfg);
    ASSERT_LE(m.vocab.size(), 6u);
    randomize(m, 17);
    const auto g = objective_gradient(m, corpus);
    EXPECT_NEAR(g.objective, avg_log_prob(m, corpus), 1e-12);
    auto f = [&] { return oracle::avg_log_prob(m, corpus); };
    double worst = 0;
    auto check = [&](Matrix& param, const Matrix& grad) {
      for (std::size_t i = 0; i < param.data().size(); ++i) {
        const double fd = oracle::central_difference(f, param.data()[i]);
        worst = std::max(worst, oracle::relative_error(fd, grad.data()[i]));
      }
    };
    if (mode == PvMode::dm) check(m.word_vectors, g.word_vectors);
    check(m.paragraph_vectors, g.paragraph_vectors);
    check(m.output_weights, g.output_weights);
    for (std::size_t i = 0; i < m.output_bias.size(); ++i)
      worst = std::max(worst, oracle::relative_error(oracle::central_difference(f, m.output_bias[i]),
                                                     g.output_bias[i]));
    EXPECT_LT(worst, 1e-4) << pv_mode_name(mode);
    // PV-DBOW never reads word vectors.
    if (mode == PvMode::dbow)
      for (double v : g.word_vectors.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Training, ShapesAndInputWidth) {
  auto cfg = small_config(PvMode::dm);
  cfg.dim = 8;
  const auto m = train_paragraph_model(tiny_corpus(), cfg);
  EXPECT_EQ(m.paragraph_vectors.rows(), 3u);
  EXPECT_EQ(m.paragraph_vectors.cols(), 8u);
  EXPECT_EQ(m.word_vectors.rows(), m.vocab.size());
  EXPECT_EQ(m.output_weights.cols(), 8u * cfg.window + 8u);
  EXPECT_TRUE(all_finite(m.word_vectors.data()));
  for (std::size_t dim : {1, 5, 50})
    for (std::size_t window : {1, 3, 9}) {
      EmbeddingConfig c;
      c.dim = dim;
      c.window = window;
      EXPECT_EQ(c.input_width(), dim * window + dim);
      c.dm_combine = DmCombine::average;
      EXPECT_EQ(c.input_width(), dim);
      c.mode = PvMode::dbow;
      EXPECT_EQ(c.input_width(), dim);
    }
}

TEST(Training, DeterministicPerSeed) {
  auto cfg = small_config(PvMode::dm);
  cfg.seed = 11;
  const auto a = train_paragraph_model(tiny_corpus(), cfg);
  const auto b = train_paragraph_model(tiny_corpus(), cfg);
  EXPECT_EQ(a.word_vectors, b.word_vectors);
  EXPECT_EQ(a.paragraph_vectors, b.paragraph_vectors);
  EXPECT_EQ(a.output_weights, b.output_weights);
  EXPECT_EQ(a.output_bias, b.output_bias);
  cfg.seed = 12;
  EXPECT_NE(train_paragraph_model(tiny_corpus(), cfg).paragraph_vectors, a.paragraph_vectors);
}

TEST(Training, ObjectiveImprovesFromInitialization) {
  for (auto mode : {PvMode::dm, PvMode::dbow}) {
    auto cfg = small_config(mode);
    cfg.learning_rate = 0.05;
    const auto corpus = tiny_corpus();
    const double before = avg_log_prob(init_paragraph_model(corpus, cfg), corpus);
    const double after = avg_log_prob(train_paragraph_model(corpus, cfg), corpus);
    EXPECT_GT(after, before) << pv_mode_name(mode);
  }
}

TEST(Training, SmallFixedRateClimbsEpochByEpoch) {
  auto cfg = small_config(PvMode::dm);
  cfg.learning_rate = 0.01;
  cfg.min_learning_rate = 0.01;
  cfg.epochs = 1;
  const auto corpus = tiny_corpus();
  // Train 1..30 epochs from the same seed and evaluate the full objective.
  double prev = avg_log_prob(init_paragraph_model(corpus, cfg), corpus);
  const double initial = prev;
  std::size_t decreases = 0;
  for (std::size_t e = 1; e <= 30; ++e) {
    cfg.epochs = e;
    const double cur = avg_log_prob(train_paragraph_model(corpus, cfg), corpus);
    decreases += cur < prev;
    prev = cur;
  }
  EXPECT_GT(prev, initial);
  EXPECT_EQ(decreases, 0u);
}

TEST(Training, NegativeSamplingOptionLearns) {
  auto cfg = small_config(PvMode::dbow);
  cfg.output = OutputLayer::negative_sampling;
  cfg.negative = 3;
  cfg.epochs = 50;
  cfg.learning_rate = 0.05;
  const auto corpus = tiny_corpus();
  const auto m = train_paragraph_model(corpus, cfg);
  EXPECT_TRUE(all_finite(m.output_weights.data()));
  EXPECT_GT(avg_log_prob(m, corpus), avg_log_prob(init_paragraph_model(corpus, cfg), corpus));
}

TEST(Training, DivergenceReportsEpochAndRate) {
  auto cfg = small_config(PvMode::dm);
  cfg.learning_rate = 1e300;
  cfg.min_learning_rate = 1e300;
  try {
    train_paragraph_model(tiny_corpus(), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::divergence);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("learning rate"), std::string::npos);
  }
}

TEST(Training, SharedTagsShareOneVector) {
  std::vector<TrainingDoc> corpus = {{0, {"a", "b"}}, {1, {"c", "d"}}, {0, {"b", "c"}}};
  const auto m = train_paragraph_model(corpus, small_config(PvMode::dbow));
  EXPECT_EQ(m.tags, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(m.paragraph_vectors.rows(), 2u);
}

TEST(Training, InvalidConfigRejected) {
  auto cfg = small_config(PvMode::dm);
  cfg.dim = 0;
  EXPECT_THROW(train_paragraph_model(tiny_corpus(), cfg), Error);
  cfg = small_config(PvMode::dm);
  cfg.window = 0;
  EXPECT_THROW(train_paragraph_model(tiny_corpus(), cfg), Error);
  cfg = small_config(PvMode::dm);
  cfg.epochs = 0;
  EXPECT_THROW(train_paragraph_model(tiny_corpus(), cfg), Error);
  EXPECT_THROW(train_paragraph_model(std::vector<TrainingDoc>{}, small_config(PvMode::dm)), Error);
}

TEST(Training, LearningRateDecaysLinearly) {
  EmbeddingConfig c;
  c.learning_rate = 0.1;
  c.min_learning_rate = 1e-4;
  EXPECT_EQ(c.epoch_learning_rate(0, 10), 0.1);
  EXPECT_NEAR(c.epoch_learning_rate(5, 10), 0.1 - (0.1 - 1e-4) * 0.5, 1e-15);
  for (std::size_t e = 1; e < 10; ++e) EXPECT_LT(c.epoch_learning_rate(e, 10), c.epoch_learning_rate(e - 1, 10));
}

namespace {

// Planted corpus: "thirst" and "urinating" in positives only.
std::vector<TokenizedDoc> planted(std::size_t n, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_records = n;
  spec.positive_rate = 0.3;
  spec.signal_strength = 0.5;
  spec.rng_seed = seed;
  return tokenize_corpus(generate_synthetic_corpus(spec), PreprocessConfig::defaults());
}

EmbeddingConfig planted_config() {
  EmbeddingConfig c;
  c.mode = PvMode::dbow;
  c.dim = 16;
  c.epochs = 30;
  c.learning_rate = 0.05;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Training, PlantedSignalSeparatesParagraphVectors) {
  const auto docs = planted(120, 3);
  const auto m = train_paragraph_model(docs, planted_config());
  std::vector<std::vector<double>> pos, neg;
  for (const auto& d : docs) {
    auto v = m.paragraph_vector(d.doc_id);
    (d.label ? pos : neg).emplace_back(v.begin(), v.end());
  }
  ASSERT_GE(pos.size(), 5u);
  EXPECT_GT(mean_cosine(pos, pos, true), mean_cosine(pos, neg, false));
}

TEST(Inference, EmptyOrUnknownTokensGiveFlaggedZero) {
  const auto m = train_paragraph_model(tiny_corpus(), small_config(PvMode::dm));
  for (const auto& tokens : {std::vector<std::string>{}, std::vector<std::string>{"never", "seen"}}) {
    const auto v = infer_vector(m, tokens, 10, 1, 42);
    EXPECT_TRUE(v.degenerate);
    EXPECT_EQ(v.doc_id, 42u);
    EXPECT_EQ(v.values, std::vector<double>(4, 0.0));
  }
}

TEST(Inference, DeterministicAndLeavesModelUntouched) {
  const auto m = train_paragraph_model(tiny_corpus(), small_config(PvMode::dm));
  const auto copy = m;
  const std::vector<std::string> tokens = {"water", "thirst", "unknown", "weak"};
  const auto a = infer_vector(m, tokens, 20, 9);
  const auto b = infer_vector(m, tokens, 20, 9);
  EXPECT_EQ(a.values, b.values);
  EXPECT_FALSE(a.degenerate);
  EXPECT_EQ(m.output_weights, copy.output_weights);
  EXPECT_EQ(m.word_vectors, copy.word_vectors);
  EXPECT_NE(infer_vector(m, tokens, 20, 10).values, a.values);
}

TEST(Inference, ReinferredTrainingDocsResembleStoredVectors) {
  const auto docs = planted(120, 4);
  const auto m = train_paragraph_model(docs, planted_config());
  double total = 0;
  std::size_t n = 0;
  for (const auto& d : docs) {
    if (d.tokens.empty()) continue;
    const auto v = infer_vector(m, d.tokens, 30, 1000 + d.doc_id);
    total += cosine_similarity(v.values, m.paragraph_vector(d.doc_id));
    ++n;
  }
  EXPECT_GT(total / static_cast<double>(n), 0.5);
}

TEST(Concat, Examples) {
  EXPECT_EQ(concat_vectors({{1, 2}, {3}}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(concat_vectors({{4, 5}}), (std::vector<double>{4, 5}));
  EXPECT_EQ(concat_vectors({std::vector<double>(50, 1), std::vector<double>(50, 2)}).size(), 100u);
}

TEST(Interface, TrainingInputCarriesNoLabels) {
  // A labelled corpus trains identically to the same tokens relabelled.
  auto docs = planted(40, 6);
  const auto a = train_paragraph_model(docs, planted_config());
  for (auto& d : docs) d.label = 1 - d.label;
  const auto b = train_paragraph_model(docs, planted_config());
  EXPECT_EQ(a.paragraph_vectors, b.paragraph_vectors);
}
