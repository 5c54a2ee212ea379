#pragma once

// Verbal-autopsy records: CSV ingestion, narrative preprocessing, structured
// feature encoding and a seeded synthetic corpus generator.

#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vapipe/common.hpp"
#include "vapipe/csv.hpp"

namespace vapipe {

inline constexpr std::size_t kBinaryFeatureCount = 9;
inline constexpr std::size_t kStructuredWidth = kBinaryFeatureCount + 1;

// Column order of the structured feature vector.
inline constexpr std::array<const char*, kBinaryFeatureCount> kBinaryFeatureNames = {
    "female", "tuber", "diabetes", "men_con", "cough",
    "ch_cough", "diarr", "exc_urine", "exc_drink"};

enum BinaryFeature : std::size_t {
  kFemale = 0,
  kTuber,
  kDiabetes,
  kMenCon,
  kCough,
  kChCough,
  kDiarr,
  kExcUrine,
  kExcDrink,
};

struct VARecord {
  std::array<std::uint8_t, kBinaryFeatureCount> flags{};
  double age = 0.0;
  std::string description;
  std::uint8_t class_label = 0;
  // Set when the narrative is blank.
  bool degenerate = false;

  std::uint8_t flag(BinaryFeature f) const { return flags[f]; }
  bool operator==(const VARecord&) const = default;
};

struct TokenizedDoc {
  std::size_t doc_id = 0;
  std::vector<std::string> tokens;
  std::uint8_t label = 0;
  bool degenerate = false;  // no tokens survived preprocessing
};

// Standard English stop words (mirrors data/stopwords_en.txt).
inline const std::vector<std::string>& default_stop_words() {
  static const std::vector<std::string> words = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
      "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "her",
      "hers", "herself", "it", "its", "itself", "they", "them", "their", "theirs",
      "themselves", "what", "which", "who", "whom", "this", "that", "these", "those",
      "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
      "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if",
      "or", "because", "as", "until", "while", "of", "at", "by", "for", "with",
      "about", "against", "between", "into", "through", "during", "before", "after",
      "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
      "under", "again", "further", "then", "once", "here", "there", "when", "where",
      "why", "how", "all", "any", "both", "each", "few", "more", "most", "other",
      "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
      "very", "s", "t", "can", "will", "just", "don", "should", "now", "d", "ll", "m",
      "o", "re", "ve", "y", "ain", "aren", "couldn", "didn", "doesn", "hadn", "hasn",
      "haven", "isn", "ma", "mightn", "mustn", "needn", "shan", "shouldn", "wasn",
      "weren", "won", "wouldn"};
  return words;
}

// The two removed keywords and the misspellings seen in transcribed narratives.
inline const std::vector<std::string>& default_masked_keywords() {
  static const std::vector<std::string> words = {
      "diabetes", "diabetis", "diabeties", "diabets", "diabetese", "diabites",
      "diabates", "daibetes", "diebetes", "diabeetes", "sugar", "suger", "sugor",
      "shugar", "sugars", "sugur"};
  return words;
}

struct PreprocessConfig {
  std::set<std::string> stop_words;
  std::set<std::string> masked_keywords;
  std::size_t min_token_len = 3;

  static PreprocessConfig defaults() {
    PreprocessConfig cfg;
    cfg.stop_words.insert(default_stop_words().begin(), default_stop_words().end());
    cfg.masked_keywords.insert(default_masked_keywords().begin(),
                               default_masked_keywords().end());
    return cfg;
  }

  void validate() const {
    require(min_token_len >= 1, ErrorKind::config, "min_token_len must be >= 1");
    auto lower = [](const std::string& w) {
      for (unsigned char c : w)
        if (std::isupper(c)) return false;
      return true;
    };
    for (const auto& w : stop_words)
      require(lower(w), ErrorKind::config, "stop word not lowercase: " + w);
    for (const auto& w : masked_keywords)
      require(lower(w), ErrorKind::config, "masked keyword not lowercase: " + w);
  }
};

// Reads one token per line; '#' starts a comment line.
inline std::set<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open word list: " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    line = line.substr(start);
    if (line.empty() || line.front() == '#') continue;
    for (auto& c : line) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.insert(line);
  }
  return words;
}

// Splits on every non-alphanumeric byte, lowercases, then drops short tokens,
// stop words and masked keywords. Non-ASCII bytes count as separators.
inline std::vector<std::string> preprocess_narrative(std::string_view text,
                                                     const PreprocessConfig& cfg) {
  std::vector<std::string> out;
  std::string token;
  auto flush = [&] {
    if (token.size() >= cfg.min_token_len && !cfg.stop_words.contains(token) &&
        !cfg.masked_keywords.contains(token))
      out.push_back(token);
    token.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else if (!token.empty()) {
      flush();
    }
  }
  if (!token.empty()) flush();
  return out;
}

inline std::vector<TokenizedDoc> tokenize_corpus(const std::vector<VARecord>& records,
                                                 const PreprocessConfig& cfg) {
  cfg.validate();
  std::vector<TokenizedDoc> docs;
  docs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    TokenizedDoc doc;
    doc.doc_id = i;
    doc.tokens = preprocess_narrative(records[i].description, cfg);
    doc.label = records[i].class_label;
    doc.degenerate = doc.tokens.empty();
    docs.push_back(std::move(doc));
  }
  return docs;
}

// Age normalization; a divisor of 1 leaves ages in years.
struct AgeScale {
  double divisor = 100.0;
  static AgeScale none() { return AgeScale{1.0}; }
};

inline std::vector<double> encode_structured(const VARecord& rec, AgeScale scale = {}) {
  std::vector<double> v(kStructuredWidth);
  for (std::size_t i = 0; i < kBinaryFeatureCount; ++i) v[i] = rec.flags[i];
  v[kBinaryFeatureCount] = rec.age / scale.divisor;
  return v;
}

// ---------------------------------------------------------------------------
// CSV

// Maps each logical field to its header name in the input file.
struct CsvSchema {
  std::array<std::string, kBinaryFeatureCount> flag_columns;
  std::string age_column = "age";
  std::string description_column = "description";
  std::string class_column = "class";

  CsvSchema() {
    for (std::size_t i = 0; i < kBinaryFeatureCount; ++i) flag_columns[i] = kBinaryFeatureNames[i];
  }

  std::vector<std::string> header() const {
    std::vector<std::string> h(flag_columns.begin(), flag_columns.end());
    h.push_back(age_column);
    h.push_back(description_column);
    h.push_back(class_column);
    return h;
  }
};

namespace detail {

inline std::string lower_trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool parse_bit(const std::string& cell, bool gender, std::uint8_t& out) {
  const std::string v = lower_trim(cell);
  if (v == "1") { out = 1; return true; }
  if (v == "0") { out = 0; return true; }
  if (gender) {
    if (v == "female") { out = 1; return true; }
    if (v == "male") { out = 0; return true; }
    return false;
  }
  if (v == "yes") { out = 1; return true; }
  if (v == "no") { out = 0; return true; }
  return false;
}

}  // namespace detail

inline std::vector<VARecord> parse_va_csv(std::istream& in, const CsvSchema& schema = {}) {
  csv::Reader reader(in);
  csv::Row row;
  if (!reader.next(row)) fail(ErrorKind::empty_corpus, "empty corpus: no header row");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < row.fields.size(); ++i) index[detail::lower_trim(row.fields[i])] = i;
  auto column = [&](const std::string& name) {
    auto it = index.find(detail::lower_trim(name));
    if (it == index.end()) fail(ErrorKind::schema, "missing column '" + name + "'");
    return it->second;
  };
  std::array<std::size_t, kBinaryFeatureCount> flag_col{};
  for (std::size_t i = 0; i < kBinaryFeatureCount; ++i) flag_col[i] = column(schema.flag_columns[i]);
  const std::size_t age_col = column(schema.age_column);
  const std::size_t desc_col = column(schema.description_column);
  const std::size_t class_col = column(schema.class_column);
  const std::size_t width = row.fields.size();

  std::vector<VARecord> records;
  std::size_t data_row = 0;
  while (reader.next(row)) {
    ++data_row;
    auto row_error = [&](const std::string& what) {
      fail(ErrorKind::parse,
           format("row %zu (line %zu): %s", data_row, row.line, what.c_str()));
    };
    if (row.fields.size() != width)
      row_error(format("expected %zu fields, found %zu", width, row.fields.size()));
    VARecord rec;
    for (std::size_t i = 0; i < kBinaryFeatureCount; ++i) {
      const auto& cell = row.fields[flag_col[i]];
      if (!detail::parse_bit(cell, i == kFemale, rec.flags[i]))
        row_error("unrecognized value '" + cell + "' in column '" + schema.flag_columns[i] + "'");
    }
    const std::string age_text = detail::lower_trim(row.fields[age_col]);
    char* end = nullptr;
    rec.age = std::strtod(age_text.c_str(), &end);
    if (age_text.empty() || end != age_text.c_str() + age_text.size() ||
        !std::isfinite(rec.age) || rec.age < 0)
      row_error("invalid age '" + row.fields[age_col] + "'");
    rec.description = row.fields[desc_col];
    rec.degenerate = detail::lower_trim(rec.description).empty();
    if (!detail::parse_bit(row.fields[class_col], false, rec.class_label))
      row_error("unrecognized class value '" + row.fields[class_col] + "'");
    records.push_back(std::move(rec));
  }
  if (records.empty()) fail(ErrorKind::empty_corpus, "empty corpus: no data rows");
  return records;
}

inline std::vector<VARecord> parse_va_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open input: " + path);
  try {
    return parse_va_csv(in, schema);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

inline void write_va_csv(std::ostream& out, const std::vector<VARecord>& records,
                         const CsvSchema& schema = {}) {
  csv::write_row(out, schema.header());
  for (const auto& r : records) {
    std::vector<std::string> f;
    f.push_back(r.flags[kFemale] ? "Female" : "Male");
    for (std::size_t i = 1; i < kBinaryFeatureCount; ++i) f.push_back(r.flags[i] ? "yes" : "no");
    f.push_back(format_exact(r.age));
    f.push_back(r.description);
    f.push_back(r.class_label ? "1" : "0");
    csv::write_row(out, f);
  }
}

// ---------------------------------------------------------------------------
// Synthetic corpus

// Default vocabulary pools; the signal pools are disjoint from each other and
// from the neutral pool.
inline const std::vector<std::string>& default_positive_pool() {
  static const std::vector<std::string> p = {
      "thirst", "thirsty", "urinating", "frequently", "weakness", "confused",
      "vomiting", "breathing", "drowsy", "unconscious", "thin", "tired", "dizzy",
      "sweating", "wound"};
  return p;
}
inline const std::vector<std::string>& default_negative_pool() {
  static const std::vector<std::string> p = {
      "accident", "injury", "fever", "rash", "bleeding", "chest", "coughing",
      "blood", "swollen", "headache", "stroke", "paralysed", "fell", "burns",
      "pregnant"};
  return p;
}
inline const std::vector<std::string>& default_neutral_pool() {
  static const std::vector<std::string> p = {
      "hospital", "clinic", "family", "morning", "night", "home", "taken",
      "doctor", "nurse", "medicine", "tablets", "sick", "days", "weeks", "months",
      "died", "mother", "father", "daughter", "son", "brother", "sister", "village",
      "told", "went", "came", "stayed", "started", "complained", "pain", "body",
      "food", "water", "eating", "sleeping", "bed", "healer", "traditional",
      "treatment", "better", "worse", "condition", "year", "old", "later",
      "time", "back", "returned", "discharged", "admitted", "health", "centre",
      "ambulance", "transport", "relatives", "neighbours", "church", "prayed",
      "week", "long"};
  return p;
}

struct SynthSpec {
  std::size_t n_records = 500;
  double positive_rate = 0.05;
  std::vector<std::string> signal_tokens_pos = default_positive_pool();
  std::vector<std::string> signal_tokens_neg = default_negative_pool();
  std::vector<std::string> neutral_tokens = default_neutral_pool();
  double signal_strength = 0.2;
  double binary_feature_flip_prob = 0.3;
  std::uint64_t rng_seed = 7;

  void validate() const {
    require(n_records >= 1, ErrorKind::config, "n_records must be >= 1");
    require(positive_rate > 0.0 && positive_rate < 1.0, ErrorKind::config,
            "positive_rate must lie in (0,1)");
    require(signal_strength >= 0.0 && signal_strength <= 1.0, ErrorKind::config,
            "signal_strength must lie in [0,1]");
    require(binary_feature_flip_prob >= 0.0 && binary_feature_flip_prob <= 1.0,
            ErrorKind::config, "binary_feature_flip_prob must lie in [0,1]");
    require(!neutral_tokens.empty() || signal_strength == 1.0, ErrorKind::config,
            "neutral token pool is empty");
    if (signal_strength > 0.0)
      require(!signal_tokens_pos.empty() && !signal_tokens_neg.empty(), ErrorKind::config,
              "signal token pools must be nonempty when signal_strength > 0");
    if (signal_strength == 1.0) {
      const std::set<std::string> pos(signal_tokens_pos.begin(), signal_tokens_pos.end());
      for (const auto& t : signal_tokens_neg)
        require(!pos.contains(t), ErrorKind::config,
                "signal pools must be disjoint when signal_strength = 1 (shared: " + t + ")");
    }
  }
};

// Every record is drawn from one seeded stream:
//  - label ~ Bernoulli(positive_rate)
//  - female and age are label-independent
//  - each of the other eight flags equals the label, flipped with
//    binary_feature_flip_prob
//  - the narrative has 4-6 sentences; each content slot draws from the
//    record's class pool with probability signal_strength, otherwise from the
//    neutral pool. Stop words, punctuation, casing and masked keywords are
//    mixed in so preprocessing has work to do; they carry no signal once
//    preprocessing has run.
inline std::vector<VARecord> generate_synthetic_corpus(const SynthSpec& spec) {
  spec.validate();
  static const std::vector<std::string> fillers = {
      "the", "she", "he", "was", "had", "and", "to", "of", "her", "his", "at", "in",
      "with", "for", "on", "it", "they", "then", "after", "very"};
  const auto& masked = default_masked_keywords();

  Rng rng(spec.rng_seed);
  std::vector<VARecord> records;
  records.reserve(spec.n_records);
  for (std::size_t r = 0; r < spec.n_records; ++r) {
    VARecord rec;
    rec.class_label = rng.bernoulli(spec.positive_rate) ? 1 : 0;
    rec.flags[kFemale] = rng.bernoulli(0.5) ? 1 : 0;
    for (std::size_t f = 1; f < kBinaryFeatureCount; ++f) {
      const bool flip = rng.bernoulli(spec.binary_feature_flip_prob);
      rec.flags[f] = static_cast<std::uint8_t>(rec.class_label ^ (flip ? 1 : 0));
    }
    rec.age = std::round(std::clamp(rng.normal(55.0, 18.0), 0.0, 105.0));

    const auto& own_pool = rec.class_label ? spec.signal_tokens_pos : spec.signal_tokens_neg;
    const std::size_t n_sentences = 4 + rng.below(3);
    std::string text;
    for (std::size_t s = 0; s < n_sentences; ++s) {
      const std::size_t n_words = 6 + rng.below(5);
      for (std::size_t w = 0; w < n_words; ++w) {
        std::string word;
        if (rng.bernoulli(0.3)) {
          word = fillers[rng.below(fillers.size())];
        } else if (rng.bernoulli(0.04)) {
          word = masked[rng.below(masked.size())];
        } else if (rng.bernoulli(spec.signal_strength)) {
          word = own_pool[rng.below(own_pool.size())];
        } else {
          word = spec.neutral_tokens[rng.below(spec.neutral_tokens.size())];
        }
        if (w == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
        if (w) text += (rng.bernoulli(0.08) ? ", " : " ");
        text += word;
      }
      text += rng.bernoulli(0.1) ? "!" : ".";
      if (s + 1 < n_sentences) text += ' ';
    }
    rec.description = std::move(text);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace vapipe
