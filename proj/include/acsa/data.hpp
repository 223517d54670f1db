#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "acsa/layers.hpp"

namespace acsa {

// ---------------------------------------------------------------------------
// Tokenization

enum class TokenizerMode { kWhitespacePunct, kChar };

inline const char* tokenizer_name(TokenizerMode m) {
  return m == TokenizerMode::kWhitespacePunct ? "whitespace_punct" : "char";
}

inline TokenizerMode parse_tokenizer(const std::string& s) {
  if (s == "whitespace_punct") return TokenizerMode::kWhitespacePunct;
  if (s == "char") return TokenizerMode::kChar;
  throw ConfigError("unknown tokenizer '" + s + "' (expected whitespace_punct or char)");
}

namespace detail {

inline bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }
inline bool is_punct_byte(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

inline char lower_byte(unsigned char c) {
  return static_cast<char>(c < 0x80 ? std::tolower(c) : c);
}

// Byte length of the UTF-8 code point starting at s[i]; malformed lead bytes
// count as single bytes so tokenization never stalls.
inline std::size_t utf8_len(const std::string& s, std::size_t i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  if ((c & 0xE0) == 0xC0) len = 2;
  else if ((c & 0xF0) == 0xE0) len = 3;
  else if ((c & 0xF8) == 0xF0) len = 4;
  return std::min(len, s.size() - i);
}

}  // namespace detail

// whitespace_punct: lowercase, split on whitespace, and emit each ASCII
// punctuation character as its own token. char: one token per code point,
// whitespace skipped — the fallback for scripts without segmentation.
inline std::vector<std::string> tokenize(const std::string& text, TokenizerMode mode) {
  if (text.empty()) throw DataError("tokenize: empty text");
  std::vector<std::string> out;
  if (mode == TokenizerMode::kChar) {
    for (std::size_t i = 0; i < text.size();) {
      std::size_t len = detail::utf8_len(text, i);
      if (len == 1 && detail::is_space_byte(text[i])) {
        ++i;
        continue;
      }
      std::string tok = text.substr(i, len);
      if (len == 1) tok[0] = detail::lower_byte(tok[0]);
      out.push_back(std::move(tok));
      i += len;
    }
  } else {
    std::string word;
    auto flush = [&] {
      if (!word.empty()) {
        out.push_back(word);
        word.clear();
      }
    };
    for (std::size_t i = 0; i < text.size();) {
      std::size_t len = detail::utf8_len(text, i);
      if (len == 1) {
        char c = text[i];
        if (detail::is_space_byte(c)) {
          flush();
        } else if (detail::is_punct_byte(c)) {
          flush();
          out.emplace_back(1, c);
        } else {
          word += detail::lower_byte(c);
        }
      } else {
        word += text.substr(i, len);
      }
      i += len;
    }
    flush();
  }
  if (out.empty()) throw DataError("tokenize: text has no tokens: '" + text + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> tokens{"<pad>", "<unk>"};
  std::unordered_map<std::string, int> ids{{"<pad>", kPad}, {"<unk>", kUnk}};

  int size() const { return static_cast<int>(tokens.size()); }

  bool contains(const std::string& t) const { return ids.count(t) > 0; }

  int id_of(const std::string& t) const {
    auto it = ids.find(t);
    return it == ids.end() ? kUnk : it->second;
  }

  void add(const std::string& t) {
    if (ids.emplace(t, size()).second) tokens.push_back(t);
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : tokens) {
      h = fnv1a(t, h);
      h = fnv1a("\n", h);
    }
    return h;
  }
};

// Ids are assigned by frequency, ties broken lexicographically, after the
// reserved padding and unknown ids. Built from the training split only.
inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& documents,
                              int min_count = 1) {
  std::unordered_map<std::string, long long> counts;
  for (const auto& doc : documents)
    for (const auto& tok : doc) ++counts[tok];

  std::vector<std::pair<std::string, long long>> entries;
  for (auto& [tok, c] : counts)
    if (c >= min_count) entries.emplace_back(tok, c);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Vocabulary v;
  for (auto& [tok, c] : entries) v.add(tok);
  return v;
}

// ---------------------------------------------------------------------------
// Label space

struct LabelSpace {
  std::vector<std::string> aspects;
  std::vector<std::string> polarities;
  std::unordered_map<std::string, int> aspect_ids;
  std::unordered_map<std::string, int> polarity_ids;

  int n_aspects() const { return static_cast<int>(aspects.size()); }
  int n_polarities() const { return static_cast<int>(polarities.size()); }

  int aspect_index(const std::string& a) const {
    auto it = aspect_ids.find(a);
    return it == aspect_ids.end() ? -1 : it->second;
  }
  int polarity_index(const std::string& p) const {
    auto it = polarity_ids.find(p);
    return it == polarity_ids.end() ? -1 : it->second;
  }

  bool operator==(const LabelSpace& o) const {
    return aspects == o.aspects && polarities == o.polarities;
  }

  std::string describe() const {
    std::string s = "aspects[";
    for (std::size_t i = 0; i < aspects.size(); ++i) s += (i ? "," : "") + aspects[i];
    s += "] polarities[";
    for (std::size_t i = 0; i < polarities.size(); ++i) s += (i ? "," : "") + polarities[i];
    return s + "]";
  }
};

inline LabelSpace make_label_space(std::vector<std::string> aspects,
                                   std::vector<std::string> polarities) {
  LabelSpace l;
  l.aspects = std::move(aspects);
  l.polarities = std::move(polarities);
  for (std::size_t i = 0; i < l.aspects.size(); ++i)
    if (!l.aspect_ids.emplace(l.aspects[i], static_cast<int>(i)).second)
      throw DataError("label space: duplicate aspect '" + l.aspects[i] + "'");
  for (std::size_t i = 0; i < l.polarities.size(); ++i)
    if (!l.polarity_ids.emplace(l.polarities[i], static_cast<int>(i)).second)
      throw DataError("label space: duplicate polarity '" + l.polarities[i] + "'");
  if (l.aspects.empty() || l.polarities.empty())
    throw DataError("label space: needs at least one aspect and one polarity");
  return l;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Two sections, one entry per line:
//   [aspects]  then  [polarities]
inline LabelSpace load_label_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label-space file: " + path);
  std::vector<std::string> aspects, polarities;
  std::vector<std::string>* current = nullptr;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t == "[aspects]") {
      current = &aspects;
    } else if (t == "[polarities]") {
      current = &polarities;
    } else if (t[0] == '[') {
      throw DataError(path + ":" + std::to_string(ln) + ": unknown section " + t);
    } else {
      if (!current)
        throw DataError(path + ":" + std::to_string(ln) + ": entry before any section header");
      current->push_back(t);
    }
  }
  return make_label_space(std::move(aspects), std::move(polarities));
}

inline void save_label_space(const std::string& path, const LabelSpace& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write label-space file: " + path);
  out << "[aspects]\n";
  for (const auto& a : labels.aspects) out << a << "\n";
  out << "[polarities]\n";
  for (const auto& p : labels.polarities) out << p << "\n";
}

// ---------------------------------------------------------------------------
// Raw reviews

struct RawReview {
  std::string id;
  std::string text;
  std::vector<std::pair<std::string, std::string>> opinions;  // (category, polarity)

  // Duplicate categories collapse to the last occurrence.
  void add_opinion(const std::string& category, const std::string& polarity) {
    for (auto& [c, p] : opinions)
      if (c == category) {
        p = polarity;
        return;
      }
    opinions.emplace_back(category, polarity);
  }
};

// One JSON record per line: {"id": "...", "text": "...",
// "opinions": [["ENTITY#ATTRIBUTE", "polarity"], ...]}.
inline std::vector<RawReview> parse_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<RawReview> out;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(ln) + ": malformed record: " + e.what());
    }
    if (!j.contains("text") || !j["text"].is_string())
      throw DataError(path + ":" + std::to_string(ln) + ": record has no \"text\" string");
    RawReview r;
    r.text = j["text"].get<std::string>();
    r.id = j.value("id", std::to_string(ln));
    if (j.contains("opinions")) {
      if (!j["opinions"].is_array())
        throw DataError(path + ":" + std::to_string(ln) + ": \"opinions\" must be an array");
      for (const auto& op : j["opinions"]) {
        if (op.is_array() && op.size() == 2 && op[0].is_string() && op[1].is_string()) {
          r.add_opinion(op[0].get<std::string>(), op[1].get<std::string>());
        } else if (op.is_object() && op.contains("category") && op.contains("polarity")) {
          r.add_opinion(op["category"].get<std::string>(), op["polarity"].get<std::string>());
        } else {
          throw DataError(path + ":" + std::to_string(ln) +
                          ": opinion must be [category, polarity]");
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

inline void collect_opinions(const boost::property_tree::ptree& opinions_node,
                             const std::string& review_id, RawReview& r) {
  for (const auto& [key, node] : opinions_node) {
    if (key != "Opinion") continue;
    auto category = node.get_optional<std::string>("<xmlattr>.category");
    auto polarity = node.get_optional<std::string>("<xmlattr>.polarity");
    if (!category || !polarity)
      throw DataError("review " + review_id + ": Opinion missing category or polarity");
    r.add_opinion(trim(*category), trim(*polarity));
  }
}

inline void parse_review_element(const boost::property_tree::ptree& review,
                                 const std::string& fallback_id,
                                 std::vector<RawReview>& out) {
  std::string rid = review.get<std::string>("<xmlattr>.rid", fallback_id);
  auto sentences = review.get_child_optional("sentences");

  // Sentence-level units: each sentence with its own Opinions becomes one
  // review; sentences without opinions still count, with empty labels.
  bool sentence_level = false;
  if (sentences)
    for (const auto& [key, s] : *sentences)
      if (key == "sentence" && s.get_child_optional("Opinions")) sentence_level = true;

  if (sentence_level) {
    int k = 0;
    for (const auto& [key, s] : *sentences) {
      if (key != "sentence") continue;
      RawReview r;
      r.id = s.get<std::string>("<xmlattr>.id", rid + ":" + std::to_string(k));
      r.text = s.get<std::string>("text", "");
      if (auto ops = s.get_child_optional("Opinions")) collect_opinions(*ops, r.id, r);
      out.push_back(std::move(r));
      ++k;
    }
    return;
  }

  RawReview r;
  r.id = rid;
  if (auto text = review.get_optional<std::string>("text")) {
    r.text = *text;
  } else if (sentences) {
    std::string joined;
    for (const auto& [key, s] : *sentences) {
      if (key != "sentence") continue;
      std::string t = s.get<std::string>("text", "");
      if (t.empty()) continue;
      if (!joined.empty()) joined += " ";
      joined += t;
    }
    r.text = joined;
  }
  if (auto ops = review.get_child_optional("Opinions")) collect_opinions(*ops, r.id, r);
  out.push_back(std::move(r));
}

}  // namespace detail

// SemEval-2016 ABSA XML: a Reviews root holding Review elements, each either
// carrying its own text + Opinions (review-level subtasks) or a sentences
// list whose sentence elements carry their own Opinions (sentence-level).
inline std::vector<RawReview> parse_semeval_xml(const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_xml(path, tree);
  } catch (const pt::xml_parser_error& e) {
    throw DataError(path + ": malformed XML at line " + std::to_string(e.line()) + ": " +
                    e.message());
  }

  std::vector<RawReview> out;
  if (auto reviews = tree.get_child_optional("Reviews")) {
    int k = 0;
    for (const auto& [key, node] : *reviews) {
      if (key != "Review") continue;
      detail::parse_review_element(node, "review_" + std::to_string(k), out);
      ++k;
    }
  } else if (auto review = tree.get_child_optional("Review")) {
    detail::parse_review_element(*review, "review_0", out);
  } else {
    throw DataError(path + ": expected a Reviews or Review root element");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

// One encoded text: token ids, validity mask, the multi-hot aspect target
// and the per-aspect one-hot polarity rows (all-zero for aspects the text
// does not mention).
struct Example {
  std::string id;
  std::vector<int> token_ids;
  std::vector<bool> mask;
  std::vector<int> y_aspect;               // {0,1}^N
  std::vector<std::vector<int>> y_sentiment;  // N rows of {0,1}^M

  int length() const { return static_cast<int>(token_ids.size()); }
};

inline Example encode(const RawReview& raw, const Vocabulary& vocab, const LabelSpace& labels,
                      TokenizerMode mode = TokenizerMode::kWhitespacePunct) {
  Example e;
  e.id = raw.id;
  for (const auto& tok : tokenize(raw.text, mode)) e.token_ids.push_back(vocab.id_of(tok));
  e.mask.assign(e.token_ids.size(), true);
  e.y_aspect.assign(labels.n_aspects(), 0);
  e.y_sentiment.assign(labels.n_aspects(), std::vector<int>(labels.n_polarities(), 0));
  for (const auto& [category, polarity] : raw.opinions) {
    int j = labels.aspect_index(category);
    if (j < 0) throw DataError("review " + raw.id + ": unknown aspect category '" + category +
                               "' (label space is closed)");
    int k = labels.polarity_index(polarity);
    if (k < 0) throw DataError("review " + raw.id + ": unknown polarity '" + polarity + "'");
    e.y_aspect[j] = 1;
    std::fill(e.y_sentiment[j].begin(), e.y_sentiment[j].end(), 0);
    e.y_sentiment[j][k] = 1;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Splitting and batching

inline std::pair<std::vector<Example>, std::vector<Example>> split_train_val(
    std::vector<Example> examples, double ratio, std::uint64_t seed) {
  if (examples.size() < 2) throw DataError("split_train_val: need at least 2 examples");
  if (ratio <= 0.0 || ratio >= 1.0) throw DataError("split_train_val: ratio must be in (0,1)");
  Rng rng(seed, /*stream=*/7);
  rng.shuffle(examples);
  auto n = static_cast<long long>(examples.size());
  auto train_n = static_cast<long long>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  train_n = std::clamp(train_n, 0ll, n);
  std::vector<Example> train(examples.begin(), examples.begin() + train_n);
  std::vector<Example> val(examples.begin() + train_n, examples.end());
  return {std::move(train), std::move(val)};
}

// A batch padded to its own maximum length with the padding id and
// mask=false.
struct Batch {
  std::vector<Example> items;  // padded copies
  int width = 0;
};

inline std::vector<Batch> make_batches(const std::vector<Example>& examples, int batch_size,
                                       std::uint64_t seed, bool shuffle) {
  if (batch_size < 1) throw Error("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle) {
    Rng rng(seed, /*stream=*/11);
    rng.shuffle(order);
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    std::size_t end = std::min(order.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i)
      b.width = std::max(b.width, examples[order[i]].length());
    for (std::size_t i = start; i < end; ++i) {
      Example e = examples[order[i]];
      e.token_ids.resize(b.width, Vocabulary::kPad);
      e.mask.resize(b.width, false);
      b.items.push_back(std::move(e));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Pretrained embeddings

struct EmbeddingLoadResult {
  EmbeddingTable table;
  double coverage = 0.0;  // fraction of non-reserved vocabulary found in the file
  int found = 0;
};

// Text format: token followed by `dim` space-separated decimals per line.
// Vocabulary tokens absent from the file keep their uniform [-0.05, 0.05]
// seed-driven initialization; the padding column is forced to zero.
inline EmbeddingLoadResult load_embeddings(const std::string& path, const Vocabulary& vocab,
                                           int dim, Rng& rng, bool trainable = true) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);

  EmbeddingLoadResult result;
  result.table = make_embedding(dim, vocab.size(), rng, trainable);
  Tensor& U = result.table.table->value;

  std::vector<bool> seen(vocab.size(), false);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    int id = vocab.contains(token) ? vocab.id_of(token) : -1;
    std::vector<double> values;
    values.reserve(dim);
    double v;
    while (ss >> v) values.push_back(v);
    if (static_cast<int>(values.size()) != dim)
      throw DataError(path + ":" + std::to_string(ln) + ": token '" + token + "' has " +
                      std::to_string(values.size()) + " values, expected " +
                      std::to_string(dim));
    if (id < 0) continue;
    for (int i = 0; i < dim; ++i) U.at(i, id) = values[i];
    if (!seen[id] && id >= 2) {
      seen[id] = true;
      ++result.found;
    }
  }
  for (int i = 0; i < dim; ++i) U.at(i, Vocabulary::kPad) = 0.0;

  int real = vocab.size() - 2;
  result.coverage = real > 0 ? static_cast<double>(result.found) / real : 1.0;
  return result;
}

}  // namespace acsa
