#pragma once

#include <array>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "acsa/data.hpp"

namespace acsa {

// Deterministic keyword-driven corpus: every text mentions one to three
// distinct aspects through aspect-specific nouns, and each mention carries a
// polarity-specific adjective. Labels follow directly from the keywords, so
// a working model can overfit it quickly; the suite's training checks run on
// this corpus instead of the licensed review datasets.

inline constexpr std::uint64_t kSynthDefaultSeed = 42;

struct SynthCorpus {
  std::vector<RawReview> reviews;
  LabelSpace labels;
};

inline SynthCorpus gen_synthetic_corpus(int n_texts = 50,
                                        std::uint64_t seed = kSynthDefaultSeed) {
  if (n_texts < 1) throw Error("gen_synthetic_corpus: n_texts must be >= 1");

  static const std::vector<std::string> aspects = {
      "FOOD#QUALITY", "SERVICE#GENERAL", "AMBIENCE#GENERAL", "PRICE#GENERAL",
      "DRINKS#QUALITY"};
  static const std::vector<std::string> polarities = {"positive", "negative", "neutral"};
  static const std::array<std::vector<std::string>, 5> aspect_words = {{
      {"food", "pasta", "steak", "pizza"},
      {"service", "waiter", "staff", "host"},
      {"ambience", "decor", "music", "lighting"},
      {"price", "bill", "cost", "tab"},
      {"wine", "coffee", "beer", "cocktail"},
  }};
  static const std::array<std::vector<std::string>, 3> polarity_words = {{
      {"great", "excellent", "lovely", "superb"},
      {"awful", "terrible", "dreadful", "disappointing"},
      {"okay", "average", "ordinary", "unremarkable"},
  }};
  static const std::vector<std::string> connectors = {"and", "but", "while"};

  SynthCorpus corpus;
  corpus.labels = make_label_space(aspects, polarities);

  Rng rng(seed, /*stream=*/3);
  const int n_aspects = static_cast<int>(aspects.size());
  for (int i = 0; i < n_texts; ++i) {
    int mentions = 1 + rng.uniform_int(3);
    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < mentions) {
      int j = rng.uniform_int(n_aspects);
      if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) chosen.push_back(j);
    }

    RawReview r;
    r.id = "synth_" + std::to_string(i);
    std::string text;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      int j = chosen[k];
      int pol = rng.uniform_int(static_cast<int>(polarities.size()));
      const auto& noun = aspect_words[j][rng.uniform_int(
          static_cast<int>(aspect_words[j].size()))];
      const auto& adj = polarity_words[pol][rng.uniform_int(
          static_cast<int>(polarity_words[pol].size()))];
      if (k > 0) text += " " + connectors[rng.uniform_int(
                             static_cast<int>(connectors.size()))] + " ";
      text += "the " + noun + " was " + adj;
      r.add_opinion(aspects[j], polarities[pol]);
    }
    text += ".";
    r.text = std::move(text);
    corpus.reviews.push_back(std::move(r));
  }
  return corpus;
}

inline void write_jsonl(const std::string& path, const std::vector<RawReview>& reviews) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& r : reviews) {
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& [c, p] : r.opinions) ops.push_back({c, p});
    nlohmann::json rec = {{"id", r.id}, {"text", r.text}, {"opinions", ops}};
    out << rec.dump() << "\n";
  }
}

}  // namespace acsa
