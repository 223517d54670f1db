#pragma once

#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "acsa/data.hpp"
#include "acsa/model.hpp"

namespace acsa {

using AcdPair = std::pair<int, int>;            // (text, aspect)
using AcsaTriple = std::tuple<int, int, int>;   // (text, aspect, polarity)

struct Decoded {
  std::vector<int> aspects;                  // predicted aspect indices, ascending
  std::vector<std::pair<int, int>> pairs;    // (aspect, polarity)
};

// First maximal index wins, so ties resolve to the lowest polarity index.
inline int argmax_index(const double* v, int n) {
  int best = 0;
  for (int k = 1; k < n; ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

// Thresholding is inclusive: aspect j counts as predicted when its
// probability reaches tau.
inline Decoded decode(const std::vector<double>& aspect_probs, const Tensor& sentiment,
                      double tau) {
  if (tau <= 0.0 || tau >= 1.0)
    throw Error("decode: tau must lie in (0,1), got " + std::to_string(tau));
  Decoded d;
  for (int j = 0; j < static_cast<int>(aspect_probs.size()); ++j) {
    if (aspect_probs[j] < tau) continue;
    d.aspects.push_back(j);
    int k = argmax_index(sentiment.data.data() + static_cast<std::size_t>(j) * sentiment.cols(),
                         sentiment.cols());
    d.pairs.emplace_back(j, k);
  }
  return d;
}

inline Decoded decode(const ForwardOutput& out, double tau) {
  return decode(out.aspect_prob_values(), out.sentiment_values(), tau);
}

struct Prf {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  long long predicted = 0, gold = 0, hit = 0;
};

// Micro-averaged precision/recall/F1 over pooled prediction and gold sets,
// with 0/0 defined as 0.
template <class T>
Prf micro_f1(const std::set<T>& predicted, const std::set<T>& gold) {
  Prf r;
  r.predicted = static_cast<long long>(predicted.size());
  r.gold = static_cast<long long>(gold.size());
  for (const auto& p : predicted) r.hit += gold.count(p);
  r.precision = r.predicted > 0 ? static_cast<double>(r.hit) / r.predicted : 0.0;
  r.recall = r.gold > 0 ? static_cast<double>(r.hit) / r.gold : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

struct EvalReport {
  Prf acsa;
  Prf acd;
  double sc_accuracy = 0.0;
  long long sc_total = 0, sc_correct = 0;

  std::string to_text() const {
    std::ostringstream os;
    auto line = [&](const char* name, const Prf& p) {
      os << name << "_precision: " << p.precision << "\n"
         << name << "_recall: " << p.recall << "\n"
         << name << "_f1: " << p.f1 << "\n"
         << name << "_predicted: " << p.predicted << "\n"
         << name << "_gold: " << p.gold << "\n"
         << name << "_hit: " << p.hit << "\n";
    };
    line("acsa", acsa);
    line("acd", acd);
    os << "sc_accuracy: " << sc_accuracy << "\n"
       << "sc_total: " << sc_total << "\n"
       << "sc_correct: " << sc_correct << "\n";
    return os.str();
  }

  nlohmann::json to_json() const {
    auto prf = [](const Prf& p) {
      return nlohmann::json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
                            {"predicted", p.predicted}, {"gold", p.gold}, {"hit", p.hit}};
    };
    return {{"acsa", prf(acsa)}, {"acd", prf(acd)},
            {"sc_accuracy", sc_accuracy}, {"sc_total", sc_total}, {"sc_correct", sc_correct}};
  }
};

// Gold-aspect sentiment accuracy: over every (text, aspect) the gold data
// marks as mentioned, the fraction whose predicted polarity argmax matches.
// Detection output plays no role here.
inline double sc_accuracy(const std::vector<Tensor>& sentiment_per_text,
                          const std::vector<Example>& gold, long long* total_out = nullptr,
                          long long* correct_out = nullptr) {
  if (sentiment_per_text.size() != gold.size())
    throw Error("sc_accuracy: outputs and gold sizes differ");
  long long total = 0, correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Example& e = gold[i];
    const Tensor& s = sentiment_per_text[i];
    for (int j = 0; j < static_cast<int>(e.y_aspect.size()); ++j) {
      if (!e.y_aspect[j]) continue;
      ++total;
      int k = argmax_index(s.data.data() + static_cast<std::size_t>(j) * s.cols(), s.cols());
      int want = 0;
      for (int m = 0; m < static_cast<int>(e.y_sentiment[j].size()); ++m)
        if (e.y_sentiment[j][m]) want = m;
      if (k == want) ++correct;
    }
  }
  if (total == 0) throw Error("sc_accuracy: no mentioned aspects in the gold set");
  if (total_out) *total_out = total;
  if (correct_out) *correct_out = correct;
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Full evaluation protocol over a dataset: decode every text at threshold
// tau, pool predictions and gold annotations, and report ACSA micro-F1, ACD
// micro-F1 and gold-aspect SC accuracy.
inline EvalReport evaluate(const JointModelParams& model, const std::vector<Example>& data,
                           double tau) {
  if (data.empty()) throw Error("evaluate: empty dataset");

  std::set<AcdPair> acd_pred, acd_gold;
  std::set<AcsaTriple> acsa_pred, acsa_gold;
  std::vector<Tensor> sentiments;
  sentiments.reserve(data.size());
  bool any_mention = false;

  for (std::size_t i = 0; i < data.size(); ++i) {
    const Example& e = data[i];
    ForwardOutput out = forward(model, e.token_ids, e.mask, model.config.variant,
                                /*train=*/false);
    Decoded d = decode(out, tau);
    int text = static_cast<int>(i);
    for (int j : d.aspects) acd_pred.insert({text, j});
    for (auto [j, k] : d.pairs) acsa_pred.insert({text, j, k});
    for (int j = 0; j < static_cast<int>(e.y_aspect.size()); ++j) {
      if (!e.y_aspect[j]) continue;
      any_mention = true;
      acd_gold.insert({text, j});
      for (int k = 0; k < static_cast<int>(e.y_sentiment[j].size()); ++k)
        if (e.y_sentiment[j][k]) acsa_gold.insert({text, j, k});
    }
    sentiments.push_back(out.sentiment_values());
  }

  EvalReport r;
  r.acsa = micro_f1(acsa_pred, acsa_gold);
  r.acd = micro_f1(acd_pred, acd_gold);
  if (any_mention) r.sc_accuracy = sc_accuracy(sentiments, data, &r.sc_total, &r.sc_correct);
  return r;
}

// Arithmetic mean of the metrics; counts are summed for reference.
inline EvalReport average_runs(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw Error("average_runs: empty report list");
  EvalReport avg;
  auto acc_prf = [](Prf& into, const Prf& from) {
    into.precision += from.precision;
    into.recall += from.recall;
    into.f1 += from.f1;
    into.predicted += from.predicted;
    into.gold += from.gold;
    into.hit += from.hit;
  };
  for (const auto& r : reports) {
    acc_prf(avg.acsa, r.acsa);
    acc_prf(avg.acd, r.acd);
    avg.sc_accuracy += r.sc_accuracy;
    avg.sc_total += r.sc_total;
    avg.sc_correct += r.sc_correct;
  }
  const double n = static_cast<double>(reports.size());
  for (Prf* p : {&avg.acsa, &avg.acd}) {
    p->precision /= n;
    p->recall /= n;
    p->f1 /= n;
  }
  avg.sc_accuracy /= n;
  return avg;
}

}  // namespace acsa
