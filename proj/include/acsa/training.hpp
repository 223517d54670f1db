#pragma once

#include <functional>
#include <ostream>
#include <sstream>

#include "acsa/eval.hpp"

namespace acsa {

struct TrainConfig {
  double lambda_l2 = 0.01;
  double alpha_sc = 1.0;       // sentiment loss weight (0.6 for the restaurant reviews)
  double learning_rate = 0.001;
  double clip_norm = 5.0;
  double dropout_p = 0.5;
  double tau = 0.25;
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 10;
  int runs = 3;
  std::uint64_t seed = 1;
  bool global_clip = false;    // one norm over all tensors instead of per-tensor
  double stop_f1 = -1.0;       // stop early once selection F1 reaches this; <0 disables

  void validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (clip_norm <= 0.0) throw ConfigError("clip_norm must be positive");
    if (lambda_l2 < 0.0) throw ConfigError("lambda_l2 must be non-negative");
    if (tau <= 0.0 || tau >= 1.0) throw ConfigError("tau must lie in (0,1)");
    if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("dropout_p must lie in [0,1)");
    if (batch_size < 1 || max_epochs < 1 || patience < 1 || runs < 1)
      throw ConfigError("batch_size, max_epochs, patience and runs must be >= 1");
  }

  std::uint64_t hash() const {
    std::ostringstream os;
    os << lambda_l2 << '|' << alpha_sc << '|' << learning_rate << '|' << clip_norm << '|'
       << dropout_p << '|' << tau << '|' << batch_size << '|' << max_epochs << '|' << patience
       << '|' << runs << '|' << seed << '|' << global_clip << '|' << stop_f1;
    return fnv1a(os.str());
  }
};

// ---------------------------------------------------------------------------
// Losses

// Binary cross-entropy summed over the aspect categories (detection task).
inline Var acd_loss(const std::vector<int>& y, const Var& y_hat) {
  const int n = static_cast<int>(y.size());
  if (y_hat->value.numel() != n)
    throw Error("acd_loss: target length " + std::to_string(n) + " != prediction length " +
                std::to_string(y_hat->value.numel()));
  Tensor pos({n}), neg_t({n});
  for (int j = 0; j < n; ++j) {
    pos.data[j] = y[j] ? 1.0 : 0.0;
    neg_t.data[j] = y[j] ? 0.0 : 1.0;
  }
  Var hit = mul(constant(pos), log(y_hat));
  Var miss = mul(constant(neg_t), log(add_scalar(neg(y_hat), 1.0)));
  return neg(sum(add(hit, miss)));
}

// Cross-entropy summed over mentioned aspects. Rows whose target is all-zero
// (aspect not mentioned) are skipped entirely, so they contribute exactly 0
// to the value and to every gradient.
inline Var sc_loss(const std::vector<std::vector<int>>& y, const std::vector<Var>& y_hat) {
  if (y.size() != y_hat.size())
    throw Error("sc_loss: row count mismatch (" + std::to_string(y.size()) + " vs " +
                std::to_string(y_hat.size()) + ")");
  Var total;
  for (std::size_t j = 0; j < y.size(); ++j) {
    int row_sum = 0;
    for (int v : y[j]) row_sum += v;
    if (row_sum > 1)
      throw Error("sc_loss: target row " + std::to_string(j) + " sums to " +
                  std::to_string(row_sum) + "; rows must be one-hot or all-zero");
    if (row_sum == 0) continue;
    const int m = static_cast<int>(y[j].size());
    if (y_hat[j]->value.numel() != m)
      throw Error("sc_loss: row " + std::to_string(j) + " length mismatch");
    Tensor row({m});
    for (int k = 0; k < m; ++k) row.data[k] = y[j][k] ? 1.0 : 0.0;
    Var term = sum(mul(constant(row), log(y_hat[j])));
    total = total ? add(total, term) : term;
  }
  if (!total) return constant(Tensor::scalar(0.0));
  return neg(total);
}

// lambda * sum of squares over every parameter group except the Bi-LSTM
// category.
inline Var l2_penalty(const std::vector<ParamGroup>& groups, double lambda) {
  if (lambda == 0.0) return constant(Tensor::scalar(0.0));
  Var total;
  for (const auto& g : groups) {
    if (g.category == ParamCategory::kBilstm) continue;
    for (const auto& p : g.nodes) {
      Var term = sum(mul(p, p));
      total = total ? add(total, term) : term;
    }
  }
  if (!total) return constant(Tensor::scalar(0.0));
  return scale(total, lambda);
}

inline Var total_loss(const Var& l_acd, const Var& l_sc, const Var& penalty, double alpha) {
  return add(add(l_acd, scale(l_sc, alpha)), penalty);
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long t = 0;
  std::vector<Var> params;
  std::vector<Tensor> m, v;

  explicit AdamState(std::vector<Var> parameters) : params(std::move(parameters)) {
    for (const auto& p : params) {
      m.push_back(Tensor::zeros(p->value.shape));
      v.push_back(Tensor::zeros(p->value.shape));
    }
  }
};

inline std::vector<Var> all_parameters(const std::vector<ParamGroup>& groups) {
  std::vector<Var> out;
  for (const auto& g : groups)
    for (const auto& n : g.nodes) out.push_back(n);
  return out;
}

// One bias-corrected Adam update from the gradients currently stored on the
// parameter nodes. Call after clipping.
inline void adam_step(AdamState& s, double lr) {
  ++s.t;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    Node& p = *s.params[i];
    if (!p.grad.data.empty() && p.grad.shape != p.value.shape)
      throw ShapeError("adam_step: gradient shape " + shape_str(p.grad.shape) +
                       " != parameter shape " + shape_str(p.value.shape));
    Tensor& mt = s.m[i];
    Tensor& vt = s.v[i];
    for (std::size_t k = 0; k < p.value.data.size(); ++k) {
      double g = p.grad.data.empty() ? 0.0 : p.grad.data[k];
      mt.data[k] = s.beta1 * mt.data[k] + (1.0 - s.beta1) * g;
      vt.data[k] = s.beta2 * vt.data[k] + (1.0 - s.beta2) * g * g;
      double m_hat = mt.data[k] / bc1;
      double v_hat = vt.data[k] / bc2;
      p.value.data[k] -= lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Training loop

// In-memory snapshot of all parameter values, aligned with the model's group
// order.
struct Checkpoint {
  std::vector<Tensor> values;
  int epoch = -1;
  double val_f1 = 0.0;
  std::uint64_t config_hash = 0;
};

inline Checkpoint snapshot_params(const JointModelParams& model, int epoch, double val_f1,
                                  std::uint64_t config_hash) {
  Checkpoint c;
  c.epoch = epoch;
  c.val_f1 = val_f1;
  c.config_hash = config_hash;
  for (const auto& g : model.groups)
    for (const auto& n : g.nodes) c.values.push_back(n->value);
  return c;
}

inline void apply_checkpoint(JointModelParams& model, const Checkpoint& c) {
  std::size_t i = 0;
  for (auto& g : model.groups)
    for (auto& n : g.nodes) {
      if (i >= c.values.size() || c.values[i].shape != n->value.shape)
        throw DataError("apply_checkpoint: snapshot does not match the model layout");
      n->value = c.values[i++];
    }
  if (i != c.values.size())
    throw DataError("apply_checkpoint: snapshot has extra tensors");
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0, loss_acd = 0.0, loss_sc = 0.0, penalty = 0.0;
  EvalReport val;

  nlohmann::json to_json() const {
    return {{"epoch", epoch},       {"train_loss", train_loss}, {"loss_acd", loss_acd},
            {"loss_sc", loss_sc},   {"penalty", penalty},       {"val", val.to_json()}};
  }
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
};

// The §-recipe loop: seeded shuffle into padded batches, per-example forward
// and backward in train mode with gradient accumulation, one L2 penalty
// backward per step, clipping, Adam. Selection is by validation ACSA
// micro-F1 at threshold tau; training stops after `patience` epochs without
// improvement. The model is left holding the best checkpoint's values.
inline TrainResult train(JointModelParams& model, const std::vector<Example>& train_set,
                         const std::vector<Example>& val_set, const TrainConfig& cfg,
                         std::ostream* epoch_log_stream = nullptr) {
  if (train_set.empty()) throw Error("train: empty training set");
  cfg.validate();
  model.config.dropout_p = cfg.dropout_p;

  const std::vector<Example>& selection = val_set.empty() ? train_set : val_set;
  AdamState adam(all_parameters(model.groups));
  Rng dropout_rng(cfg.seed, /*stream=*/1);

  TrainResult result;
  result.best.config_hash = cfg.hash();
  double best_f1 = -1.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double acd_total = 0.0, sc_total = 0.0, pen_total = 0.0;
    auto batches = make_batches(train_set, cfg.batch_size, cfg.seed + epoch, /*shuffle=*/true);
    for (const Batch& batch : batches) {
      zero_grad(model.groups);
      const double inv_b = 1.0 / static_cast<double>(batch.items.size());
      for (const Example& ex : batch.items) {
        ForwardOutput out = forward(model, ex.token_ids, ex.mask, model.config.variant,
                                    /*train=*/true, &dropout_rng);
        Var l_a = acd_loss(ex.y_aspect, out.aspect_probs);
        Var l_s = sc_loss(ex.y_sentiment, out.sentiment);
        acd_total += l_a->value.data[0];
        sc_total += l_s->value.data[0];
        backward(scale(add(l_a, scale(l_s, cfg.alpha_sc)), inv_b));
      }
      Var pen = l2_penalty(model.groups, cfg.lambda_l2);
      backward(pen);
      pen_total += pen->value.data[0];

      if (cfg.global_clip)
        clip_gradients_global(model.groups, cfg.clip_norm);
      else
        clip_gradient_norm(model.groups, cfg.clip_norm);
      adam_step(adam, cfg.learning_rate);
    }

    EpochLog log;
    log.epoch = epoch;
    const double n = static_cast<double>(train_set.size());
    log.loss_acd = acd_total / n;
    log.loss_sc = sc_total / n;
    log.penalty = pen_total / static_cast<double>(batches.size());
    log.train_loss = log.loss_acd + cfg.alpha_sc * log.loss_sc + log.penalty;
    log.val = evaluate(model, selection, cfg.tau);
    if (epoch_log_stream) *epoch_log_stream << log.to_json().dump() << "\n";

    double f1 = log.val.acsa.f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      since_best = 0;
      result.best = snapshot_params(model, epoch, f1, cfg.hash());
    } else {
      ++since_best;
    }
    result.log.push_back(std::move(log));

    if (cfg.stop_f1 >= 0.0 && best_f1 >= cfg.stop_f1) break;
    if (since_best >= cfg.patience) break;
  }

  apply_checkpoint(model, result.best);
  return result;
}

struct RepeatedResult {
  std::vector<TrainResult> runs;
  std::vector<EvalReport> run_reports;  // evaluated on the given eval set
  EvalReport averaged;
};

// Trains `cfg.runs` models with seeds seed, seed+1, ... and reports per-run
// and mean metrics on `eval_set`.
inline RepeatedResult run_repeated(
    const std::function<JointModelParams(std::uint64_t)>& model_factory,
    const std::vector<Example>& train_set, const std::vector<Example>& val_set,
    const std::vector<Example>& eval_set, const TrainConfig& cfg,
    std::ostream* epoch_log_stream = nullptr) {
  cfg.validate();
  RepeatedResult result;
  for (int r = 0; r < cfg.runs; ++r) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(r);
    JointModelParams model = model_factory(run_cfg.seed);
    result.runs.push_back(train(model, train_set, val_set, run_cfg, epoch_log_stream));
    result.run_reports.push_back(evaluate(model, eval_set, run_cfg.tau));
  }
  result.averaged = average_runs(result.run_reports);
  return result;
}

}  // namespace acsa
