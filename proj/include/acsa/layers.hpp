#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acsa/autodiff.hpp"

namespace acsa {

// ---------------------------------------------------------------------------
// Initialization

inline Tensor glorot_uniform(int fan_out, int fan_in, Rng& rng) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t({fan_out, fan_in});
  for (auto& v : t.data) v = rng.uniform(-limit, limit);
  return t;
}

inline Tensor uniform_vector(int dim, double limit, Rng& rng) {
  Tensor t({dim});
  for (auto& v : t.data) v = rng.uniform(-limit, limit);
  return t;
}

// ---------------------------------------------------------------------------
// Embedding

// Word embedding matrix, one column per vocabulary entry.
struct EmbeddingTable {
  Var table;  // {dim, vocab_size}
  bool trainable = true;

  int dim() const { return table->value.rows(); }
  int vocab_size() const { return table->value.cols(); }
};

inline EmbeddingTable make_embedding(int dim, int vocab_size, Rng& rng, bool trainable = true) {
  Tensor t({dim, vocab_size});
  for (auto& v : t.data) v = rng.uniform(-0.05, 0.05);
  for (int i = 0; i < dim; ++i) t.at(i, 0) = 0.0;  // padding column stays zero
  EmbeddingTable e;
  e.table = trainable ? parameter(std::move(t), "embedding") : constant(std::move(t));
  e.trainable = trainable;
  return e;
}

inline std::vector<Var> embedding_lookup(const EmbeddingTable& table,
                                         const std::vector<int>& token_ids) {
  if (token_ids.empty()) throw Error("embedding_lookup: empty token sequence");
  std::vector<Var> out;
  out.reserve(token_ids.size());
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    int id = token_ids[i];
    if (id < 0 || id >= table.vocab_size())
      throw Error("embedding_lookup: token id " + std::to_string(id) + " at position " +
                  std::to_string(i) + " out of range [0," +
                  std::to_string(table.vocab_size()) + ")");
    out.push_back(index_col(table.table, id));
  }
  return out;
}

// ---------------------------------------------------------------------------
// LSTM

// Gate parameters of one LSTM direction: input-to-gate weights w_*,
// hidden-to-gate weights r_*, biases b_*, for the input (i), forget (f),
// candidate (g) and output (o) gates.
struct LSTMCellParams {
  Var w_i, w_f, w_g, w_o;  // {hidden, input}
  Var r_i, r_f, r_g, r_o;  // {hidden, hidden}
  Var b_i, b_f, b_g, b_o;  // {hidden}

  int input_dim() const { return w_i->value.cols(); }
  int hidden_dim() const { return w_i->value.rows(); }

  std::vector<Var> all() const {
    return {w_i, w_f, w_g, w_o, r_i, r_f, r_g, r_o, b_i, b_f, b_g, b_o};
  }
};

inline LSTMCellParams make_lstm_cell(int input_dim, int hidden_dim, Rng& rng,
                                     const std::string& prefix) {
  LSTMCellParams p;
  auto w = [&](const char* g) {
    return parameter(glorot_uniform(hidden_dim, input_dim, rng), prefix + ".w_" + g);
  };
  auto r = [&](const char* g) {
    return parameter(glorot_uniform(hidden_dim, hidden_dim, rng), prefix + ".r_" + g);
  };
  auto b = [&](const char* g, double init) {
    return parameter(Tensor::full({hidden_dim}, init), prefix + ".b_" + g);
  };
  p.w_i = w("i"); p.w_f = w("f"); p.w_g = w("g"); p.w_o = w("o");
  p.r_i = r("i"); p.r_f = r("f"); p.r_g = r("g"); p.r_o = r("o");
  // forget gate starts open
  p.b_i = b("i", 0.0); p.b_f = b("f", 1.0); p.b_g = b("g", 0.0); p.b_o = b("o", 0.0);
  return p;
}

struct LSTMState {
  Var h, c;
};

inline LSTMState lstm_step(const LSTMCellParams& p, const Var& x, const Var& h_prev,
                           const Var& c_prev) {
  auto gate = [&](const Var& w, const Var& r, const Var& b) {
    return add(add(matvec(w, x), matvec(r, h_prev)), b);
  };
  Var i = sigmoid(gate(p.w_i, p.r_i, p.b_i));
  Var f = sigmoid(gate(p.w_f, p.r_f, p.b_f));
  Var g = tanh(gate(p.w_g, p.r_g, p.b_g));
  Var o = sigmoid(gate(p.w_o, p.r_o, p.b_o));
  Var c = add(mul(f, c_prev), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

// Runs both directions over the full (possibly padded) length and
// concatenates per-position states. Masked positions do not advance the
// recurrent state and emit zeros, so trailing padding leaves the states at
// real positions untouched.
inline std::vector<Var> bilstm_forward(const LSTMCellParams& fwd, const LSTMCellParams& bwd,
                                       const std::vector<Var>& inputs,
                                       const std::vector<bool>& mask = {}) {
  if (inputs.empty()) throw Error("bilstm_forward: empty input sequence");
  if (!mask.empty() && mask.size() != inputs.size())
    throw Error("bilstm_forward: mask length " + std::to_string(mask.size()) +
                " != sequence length " + std::to_string(inputs.size()));
  auto live = [&](std::size_t i) { return mask.empty() || mask[i]; };

  const std::size_t n = inputs.size();
  const int d = fwd.hidden_dim();
  Var zero_h = constant(Tensor::zeros({d}));

  std::vector<Var> fwd_h(n), bwd_h(n);
  Var h = zero_h, c = zero_h;
  for (std::size_t i = 0; i < n; ++i) {
    if (live(i)) {
      auto s = lstm_step(fwd, inputs[i], h, c);
      h = s.h;
      c = s.c;
      fwd_h[i] = h;
    } else {
      fwd_h[i] = zero_h;
    }
  }
  h = zero_h;
  c = zero_h;
  for (std::size_t k = n; k-- > 0;) {
    if (live(k)) {
      auto s = lstm_step(bwd, inputs[k], h, c);
      h = s.h;
      c = s.c;
      bwd_h[k] = h;
    } else {
      bwd_h[k] = zero_h;
    }
  }

  std::vector<Var> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = concat({fwd_h[i], bwd_h[i]});
  return out;
}

// ---------------------------------------------------------------------------
// Attention

// Parameters of the additive (context-vector) attention: score of position i
// is tanh(w v_i + b) . u.
struct AdditiveAttentionParams {
  Var w;  // {ctx, in}
  Var b;  // {ctx}
  Var u;  // {ctx}

  int input_dim() const { return w->value.cols(); }
  int ctx_dim() const { return w->value.rows(); }

  std::vector<Var> all() const { return {w, b, u}; }
};

inline AdditiveAttentionParams make_additive_attention(int input_dim, int ctx_dim, Rng& rng,
                                                       const std::string& prefix) {
  AdditiveAttentionParams p;
  p.w = parameter(glorot_uniform(ctx_dim, input_dim, rng), prefix + ".w");
  p.b = parameter(Tensor::zeros({ctx_dim}), prefix + ".b");
  double limit = std::sqrt(6.0 / (ctx_dim + 1));
  p.u = parameter(uniform_vector(ctx_dim, limit, rng), prefix + ".u");
  return p;
}

struct AttentionResult {
  Var pooled;   // weighted sum, same dimension as the inputs
  Var weights;  // {n}, exactly 0 at masked positions
};

namespace detail {

inline void check_attention_mask(const char* who, std::size_t n, const std::vector<bool>& mask) {
  if (n == 0) throw Error(std::string(who) + ": empty sequence");
  if (!mask.empty()) {
    if (mask.size() != n)
      throw Error(std::string(who) + ": mask length " + std::to_string(mask.size()) +
                  " != sequence length " + std::to_string(n));
    if (std::find(mask.begin(), mask.end(), true) == mask.end())
      throw Error(std::string(who) + ": all positions masked");
  }
}

}  // namespace detail

inline AttentionResult additive_attention(const AdditiveAttentionParams& p,
                                          const std::vector<Var>& values,
                                          const std::vector<bool>& mask = {}) {
  detail::check_attention_mask("additive_attention", values.size(), mask);
  std::vector<Var> scores;
  scores.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask.empty() && !mask[i]) {
      scores.push_back(constant(Tensor::scalar(kMaskedScore)));
      continue;
    }
    if (values[i]->value.numel() != p.input_dim())
      throw ShapeError("additive_attention: input dim " + shape_str(values[i]->value.shape) +
                       " != expected [" + std::to_string(p.input_dim()) + "]");
    Var ctx = tanh(add(matvec(p.w, values[i]), p.b));
    scores.push_back(dot(ctx, p.u));
  }
  Var alpha = softmax(concat(scores));
  return {matvec(stack_cols(values), alpha), alpha};
}

// Dot-product attention: scores are plain inner products with the query, so
// this layer carries no trainable parameters of its own.
inline AttentionResult dot_attention(const std::vector<Var>& values, const Var& query,
                                     const std::vector<bool>& mask = {}) {
  detail::check_attention_mask("dot_attention", values.size(), mask);
  std::vector<Var> scores;
  scores.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask.empty() && !mask[i]) {
      scores.push_back(constant(Tensor::scalar(kMaskedScore)));
      continue;
    }
    if (values[i]->value.shape != query->value.shape)
      throw ShapeError("dot_attention: input shape " + shape_str(values[i]->value.shape) +
                       " != query shape " + shape_str(query->value.shape));
    scores.push_back(dot(values[i], query));
  }
  Var beta = softmax(concat(scores));
  return {matvec(stack_cols(values), beta), beta};
}

// ---------------------------------------------------------------------------
// Dense / dropout

enum class Activation { kIdentity, kRelu, kSigmoid, kSoftmax };

struct DenseParams {
  Var w;  // {out, in}
  Var b;  // {out}
  Activation activation = Activation::kIdentity;

  int input_dim() const { return w->value.cols(); }
  int output_dim() const { return w->value.rows(); }

  std::vector<Var> all() const { return {w, b}; }
};

inline DenseParams make_dense(int input_dim, int output_dim, Activation act, Rng& rng,
                              const std::string& prefix) {
  DenseParams p;
  p.w = parameter(glorot_uniform(output_dim, input_dim, rng), prefix + ".w");
  p.b = parameter(Tensor::zeros({output_dim}), prefix + ".b");
  p.activation = act;
  return p;
}

inline Var dense(const DenseParams& p, const Var& x) {
  Var z = add(matvec(p.w, x), p.b);
  switch (p.activation) {
    case Activation::kIdentity: return z;
    case Activation::kRelu: return relu(z);
    case Activation::kSigmoid: return sigmoid(z);
    case Activation::kSoftmax: return softmax(z);
  }
  throw Error("dense: unknown activation");
}

struct DropoutSpec {
  double p = 0.5;
  bool train = true;
};

// Inverted dropout: survivors are scaled by 1/(1-p) at train time so eval
// mode is the identity.
inline Var dropout(const DropoutSpec& spec, const Var& x, Rng& rng) {
  if (spec.p >= 1.0 || spec.p < 0.0)
    throw Error("dropout: p must lie in [0,1), got " + std::to_string(spec.p));
  if (!spec.train || spec.p == 0.0) return x;
  Tensor mask(x->value.shape);
  double keep_scale = 1.0 / (1.0 - spec.p);
  for (auto& v : mask.data) v = rng.uniform() < spec.p ? 0.0 : keep_scale;
  return mul(x, constant(std::move(mask)));
}

inline std::vector<Var> dropout_seq(const DropoutSpec& spec, const std::vector<Var>& xs,
                                    Rng& rng) {
  if (!spec.train || spec.p == 0.0) return xs;
  std::vector<Var> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(dropout(spec, x, rng));
  return out;
}

}  // namespace acsa
