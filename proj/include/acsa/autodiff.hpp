#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "acsa/tensor.hpp"

namespace acsa {

// Inputs to log() are clamped here; the gradient uses the same clamp so the
// two stay consistent.
inline constexpr double kLogClamp = 1e-12;

// Pre-softmax score assigned to masked positions. Large enough that
// exp(score - max) underflows to exactly zero.
inline constexpr double kMaskedScore = -1e30;

enum class Op {
  kLeaf,
  kAdd,
  kMul,
  kNeg,
  kScale,
  kAddScalar,
  kMatVec,
  kMatMul,
  kConcat,
  kStackCols,
  kIndexCol,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,
  kLog,
  kSum,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kNeg: return "neg";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kMatVec: return "matvec";
    case Op::kMatMul: return "matmul";
    case Op::kConcat: return "concat";
    case Op::kStackCols: return "stack_cols";
    case Op::kIndexCol: return "index_col";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kSoftmax: return "softmax";
    case Op::kLog: return "log";
    case Op::kSum: return "sum";
  }
  return "unknown";
}

// Scalar / index payload for primitives that need one (kScale, kAddScalar,
// kIndexCol).
struct OpAttrs {
  double scalar = 0.0;
  int index = -1;
};

struct Node;
using Var = std::shared_ptr<Node>;

// One value in the computation graph. The graph is built eagerly during the
// forward pass and torn down when the owning Vars go out of scope after
// backward(). Leaves (parameters and constants) have no parents.
struct Node {
  Tensor value;
  Tensor grad;  // materialized lazily on first accumulation
  Op op = Op::kLeaf;
  OpAttrs attrs;
  std::vector<Var> parents;
  bool requires_grad = false;
  std::string name;  // set on parameter leaves, used in diagnostics

  bool is_leaf() const { return op == Op::kLeaf; }

  Tensor& ensure_grad() {
    if (grad.data.empty()) grad = Tensor::zeros(value.shape);
    return grad;
  }

  void zero_grad() {
    if (!grad.data.empty()) grad.fill(0.0);
  }
};

inline Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

inline Var parameter(Tensor value, std::string name = "") {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->name = std::move(name);
  return n;
}

namespace detail {

[[noreturn]] inline void shape_fail(Op op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + shape_str(a) +
                   " and " + shape_str(b));
}

inline void expect_arity(Op op, const std::vector<Var>& in, std::size_t n) {
  if (in.size() != n)
    throw Error(std::string(op_name(op)) + ": expected " + std::to_string(n) +
                " inputs, got " + std::to_string(in.size()));
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// Applies one primitive, returning a fresh node with the forward value and
// enough recorded structure for backward() to replay the local gradient.
inline Var apply_primitive(Op op, const std::vector<Var>& inputs, OpAttrs attrs = {}) {
  using detail::expect_arity;
  using detail::shape_fail;

  if (inputs.empty()) throw Error(std::string(op_name(op)) + ": no inputs");
  for (const auto& in : inputs)
    if (!in) throw Error(std::string(op_name(op)) + ": null input");

  Tensor out;
  switch (op) {
    case Op::kAdd: {
      expect_arity(op, inputs, 2);
      const Tensor &a = inputs[0]->value, &b = inputs[1]->value;
      if (a.shape != b.shape) shape_fail(op, a.shape, b.shape);
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
      break;
    }
    case Op::kMul: {
      expect_arity(op, inputs, 2);
      const Tensor &a = inputs[0]->value, &b = inputs[1]->value;
      if (a.shape != b.shape) shape_fail(op, a.shape, b.shape);
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
      break;
    }
    case Op::kNeg: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = -a.data[i];
      break;
    }
    case Op::kScale: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = attrs.scalar * a.data[i];
      break;
    }
    case Op::kAddScalar: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + attrs.scalar;
      break;
    }
    case Op::kMatVec: {
      expect_arity(op, inputs, 2);
      const Tensor &m = inputs[0]->value, &x = inputs[1]->value;
      if (m.rank() != 2 || x.rank() != 1 || m.cols() != x.rows())
        shape_fail(op, m.shape, x.shape);
      out = Tensor({m.rows()});
      for (int i = 0; i < m.rows(); ++i) {
        const double* row = m.data.data() + static_cast<std::size_t>(i) * m.cols();
        double acc = 0.0;
        for (int j = 0; j < m.cols(); ++j) acc += row[j] * x.data[j];
        out.data[i] = acc;
      }
      break;
    }
    case Op::kMatMul: {
      expect_arity(op, inputs, 2);
      const Tensor &a = inputs[0]->value, &b = inputs[1]->value;
      if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        shape_fail(op, a.shape, b.shape);
      out = Tensor({a.rows(), b.cols()});
      for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
          double aik = a.at(i, k);
          for (int j = 0; j < b.cols(); ++j) out.at(i, j) += aik * b.at(k, j);
        }
      break;
    }
    case Op::kConcat: {
      long long total = 0;
      for (const auto& in : inputs) {
        if (in->value.rank() > 1) shape_fail(op, inputs[0]->value.shape, in->value.shape);
        total += in->value.numel();
      }
      out = Tensor({static_cast<int>(total)});
      long long off = 0;
      for (const auto& in : inputs) {
        const auto& d = in->value.data;
        std::copy(d.begin(), d.end(), out.data.begin() + off);
        off += static_cast<long long>(d.size());
      }
      break;
    }
    case Op::kStackCols: {
      const int d = static_cast<int>(inputs[0]->value.numel());
      for (const auto& in : inputs)
        if (in->value.rank() != 1 || in->value.numel() != d)
          shape_fail(op, inputs[0]->value.shape, in->value.shape);
      const int n = static_cast<int>(inputs.size());
      out = Tensor({d, n});
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < d; ++i) out.at(i, j) = inputs[j]->value.data[i];
      break;
    }
    case Op::kIndexCol: {
      expect_arity(op, inputs, 1);
      const Tensor& m = inputs[0]->value;
      if (m.rank() != 2 || attrs.index < 0 || attrs.index >= m.cols())
        throw ShapeError(std::string(op_name(op)) + ": column " + std::to_string(attrs.index) +
                         " out of range for " + shape_str(m.shape));
      out = Tensor({m.rows()});
      for (int i = 0; i < m.rows(); ++i) out.data[i] = m.at(i, attrs.index);
      break;
    }
    case Op::kTanh: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = std::tanh(a.data[i]);
      break;
    }
    case Op::kSigmoid: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i)
        out.data[i] = detail::stable_sigmoid(a.data[i]);
      break;
    }
    case Op::kRelu: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i)
        out.data[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
      break;
    }
    case Op::kSoftmax: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      if (a.rank() != 1 || a.numel() < 1)
        throw ShapeError("softmax: expected non-empty vector, got " + shape_str(a.shape));
      out = Tensor(a.shape);
      double mx = *std::max_element(a.data.begin(), a.data.end());
      double denom = 0.0;
      for (std::size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = std::exp(a.data[i] - mx);
        denom += out.data[i];
      }
      for (double& v : out.data) v /= denom;
      break;
    }
    case Op::kLog: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      out = Tensor(a.shape);
      for (std::size_t i = 0; i < a.data.size(); ++i)
        out.data[i] = std::log(std::max(a.data[i], kLogClamp));
      break;
    }
    case Op::kSum: {
      expect_arity(op, inputs, 1);
      const Tensor& a = inputs[0]->value;
      double acc = 0.0;
      for (double v : a.data) acc += v;
      out = Tensor::scalar(acc);
      break;
    }
    default:
      throw Error("apply_primitive: unknown op_tag " +
                  std::to_string(static_cast<int>(op)));
  }

  auto n = std::make_shared<Node>();
  n->value = std::move(out);
  n->op = op;
  n->attrs = attrs;
  n->parents = inputs;
  for (const auto& in : inputs) n->requires_grad = n->requires_grad || in->requires_grad;
  return n;
}

inline Var add(const Var& a, const Var& b) { return apply_primitive(Op::kAdd, {a, b}); }
inline Var mul(const Var& a, const Var& b) { return apply_primitive(Op::kMul, {a, b}); }
inline Var neg(const Var& a) { return apply_primitive(Op::kNeg, {a}); }
inline Var scale(const Var& a, double c) { return apply_primitive(Op::kScale, {a}, {.scalar = c}); }
inline Var add_scalar(const Var& a, double c) {
  return apply_primitive(Op::kAddScalar, {a}, {.scalar = c});
}
inline Var matvec(const Var& m, const Var& x) { return apply_primitive(Op::kMatVec, {m, x}); }
inline Var matmul(const Var& a, const Var& b) { return apply_primitive(Op::kMatMul, {a, b}); }
inline Var concat(const std::vector<Var>& parts) { return apply_primitive(Op::kConcat, parts); }
inline Var stack_cols(const std::vector<Var>& cols) {
  return apply_primitive(Op::kStackCols, cols);
}
inline Var index_col(const Var& m, int j) {
  return apply_primitive(Op::kIndexCol, {m}, {.index = j});
}
inline Var tanh(const Var& a) { return apply_primitive(Op::kTanh, {a}); }
inline Var sigmoid(const Var& a) { return apply_primitive(Op::kSigmoid, {a}); }
inline Var relu(const Var& a) { return apply_primitive(Op::kRelu, {a}); }
inline Var softmax(const Var& a) { return apply_primitive(Op::kSoftmax, {a}); }
inline Var log(const Var& a) { return apply_primitive(Op::kLog, {a}); }
inline Var sum(const Var& a) { return apply_primitive(Op::kSum, {a}); }
inline Var dot(const Var& a, const Var& b) { return sum(mul(a, b)); }

namespace detail {

inline void accumulate(const Var& p, const std::function<void(Tensor&)>& fn) {
  if (!p->requires_grad) return;
  fn(p->ensure_grad());
}

// Pushes this node's output gradient through its recorded rule into the
// parents' gradient buffers. Accumulation is always additive so a node used
// through several paths receives the sum of all contributions.
inline void backprop_node(Node* n) {
  if (n->op == Op::kLeaf || n->grad.data.empty()) return;
  const Tensor& g = n->grad;
  auto& in = n->parents;
  switch (n->op) {
    case Op::kAdd:
      for (int k = 0; k < 2; ++k)
        accumulate(in[k], [&](Tensor& pg) {
          for (std::size_t i = 0; i < g.data.size(); ++i) pg.data[i] += g.data[i];
        });
      break;
    case Op::kMul:
      accumulate(in[0], [&](Tensor& pg) {
        const auto& b = in[1]->value.data;
        for (std::size_t i = 0; i < g.data.size(); ++i) pg.data[i] += g.data[i] * b[i];
      });
      accumulate(in[1], [&](Tensor& pg) {
        const auto& a = in[0]->value.data;
        for (std::size_t i = 0; i < g.data.size(); ++i) pg.data[i] += g.data[i] * a[i];
      });
      break;
    case Op::kNeg:
      accumulate(in[0], [&](Tensor& pg) {
        for (std::size_t i = 0; i < g.data.size(); ++i) pg.data[i] -= g.data[i];
      });
      break;
    case Op::kScale:
      accumulate(in[0], [&](Tensor& pg) {
        for (std::size_t i = 0; i < g.data.size(); ++i) pg.data[i] += n->attrs.scalar * g.data[i];
      });
      break;
    case Op::kAddScalar:
      accumulate(in[0], [&](Tensor& pg) {
        for (std::size_t i = 0; i < g.data.size(); ++i) pg.data[i] += g.data[i];
      });
      break;
    case Op::kMatVec: {
      const Tensor& m = in[0]->value;
      const Tensor& x = in[1]->value;
      accumulate(in[0], [&](Tensor& pg) {
        for (int i = 0; i < m.rows(); ++i) {
          double gi = g.data[i];
          double* row = pg.data.data() + static_cast<std::size_t>(i) * m.cols();
          for (int j = 0; j < m.cols(); ++j) row[j] += gi * x.data[j];
        }
      });
      accumulate(in[1], [&](Tensor& pg) {
        for (int i = 0; i < m.rows(); ++i) {
          double gi = g.data[i];
          const double* row = m.data.data() + static_cast<std::size_t>(i) * m.cols();
          for (int j = 0; j < m.cols(); ++j) pg.data[j] += gi * row[j];
        }
      });
      break;
    }
    case Op::kMatMul: {
      const Tensor& a = in[0]->value;
      const Tensor& b = in[1]->value;
      accumulate(in[0], [&](Tensor& pg) {
        for (int i = 0; i < a.rows(); ++i)
          for (int j = 0; j < b.cols(); ++j) {
            double gij = g.at(i, j);
            for (int k = 0; k < a.cols(); ++k) pg.at(i, k) += gij * b.at(k, j);
          }
      });
      accumulate(in[1], [&](Tensor& pg) {
        for (int i = 0; i < a.rows(); ++i)
          for (int j = 0; j < b.cols(); ++j) {
            double gij = g.at(i, j);
            for (int k = 0; k < a.cols(); ++k) pg.at(k, j) += gij * a.at(i, k);
          }
      });
      break;
    }
    case Op::kConcat: {
      long long off = 0;
      for (auto& p : in) {
        long long len = p->value.numel();
        accumulate(p, [&](Tensor& pg) {
          for (long long i = 0; i < len; ++i) pg.data[i] += g.data[off + i];
        });
        off += len;
      }
      break;
    }
    case Op::kStackCols: {
      const int d = static_cast<int>(in[0]->value.numel());
      const int cols = static_cast<int>(in.size());
      for (int j = 0; j < cols; ++j)
        accumulate(in[j], [&](Tensor& pg) {
          for (int i = 0; i < d; ++i) pg.data[i] += g.data[static_cast<std::size_t>(i) * cols + j];
        });
      break;
    }
    case Op::kIndexCol: {
      const int j = n->attrs.index;
      accumulate(in[0], [&](Tensor& pg) {
        const int cols = in[0]->value.cols();
        for (std::size_t i = 0; i < g.data.size(); ++i) pg.data[i * cols + j] += g.data[i];
      });
      break;
    }
    case Op::kTanh:
      accumulate(in[0], [&](Tensor& pg) {
        const auto& y = n->value.data;
        for (std::size_t i = 0; i < g.data.size(); ++i)
          pg.data[i] += g.data[i] * (1.0 - y[i] * y[i]);
      });
      break;
    case Op::kSigmoid:
      accumulate(in[0], [&](Tensor& pg) {
        const auto& y = n->value.data;
        for (std::size_t i = 0; i < g.data.size(); ++i)
          pg.data[i] += g.data[i] * y[i] * (1.0 - y[i]);
      });
      break;
    case Op::kRelu:
      accumulate(in[0], [&](Tensor& pg) {
        const auto& x = in[0]->value.data;
        for (std::size_t i = 0; i < g.data.size(); ++i)
          if (x[i] > 0.0) pg.data[i] += g.data[i];
      });
      break;
    case Op::kSoftmax:
      accumulate(in[0], [&](Tensor& pg) {
        const auto& y = n->value.data;
        double gy = 0.0;
        for (std::size_t i = 0; i < g.data.size(); ++i) gy += g.data[i] * y[i];
        for (std::size_t i = 0; i < g.data.size(); ++i)
          pg.data[i] += y[i] * (g.data[i] - gy);
      });
      break;
    case Op::kLog:
      accumulate(in[0], [&](Tensor& pg) {
        const auto& x = in[0]->value.data;
        for (std::size_t i = 0; i < g.data.size(); ++i)
          pg.data[i] += g.data[i] / std::max(x[i], kLogClamp);
      });
      break;
    case Op::kSum:
      accumulate(in[0], [&](Tensor& pg) {
        double gv = g.data[0];
        for (double& v : pg.data) v += gv;
      });
      break;
    default:
      throw Error(std::string("backward: no rule for op ") + op_name(n->op));
  }
}

}  // namespace detail

// Reverse-mode sweep from a scalar root. Every node with requires_grad in
// the root's ancestry ends up with grad = d(root)/d(node); contributions
// from multiple uses add up. Gradients of persistent leaves are not cleared
// here, so per-example backward calls within a batch accumulate.
inline void backward(const Var& root) {
  if (!root) throw Error("backward: null root");
  if (root->value.numel() != 1)
    throw ShapeError("backward: root must be scalar-shaped, got " +
                     shape_str(root->value.shape));

  // Iterative postorder over the requires_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad().data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) detail::backprop_node(*it);
}

// ---------------------------------------------------------------------------
// Parameter bookkeeping

enum class ParamCategory { kPerAspect, kShared, kBilstm, kEmbedding };

inline const char* category_name(ParamCategory c) {
  switch (c) {
    case ParamCategory::kPerAspect: return "per_aspect";
    case ParamCategory::kShared: return "shared";
    case ParamCategory::kBilstm: return "bilstm";
    case ParamCategory::kEmbedding: return "embedding";
  }
  return "unknown";
}

// A named set of trainable leaves. The category drives the L2 exclusion of
// the Bi-LSTM parameters and the sharing ablations; per-aspect groups carry
// their (zero-based) aspect index.
struct ParamGroup {
  std::string name;
  ParamCategory category = ParamCategory::kShared;
  int aspect = -1;
  std::vector<Var> nodes;

  long long scalar_count() const {
    long long n = 0;
    for (const auto& v : nodes) n += v->value.numel();
    return n;
  }
};

inline void zero_grad(std::vector<ParamGroup>& groups) {
  for (auto& g : groups)
    for (auto& n : g.nodes) n->zero_grad();
}

// Per-tensor clipping: every parameter tensor whose gradient L2 norm exceeds
// max_norm is scaled down to that norm. Matches the framework default the
// training recipe assumes; see clip_gradients_global for the whole-group
// alternative.
inline void clip_gradient_norm(ParamGroup& group, double max_norm) {
  if (max_norm <= 0.0) throw Error("clip_gradient_norm: max_norm must be positive");
  for (auto& n : group.nodes) {
    if (n->grad.data.empty()) continue;
    double norm = n->grad.l2_norm();
    if (norm > max_norm) {
      double s = max_norm / norm;
      for (double& v : n->grad.data) v *= s;
    }
  }
}

inline void clip_gradient_norm(std::vector<ParamGroup>& groups, double max_norm) {
  for (auto& g : groups) clip_gradient_norm(g, max_norm);
}

// Global-norm variant: one scale factor computed over all tensors together.
inline void clip_gradients_global(std::vector<ParamGroup>& groups, double max_norm) {
  if (max_norm <= 0.0) throw Error("clip_gradients_global: max_norm must be positive");
  double sq = 0.0;
  for (auto& g : groups)
    for (auto& n : g.nodes)
      for (double v : n->grad.data) sq += v * v;
  double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  double s = max_norm / norm;
  for (auto& g : groups)
    for (auto& n : g.nodes)
      for (double& v : n->grad.data) v *= s;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

struct FiniteDiffGroupResult {
  std::string group;
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
};

struct FiniteDiffReport {
  std::vector<FiniteDiffGroupResult> groups;
  double max_rel_err = 0.0;

  bool within(double tol) const { return max_rel_err < tol; }
};

// Central-difference check of every scalar parameter in `groups` against the
// analytic gradient of the scalar loss built by `loss_fn`. The loss builder
// must be deterministic (run dropout in eval mode); this is verified by
// evaluating it twice up front.
inline FiniteDiffReport finite_diff_check(const std::function<Var()>& loss_fn,
                                          std::vector<ParamGroup>& groups, double eps) {
  if (eps <= 0.0) throw Error("finite_diff_check: eps must be positive");

  auto eval = [&]() {
    Var v = loss_fn();
    if (!v || v->value.numel() != 1) throw ShapeError("finite_diff_check: loss must be scalar");
    return v->value.data[0];
  };

  double f0 = eval();
  double f1 = eval();
  if (f0 != f1)
    throw Error("finite_diff_check: loss_fn is not deterministic (" + std::to_string(f0) +
                " vs " + std::to_string(f1) + ")");

  zero_grad(groups);
  backward(loss_fn());

  // Snapshot analytic gradients before perturbing anything.
  std::vector<std::vector<Tensor>> analytic(groups.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi)
    for (auto& n : groups[gi].nodes)
      analytic[gi].push_back(n->grad.data.empty() ? Tensor::zeros(n->value.shape) : n->grad);

  FiniteDiffReport report;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    FiniteDiffGroupResult res;
    res.group = groups[gi].name;
    for (std::size_t ni = 0; ni < groups[gi].nodes.size(); ++ni) {
      auto& n = groups[gi].nodes[ni];
      for (std::size_t i = 0; i < n->value.data.size(); ++i) {
        double old = n->value.data[i];
        n->value.data[i] = old + eps;
        double fp = eval();
        n->value.data[i] = old - eps;
        double fm = eval();
        n->value.data[i] = old;
        double numeric = (fp - fm) / (2.0 * eps);
        double analytic_g = analytic[gi][ni].data[i];
        double denom = std::max({std::fabs(numeric), std::fabs(analytic_g), 1e-8});
        double rel = std::fabs(numeric - analytic_g) / denom;
        if (rel > res.max_rel_err) {
          res.max_rel_err = rel;
          res.worst_param = n->name;
          res.worst_index = static_cast<int>(i);
        }
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, res.max_rel_err);
    report.groups.push_back(std::move(res));
  }
  return report;
}

}  // namespace acsa
