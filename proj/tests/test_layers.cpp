#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "acsa/layers.hpp"

using namespace acsa;

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

Mat rows_of(const Var& v) {
  const Tensor& t = v->value;
  Mat m(t.rows(), Vec(t.cols()));
  for (int i = 0; i < t.rows(); ++i)
    for (int j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

Vec vec_of(const Var& v) { return v->value.data; }

Var const_vec(Vec v) {
  const int n = static_cast<int>(v.size());
  return constant(Tensor::of({n}, std::move(v)));
}

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec affine(const Mat& w, const Vec& x, const Mat& r, const Vec& h, const Vec& b) {
  Vec out(b);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) out[i] += w[i][j] * x[j];
    for (std::size_t j = 0; j < h.size(); ++j) out[i] += r[i][j] * h[j];
  }
  return out;
}

// Scalar-arithmetic oracle for one LSTM step, written directly from the gate
// equations and kept independent of the graph implementation.
struct LstmOracle {
  Mat wi, wf, wg, wo, ri, rf, rg, ro;
  Vec bi, bf, bg, bo;

  explicit LstmOracle(const LSTMCellParams& p)
      : wi(rows_of(p.w_i)), wf(rows_of(p.w_f)), wg(rows_of(p.w_g)), wo(rows_of(p.w_o)),
        ri(rows_of(p.r_i)), rf(rows_of(p.r_f)), rg(rows_of(p.r_g)), ro(rows_of(p.r_o)),
        bi(vec_of(p.b_i)), bf(vec_of(p.b_f)), bg(vec_of(p.b_g)), bo(vec_of(p.b_o)) {}

  std::pair<Vec, Vec> step(const Vec& x, const Vec& h, const Vec& c) const {
    Vec i = affine(wi, x, ri, h, bi), f = affine(wf, x, rf, h, bf);
    Vec g = affine(wg, x, rg, h, bg), o = affine(wo, x, ro, h, bo);
    Vec c_new(c.size()), h_new(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      double ik = sigmoid_d(i[k]), fk = sigmoid_d(f[k]), gk = std::tanh(g[k]),
             ok = sigmoid_d(o[k]);
      c_new[k] = fk * c[k] + ik * gk;
      h_new[k] = ok * std::tanh(c_new[k]);
    }
    return {h_new, c_new};
  }
};

// Scalar-arithmetic oracle for the additive attention layer.
std::pair<Vec, Vec> additive_attention_oracle(const Mat& w, const Vec& b, const Vec& u,
                                              const Mat& values) {
  std::size_t n = values.size();
  Vec scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      double z = b[k];
      for (std::size_t j = 0; j < values[i].size(); ++j) z += w[k][j] * values[i][j];
      s += std::tanh(z) * u[k];
    }
    scores[i] = s;
  }
  double mx = *std::max_element(scores.begin(), scores.end());
  Vec alpha(n);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    alpha[i] = std::exp(scores[i] - mx);
    denom += alpha[i];
  }
  for (auto& a : alpha) a /= denom;
  Vec pooled(values[0].size(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < pooled.size(); ++j) pooled[j] += alpha[i] * values[i][j];
  return {pooled, alpha};
}

std::vector<ParamGroup> one_group(const std::string& name, std::vector<Var> nodes) {
  ParamGroup g;
  g.name = name;
  g.nodes = std::move(nodes);
  return {g};
}

}  // namespace

TEST_CASE("embedding lookup") {
  Rng rng(3);
  EmbeddingTable table = make_embedding(4, 5, rng);

  SECTION("selects the requested columns") {
    auto out = embedding_lookup(table, {0, 2});
    REQUIRE(out.size() == 2);
    for (int i = 0; i < 4; ++i) {
      CHECK(out[0]->value.data[i] == table.table->value.at(i, 0));
      CHECK(out[1]->value.data[i] == table.table->value.at(i, 2));
    }
  }
  SECTION("padding column is zero") {
    auto out = embedding_lookup(table, {0});
    for (double v : out[0]->value.data) CHECK(v == 0.0);
  }
  SECTION("repeated id accumulates both positions' gradients") {
    auto out = embedding_lookup(table, {1, 1});
    CHECK(out[0]->value.data == out[1]->value.data);
    Var loss = add(dot(out[0], const_vec({1, 1, 1, 1})), dot(out[1], const_vec({1, 1, 1, 1})));
    backward(loss);
    for (int i = 0; i < 4; ++i) CHECK(table.table->grad.at(i, 1) == Catch::Approx(2.0));
  }
  SECTION("out-of-range id names the position") {
    try {
      embedding_lookup(table, {1, 5});
      FAIL("expected error");
    } catch (const Error& e) {
      std::string msg = e.what();
      CHECK(msg.find("position 1") != std::string::npos);
    }
  }
  SECTION("empty sequence rejected") {
    CHECK_THROWS_AS(embedding_lookup(table, {}), Error);
  }
  SECTION("frozen table takes no gradient") {
    Rng rng2(3);
    EmbeddingTable frozen = make_embedding(4, 5, rng2, /*trainable=*/false);
    auto out = embedding_lookup(frozen, {2});
    backward(sum(out[0]));
    CHECK(frozen.table->grad.data.empty());
  }
}

TEST_CASE("lstm step") {
  SECTION("all-zero parameters give zero state") {
    Rng rng(1);
    LSTMCellParams p = make_lstm_cell(3, 2, rng, "z");
    for (auto& v : p.all()) v->value.fill(0.0);
    auto s = lstm_step(p, const_vec({1, 2, 3}), const_vec({0, 0}), const_vec({0, 0}));
    for (double v : s.c->value.data) CHECK(v == 0.0);
    for (double v : s.h->value.data) CHECK(v == 0.0);
  }
  SECTION("zero weights keep half of the previous cell") {
    Rng rng(1);
    LSTMCellParams p = make_lstm_cell(3, 2, rng, "z");
    for (auto& v : p.all()) v->value.fill(0.0);
    Vec c_prev = {0.8, -0.4};
    auto s = lstm_step(p, const_vec({1, 2, 3}), const_vec({0, 0}), const_vec(c_prev));
    for (int k = 0; k < 2; ++k) {
      CHECK(s.c->value.data[k] == Catch::Approx(0.5 * c_prev[k]));
      CHECK(s.h->value.data[k] == Catch::Approx(0.5 * std::tanh(0.5 * c_prev[k])));
    }
  }
  SECTION("matches the scalar oracle on a seeded 2-dim cell") {
    Rng rng(11);
    LSTMCellParams p = make_lstm_cell(3, 2, rng, "cell");
    LstmOracle oracle(p);
    Vec x = {0.3, -0.7, 0.2}, h0 = {0.1, -0.2}, c0 = {0.05, 0.4};
    auto s = lstm_step(p, const_vec(x), const_vec(h0), const_vec(c0));
    auto [h_exp, c_exp] = oracle.step(x, h0, c0);
    for (int k = 0; k < 2; ++k) {
      CHECK(s.h->value.data[k] == Catch::Approx(h_exp[k]).epsilon(1e-12));
      CHECK(s.c->value.data[k] == Catch::Approx(c_exp[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("bilstm forward") {
  Rng rng(11);
  LSTMCellParams fwd = make_lstm_cell(3, 2, rng, "fwd");
  LSTMCellParams bwd = make_lstm_cell(3, 2, rng, "bwd");

  auto input_seq = [](std::initializer_list<Vec> vs) {
    std::vector<Var> out;
    for (auto& v : vs) out.push_back(const_vec(v));
    return out;
  };

  SECTION("empty input rejected") {
    CHECK_THROWS_AS(bilstm_forward(fwd, bwd, {}), Error);
  }
  SECTION("single step both directions") {
    auto X = input_seq({{0.5, -0.5, 1.0}});
    auto H = bilstm_forward(fwd, bwd, X);
    REQUIRE(H.size() == 1);
    Var z = const_vec({0, 0});
    auto sf = lstm_step(fwd, X[0], z, z);
    auto sb = lstm_step(bwd, X[0], z, z);
    for (int k = 0; k < 2; ++k) {
      CHECK(H[0]->value.data[k] == sf.h->value.data[k]);
      CHECK(H[0]->value.data[2 + k] == sb.h->value.data[k]);
    }
  }
  SECTION("backward half equals forward-only scan of the reversed input") {
    auto X = input_seq({{0.1, 0.2, 0.3}, {-0.4, 0.0, 0.9}, {0.7, -0.7, 0.1}});
    auto H = bilstm_forward(fwd, bwd, X);
    std::vector<Var> rev(X.rbegin(), X.rend());
    Var h = const_vec({0, 0}), c = const_vec({0, 0});
    std::vector<Vec> states;
    for (auto& x : rev) {
      auto s = lstm_step(bwd, x, h, c);
      h = s.h;
      c = s.c;
      states.push_back(h->value.data);
    }
    std::reverse(states.begin(), states.end());
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 2; ++k) CHECK(H[i]->value.data[2 + k] == states[i][k]);
  }
  SECTION("matches the scalar oracle over three steps") {
    std::vector<Vec> xs = {{0.1, 0.2, 0.3}, {-0.4, 0.0, 0.9}, {0.7, -0.7, 0.1}};
    auto X = input_seq({xs[0], xs[1], xs[2]});
    auto H = bilstm_forward(fwd, bwd, X);

    LstmOracle of(fwd), ob(bwd);
    Vec h = {0, 0}, c = {0, 0};
    std::vector<Vec> fh;
    for (auto& x : xs) {
      auto [h2, c2] = of.step(x, h, c);
      h = h2;
      c = c2;
      fh.push_back(h);
    }
    h = {0, 0};
    c = {0, 0};
    std::vector<Vec> bh(3);
    for (int i = 2; i >= 0; --i) {
      auto [h2, c2] = ob.step(xs[i], h, c);
      h = h2;
      c = c2;
      bh[i] = h;
    }
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 2; ++k) {
        CHECK(H[i]->value.data[k] == Catch::Approx(fh[i][k]).epsilon(1e-12));
        CHECK(H[i]->value.data[2 + k] == Catch::Approx(bh[i][k]).epsilon(1e-12));
      }
  }
  SECTION("trailing padding leaves real positions bitwise unchanged") {
    auto X = input_seq({{0.1, 0.2, 0.3}, {-0.4, 0.0, 0.9}});
    auto H = bilstm_forward(fwd, bwd, X);
    auto Xp = input_seq({{0.1, 0.2, 0.3}, {-0.4, 0.0, 0.9}, {0, 0, 0}, {0, 0, 0}});
    auto Hp = bilstm_forward(fwd, bwd, Xp, {true, true, false, false});
    for (int i = 0; i < 2; ++i) CHECK(H[i]->value.data == Hp[i]->value.data);
    for (double v : Hp[2]->value.data) CHECK(v == 0.0);
  }
}

TEST_CASE("additive attention") {
  Rng rng(13);
  AdditiveAttentionParams p = make_additive_attention(2, 2, rng, "attn");

  SECTION("identical inputs give uniform weights and reproduce the input") {
    Vec star = {0.4, -1.1};
    std::vector<Var> V = {const_vec(star), const_vec(star), const_vec(star)};
    auto r = additive_attention(p, V);
    for (double a : r.weights->value.data) CHECK(a == Catch::Approx(1.0 / 3));
    for (int j = 0; j < 2; ++j) CHECK(r.pooled->value.data[j] == Catch::Approx(star[j]));
  }
  SECTION("single position gets weight one regardless of parameters") {
    std::vector<Var> V = {const_vec({2.5, -3.0})};
    auto r = additive_attention(p, V);
    CHECK(r.weights->value.data[0] == 1.0);
    CHECK(r.pooled->value.data[0] == Catch::Approx(2.5));
    CHECK(r.pooled->value.data[1] == Catch::Approx(-3.0));
  }
  SECTION("matches the scalar oracle on seeded parameters") {
    Mat values = {{0.3, 0.8}, {-0.5, 0.2}};
    std::vector<Var> V = {const_vec(values[0]), const_vec(values[1])};
    auto r = additive_attention(p, V);
    auto [pooled, alpha] = additive_attention_oracle(rows_of(p.w), vec_of(p.b), vec_of(p.u),
                                                     values);
    for (int i = 0; i < 2; ++i) {
      CHECK(r.weights->value.data[i] == Catch::Approx(alpha[i]).epsilon(1e-12));
      CHECK(r.pooled->value.data[i] == Catch::Approx(pooled[i]).epsilon(1e-12));
    }
  }
  SECTION("all positions masked rejected") {
    std::vector<Var> V = {const_vec({1, 2}), const_vec({3, 4})};
    CHECK_THROWS_AS(additive_attention(p, V, {false, false}), Error);
  }
  SECTION("permuting the sequence permutes the weights and keeps the output") {
    std::vector<Var> V = {const_vec({0.3, 0.8}), const_vec({-0.5, 0.2}),
                          const_vec({1.0, -1.0})};
    auto r1 = additive_attention(p, V, {true, true, true});
    std::vector<Var> Vp = {V[2], V[0], V[1]};
    auto r2 = additive_attention(p, Vp, {true, true, true});
    CHECK(r2.weights->value.data[0] == Catch::Approx(r1.weights->value.data[2]).margin(1e-12));
    CHECK(r2.weights->value.data[1] == Catch::Approx(r1.weights->value.data[0]).margin(1e-12));
    CHECK(r2.weights->value.data[2] == Catch::Approx(r1.weights->value.data[1]).margin(1e-12));
    for (int j = 0; j < 2; ++j)
      CHECK(r2.pooled->value.data[j] == Catch::Approx(r1.pooled->value.data[j]).margin(1e-12));
  }
}

TEST_CASE("dot attention") {
  SECTION("single position") {
    std::vector<Var> X = {const_vec({1.5, 2.5})};
    auto r = dot_attention(X, const_vec({0.0, 0.0}));
    CHECK(r.weights->value.data[0] == 1.0);
    CHECK(r.pooled->value.data[0] == 1.5);
    CHECK(r.pooled->value.data[1] == 2.5);
  }
  SECTION("exp(ln 2) forces 2:1 weights") {
    std::vector<Var> X = {const_vec({1, 0}), const_vec({0, 1})};
    auto r = dot_attention(X, const_vec({std::log(2.0), 0.0}));
    CHECK(r.weights->value.data[0] == Catch::Approx(2.0 / 3));
    CHECK(r.weights->value.data[1] == Catch::Approx(1.0 / 3));
    CHECK(r.pooled->value.data[0] == Catch::Approx(2.0 / 3));
    CHECK(r.pooled->value.data[1] == Catch::Approx(1.0 / 3));
  }
  SECTION("equal scores give uniform weights over unmasked positions") {
    std::vector<Var> X = {const_vec({1, 1}), const_vec({2, 0}), const_vec({0, 2})};
    auto r = dot_attention(X, const_vec({0.5, 0.5}), {true, true, true});
    for (double b : r.weights->value.data) CHECK(b == Catch::Approx(1.0 / 3));
  }
  SECTION("dimension mismatch rejected") {
    std::vector<Var> X = {const_vec({1, 0})};
    CHECK_THROWS_AS(dot_attention(X, const_vec({1, 0, 0})), ShapeError);
  }
  SECTION("all masked rejected") {
    std::vector<Var> X = {const_vec({1, 0})};
    CHECK_THROWS_AS(dot_attention(X, const_vec({1, 0}), {false}), Error);
  }
}

TEST_CASE("attention weight invariants hold over random cases") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + rng.uniform_int(6);
    int d = 1 + rng.uniform_int(4);
    std::vector<Var> V;
    std::vector<bool> mask(n);
    int unmasked = 0;
    for (int i = 0; i < n; ++i) {
      Vec v(d);
      for (auto& x : v) x = rng.uniform(-3.0, 3.0);
      V.push_back(const_vec(v));
      mask[i] = rng.uniform() < 0.7;
      unmasked += mask[i];
    }
    if (unmasked == 0) mask[rng.uniform_int(n)] = true;

    AdditiveAttentionParams p = make_additive_attention(d, d, rng, "p");
    Vec q(d);
    for (auto& x : q) x = rng.uniform(-2.0, 2.0);

    for (int which = 0; which < 2; ++which) {
      AttentionResult r = which == 0 ? additive_attention(p, V, mask)
                                     : dot_attention(V, const_vec(q), mask);
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double a = r.weights->value.data[i];
        CHECK(a >= 0.0);
        if (!mask[i]) CHECK(a == 0.0);
        total += a;
      }
      CHECK(std::fabs(total - 1.0) <= 1e-9);
      // convex hull containment, per coordinate over unmasked inputs
      for (int j = 0; j < d; ++j) {
        double lo = 1e300, hi = -1e300;
        for (int i = 0; i < n; ++i)
          if (mask[i]) {
            lo = std::min(lo, V[i]->value.data[j]);
            hi = std::max(hi, V[i]->value.data[j]);
          }
        CHECK(r.pooled->value.data[j] >= lo - 1e-9);
        CHECK(r.pooled->value.data[j] <= hi + 1e-9);
      }
    }
  }
}

TEST_CASE("attention padding invariance") {
  Rng rng(5);
  AdditiveAttentionParams p = make_additive_attention(3, 3, rng, "p");
  std::vector<Var> V = {const_vec({0.1, -0.2, 0.3}), const_vec({1.0, 0.5, -0.5})};
  auto base = additive_attention(p, V);

  std::vector<Var> Vp = V;
  Vp.push_back(const_vec({9.0, 9.0, 9.0}));
  Vp.push_back(const_vec({-9.0, 0.0, 9.0}));
  auto padded = additive_attention(p, Vp, {true, true, false, false});

  for (int j = 0; j < 3; ++j)
    CHECK(padded.pooled->value.data[j] == Catch::Approx(base.pooled->value.data[j]).margin(1e-12));
  CHECK(padded.weights->value.data[2] == 0.0);
  CHECK(padded.weights->value.data[3] == 0.0);

  Var q = const_vec({0.4, -0.4, 0.2});
  auto dbase = dot_attention(V, q);
  auto dpad = dot_attention(Vp, q, {true, true, false, false});
  for (int j = 0; j < 3; ++j)
    CHECK(dpad.pooled->value.data[j] == Catch::Approx(dbase.pooled->value.data[j]).margin(1e-12));
}

TEST_CASE("dense layer") {
  SECTION("identity activation with identity weights") {
    DenseParams p;
    p.w = parameter(Tensor::of({2, 2}, {1, 0, 0, 1}), "w");
    p.b = parameter(Tensor::zeros({2}), "b");
    p.activation = Activation::kIdentity;
    Var y = dense(p, const_vec({-1, 2}));
    CHECK(y->value.data == Vec{-1, 2});
  }
  SECTION("relu clamps negatives") {
    DenseParams p;
    p.w = parameter(Tensor::of({2, 2}, {1, 0, 0, 1}), "w");
    p.b = parameter(Tensor::zeros({2}), "b");
    p.activation = Activation::kRelu;
    Var y = dense(p, const_vec({-1, 2}));
    CHECK(y->value.data == Vec{0, 2});
  }
  SECTION("sigmoid of zero is one half") {
    DenseParams p;
    p.w = parameter(Tensor::of({1, 1}, {1}), "w");
    p.b = parameter(Tensor::zeros({1}), "b");
    p.activation = Activation::kSigmoid;
    Var y = dense(p, const_vec({0}));
    CHECK(y->value.data[0] == Catch::Approx(0.5));
  }
  SECTION("dimension mismatch rejected") {
    Rng rng(1);
    DenseParams p = make_dense(3, 2, Activation::kIdentity, rng, "d");
    CHECK_THROWS_AS(dense(p, const_vec({1, 2})), ShapeError);
  }
}

TEST_CASE("dropout") {
  Rng rng(17);
  SECTION("eval mode is the identity") {
    Var x = const_vec({1, 2, 3});
    Var y = dropout({.p = 0.5, .train = false}, x, rng);
    CHECK(y.get() == x.get());
  }
  SECTION("p = 0 is the identity") {
    Var x = const_vec({1, 2, 3});
    Var y = dropout({.p = 0.0, .train = true}, x, rng);
    CHECK(y.get() == x.get());
  }
  SECTION("p >= 1 rejected") {
    Var x = const_vec({1});
    CHECK_THROWS_AS(dropout({.p = 1.0, .train = true}, x, rng), Error);
  }
  SECTION("keep rate and scaling over 1e5 coordinates") {
    const int n = 100000;
    Var x = constant(Tensor::full({n}, 1.0));
    Var y = dropout({.p = 0.5, .train = true}, x, rng);
    int kept = 0;
    double total = 0.0;
    for (double v : y->value.data) {
      if (v != 0.0) {
        ++kept;
        CHECK(v == 2.0);
      }
      total += v;
    }
    double keep_rate = static_cast<double>(kept) / n;
    CHECK(keep_rate == Catch::Approx(0.5).margin(0.01));
    CHECK(total / n == Catch::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("every layer passes the finite-difference check") {
  Rng rng(23);

  SECTION("dense + activations") {
    DenseParams p = make_dense(3, 2, Activation::kRelu, rng, "d");
    auto groups = one_group("dense", p.all());
    Var x = const_vec({0.5, -0.4, 0.9});
    auto loss = [&]() { return dot(dense(p, x), const_vec({0.7, -1.3})); };
    CHECK(finite_diff_check(loss, groups, 1e-5).max_rel_err < 1e-4);
  }
  SECTION("lstm step chain") {
    LSTMCellParams p = make_lstm_cell(2, 3, rng, "cell");
    auto groups = one_group("lstm", p.all());
    auto loss = [&]() {
      Var h = const_vec({0, 0, 0}), c = const_vec({0, 0, 0});
      for (const Vec& x : {Vec{0.3, -0.8}, Vec{1.0, 0.2}}) {
        auto s = lstm_step(p, const_vec(x), h, c);
        h = s.h;
        c = s.c;
      }
      return add(dot(h, const_vec({1, -1, 0.5})), dot(c, const_vec({0.2, 0.4, -0.6})));
    };
    CHECK(finite_diff_check(loss, groups, 1e-5).max_rel_err < 1e-4);
  }
  SECTION("additive attention with masking") {
    AdditiveAttentionParams p = make_additive_attention(3, 2, rng, "attn");
    auto groups = one_group("attn", p.all());
    std::vector<Var> V = {const_vec({0.1, 0.4, -0.2}), const_vec({0.9, -0.9, 0.3}),
                          const_vec({5, 5, 5})};
    auto loss = [&]() {
      auto r = additive_attention(p, V, {true, true, false});
      return dot(r.pooled, const_vec({1.0, 0.5, -0.5}));
    };
    CHECK(finite_diff_check(loss, groups, 1e-5).max_rel_err < 1e-4);
  }
  SECTION("dot attention through the query") {
    Var q = parameter(Tensor::of({2}, {0.3, -0.6}), "q");
    auto groups = one_group("query", {q});
    std::vector<Var> X = {const_vec({1.0, 0.0}), const_vec({0.4, 0.8})};
    auto loss = [&]() {
      auto r = dot_attention(X, q);
      return dot(r.pooled, const_vec({0.9, 1.1}));
    };
    CHECK(finite_diff_check(loss, groups, 1e-5).max_rel_err < 1e-4);
  }
  SECTION("embedding through lookup") {
    EmbeddingTable t = make_embedding(3, 4, rng);
    auto groups = one_group("embedding", {t.table});
    auto loss = [&]() {
      auto X = embedding_lookup(t, {1, 3, 1});
      Var acc = dot(X[0], const_vec({1, 2, 3}));
      acc = add(acc, dot(X[1], const_vec({-1, 0.5, 0})));
      acc = add(acc, dot(X[2], const_vec({0.25, -0.25, 1})));
      return acc;
    };
    CHECK(finite_diff_check(loss, groups, 1e-5).max_rel_err < 1e-4);
  }
}
