#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acsa/layers.hpp"

namespace acsa {

// full: contextualized aspect embeddings feed a sentiment head shared by all
// aspects. without_share: one sentiment head per aspect. without_cae: the
// sentiment attention queries are fixed trainable per-aspect vectors instead
// of the contextualized embeddings.
enum class ModelVariant { kFull, kWithoutShare, kWithoutCae };

inline const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::kFull: return "full";
    case ModelVariant::kWithoutShare: return "without_share";
    case ModelVariant::kWithoutCae: return "without_cae";
  }
  return "unknown";
}

inline ModelVariant parse_variant(const std::string& s) {
  if (s == "full") return ModelVariant::kFull;
  if (s == "without_share") return ModelVariant::kWithoutShare;
  if (s == "without_cae") return ModelVariant::kWithoutCae;
  throw ConfigError("unknown model variant '" + s +
                    "' (expected full, without_share or without_cae)");
}

struct ModelConfig {
  int n_aspects = 0;     // N
  int n_polarities = 0;  // M
  int vocab_size = 0;
  int embed_dim = 300;   // word embedding dimension
  int hidden_dim = 100;  // LSTM state size per direction
  int head_hidden = 100; // width of the ReLU layer in both prediction heads
  int attn_ctx_x = 0;    // additive attention context dim at the embedding level; 0 = embed_dim
  int attn_ctx_h = 0;    // same at the Bi-LSTM level; 0 = 2*hidden_dim
  double dropout_p = 0.5;
  bool train_embeddings = true;
  ModelVariant variant = ModelVariant::kFull;

  int ctx_x() const { return attn_ctx_x > 0 ? attn_ctx_x : embed_dim; }
  int ctx_h() const { return attn_ctx_h > 0 ? attn_ctx_h : 2 * hidden_dim; }
  int state_dim() const { return 2 * hidden_dim; }
  int feature_dim() const { return embed_dim + 2 * hidden_dim; }
};

// ReLU layer followed by the output layer; used for both the per-aspect
// detection heads and the (shared or per-aspect) sentiment heads.
struct PredictionHead {
  DenseParams hidden;
  DenseParams out;

  std::vector<Var> all() const { return {hidden.w, hidden.b, out.w, out.b}; }
};

struct AspectParams {
  AdditiveAttentionParams attn_x;  // f over the embedding sequence
  AdditiveAttentionParams attn_h;  // f over the Bi-LSTM states
  PredictionHead acd;              // sigmoid output, width 1
  std::optional<PredictionHead> sc;  // per-aspect sentiment head (without_share only)
  Var ciae_x, ciae_h;                // fixed aspect queries (without_cae only)
};

struct JointModelParams {
  ModelConfig config;
  EmbeddingTable embedding;
  LSTMCellParams forward_lstm, backward_lstm;
  std::vector<AspectParams> aspects;
  std::optional<PredictionHead> shared_sc;
  std::vector<ParamGroup> groups;  // stable order: embedding, bilstm, aspects, shared
};

inline JointModelParams make_joint_model(const ModelConfig& config, Rng& rng) {
  if (config.n_aspects < 1 || config.n_polarities < 2)
    throw ConfigError("make_joint_model: need at least 1 aspect and 2 polarities");
  if (config.vocab_size < 2) throw ConfigError("make_joint_model: vocabulary too small");

  JointModelParams m;
  m.config = config;
  m.embedding = make_embedding(config.embed_dim, config.vocab_size, rng,
                               config.train_embeddings);
  m.forward_lstm = make_lstm_cell(config.embed_dim, config.hidden_dim, rng, "lstm_fwd");
  m.backward_lstm = make_lstm_cell(config.embed_dim, config.hidden_dim, rng, "lstm_bwd");

  auto make_head = [&](int in, int out_dim, Activation out_act, const std::string& prefix) {
    PredictionHead h;
    h.hidden = make_dense(in, config.head_hidden, Activation::kRelu, rng, prefix + ".hidden");
    h.out = make_dense(config.head_hidden, out_dim, out_act, rng, prefix + ".out");
    return h;
  };

  for (int j = 0; j < config.n_aspects; ++j) {
    std::string p = "aspect_" + std::to_string(j);
    AspectParams a;
    a.attn_x = make_additive_attention(config.embed_dim, config.ctx_x(), rng, p + ".attn_x");
    a.attn_h = make_additive_attention(config.state_dim(), config.ctx_h(), rng, p + ".attn_h");
    a.acd = make_head(config.feature_dim(), 1, Activation::kSigmoid, p + ".acd");
    if (config.variant == ModelVariant::kWithoutShare)
      a.sc = make_head(config.feature_dim(), config.n_polarities, Activation::kSoftmax,
                       p + ".sc");
    if (config.variant == ModelVariant::kWithoutCae) {
      a.ciae_x = parameter(uniform_vector(config.embed_dim, 0.05, rng), p + ".ciae_x");
      a.ciae_h = parameter(uniform_vector(config.state_dim(), 0.05, rng), p + ".ciae_h");
    }
    m.aspects.push_back(std::move(a));
  }
  if (config.variant != ModelVariant::kWithoutShare)
    m.shared_sc = make_head(config.feature_dim(), config.n_polarities, Activation::kSoftmax,
                            "sc");

  // Parameter groups in checkpoint order.
  if (config.train_embeddings) {
    ParamGroup g;
    g.name = "embedding";
    g.category = ParamCategory::kEmbedding;
    g.nodes = {m.embedding.table};
    m.groups.push_back(std::move(g));
  }
  {
    ParamGroup g;
    g.name = "bilstm";
    g.category = ParamCategory::kBilstm;
    for (auto& v : m.forward_lstm.all()) g.nodes.push_back(v);
    for (auto& v : m.backward_lstm.all()) g.nodes.push_back(v);
    m.groups.push_back(std::move(g));
  }
  for (int j = 0; j < config.n_aspects; ++j) {
    ParamGroup g;
    g.name = "aspect_" + std::to_string(j);
    g.category = ParamCategory::kPerAspect;
    g.aspect = j;
    const AspectParams& a = m.aspects[j];
    for (auto& v : a.attn_x.all()) g.nodes.push_back(v);
    for (auto& v : a.attn_h.all()) g.nodes.push_back(v);
    for (auto& v : a.acd.all()) g.nodes.push_back(v);
    if (a.sc)
      for (auto& v : a.sc->all()) g.nodes.push_back(v);
    if (a.ciae_x) {
      g.nodes.push_back(a.ciae_x);
      g.nodes.push_back(a.ciae_h);
    }
    m.groups.push_back(std::move(g));
  }
  if (m.shared_sc) {
    ParamGroup g;
    g.name = "shared";
    g.category = ParamCategory::kShared;
    for (auto& v : m.shared_sc->all()) g.nodes.push_back(v);
    m.groups.push_back(std::move(g));
  }
  return m;
}

// Trainable-scalar counts per parameter-group category.
inline std::map<std::string, long long> parameter_census(const JointModelParams& m) {
  std::map<std::string, long long> census{{"embedding", 0}, {"bilstm", 0},
                                          {"per_aspect", 0}, {"shared", 0}};
  for (const auto& g : m.groups) census[category_name(g.category)] += g.scalar_count();
  return census;
}

namespace detail {

inline void check_aspect_index(const JointModelParams& m, int j) {
  if (j < 0 || j >= m.config.n_aspects)
    throw Error("aspect index " + std::to_string(j) + " out of range [0," +
                std::to_string(m.config.n_aspects) + ")");
}

inline void check_variant(const JointModelParams& m, ModelVariant v) {
  if (v != m.config.variant)
    throw Error(std::string("variant mismatch: parameters built for ") +
                variant_name(m.config.variant) + ", requested " + variant_name(v));
}

}  // namespace detail

struct CaeResult {
  Var v_x, v_h;        // contextualized aspect embeddings at the two levels
  Var alpha_x, alpha_h;  // the attention weights that produced them
};

// Eq. of the contextualized aspect embedding layer: per-aspect additive
// attention pooled over the embedding sequence and over the Bi-LSTM states.
inline CaeResult compute_cae(const JointModelParams& m, const std::vector<Var>& X,
                             const std::vector<Var>& H, const std::vector<bool>& mask, int j) {
  detail::check_aspect_index(m, j);
  if (X.size() != H.size())
    throw Error("compute_cae: X and H lengths differ (" + std::to_string(X.size()) + " vs " +
                std::to_string(H.size()) + ")");
  auto rx = additive_attention(m.aspects[j].attn_x, X, mask);
  auto rh = additive_attention(m.aspects[j].attn_h, H, mask);
  return {rx.pooled, rh.pooled, rx.weights, rh.weights};
}

// Detection head for aspect j: sigmoid over a ReLU layer applied to the
// concatenated two-level aspect embedding. Returns a {1} node in (0,1).
inline Var predict_aspect_probability(const JointModelParams& m, const Var& v_x,
                                      const Var& v_h, int j) {
  detail::check_aspect_index(m, j);
  Var v = concat({v_x, v_h});
  return dense(m.aspects[j].acd.out, dense(m.aspects[j].acd.hidden, v));
}

struct SentimentFeatures {
  Var features;        // concat of the two dot-attention summaries
  Var beta_x, beta_h;  // dot-attention weights at the two levels
};

// Aspect-specific sentiment features with explicit queries.
inline SentimentFeatures sentiment_features_with_queries(const std::vector<Var>& X,
                                                         const std::vector<Var>& H,
                                                         const std::vector<bool>& mask,
                                                         const Var& query_x,
                                                         const Var& query_h) {
  auto rx = dot_attention(X, query_x, mask);
  auto rh = dot_attention(H, query_h, mask);
  return {concat({rx.pooled, rh.pooled}), rx.weights, rh.weights};
}

// Variant-aware form: full and without_share query with the contextualized
// aspect embeddings; without_cae queries with the fixed per-aspect vectors.
inline SentimentFeatures sentiment_features(const JointModelParams& m,
                                            const std::vector<Var>& X,
                                            const std::vector<Var>& H,
                                            const std::vector<bool>& mask, int j,
                                            ModelVariant variant) {
  detail::check_aspect_index(m, j);
  if (variant == ModelVariant::kWithoutCae) {
    if (!m.aspects[j].ciae_x)
      throw Error("sentiment_features: without_cae requested but parameters carry no "
                  "context-independent aspect embeddings");
    return sentiment_features_with_queries(X, H, mask, m.aspects[j].ciae_x,
                                           m.aspects[j].ciae_h);
  }
  auto cae = compute_cae(m, X, H, mask, j);
  return sentiment_features_with_queries(X, H, mask, cae.v_x, cae.v_h);
}

// Sentiment head: softmax over a ReLU layer. One parameter set serves every
// aspect except under without_share.
inline Var predict_sentiment_distribution(const JointModelParams& m, const Var& features,
                                          int j, ModelVariant variant) {
  detail::check_aspect_index(m, j);
  const PredictionHead* head = nullptr;
  if (variant == ModelVariant::kWithoutShare) {
    if (!m.aspects[j].sc)
      throw Error("predict_sentiment_distribution: without_share requested but parameters "
                  "carry no per-aspect sentiment heads");
    head = &*m.aspects[j].sc;
  } else {
    if (!m.shared_sc)
      throw Error("predict_sentiment_distribution: shared head requested but parameters "
                  "carry per-aspect heads only");
    head = &*m.shared_sc;
  }
  return dense(head->out, dense(head->hidden, features));
}

struct AspectAttentionMaps {
  Tensor alpha_x, alpha_h;  // additive attention (aspect embedding layer)
  Tensor beta_x, beta_h;    // dot attention (sentiment layer)
};

struct ForwardOutput {
  Var aspect_probs;           // {N}, coordinate j = probability aspect j is mentioned
  std::vector<Var> sentiment; // N nodes of shape {M}, each a distribution
  std::vector<AspectAttentionMaps> attention;

  std::vector<double> aspect_prob_values() const { return aspect_probs->value.data; }

  Tensor sentiment_values() const {
    const int n = static_cast<int>(sentiment.size());
    const int m = n ? static_cast<int>(sentiment[0]->value.numel()) : 0;
    Tensor t({n, m});
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < m; ++k) t.at(j, k) = sentiment[j]->value.data[k];
    return t;
  }
};

// Whole-model forward pass over one encoded text. Train mode applies dropout
// after the embedding and Bi-LSTM layers and needs an rng; eval mode is
// deterministic.
inline ForwardOutput forward(const JointModelParams& m, const std::vector<int>& token_ids,
                             const std::vector<bool>& mask, ModelVariant variant, bool train,
                             Rng* rng = nullptr) {
  detail::check_variant(m, variant);
  if (token_ids.empty()) throw Error("forward: empty token sequence");
  if (!mask.empty() && mask.size() != token_ids.size())
    throw Error("forward: mask length " + std::to_string(mask.size()) +
                " != sequence length " + std::to_string(token_ids.size()));
  if (train && rng == nullptr) throw Error("forward: train mode needs an rng");

  DropoutSpec drop{.p = m.config.dropout_p, .train = train};
  std::vector<Var> X = embedding_lookup(m.embedding, token_ids);
  if (train) X = dropout_seq(drop, X, *rng);
  std::vector<Var> H = bilstm_forward(m.forward_lstm, m.backward_lstm, X, mask);
  if (train) H = dropout_seq(drop, H, *rng);

  ForwardOutput out;
  std::vector<Var> probs;
  for (int j = 0; j < m.config.n_aspects; ++j) {
    CaeResult cae = compute_cae(m, X, H, mask, j);
    probs.push_back(predict_aspect_probability(m, cae.v_x, cae.v_h, j));

    Var query_x = cae.v_x, query_h = cae.v_h;
    if (variant == ModelVariant::kWithoutCae) {
      query_x = m.aspects[j].ciae_x;
      query_h = m.aspects[j].ciae_h;
    }
    SentimentFeatures sf = sentiment_features_with_queries(X, H, mask, query_x, query_h);
    out.sentiment.push_back(predict_sentiment_distribution(m, sf.features, j, variant));
    out.attention.push_back({cae.alpha_x->value, cae.alpha_h->value, sf.beta_x->value,
                             sf.beta_h->value});
  }
  out.aspect_probs = concat(probs);
  return out;
}

}  // namespace acsa
