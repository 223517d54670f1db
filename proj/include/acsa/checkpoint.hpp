#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "acsa/data.hpp"
#include "acsa/model.hpp"
#include "acsa/training.hpp"

namespace acsa {

// Self-describing single-file container: a JSON header with the model
// configuration, label space, vocabulary and tensor manifest, followed by
// the raw 64-bit parameter values in group order. Values round-trip
// bit-exactly.

inline constexpr char kCheckpointMagic[8] = {'A', 'C', 'S', 'A', 'M', 'D', 'L', '1'};

struct SavedModel {
  JointModelParams model;
  Vocabulary vocab;
  LabelSpace labels;
  TokenizerMode tokenizer = TokenizerMode::kWhitespacePunct;
  double tau = 0.25;
  int epoch = -1;
  double val_f1 = 0.0;
  std::uint64_t config_hash = 0;
};

inline void save_checkpoint(const std::string& path, const JointModelParams& model,
                            const Vocabulary& vocab, const LabelSpace& labels,
                            TokenizerMode tokenizer, double tau, int epoch = -1,
                            double val_f1 = 0.0, std::uint64_t config_hash = 0) {
  nlohmann::json header;
  const ModelConfig& c = model.config;
  header["config"] = {{"n_aspects", c.n_aspects},       {"n_polarities", c.n_polarities},
                      {"vocab_size", c.vocab_size},     {"embed_dim", c.embed_dim},
                      {"hidden_dim", c.hidden_dim},     {"head_hidden", c.head_hidden},
                      {"attn_ctx_x", c.attn_ctx_x},     {"attn_ctx_h", c.attn_ctx_h},
                      {"dropout_p", c.dropout_p},       {"train_embeddings", c.train_embeddings},
                      {"variant", variant_name(c.variant)}};
  header["labels"] = {{"aspects", labels.aspects}, {"polarities", labels.polarities}};
  header["vocab"] = vocab.tokens;
  header["vocab_hash"] = vocab.hash();
  header["tokenizer"] = tokenizer_name(tokenizer);
  header["tau"] = tau;
  header["epoch"] = epoch;
  header["val_f1"] = val_f1;
  header["config_hash"] = config_hash;

  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& g : model.groups)
    for (const auto& n : g.nodes)
      manifest.push_back({{"name", n->name}, {"group", g.name}, {"shape", n->value.shape}});
  header["tensors"] = std::move(manifest);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  std::string head = header.dump();
  std::uint64_t head_len = head.size();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& g : model.groups)
    for (const auto& n : g.nodes)
      out.write(reinterpret_cast<const char*>(n->value.data.data()),
                static_cast<std::streamsize>(n->value.data.size() * sizeof(double)));
  if (!out) throw DataError("short write while saving checkpoint: " + path);
}

inline SavedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);

  char magic[sizeof(kCheckpointMagic)];
  std::uint64_t head_len = 0;
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
    throw DataError(path + ": not a model checkpoint (bad magic)");
  if (!in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len)))
    throw DataError(path + ": truncated checkpoint header");
  std::string head(head_len, '\0');
  if (!in.read(head.data(), static_cast<std::streamsize>(head_len)))
    throw DataError(path + ": truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": corrupt checkpoint header: " + e.what());
  }

  SavedModel saved;
  try {
    const auto& c = header.at("config");
    ModelConfig config;
    config.n_aspects = c.at("n_aspects").get<int>();
    config.n_polarities = c.at("n_polarities").get<int>();
    config.vocab_size = c.at("vocab_size").get<int>();
    config.embed_dim = c.at("embed_dim").get<int>();
    config.hidden_dim = c.at("hidden_dim").get<int>();
    config.head_hidden = c.at("head_hidden").get<int>();
    config.attn_ctx_x = c.at("attn_ctx_x").get<int>();
    config.attn_ctx_h = c.at("attn_ctx_h").get<int>();
    config.dropout_p = c.at("dropout_p").get<double>();
    config.train_embeddings = c.at("train_embeddings").get<bool>();
    config.variant = parse_variant(c.at("variant").get<std::string>());

    saved.labels = make_label_space(header.at("labels").at("aspects"),
                                    header.at("labels").at("polarities"));
    for (const auto& t : header.at("vocab").get<std::vector<std::string>>())
      saved.vocab.add(t);
    if (header.at("vocab_hash").get<std::uint64_t>() != saved.vocab.hash())
      throw DataError(path + ": vocabulary hash mismatch");
    saved.tokenizer = parse_tokenizer(header.at("tokenizer").get<std::string>());
    saved.tau = header.at("tau").get<double>();
    saved.epoch = header.at("epoch").get<int>();
    saved.val_f1 = header.at("val_f1").get<double>();
    saved.config_hash = header.at("config_hash").get<std::uint64_t>();

    Rng init_rng(0);
    saved.model = make_joint_model(config, init_rng);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": corrupt checkpoint header: " + e.what());
  }

  const auto& manifest = header.at("tensors");
  std::size_t idx = 0;
  for (auto& g : saved.model.groups)
    for (auto& n : g.nodes) {
      if (idx >= manifest.size())
        throw DataError(path + ": tensor manifest shorter than the model layout");
      Shape stored = manifest[idx].at("shape").get<Shape>();
      if (stored != n->value.shape)
        throw DataError(path + ": tensor " + n->name + " has shape " + shape_str(stored) +
                        " in file, expected " + shape_str(n->value.shape));
      if (!in.read(reinterpret_cast<char*>(n->value.data.data()),
                   static_cast<std::streamsize>(n->value.data.size() * sizeof(double))))
        throw DataError(path + ": truncated parameter data at tensor " + n->name);
      ++idx;
    }
  if (idx != manifest.size()) throw DataError(path + ": tensor manifest has extra entries");
  return saved;
}

}  // namespace acsa
