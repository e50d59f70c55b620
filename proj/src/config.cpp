#include "gmvp/config.hpp"

#include <fstream>

#include "gmvp/errors.hpp"

namespace gmvp {

using nlohmann::json;

bool operator==(const GinConfig& a, const GinConfig& b) {
  return a.num_layers == b.num_layers && a.hidden_dim == b.hidden_dim &&
         a.atom_vocab == b.atom_vocab && a.tag_vocab == b.tag_vocab &&
         a.bond_vocab == b.bond_vocab;
}

bool operator==(const SchNetConfig& a, const SchNetConfig& b) {
  return a.num_layers == b.num_layers && a.hidden_dim == b.hidden_dim &&
         a.atom_vocab == b.atom_vocab && a.rbf_count == b.rbf_count && a.cutoff == b.cutoff &&
         a.gamma == b.gamma;
}

bool operator==(const ModelConfig& a, const ModelConfig& b) {
  return a.gin == b.gin && a.schnet == b.schnet && a.latent_dim == b.latent_dim;
}

bool operator==(const LossConfig& a, const LossConfig& b) {
  return a.contrastive == b.contrastive && a.generative == b.generative && a.alpha1 == b.alpha1 &&
         a.alpha2 == b.alpha2 && a.alpha3 == b.alpha3 && a.beta == b.beta &&
         a.variant == b.variant;
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return a.mask_ratio == b.mask_ratio && a.num_conformers == b.num_conformers &&
         a.batch_size == b.batch_size && a.epochs == b.epochs && a.lr == b.lr &&
         a.seed == b.seed && a.loss == b.loss && a.model == b.model &&
         a.record_wall_time == b.record_wall_time;
}

void TrainConfig::validate() const {
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) throw ConfigError("mask_ratio must lie in [0, 1]");
  if (num_conformers < 1) throw ConfigError("num_conformers must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  loss.validate();
  model.validate();
}

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys,
                    std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const LossConfig& c) {
  return {{"contrastive", std::string(to_string(c.contrastive))},
          {"generative", std::string(to_string(c.generative))},
          {"alpha1", c.alpha1},
          {"alpha2", c.alpha2},
          {"alpha3", c.alpha3},
          {"beta", c.beta},
          {"variant", std::string(to_string(c.variant))}};
}

LossConfig loss_config_from_json(const json& j) {
  reject_unknown(j, {"contrastive", "generative", "alpha1", "alpha2", "alpha3", "beta", "variant"},
                 "loss");
  LossConfig c;
  std::string s;
  if (j.contains("contrastive")) c.contrastive = parse_contrastive_kind(j["contrastive"].get<std::string>());
  if (j.contains("generative")) c.generative = parse_generative_kind(j["generative"].get<std::string>());
  if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
  read(j, "alpha1", c.alpha1);
  read(j, "alpha2", c.alpha2);
  read(j, "alpha3", c.alpha3);
  read(j, "beta", c.beta);
  return c;
}

json to_json(const ModelConfig& c) {
  return {{"gin",
           {{"num_layers", c.gin.num_layers},
            {"hidden_dim", c.gin.hidden_dim},
            {"atom_vocab", c.gin.atom_vocab},
            {"tag_vocab", c.gin.tag_vocab},
            {"bond_vocab", c.gin.bond_vocab}}},
          {"schnet",
           {{"num_layers", c.schnet.num_layers},
            {"hidden_dim", c.schnet.hidden_dim},
            {"atom_vocab", c.schnet.atom_vocab},
            {"rbf_count", c.schnet.rbf_count},
            {"cutoff", c.schnet.cutoff},
            {"gamma", c.schnet.gamma}}},
          {"latent_dim", c.latent_dim}};
}

ModelConfig model_config_from_json(const json& j) {
  reject_unknown(j, {"gin", "schnet", "latent_dim"}, "model");
  ModelConfig c;
  if (j.contains("gin")) {
    const json& g = j["gin"];
    reject_unknown(g, {"num_layers", "hidden_dim", "atom_vocab", "tag_vocab", "bond_vocab"},
                   "model.gin");
    read(g, "num_layers", c.gin.num_layers);
    read(g, "hidden_dim", c.gin.hidden_dim);
    read(g, "atom_vocab", c.gin.atom_vocab);
    read(g, "tag_vocab", c.gin.tag_vocab);
    read(g, "bond_vocab", c.gin.bond_vocab);
  }
  if (j.contains("schnet")) {
    const json& s = j["schnet"];
    reject_unknown(s, {"num_layers", "hidden_dim", "atom_vocab", "rbf_count", "cutoff", "gamma"},
                   "model.schnet");
    read(s, "num_layers", c.schnet.num_layers);
    read(s, "hidden_dim", c.schnet.hidden_dim);
    read(s, "atom_vocab", c.schnet.atom_vocab);
    read(s, "rbf_count", c.schnet.rbf_count);
    read(s, "cutoff", c.schnet.cutoff);
    read(s, "gamma", c.schnet.gamma);
  }
  read(j, "latent_dim", c.latent_dim);
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"mask_ratio", c.mask_ratio},
          {"num_conformers", c.num_conformers},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"seed", c.seed},
          {"loss", to_json(c.loss)},
          {"model", to_json(c.model)},
          {"record_wall_time", c.record_wall_time}};
}

TrainConfig train_config_from_json(const json& j) {
  reject_unknown(j,
                 {"mask_ratio", "num_conformers", "batch_size", "epochs", "lr", "seed", "loss",
                  "model", "record_wall_time"},
                 "config");
  TrainConfig c;
  read(j, "mask_ratio", c.mask_ratio);
  read(j, "num_conformers", c.num_conformers);
  read(j, "batch_size", c.batch_size);
  read(j, "epochs", c.epochs);
  read(j, "lr", c.lr);
  read(j, "seed", c.seed);
  read(j, "record_wall_time", c.record_wall_time);
  try {
    if (j.contains("loss")) c.loss = loss_config_from_json(j["loss"]);
    if (j.contains("model")) c.model = model_config_from_json(j["model"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace gmvp
