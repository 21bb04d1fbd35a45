#include "settings.hpp"

#include <fstream>
#include <stdexcept>

namespace rlop::cli {

namespace {

void reject_unknown(const nlohmann::json& given, const nlohmann::json& known, const std::string& where) {
  for (const auto& [key, value] : given.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown config key: " + where + key);
    if (value.is_object() && known.at(key).is_object()) {
      reject_unknown(value, known.at(key), where + key + ".");
    }
  }
}

}  // namespace

std::vector<std::uint64_t> Settings::seed_list() const {
  return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds;
}

Settings settings_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  reject_unknown(j, nlohmann::json(Settings{}), "");
  Settings s;
  try {
    s = j.get<Settings>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config: ") + e.what());
  }
  if (s.profile != "paper-default") throw std::invalid_argument("unknown profile: " + s.profile);
  return s;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("cannot parse config " + path.string() + ": " + e.what());
  }
  return settings_from_json(j);
}

nlohmann::json to_json_value(const Settings& settings) { return nlohmann::json(settings); }

train::TrainConfig to_train_config(const Settings& s) {
  train::TrainConfig c;
  c.env = train::env_from_string(s.env);
  c.market = s.market;
  c.episodes = s.episodes;
  c.lr_policy = s.lr_policy;
  c.lr_baseline = s.lr_baseline;
  c.m_subrollouts = s.m_subrollouts;
  c.adjustment = s.adjustment;
  c.seed = s.seed;
  c.penalty.kind = replication::penalty_from_string(s.penalty);
  c.pi0 = replication::pi0_rule_from_string(s.pi0);
  c.ema_halflife = s.ema_halflife;
  c.network.latent_dim = s.network.latent_dim;
  c.network.blocks = s.network.blocks;
  c.network.layers_per_block = s.network.layers_per_block;
  c.network.activation = nn::activation_from_string(s.network.activation);
  if (s.checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  c.validate();
  return c;
}

}  // namespace rlop::cli
