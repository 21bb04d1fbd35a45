#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlop/market.hpp"
#include "rlop/trainer.hpp"

namespace rlop {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MarketParams, r, mu, sigma, T, dt, S0, K, lambda,
                                                epsilon)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AdjustmentProcess, intensity, scale, targets)

}  // namespace rlop

namespace rlop::cli {

struct NetworkSettings {
  int latent_dim = 10;
  int blocks = 2;
  int layers_per_block = 2;
  std::string activation = "tanh";
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NetworkSettings, latent_dim, blocks,
                                                layers_per_block, activation)

// Every knob of every subcommand. Defaults are the `paper-default` profile;
// a JSON config file overrides them and command-line flags override the file.
struct Settings {
  std::string profile = "paper-default";

  // training
  std::string env = "qlbs";
  MarketParams market = paper_default_params();
  int episodes = 1000;
  double lr_policy = 1e-4;
  double lr_baseline = 1e-4;
  int m_subrollouts = 16;
  AdjustmentProcess adjustment{};
  std::uint64_t seed = 0;
  std::string penalty = "squared";
  std::string pi0 = "bs";
  double ema_halflife = 100.0;
  NetworkSettings network{};
  int checkpoint_every = 0;
  std::string resume;

  // evaluation
  int eval_episodes = 1000;
  std::uint64_t eval_seed = 4242;

  // sweep
  std::string sweep_param = "lambda";
  std::vector<double> sweep_values = {0.0, 1.0, 2.0, 3.0};
  double sweep_lambda = 0.5;  // lambda held fixed during an epsilon sweep
  std::string policy = "trained";
  std::vector<std::uint64_t> seeds;  // empty means {seed}

  // hedge-compare
  std::vector<std::string> checkpoints;
  std::vector<double> spots = {0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2};
  std::vector<int> remaining;  // steps to maturity; empty means 1..T

  // mixed-train
  MarketParams condition_a = [] {
    MarketParams p = paper_default_params();
    p.lambda = 0.5;
    return p;
  }();
  MarketParams condition_b = [] {
    MarketParams p = paper_default_params();
    p.r = 0.02;
    p.mu = 0.1;
    p.sigma = 0.2;
    p.lambda = 1.5;
    p.epsilon = 0.1;
    return p;
  }();
  double switch_intensity = 0.05;
  int refine_episodes = 2000;

  // bs-quote
  int t = 0;
  double x = 1.0;

  std::vector<std::uint64_t> seed_list() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    Settings, profile, env, market, episodes, lr_policy, lr_baseline, m_subrollouts, adjustment, seed,
    penalty, pi0, ema_halflife, network, checkpoint_every, resume, eval_episodes, eval_seed,
    sweep_param, sweep_values, sweep_lambda, policy, seeds, checkpoints, spots, remaining,
    condition_a, condition_b, switch_intensity, refine_episodes, t, x)

// Parses a JSON object over the defaults. Unknown keys and unknown profiles
// throw std::invalid_argument so typos do not silently fall back.
Settings settings_from_json(const nlohmann::json& j);
Settings load_settings(const std::filesystem::path& path);

nlohmann::json to_json_value(const Settings& settings);

train::TrainConfig to_train_config(const Settings& settings);

}  // namespace rlop::cli
