#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rlop/checkpoint.hpp"
#include "rlop/diffnet.hpp"
#include "rlop/market.hpp"
#include "rlop/policy.hpp"
#include "rlop/qlbs_env.hpp"
#include "rlop/random.hpp"
#include "rlop/rlop_env.hpp"

namespace rlop::train {

struct TrainConfig {
  EnvKind env = EnvKind::qlbs;
  MarketParams market = paper_default_params();
  int episodes = 1000;
  double lr_policy = 1e-4;
  double lr_baseline = 1e-4;
  int m_subrollouts = 16;
  AdjustmentProcess adjustment{};
  std::uint64_t seed = 0;
  replication::PenaltySpec penalty{};
  replication::Pi0Rule pi0 = replication::Pi0Rule::bs_oracle();
  double ema_halflife = 100.0;
  nn::ResNetConfig network{};
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

std::string to_string(EnvKind env);
EnvKind env_from_string(const std::string& name);

struct EpisodeRecord {
  int episode = 0;
  double ret = 0.0;
  double ema = 0.0;
  double cashflow = 0.0;
  double risk = 0.0;
  bool adjusted = false;
  std::string params_hash;
};

struct TrainLog {
  std::vector<EpisodeRecord> records;
};

// CSV `episode,return,ema,cashflow,risk,adjusted,params_hash`.
void write_log_csv(std::ostream& out, const TrainLog& log);

struct Agent {
  nn::GaussianPolicy policy;
  nn::ResNet baseline;
  nn::AdamState mean_opt;
  nn::AdamState std_opt;
  nn::AdamState baseline_opt;

  static Agent create(const TrainConfig& config, Rng& rng);
  friend bool operator==(const Agent&, const Agent&) = default;
};

struct PolicySample {
  Features features;
  double action;
  double return_to_go;
};

// G_t = sum_{k >= t} R_{k+1}, undiscounted.
std::vector<double> returns_to_go(std::span<const double> rewards);

struct UpdateStats {
  double mean_advantage = 0.0;
  double baseline_loss = 0.0;
};

// REINFORCE step: policy ascends sum_t A_t grad log pi(a_t | s_t) with
// A_t = G_t - b(s_t) (b = 0 when use_baseline is false); the baseline
// descends sum_t (b(s_t) - G_t)^2 / 2. Both go through Adam.
UpdateStats reinforce_update(Agent& agent, std::span<const PolicySample> samples, bool use_baseline);

struct EpisodeOutcome {
  std::vector<PolicySample> samples;
  EpisodeRecord record;  // ret/cashflow/risk filled; bookkeeping fields left to the caller
  qlbs::QlbsEpisode qlbs;                // populated for qlbs runs
  replication::StackEpisode stack;       // populated for rlop runs
};

EpisodeOutcome run_episode_qlbs(const Agent& agent, const MarketParams& market,
                                const qlbs::RewardEstimatorConfig& cfg, Rng& rng);
EpisodeOutcome run_episode_rlop(const Agent& agent, const MarketParams& market,
                                replication::PenaltySpec penalty,
                                const replication::Pi0Rule& pi0, Rng& rng);

// Sequential training state: agent, current market, stream, counters.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  // Restores a state written by checkpoint(); `config` supplies the
  // hyperparameters and the total episode target.
  Trainer(TrainConfig config, const nn::Checkpoint& ckpt);

  // Runs until config().episodes, applying the adjustment process before
  // each episode and writing periodic checkpoints.
  void run();
  // One episode + update on an explicit market, bypassing the adjustment.
  const EpisodeRecord& run_one(const MarketParams& market, bool adjusted);

  nn::Checkpoint checkpoint() const;

  const TrainConfig& config() const { return config_; }
  void set_config(TrainConfig config);
  const Agent& agent() const { return agent_; }
  const TrainLog& log() const { return log_; }
  TrainLog take_log();
  const MarketParams& market() const { return market_; }
  int episode() const { return episode_; }
  Rng& rng() { return rng_; }

 private:
  TrainConfig config_;
  Agent agent_;
  MarketParams market_;
  Rng rng_;
  int episode_ = 0;
  double ema_sum_ = 0.0;     // bias-corrected EMA numerator
  double ema_weight_ = 0.0;  // and its normalizer
  TrainLog log_;
};

// Readers for the pieces of a Trainer checkpoint that evaluation needs.
EnvKind checkpoint_env(const nn::Checkpoint& ckpt);
MarketParams checkpoint_market(const nn::Checkpoint& ckpt);
nn::GaussianPolicy checkpoint_policy(const nn::Checkpoint& ckpt);

struct TrainResult {
  Agent agent;
  TrainLog log;
};

TrainResult train(const TrainConfig& config);
TrainResult train(const TrainConfig& config, const nn::Checkpoint& resume_from);

struct Evaluation {
  double mean_return = 0.0;
  double std_error = 0.0;
  int episodes = 0;

  double price() const { return -mean_return; }
};

// Mean episodic return of a fixed policy over `episodes` fresh paths drawn
// from `seed`; QLBS returns are negative prices, RLOP returns summed penalties.
Evaluation evaluate(const Policy& policy, const TrainConfig& config, const MarketParams& market,
                    int episodes, std::uint64_t seed);

TrainConfig average_condition(const TrainConfig& a, const TrainConfig& b);

struct MixedLogs {
  TrainLog phase1;
  TrainLog refine;
  Agent pre_refine;
  Agent agent;
};

// Phase 1 runs a.episodes episodes, switching between the markets of `a` and
// `b` with per-episode probability 1 - exp(-switch_intensity) (starting on
// `a`); phase 2 fine-tunes for refine.episodes on refine.market, which must be
// the component-wise mean of the two.
MixedLogs mixed_condition_train(const TrainConfig& a, const TrainConfig& b, double switch_intensity,
                                const TrainConfig& refine);

}  // namespace rlop::train
