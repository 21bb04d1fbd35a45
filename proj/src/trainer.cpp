#include "rlop/trainer.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rlop/format.hpp"

namespace rlop::train {

void TrainConfig::validate() const {
  market.validate();
  adjustment.validate();
  network.validate();
  if (episodes < 0) throw std::invalid_argument("TrainConfig: episodes must be >= 0");
  if (!(lr_policy > 0.0) || !(lr_baseline > 0.0)) {
    throw std::invalid_argument("TrainConfig: learning rates must be > 0");
  }
  if (!(ema_halflife > 0.0)) throw std::invalid_argument("TrainConfig: ema_halflife must be > 0");
  if (network.input_dim != kFeatureDim) {
    throw std::invalid_argument("TrainConfig: network input_dim must be 8");
  }
  if (checkpoint_every < 0) throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) {
    throw std::invalid_argument("TrainConfig: periodic checkpoints need a checkpoint_dir");
  }
  if (env == EnvKind::qlbs) qlbs::RewardEstimatorConfig{m_subrollouts}.validate(market.lambda);
}

std::string to_string(EnvKind env) { return env == EnvKind::qlbs ? "qlbs" : "rlop"; }

EnvKind env_from_string(const std::string& name) {
  if (name == "qlbs") return EnvKind::qlbs;
  if (name == "rlop") return EnvKind::rlop;
  throw std::invalid_argument("unknown env '" + name + "' (qlbs | rlop)");
}

void write_log_csv(std::ostream& out, const TrainLog& log) {
  out << "episode,return,ema,cashflow,risk,adjusted,params_hash\n";
  for (const auto& r : log.records) {
    out << r.episode << ',' << fmt_double(r.ret) << ',' << fmt_double(r.ema) << ','
        << fmt_double(r.cashflow) << ',' << fmt_double(r.risk) << ',' << (r.adjusted ? 1 : 0) << ','
        << r.params_hash << '\n';
  }
}

Agent Agent::create(const TrainConfig& config, Rng& rng) {
  nn::ResNetConfig head = config.network;
  head.output_dim = 1;
  Agent agent;
  agent.policy = nn::GaussianPolicy::random(head, rng);
  agent.baseline = nn::ResNet::random(head, rng);
  agent.mean_opt = nn::AdamState(agent.policy.mean_net.parameter_count(), config.lr_policy);
  agent.std_opt = nn::AdamState(agent.policy.std_net.parameter_count(), config.lr_policy);
  agent.baseline_opt = nn::AdamState(agent.baseline.parameter_count(), config.lr_baseline);
  return agent;
}

std::vector<double> returns_to_go(std::span<const double> rewards) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    acc += rewards[k];
    out[k] = acc;
  }
  return out;
}

UpdateStats reinforce_update(Agent& agent, std::span<const PolicySample> samples, bool use_baseline) {
  UpdateStats stats;
  if (samples.empty()) return stats;
  nn::PolicyGradients policy_grad(agent.policy);
  std::vector<double> baseline_grad(agent.baseline.parameter_count(), 0.0);
  nn::ResNet::Cache cache;
  for (const auto& sample : samples) {
    double advantage = sample.return_to_go;
    if (use_baseline) {
      const double value = agent.baseline.forward(sample.features, cache).front();
      advantage -= value;
      const double residual = value - sample.return_to_go;
      stats.baseline_loss += 0.5 * residual * residual;
      const double up[1] = {residual};
      agent.baseline.backward(cache, up, baseline_grad);
    }
    stats.mean_advantage += advantage;
    nn::log_prob_gradients(agent.policy, sample.features, sample.action, advantage, policy_grad);
  }
  stats.mean_advantage /= static_cast<double>(samples.size());

  // Adam descends, the policy objective is ascended.
  for (double& g : policy_grad.mean) g = -g;
  for (double& g : policy_grad.std) g = -g;
  nn::adam_step(agent.policy.mean_net.params(), policy_grad.mean, agent.mean_opt);
  nn::adam_step(agent.policy.std_net.params(), policy_grad.std, agent.std_opt);
  if (use_baseline) nn::adam_step(agent.baseline.params(), baseline_grad, agent.baseline_opt);
  return stats;
}

EpisodeOutcome run_episode_qlbs(const Agent& agent, const MarketParams& market,
                                const qlbs::RewardEstimatorConfig& cfg, Rng& rng) {
  const PricePath path = simulate_gbm_path(market, rng);
  const NetworkPolicy rollout_policy(agent.policy, EnvKind::qlbs);
  EpisodeOutcome out;
  auto& episode = out.qlbs;
  episode.path = path;
  episode.gamma = market.discount();
  qlbs::QlbsState state = qlbs::QlbsState::initial(path);
  for (bool done = false; !done;) {
    const Observation obs{state.t, state.spot, market.T, 0.0};
    const Features features = qlbs_features(market, obs);
    const double action = nn::sample_action(agent.policy, features, rng).action;
    const auto estimate = qlbs::estimate_reward(market, state, action, rollout_policy, cfg, rng);
    out.samples.push_back({features, action, 0.0});
    episode.actions.push_back(action);
    episode.rewards.push_back(estimate.reward);
    episode.cashflow.push_back(estimate.cashflow);
    episode.risk.push_back(estimate.risk);
    const auto result = qlbs::step(state, action, path);
    state = result.next;
    done = result.done;
  }
  episode.portfolio = qlbs::solve_portfolio_backward(path, episode.actions, market.epsilon);

  const auto g = returns_to_go(episode.rewards);
  for (std::size_t k = 0; k < g.size(); ++k) out.samples[k].return_to_go = g[k];
  out.record.cashflow = std::accumulate(episode.cashflow.begin(), episode.cashflow.end(), 0.0);
  out.record.risk = std::accumulate(episode.risk.begin(), episode.risk.end(), 0.0);
  out.record.ret = out.record.cashflow + out.record.risk;
  return out;
}

EpisodeOutcome run_episode_rlop(const Agent& agent, const MarketParams& market,
                                replication::PenaltySpec penalty,
                                const replication::Pi0Rule& pi0, Rng& rng) {
  const PricePath path = simulate_gbm_path(market, rng);
  EpisodeOutcome out;
  auto& episode = out.stack;
  episode.path = path;
  episode.terminal_rewards.assign(static_cast<std::size_t>(market.T), 0.0);
  std::vector<int> sample_maturity;

  auto stack = replication::init_stack(path, pi0, rng);
  std::vector<double> actions;
  for (int t = 0; t < market.T; ++t) {
    const double s = path.prices[static_cast<std::size_t>(t)];
    const auto live = stack.live();
    actions.clear();
    for (int i : live) {
      const auto& state = stack.states[static_cast<std::size_t>(i - 1)];
      const Observation obs{t, s, i, state.pi};
      const Features features = rlop_features(market, obs);
      const double u = nn::sample_action(agent.policy, features, rng).action;
      actions.push_back(u);
      out.samples.push_back({features, u, 0.0});
      sample_maturity.push_back(i);
      episode.trace.push_back({t, s, i, u, state.pi, 0.0});
    }
    auto transition =
        replication::step_stack(stack, actions, path.prices[static_cast<std::size_t>(t + 1)], penalty);
    const auto k = static_cast<std::size_t>(t);  // maturity t+1 expires now
    episode.terminal_rewards[k] = transition.rewards[k];
    episode.total_reward += transition.rewards[k];
    episode.trace.push_back({t + 1, transition.next.states[k].s, t + 1,
                             std::numeric_limits<double>::quiet_NaN(), transition.next.states[k].pi,
                             transition.rewards[k]});
    stack = std::move(transition.next);
  }
  // Each portfolio is its own task: its only reward arrives at its maturity.
  for (std::size_t n = 0; n < out.samples.size(); ++n) {
    out.samples[n].return_to_go =
        episode.terminal_rewards[static_cast<std::size_t>(sample_maturity[n] - 1)];
  }
  out.record.cashflow = episode.total_reward;
  out.record.risk = 0.0;
  out.record.ret = out.record.cashflow + out.record.risk;
  return out;
}

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)), market_(config_.market), rng_(config_.seed) {
  config_.validate();
  agent_ = Agent::create(config_, rng_);
}

namespace {

const char* kMarketKeys[] = {"r", "mu", "sigma", "dt", "S0", "K", "lambda", "epsilon"};

double* market_field(MarketParams& p, int i) {
  double* fields[] = {&p.r, &p.mu, &p.sigma, &p.dt, &p.S0, &p.K, &p.lambda, &p.epsilon};
  return fields[i];
}

const std::string& meta_at(const nn::Checkpoint& ckpt, const std::string& key) {
  const auto it = ckpt.meta.find(key);
  if (it == ckpt.meta.end()) throw std::runtime_error("checkpoint: missing meta '" + key + "'");
  return it->second;
}

template <class Map>
const typename Map::mapped_type& entry_at(const Map& map, const std::string& key) {
  const auto it = map.find(key);
  if (it == map.end()) throw std::runtime_error("checkpoint: missing entry '" + key + "'");
  return it->second;
}

}  // namespace

Trainer::Trainer(TrainConfig config, const nn::Checkpoint& ckpt)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (checkpoint_env(ckpt) != config_.env) {
    throw std::invalid_argument("checkpoint was written for a different environment");
  }
  agent_.policy = checkpoint_policy(ckpt);
  agent_.baseline = entry_at(ckpt.networks, "baseline");
  agent_.mean_opt = entry_at(ckpt.optimizers, "policy_mean");
  agent_.std_opt = entry_at(ckpt.optimizers, "policy_std");
  agent_.baseline_opt = entry_at(ckpt.optimizers, "baseline");
  episode_ = std::stoi(meta_at(ckpt, "episode"));
  ema_sum_ = std::strtod(meta_at(ckpt, "ema_sum").c_str(), nullptr);
  ema_weight_ = std::strtod(meta_at(ckpt, "ema_weight").c_str(), nullptr);
  rng_.restore(meta_at(ckpt, "rng"));
  market_ = checkpoint_market(ckpt);
}

EnvKind checkpoint_env(const nn::Checkpoint& ckpt) { return env_from_string(meta_at(ckpt, "env")); }

MarketParams checkpoint_market(const nn::Checkpoint& ckpt) {
  MarketParams market;
  market.T = std::stoi(meta_at(ckpt, "market.T"));
  for (int i = 0; i < 8; ++i) {
    *market_field(market, i) =
        std::strtod(meta_at(ckpt, std::string("market.") + kMarketKeys[i]).c_str(), nullptr);
  }
  market.validate();
  return market;
}

nn::GaussianPolicy checkpoint_policy(const nn::Checkpoint& ckpt) {
  return {entry_at(ckpt.networks, "policy_mean"), entry_at(ckpt.networks, "policy_std")};
}

nn::Checkpoint Trainer::checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.meta["env"] = to_string(config_.env);
  ckpt.meta["episode"] = std::to_string(episode_);
  ckpt.meta["ema_sum"] = fmt_hex(ema_sum_);
  ckpt.meta["ema_weight"] = fmt_hex(ema_weight_);
  ckpt.meta["rng"] = rng_.state();
  ckpt.meta["market.T"] = std::to_string(market_.T);
  MarketParams market = market_;
  for (int i = 0; i < 8; ++i) {
    ckpt.meta[std::string("market.") + kMarketKeys[i]] = fmt_hex(*market_field(market, i));
  }
  ckpt.networks.emplace("policy_mean", agent_.policy.mean_net);
  ckpt.networks.emplace("policy_std", agent_.policy.std_net);
  ckpt.networks.emplace("baseline", agent_.baseline);
  ckpt.optimizers.emplace("policy_mean", agent_.mean_opt);
  ckpt.optimizers.emplace("policy_std", agent_.std_opt);
  ckpt.optimizers.emplace("baseline", agent_.baseline_opt);
  return ckpt;
}

void Trainer::set_config(TrainConfig config) {
  config.validate();
  config_ = std::move(config);
  agent_.mean_opt.learning_rate = config_.lr_policy;
  agent_.std_opt.learning_rate = config_.lr_policy;
  agent_.baseline_opt.learning_rate = config_.lr_baseline;
}

TrainLog Trainer::take_log() {
  TrainLog out = std::move(log_);
  log_ = {};
  return out;
}

const EpisodeRecord& Trainer::run_one(const MarketParams& market, bool adjusted) {
  EpisodeOutcome outcome =
      config_.env == EnvKind::qlbs
          ? run_episode_qlbs(agent_, market, {config_.m_subrollouts}, rng_)
          : run_episode_rlop(agent_, market, config_.penalty, config_.pi0, rng_);
  reinforce_update(agent_, outcome.samples, config_.env == EnvKind::qlbs);

  // Weights halve every ema_halflife episodes; dividing by the accumulated
  // weight removes the start-up bias toward the first return.
  const double decay = std::exp2(-1.0 / config_.ema_halflife);
  ema_sum_ = decay * ema_sum_ + (1.0 - decay) * outcome.record.ret;
  ema_weight_ = decay * ema_weight_ + (1.0 - decay);

  EpisodeRecord record = outcome.record;
  record.episode = episode_;
  record.ema = ema_sum_ / ema_weight_;
  record.adjusted = adjusted;
  record.params_hash = params_hash(market);
  log_.records.push_back(std::move(record));
  ++episode_;
  return log_.records.back();
}

void Trainer::run() {
  while (episode_ < config_.episodes) {
    auto [market, adjusted] = maybe_adjust(market_, config_.adjustment, rng_);
    market_ = market;
    run_one(market_, adjusted);
    if (config_.checkpoint_every > 0 && episode_ % config_.checkpoint_every == 0) {
      std::filesystem::create_directories(config_.checkpoint_dir);
      nn::save_checkpoint(
          config_.checkpoint_dir / ("checkpoint_" + std::to_string(episode_) + ".txt"), checkpoint());
    }
  }
}

TrainResult train(const TrainConfig& config) {
  Trainer trainer(config);
  trainer.run();
  return {trainer.agent(), trainer.take_log()};
}

TrainResult train(const TrainConfig& config, const nn::Checkpoint& resume_from) {
  Trainer trainer(config, resume_from);
  trainer.run();
  return {trainer.agent(), trainer.take_log()};
}

Evaluation evaluate(const Policy& policy, const TrainConfig& config, const MarketParams& market,
                    int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: need at least one episode");
  Rng rng(seed);
  const qlbs::RewardEstimatorConfig cfg{config.m_subrollouts};
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const PricePath path = simulate_gbm_path(market, rng);
    double ret = 0.0;
    if (config.env == EnvKind::qlbs) {
      ret = -qlbs::episode_price(qlbs::run_episode(path, policy, cfg, rng));
    } else {
      ret = replication::run_stack_episode(path, policy, config.pi0, config.penalty, rng).total_reward;
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  Evaluation out;
  out.episodes = episodes;
  out.mean_return = sum / episodes;
  if (episodes > 1) {
    const double var = (sum_sq - episodes * out.mean_return * out.mean_return) / (episodes - 1);
    out.std_error = std::sqrt(std::max(var, 0.0) / episodes);
  }
  return out;
}

TrainConfig average_condition(const TrainConfig& a, const TrainConfig& b) {
  if (a.market.T != b.market.T) throw std::invalid_argument("average_condition: T must match");
  TrainConfig out = a;
  for (int i = 0; i < 8; ++i) {
    MarketParams pa = a.market;
    MarketParams pb = b.market;
    *market_field(out.market, i) = 0.5 * (*market_field(pa, i) + *market_field(pb, i));
  }
  return out;
}

MixedLogs mixed_condition_train(const TrainConfig& a, const TrainConfig& b, double switch_intensity,
                                const TrainConfig& refine) {
  if (!(switch_intensity >= 0.0)) {
    throw std::invalid_argument("mixed_condition_train: switch intensity must be >= 0");
  }
  b.validate();
  const MarketParams mean = average_condition(a, b).market;
  MarketParams target = refine.market;
  for (int i = 0; i < 8; ++i) {
    MarketParams m = mean;
    if (std::abs(*market_field(target, i) - *market_field(m, i)) > 1e-12) {
      throw std::invalid_argument("mixed_condition_train: refine market is not the mean condition");
    }
  }

  Trainer trainer(a);
  const double p_switch = -std::expm1(-switch_intensity);
  bool on_b = false;
  for (int e = 0; e < a.episodes; ++e) {
    const bool switched = trainer.rng().uniform() < p_switch;
    if (switched) on_b = !on_b;
    trainer.run_one(on_b ? b.market : a.market, switched);
  }
  MixedLogs out;
  out.phase1 = trainer.take_log();
  out.pre_refine = trainer.agent();
  trainer.set_config(refine);
  for (int e = 0; e < refine.episodes; ++e) trainer.run_one(refine.market, false);
  out.refine = trainer.take_log();
  out.agent = trainer.agent();
  return out;
}

}  // namespace rlop::train
