#include "rlop/qlbs_env.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rlop/costs.hpp"
#include "rlop/format.hpp"

namespace rlop::qlbs {

namespace {

// Backward recursion over prices S_t..S_T and positions u_t..u_{T-1};
// returns Pi_t..Pi_T.
std::vector<double> solve_segment(std::span<const double> prices, std::span<const double> positions,
                                  const MarketParams& params, double epsilon) {
  const std::size_t n = positions.size();
  const double gamma = params.discount();
  std::vector<double> pi(n + 1);
  pi[n] = payoff_european_call(prices[n], params.K);
  double next_position = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double u = positions[k];
    const double cost = transaction_cost(next_position - u, prices[k + 1], epsilon);
    pi[k] = gamma * (pi[k + 1] + cost - u * prices[k + 1]) + u * prices[k];
    next_position = u;
  }
  return pi;
}

}  // namespace

QlbsState QlbsState::initial(const PricePath& path) {
  const double s0 = path.prices.at(0);
  return {0, compensated_log_price(path.params, 0, s0), s0};
}

void RewardEstimatorConfig::validate(double lambda) const {
  if (m_subrollouts < 1) throw std::invalid_argument("RewardEstimatorConfig: m must be >= 1");
  if (lambda > 0.0 && m_subrollouts < 2) {
    throw std::invalid_argument("RewardEstimatorConfig: m must be >= 2 when lambda > 0");
  }
}

bool QlbsEpisode::complete() const {
  const auto T = static_cast<std::size_t>(path.steps());
  return T >= 1 && actions.size() == T && rewards.size() == T && portfolio.size() == T + 1 &&
         cashflow.size() == T && risk.size() == T;
}

std::vector<double> solve_portfolio_backward(const PricePath& path,
                                             std::span<const double> positions, double epsilon) {
  if (path.prices.size() != positions.size() + 1) {
    throw std::invalid_argument("solve_portfolio_backward: need T positions for T+1 prices");
  }
  return solve_segment(path.prices, positions, path.params, epsilon);
}

StepResult step(const QlbsState& state, double, const PricePath& path) {
  const int T = path.steps();
  if (state.t < 0 || state.t >= T) throw std::invalid_argument("qlbs::step: state is terminal");
  const int t = state.t + 1;
  const double s = path.prices[static_cast<std::size_t>(t)];
  return {{t, compensated_log_price(path.params, t, s), s}, t == T};
}

ContinuationSampler gbm_continuation() {
  return [](const MarketParams& params, int t, double s_t, std::vector<double>& future, Rng& rng) {
    simulate_gbm_continuation(params, t, s_t, future, rng);
  };
}

ContinuationSampler replay_continuation(PricePath path) {
  return [path = std::move(path)](const MarketParams&, int t, double, std::vector<double>& future,
                                  Rng&) {
    future.assign(path.prices.begin() + t + 1, path.prices.end());
  };
}

double cashflow_component(int t, int T, double pi_t, double pi_next) {
  const double weight_next = 1.0 - static_cast<double>(t + 1) / T;
  const double weight_now = 1.0 - static_cast<double>(t) / T;
  return weight_next * pi_next - weight_now * pi_t;
}

RewardEstimate estimate_reward(const MarketParams& params, const QlbsState& state, double action,
                               const Policy& policy, const RewardEstimatorConfig& cfg, Rng& rng,
                               const ContinuationSampler& sampler) {
  const int T = params.T;
  if (state.t < 0 || state.t >= T) throw std::invalid_argument("estimate_reward: state is terminal");
  cfg.validate(params.lambda);
  const int m = cfg.m_subrollouts;
  const auto horizon = static_cast<std::size_t>(T - state.t);

  std::vector<double> prices(horizon + 1);
  std::vector<double> positions(horizon);
  std::vector<double> future;
  std::vector<double> pi_t(static_cast<std::size_t>(m));
  double cashflow_sum = 0.0;
  double pi_next_sum = 0.0;

  for (int j = 0; j < m; ++j) {
    prices[0] = state.spot;
    if (sampler) {
      sampler(params, state.t, state.spot, future, rng);
    } else {
      simulate_gbm_continuation(params, state.t, state.spot, future, rng);
    }
    if (future.size() != horizon) throw std::logic_error("estimate_reward: sampler length mismatch");
    std::copy(future.begin(), future.end(), prices.begin() + 1);

    positions[0] = action;
    for (std::size_t k = 1; k < horizon; ++k) {
      const Observation obs{state.t + static_cast<int>(k), prices[k], T, 0.0};
      positions[k] = policy.act(params, obs, rng);
    }
    const auto pi = solve_segment(prices, positions, params, params.epsilon);
    pi_t[static_cast<std::size_t>(j)] = pi[0];
    pi_next_sum += pi[1];
    cashflow_sum += cashflow_component(state.t, T, pi[0], pi[1]);
  }

  const double pi_mean = std::accumulate(pi_t.begin(), pi_t.end(), 0.0) / m;
  double pi_std = 0.0;
  if (m >= 2) {
    double ss = 0.0;
    for (double v : pi_t) ss += (v - pi_mean) * (v - pi_mean);
    pi_std = std::sqrt(ss / (m - 1));
  }
  const double cashflow = cashflow_sum / m;
  const double risk = -params.lambda * pi_std;
  return {cashflow + risk, cashflow, risk, pi_mean, pi_std, pi_next_sum / m};
}

QlbsEpisode run_episode(const PricePath& path, const Policy& policy,
                        const RewardEstimatorConfig& cfg, Rng& rng,
                        const ContinuationSampler& sampler) {
  const MarketParams& params = path.params;
  QlbsEpisode episode;
  episode.path = path;
  episode.gamma = params.discount();
  QlbsState state = QlbsState::initial(path);
  for (bool done = false; !done;) {
    const double action = policy.act(params, {state.t, state.spot, params.T, 0.0}, rng);
    const auto estimate = estimate_reward(params, state, action, policy, cfg, rng, sampler);
    episode.actions.push_back(action);
    episode.rewards.push_back(estimate.reward);
    episode.cashflow.push_back(estimate.cashflow);
    episode.risk.push_back(estimate.risk);
    const auto result = step(state, action, path);
    state = result.next;
    done = result.done;
  }
  episode.portfolio = solve_portfolio_backward(path, episode.actions, params.epsilon);
  return episode;
}

double episode_price(const QlbsEpisode& episode) {
  if (!episode.complete()) throw std::invalid_argument("episode_price: incomplete episode");
  return -std::accumulate(episode.rewards.begin(), episode.rewards.end(), 0.0);
}

void write_episode_csv(std::ostream& out, const QlbsEpisode& episode) {
  out << "t,S,X,action,portfolio,reward\n";
  const MarketParams& params = episode.path.params;
  const int T = episode.path.steps();
  for (int t = 0; t <= T; ++t) {
    const auto i = static_cast<std::size_t>(t);
    const double s = episode.path.prices[i];
    out << t << ',' << fmt_double(s) << ',' << fmt_double(compensated_log_price(params, t, s)) << ',';
    if (t < T && i < episode.actions.size()) out << fmt_double(episode.actions[i]);
    out << ',';
    if (i < episode.portfolio.size()) out << fmt_double(episode.portfolio[i]);
    out << ',';
    if (t < T && i < episode.rewards.size()) out << fmt_double(episode.rewards[i]);
    out << '\n';
  }
}

}  // namespace rlop::qlbs
