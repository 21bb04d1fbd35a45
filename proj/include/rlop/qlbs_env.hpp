#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "rlop/market.hpp"
#include "rlop/policy.hpp"
#include "rlop/random.hpp"

namespace rlop::qlbs {

struct QlbsState {
  int t = 0;
  double x = 0.0;     // compensated log price X_t
  double spot = 1.0;  // S_t, kept alongside X_t so no inversion is needed

  static QlbsState initial(const PricePath& path);
};

struct RewardEstimatorConfig {
  int m_subrollouts = 16;

  // m >= 2 is required whenever the std penalty is active.
  void validate(double lambda) const;
};

struct QlbsEpisode {
  PricePath path;
  std::vector<double> actions;    // a_0..a_{T-1}
  std::vector<double> portfolio;  // Pi_0..Pi_T, backward-solved on the realized path
  std::vector<double> rewards;    // R_1..R_T
  std::vector<double> cashflow;   // cashflow part of each reward
  std::vector<double> risk;       // -lambda * std part of each reward
  double gamma = 1.0;             // e^{-r dt}

  bool complete() const;
};

// Pi_T = max(S_T - K, 0); for t = T-1..0
//   Pi_t = e^{-r dt} [Pi_{t+1} + TC(u_{t+1} - u_t, S_{t+1}) - u_t S_{t+1}] + u_t S_t
// with u_T = 0 (the position is liquidated at maturity).
std::vector<double> solve_portfolio_backward(const PricePath& path,
                                             std::span<const double> positions, double epsilon);

struct StepResult {
  QlbsState next;
  bool done;
};

StepResult step(const QlbsState& state, double action, const PricePath& path);

// Fills `future` with S_{t+1}..S_T given S_t = s_t.
using ContinuationSampler =
    std::function<void(const MarketParams&, int t, double s_t, std::vector<double>& future, Rng&)>;

ContinuationSampler gbm_continuation();
// Replays the given path's future regardless of s_t (frozen rollouts).
ContinuationSampler replay_continuation(PricePath path);

struct RewardEstimate {
  double reward;
  double cashflow;      // mean of (1-(t+1)/T) Pi_{t+1} - (1-t/T) Pi_t over sub-rollouts
  double risk;          // -lambda * sample std of Pi_t
  double pi_t_mean;
  double pi_t_std;
  double pi_next_mean;
};

double cashflow_component(int t, int T, double pi_t, double pi_next);

// Spawns m sub-rollouts from (t, S_t): `action` is held over [t, t+1], later
// positions come from `policy`, prices from `sampler` (GBM when empty).
RewardEstimate estimate_reward(const MarketParams& params, const QlbsState& state, double action,
                               const Policy& policy, const RewardEstimatorConfig& cfg, Rng& rng,
                               const ContinuationSampler& sampler = {});

// Rolls `policy` along `path`, estimating each step's reward.
QlbsEpisode run_episode(const PricePath& path, const Policy& policy,
                        const RewardEstimatorConfig& cfg, Rng& rng,
                        const ContinuationSampler& sampler = {});

// Negative undiscounted return.
double episode_price(const QlbsEpisode& episode);

// CSV `t,S,X,action,portfolio,reward`; row t carries a_t and R_{t+1}, the
// terminal row leaves both empty.
void write_episode_csv(std::ostream& out, const QlbsEpisode& episode);

}  // namespace rlop::qlbs
