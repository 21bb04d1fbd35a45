#include "rlop/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "rlop/blackscholes.hpp"

namespace rlop {

double BsPolicy::act(const MarketParams& params, const Observation& obs, Rng&) const {
  const double tau = (obs.maturity - obs.t) * params.dt;
  return bs_quote_tau(tau, obs.spot, params.K, params.r, params.sigma).delta;
}

double ScheduledPolicy::act(const MarketParams&, const Observation& obs, Rng&) const {
  if (obs.t < 0 || obs.t >= static_cast<int>(positions_.size())) {
    throw std::out_of_range("ScheduledPolicy: no position scheduled for this step");
  }
  return positions_[static_cast<std::size_t>(obs.t)];
}

Features qlbs_features(const MarketParams& params, const Observation& obs) {
  return {compensated_log_price(params, obs.t, obs.spot),
          static_cast<double>(obs.t) / params.T,
          params.r,
          params.mu,
          params.sigma,
          params.horizon(),
          params.K,
          params.lambda};
}

Features rlop_features(const MarketParams& params, const Observation& obs) {
  return {std::log(obs.spot),
          static_cast<double>(obs.maturity - obs.t) / params.T,
          obs.portfolio,
          params.r,
          params.mu,
          params.sigma,
          params.K,
          params.epsilon};
}

Features encode_features(EnvKind env, const MarketParams& params, const Observation& obs) {
  return env == EnvKind::qlbs ? qlbs_features(params, obs) : rlop_features(params, obs);
}

double NetworkPolicy::act(const MarketParams& params, const Observation& obs, Rng& rng) const {
  const Features f = encode_features(env_, params, obs);
  if (deterministic_) return net_->evaluate(f).mean;
  return nn::sample_action(*net_, f, rng).action;
}

}  // namespace rlop
