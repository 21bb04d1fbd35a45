#pragma once

#include <vector>

#include "rlop/market.hpp"
#include "rlop/random.hpp"

namespace fixture {

// Random but valid market for property tests.
inline rlop::MarketParams random_market(rlop::Rng& rng, int max_T = 6) {
  rlop::MarketParams p;
  p.T = 1 + static_cast<int>(rng.uniform() * max_T);
  p.dt = 0.25 + rng.uniform();
  p.r = 0.05 * rng.uniform();
  p.mu = 0.2 * rng.uniform() - 0.1;
  p.sigma = 0.05 + 0.4 * rng.uniform();
  p.S0 = 0.5 + rng.uniform();
  p.K = 0.5 + rng.uniform();
  p.lambda = 2.0 * rng.uniform();
  p.epsilon = 0.05 * rng.uniform();
  return p;
}

inline std::vector<double> random_positions(rlop::Rng& rng, int n) {
  std::vector<double> u(static_cast<std::size_t>(n));
  for (double& v : u) v = 3.0 * rng.uniform() - 1.0;
  return u;
}

inline rlop::PricePath fixed_path(const rlop::MarketParams& p, std::vector<double> prices) {
  return {std::move(prices), p};
}

}  // namespace fixture
