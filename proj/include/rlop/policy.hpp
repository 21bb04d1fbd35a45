#pragma once

#include <array>
#include <vector>

#include "rlop/diffnet.hpp"
#include "rlop/market.hpp"
#include "rlop/random.hpp"

namespace rlop {

// What a hedging policy sees at step t. QLBS uses maturity == T and ignores
// `portfolio`; RLOP fills in the portfolio's own maturity and balance.
struct Observation {
  int t = 0;
  double spot = 1.0;
  int maturity = 1;
  double portfolio = 0.0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  // Hedge position in shares.
  virtual double act(const MarketParams& params, const Observation& obs, Rng& rng) const = 0;
};

// Black-Scholes delta for the observation's own time to maturity.
class BsPolicy final : public Policy {
 public:
  double act(const MarketParams& params, const Observation& obs, Rng& rng) const override;
};

// Holds a fixed schedule u_0..u_{T-1}; used for frozen-rollout checks.
class ScheduledPolicy final : public Policy {
 public:
  explicit ScheduledPolicy(std::vector<double> positions) : positions_(std::move(positions)) {}
  double act(const MarketParams& params, const Observation& obs, Rng& rng) const override;

 private:
  std::vector<double> positions_;
};

inline constexpr int kFeatureDim = 8;
using Features = std::array<double, kFeatureDim>;

enum class EnvKind { qlbs, rlop };

// [X_t, t/T, r, mu, sigma, T*dt, K, lambda]
Features qlbs_features(const MarketParams& params, const Observation& obs);
// [ln S_t, (maturity - t)/T, Pi_t, r, mu, sigma, K, epsilon]
Features rlop_features(const MarketParams& params, const Observation& obs);
Features encode_features(EnvKind env, const MarketParams& params, const Observation& obs);

// Gaussian network policy behind the Policy interface. `deterministic`
// returns the mean action instead of sampling.
class NetworkPolicy final : public Policy {
 public:
  NetworkPolicy(const nn::GaussianPolicy& net, EnvKind env, bool deterministic = false)
      : net_(&net), env_(env), deterministic_(deterministic) {}
  double act(const MarketParams& params, const Observation& obs, Rng& rng) const override;

 private:
  const nn::GaussianPolicy* net_;
  EnvKind env_;
  bool deterministic_;
};

}  // namespace rlop
