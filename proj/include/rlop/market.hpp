#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rlop/random.hpp"

namespace rlop {

// World model shared by both environments. Time is indexed by integer steps
// 0..T; step t corresponds to physical time t * dt.
struct MarketParams {
  double r = 0.01;        // risk-free rate per unit time
  double mu = 0.0;        // drift per unit time
  double sigma = 0.1;     // volatility per sqrt(unit time)
  int T = 5;              // maturity in steps
  double dt = 1.0;        // step length
  double S0 = 1.0;        // initial asset price
  double K = 1.0;         // strike
  double lambda = 0.0;    // risk-aversion weight
  double epsilon = 0.0;   // friction: spread as a fraction of mid price

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  double horizon() const { return T * dt; }
  double time_of(int step) const { return step * dt; }
  double discount() const;  // one-step factor e^{-r dt}

  friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

// r=0.01, sigma=0.1, mu=0, T=5, K=1, S0=1, dt=1, lambda=0, epsilon=0.
MarketParams paper_default_params();

// Stable 64-bit FNV-1a digest of every field, printed as 16 hex digits.
std::string params_hash(const MarketParams& params);

struct PricePath {
  std::vector<double> prices;  // S_0..S_T
  MarketParams params;

  int steps() const { return static_cast<int>(prices.size()) - 1; }
};

// Exact log-normal stepping: S_{t+1} = S_t exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z).
PricePath simulate_gbm_path(const MarketParams& params, Rng& rng);

// Continues a path from price `s` at step `from` up to step T, writing
// S_{from+1}..S_T into `out` (which must have T - from entries).
void simulate_gbm_continuation(const MarketParams& params, int from, double s,
                               std::vector<double>& out, Rng& rng);

// X_t = -(mu - sigma^2/2) * t * dt + ln s.
double compensated_log_price(const MarketParams& params, int t, double s);

double payoff_european_call(double s, double k);

struct AdjustmentProcess {
  double intensity = 0.0;                     // Poisson intensity per episode
  double scale = 0.1;                         // log-normal perturbation scale
  std::vector<std::string> targets = {"S0"};  // any of S0 r mu sigma K lambda epsilon

  void validate() const;
};

// Fires with probability 1 - exp(-intensity); when it fires every target is
// multiplied by exp(scale * Z). Returns the (possibly) updated params and the
// firing flag.
std::pair<MarketParams, bool> maybe_adjust(const MarketParams& params,
                                           const AdjustmentProcess& process, Rng& rng);

// CSV with header `step,price`.
void write_path_csv(std::ostream& out, const PricePath& path);

}  // namespace rlop
