#include "rlop/blackscholes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rlop {

double std_normal_cdf(double y) { return 0.5 * std::erfc(-y / std::numbers::sqrt2); }

DPlusMinus d_pm(double tau, double x, double k, double r, double sigma) {
  if (!(tau > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument("d_pm: tau and sigma must be > 0");
  }
  if (!(x > 0.0) || !(k > 0.0)) throw std::invalid_argument("d_pm: x and k must be > 0");
  const double vol = sigma * std::sqrt(tau);
  const double plus = (std::log(x / k) + (r + 0.5 * sigma * sigma) * tau) / vol;
  return {plus, plus - vol};
}

BsQuote bs_quote_tau(double tau, double x, double k, double r, double sigma) {
  if (!(x > 0.0)) throw std::invalid_argument("bs_quote: spot must be > 0");
  if (!(k > 0.0)) throw std::invalid_argument("bs_quote: strike must be > 0");
  if (!(tau >= 0.0) || !(sigma >= 0.0)) {
    throw std::invalid_argument("bs_quote: tau and sigma must be >= 0");
  }
  const double strike_pv = k * std::exp(-r * tau);
  if (tau == 0.0 || sigma == 0.0) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (x > strike_pv) return {x - strike_pv, 1.0, inf, inf};
    if (x < strike_pv) return {0.0, 0.0, -inf, -inf};
    return {0.0, 0.5, 0.0, 0.0};
  }
  const auto d = d_pm(tau, x, k, r, sigma);
  const double delta = std_normal_cdf(d.plus);
  const double price = x * delta - strike_pv * std_normal_cdf(d.minus);
  // Cancellation can push the deep out-of-the-money value a hair below zero.
  return {std::max(price, 0.0), delta, d.plus, d.minus};
}

BsQuote bs_quote(int t, double x, const MarketParams& params) {
  if (t < 0 || t > params.T) throw std::invalid_argument("bs_quote: step outside [0, T]");
  return bs_quote_tau((params.T - t) * params.dt, x, params.K, params.r, params.sigma);
}

double bs_price(int t, double x, const MarketParams& params) {
  return bs_quote(t, x, params).price;
}

double bs_delta(int t, double x, const MarketParams& params) {
  return bs_quote(t, x, params).delta;
}

}  // namespace rlop
