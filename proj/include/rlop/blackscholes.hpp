#pragma once

#include "rlop/market.hpp"

namespace rlop {

// N(y), absolute error well below 1e-10 on [-8, 8].
double std_normal_cdf(double y);

struct DPlusMinus {
  double plus;
  double minus;
};

// d_{+/-}(tau, x) = [ln(x/k) + (r +/- sigma^2/2) tau] / (sigma sqrt(tau)).
// Requires tau > 0, sigma > 0, x > 0, k > 0.
DPlusMinus d_pm(double tau, double x, double k, double r, double sigma);

struct BsQuote {
  double price;
  double delta;
  double d_plus;
  double d_minus;
};

// European call quote for physical time-to-maturity tau. When tau == 0 or
// sigma == 0 the limits apply: price max(x - k e^{-r tau}, 0), delta the
// indicator of x > k e^{-r tau} (0.5 on the tie), d_{+/-} = +/-inf (0 on the tie).
BsQuote bs_quote_tau(double tau, double x, double k, double r, double sigma);

// Step-indexed wrappers: tau = (T - t) * dt from the params.
BsQuote bs_quote(int t, double x, const MarketParams& params);
double bs_price(int t, double x, const MarketParams& params);
double bs_delta(int t, double x, const MarketParams& params);

}  // namespace rlop
