#include "rlop/market.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "rlop/format.hpp"

namespace rlop {

void MarketParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("MarketParams: ") + what);
  };
  require(std::isfinite(r) && std::isfinite(mu), "r and mu must be finite");
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be >= 0");
  require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
  require(T >= 1, "T must be >= 1");
  require(std::isfinite(S0) && S0 > 0.0, "S0 must be > 0");
  require(std::isfinite(K) && K > 0.0, "K must be > 0");
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  require(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon must be >= 0");
}

double MarketParams::discount() const { return std::exp(-r * dt); }

MarketParams paper_default_params() { return MarketParams{}; }

std::string params_hash(const MarketParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  for (double v : {params.r, params.mu, params.sigma, params.dt, params.S0, params.K,
                   params.lambda, params.epsilon}) {
    mix(std::bit_cast<std::uint64_t>(v));
  }
  mix(static_cast<std::uint64_t>(params.T));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PricePath simulate_gbm_path(const MarketParams& params, Rng& rng) {
  params.validate();
  PricePath path{std::vector<double>(static_cast<std::size_t>(params.T) + 1), params};
  path.prices[0] = params.S0;
  std::vector<double> rest(static_cast<std::size_t>(params.T));
  simulate_gbm_continuation(params, 0, params.S0, rest, rng);
  std::copy(rest.begin(), rest.end(), path.prices.begin() + 1);
  return path;
}

void simulate_gbm_continuation(const MarketParams& params, int from, double s,
                               std::vector<double>& out, Rng& rng) {
  const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * params.dt;
  const double vol = params.sigma * std::sqrt(params.dt);
  out.resize(static_cast<std::size_t>(params.T - from));
  for (double& next : out) {
    s *= std::exp(drift + vol * rng.normal());
    next = s;
  }
}

double compensated_log_price(const MarketParams& params, int t, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("compensated_log_price: price must be > 0");
  return -(params.mu - 0.5 * params.sigma * params.sigma) * params.time_of(t) + std::log(s);
}

double payoff_european_call(double s, double k) { return std::max(s - k, 0.0); }

void AdjustmentProcess::validate() const {
  if (!(intensity >= 0.0) || !(scale >= 0.0)) {
    throw std::invalid_argument("AdjustmentProcess: intensity and scale must be >= 0");
  }
  static constexpr const char* known[] = {"S0", "r", "mu", "sigma", "K", "lambda", "epsilon"};
  for (const auto& name : targets) {
    if (std::find(std::begin(known), std::end(known), name) == std::end(known)) {
      throw std::invalid_argument("AdjustmentProcess: unknown target '" + name + "'");
    }
  }
}

namespace {

double& field(MarketParams& p, const std::string& name) {
  if (name == "S0") return p.S0;
  if (name == "r") return p.r;
  if (name == "mu") return p.mu;
  if (name == "sigma") return p.sigma;
  if (name == "K") return p.K;
  if (name == "lambda") return p.lambda;
  return p.epsilon;
}

}  // namespace

std::pair<MarketParams, bool> maybe_adjust(const MarketParams& params,
                                           const AdjustmentProcess& process, Rng& rng) {
  // The trigger draw is consumed unconditionally so the stream stays aligned
  // across runs that differ only in intensity.
  const double u = rng.uniform();
  const bool fired = u < -std::expm1(-process.intensity);
  if (!fired) return {params, false};
  MarketParams next = params;
  for (const auto& name : process.targets) {
    field(next, name) *= std::exp(process.scale * rng.normal());
  }
  return {next, true};
}

void write_path_csv(std::ostream& out, const PricePath& path) {
  out << "step,price\n";
  for (std::size_t i = 0; i < path.prices.size(); ++i) {
    out << i << ',' << fmt_double(path.prices[i]) << '\n';
  }
}

}  // namespace rlop
