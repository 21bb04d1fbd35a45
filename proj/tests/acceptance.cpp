// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// on the command line to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "rlop/blackscholes.hpp"
#include "rlop/costs.hpp"
#include "rlop/qlbs_env.hpp"
#include "rlop/rlop_env.hpp"
#include "rlop/trainer.hpp"
#include "settings.hpp"

namespace {

namespace fs = std::filesystem;
namespace rep = rlop::replication;
namespace train = rlop::train;
using rlop::EnvKind;
using rlop::MarketParams;

constexpr std::uint64_t kSeeds[] = {0, 1, 2, 3, 4};
constexpr std::uint64_t kEvalSeed = 4242;
constexpr int kEvalEpisodes = 1000;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

// Five trainings are independent; a criterion counts the seeds it holds for.
int count_seeds(const std::function<bool(std::uint64_t)>& holds) {
  int n = 0;
  for (std::uint64_t seed : kSeeds) n += holds(seed) ? 1 : 0;
  return n;
}

double qlbs_price(const rlop::nn::GaussianPolicy& policy, const train::TrainConfig& c) {
  return train::evaluate(rlop::NetworkPolicy(policy, EnvKind::qlbs), c, c.market, kEvalEpisodes, kEvalSeed)
      .price();
}

bool non_decreasing(const std::vector<double>& v) {
  return std::is_sorted(v.begin(), v.end());
}

bool non_increasing(const std::vector<double>& v) {
  return std::is_sorted(v.rbegin(), v.rend());
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : " ") + fmt("%.5f", x);
  return out;
}

Outcome c1_bs_oracle() {
  MarketParams p;
  double worst_price = 0.0, worst_delta = 0.0;
  for (int tau : {1, 3, 5}) {
    p.T = tau;
    for (double x : {0.5, 0.7, 0.9, 1.0, 1.1, 1.3, 1.6, 2.0}) {
      const double oracle_value = oracle::call_by_quadrature(tau * p.dt, x, p.K, p.r, p.sigma);
      worst_price = std::max(worst_price, std::abs(rlop::bs_price(0, x, p) - oracle_value));
      const double fd = oracle::central_difference([&](double s) { return rlop::bs_price(0, s, p); }, x, 1e-5);
      worst_delta = std::max(worst_delta, std::abs(fd - rlop::bs_delta(0, x, p)));
    }
  }
  return {worst_price <= 2e-4 && worst_delta <= 1e-6,
          fmt("24 points, max |price - quadrature| %.2e, max |delta - FD| %.2e", worst_price, worst_delta)};
}

Outcome c2_telescoping() {
  rlop::Rng rng(20);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const MarketParams p = fixture::random_market(rng);
    const auto path = rlop::simulate_gbm_path(p, rng);
    const rlop::ScheduledPolicy policy(fixture::random_positions(rng, p.T));
    const auto ep = rlop::qlbs::run_episode(path, policy, {3}, rng, rlop::qlbs::replay_continuation(path));
    double cash = 0.0;
    for (double c : ep.cashflow) cash += c;
    worst = std::max(worst, std::abs(cash + ep.portfolio[0]));
  }
  return {worst <= 1e-10, fmt("1000 cases, max |sum cashflow + Pi_0| %.2e", worst)};
}

Outcome c3_duality() {
  rlop::Rng rng(30);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const MarketParams p = fixture::random_market(rng);
    const auto path = rlop::simulate_gbm_path(p, rng);
    const auto u = fixture::random_positions(rng, p.T);
    const auto pi = rlop::qlbs::solve_portfolio_backward(path, u, p.epsilon);

    // Plain forward recursion from Pi_0.
    double value = pi[0];
    for (int t = 0; t < p.T; ++t) {
      const double u_next = t + 1 < p.T ? u[t + 1] : 0.0;
      value = rep::forward_portfolio_step(value, u[t], u_next, path.prices[t], path.prices[t + 1], p.r, p.dt,
                                          p.epsilon);
      worst = std::max(worst, std::abs(value - pi[t + 1]));
    }
    worst = std::max(worst, std::abs(value - rlop::payoff_european_call(path.prices.back(), p.K)));

    // The RLOP stack pays each rehedge from cash before growing.
    auto stack = rep::init_stack(path, rep::Pi0Rule::constant(0.0), rng);
    const auto last = static_cast<std::size_t>(p.T - 1);
    stack.states[last].pi = pi[0] + rlop::transaction_cost(u[0], path.prices[0], p.epsilon);
    for (int t = 0; t < p.T; ++t) {
      std::vector<double> actions(stack.live().size(), 0.0);
      actions.back() = u[t];
      auto tr = rep::step_stack(stack, actions, path.prices[t + 1], {});
      stack = std::move(tr.next);
      const double tc =
          t + 1 < p.T ? rlop::transaction_cost(u[t + 1] - u[t], path.prices[t + 1], p.epsilon) : 0.0;
      worst = std::max(worst, std::abs(stack.states[last].pi - (pi[t + 1] + tc)));
    }
  }
  return {worst <= 1e-10, fmt("1000 cases with costs, max round-trip gap %.2e", worst)};
}

Outcome c4_convergence() {
  std::vector<double> qlbs_err, rlop_mse;
  for (double dt : {1.0, 0.5, 0.25}) {
    MarketParams p;
    p.mu = p.r;
    p.dt = dt;
    p.T = static_cast<int>(std::lround(5.0 / dt));
    const double bs = rlop::bs_price(0, p.S0, p);
    rlop::Rng rng(40);
    double err = 0.0, mse = 0.0;
    int portfolios = 0;
    const int paths = 10000;
    for (int i = 0; i < paths; ++i) {
      const auto path = rlop::simulate_gbm_path(p, rng);
      std::vector<double> u(static_cast<std::size_t>(p.T));
      for (int t = 0; t < p.T; ++t) u[t] = rlop::bs_delta(t, path.prices[t], p);
      err += std::abs(rlop::qlbs::solve_portfolio_backward(path, u, 0.0)[0] - bs);
      const auto ep = rep::run_stack_episode(path, rlop::BsPolicy{}, rep::Pi0Rule::bs_oracle(), {}, rng);
      for (double r : ep.terminal_rewards) {
        mse -= r;
        ++portfolios;
      }
    }
    qlbs_err.push_back(err / paths);
    rlop_mse.push_back(mse / portfolios);
  }
  const bool pass = qlbs_err[1] < qlbs_err[0] && qlbs_err[2] < qlbs_err[1] && rlop_mse[1] < rlop_mse[0] &&
                    rlop_mse[2] < rlop_mse[1];
  return {pass, "dt 1/0.5/0.25: mean |Pi_0 - bs| " + join(qlbs_err) + "; RLOP penalty " + join(rlop_mse)};
}

Outcome c5_gradients() {
  rlop::Rng rng(50);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    rlop::nn::ResNetConfig c;
    c.latent_dim = n % 2 ? 4 : 10;
    c.blocks = 1 + n % 3;
    auto policy = rlop::nn::GaussianPolicy::random(c, rng);
    const auto baseline = gradcheck::random_net(c, rng);
    const auto f = gradcheck::random_vector(rng, 8);
    const auto head = policy.evaluate(f);
    const double a = head.mean + head.std * rng.normal();
    worst = std::max(worst, gradcheck::policy_error(policy, f, a, 2.0 * rng.uniform() - 1.0));
    worst = std::max(worst, gradcheck::resnet_error(baseline, f, {2.0 * rng.uniform() - 1.0}));
  }
  return {worst <= 1e-4, fmt("100 nets (mean, std heads and baseline), max relative error %.2e", worst)};
}

Outcome c6_learning() {
  std::string detail;
  bool pass = true;
  for (EnvKind env : {EnvKind::qlbs, EnvKind::rlop}) {
    const int improved = count_seeds([&](std::uint64_t seed) {
      train::TrainConfig c;
      c.env = env;
      c.episodes = 10000;
      c.seed = seed;
      const auto log = train::train(c).log.records;
      double first = 0.0, last = 0.0;
      for (int i = 0; i < 100; ++i) first += log[i].ema / 100.0;
      for (int i = c.episodes - 1000; i < c.episodes; ++i) last += log[i].ema / 1000.0;
      return last > first;
    });
    pass = pass && improved >= 4;
    detail += train::to_string(env) + " " + std::to_string(improved) + "/5 seeds improve; ";
  }
  detail += "10^4 episodes each";
  return {pass, detail};
}

Outcome c7_lambda() {
  const std::vector<double> lambdas{0.0, 1.0, 2.0, 3.0};
  std::vector<double> bs_prices;
  for (double lambda : lambdas) {
    train::TrainConfig c;
    c.market.lambda = lambda;
    bs_prices.push_back(train::evaluate(rlop::BsPolicy{}, c, c.market, kEvalEpisodes, kEvalSeed).price());
  }
  bool strict = true;
  for (std::size_t k = 1; k < bs_prices.size(); ++k) strict = strict && bs_prices[k] > bs_prices[k - 1];

  const int ordered = count_seeds([&](std::uint64_t seed) {
    std::vector<double> prices;
    for (double lambda : lambdas) {
      train::TrainConfig c;
      c.episodes = 5000;
      c.seed = seed;
      c.market.lambda = lambda;
      prices.push_back(qlbs_price(train::train(c).agent.policy, c));
    }
    return non_decreasing(prices);
  });
  return {strict && ordered >= 3,
          "BS prices " + join(bs_prices) + "; trained non-decreasing in " + std::to_string(ordered) + "/5 seeds"};
}

// Median of the policy's mean hedge over spot 0.8..1.2 and every remaining
// time, with the portfolio feature at the BS value.
double median_hedge(const rlop::nn::GaussianPolicy& policy, const MarketParams& p) {
  std::vector<double> pos;
  for (int rem = 1; rem <= p.T; ++rem) {
    const int t = p.T - rem;
    for (int k = 0; k <= 20; ++k) {
      const double s = 0.8 + 0.02 * k;
      const rlop::Observation obs{t, s, p.T, rlop::bs_price(t, s, p)};
      pos.push_back(policy.evaluate(rlop::rlop_features(p, obs)).mean);
    }
  }
  std::nth_element(pos.begin(), pos.begin() + pos.size() / 2, pos.end());
  return pos[pos.size() / 2];
}

Outcome c8_epsilon() {
  const std::vector<double> epsilons{0.0, 0.01, 0.02};
  const int qlbs_ok = count_seeds([&](std::uint64_t seed) {
    std::vector<double> prices;
    for (double eps : epsilons) {
      train::TrainConfig c;
      c.episodes = 5000;
      c.seed = seed;
      c.market.lambda = 0.5;
      c.market.epsilon = eps;
      prices.push_back(qlbs_price(train::train(c).agent.policy, c));
    }
    return non_decreasing(prices);
  });
  const int rlop_ok = count_seeds([&](std::uint64_t seed) {
    std::vector<double> medians;
    for (double eps : epsilons) {
      train::TrainConfig c;
      c.env = EnvKind::rlop;
      c.episodes = 5000;
      c.seed = seed;
      c.market.epsilon = eps;
      medians.push_back(median_hedge(train::train(c).agent.policy, c.market));
    }
    return non_increasing(medians);
  });
  return {qlbs_ok >= 4 && rlop_ok >= 4, "QLBS price non-decreasing in " + std::to_string(qlbs_ok) +
                                            "/5 seeds; RLOP median hedge non-increasing in " +
                                            std::to_string(rlop_ok) + "/5 seeds"};
}

Outcome c9_fine_tuning() {
  const int improved = count_seeds([&](std::uint64_t seed) {
    const rlop::cli::Settings defaults;
    train::TrainConfig a, b;
    a.market = defaults.condition_a;
    b.market = defaults.condition_b;
    a.seed = b.seed = seed;
    a.episodes = b.episodes = 5000;
    auto refine = train::average_condition(a, b);
    refine.episodes = 2000;
    const auto logs = train::mixed_condition_train(a, b, 0.05, refine);
    const rlop::NetworkPolicy before(logs.pre_refine.policy, EnvKind::qlbs);
    const rlop::NetworkPolicy after(logs.agent.policy, EnvKind::qlbs);
    const auto e0 = train::evaluate(before, refine, refine.market, kEvalEpisodes, kEvalSeed);
    const auto e1 = train::evaluate(after, refine, refine.market, kEvalEpisodes, kEvalSeed);
    return e1.mean_return >= e0.mean_return;
  });
  return {improved >= 4, std::to_string(improved) + "/5 seeds improve on the averaged condition"};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome c10_replay() {
  const fs::path root = fs::temp_directory_path() / "rlop_acceptance_replay";
  fs::remove_all(root);
  rlop::cli::Settings s;
  s.episodes = 40;
  s.m_subrollouts = 4;
  s.eval_episodes = 50;
  s.seed = 3;
  s.adjustment.intensity = 0.05;
  s.checkpoint_every = 20;
  s.refine_episodes = 10;
  s.spots = {0.9, 1.0, 1.1};

  std::vector<std::pair<std::string, rlop::cli::Settings>> runs;
  runs.emplace_back("train", s);
  auto rl = s;
  rl.env = "rlop";
  runs.emplace_back("train", rl);
  auto sweep = s;
  sweep.sweep_values = {0.0, 1.0};
  runs.emplace_back("sweep", sweep);
  auto hedge = s;
  hedge.policy = "bs";
  runs.emplace_back("hedge-compare", hedge);
  runs.emplace_back("mixed-train", s);

  int compared = 0, differing = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const fs::path first = root / ("run" + std::to_string(k));
    const fs::path second = root / ("replay" + std::to_string(k));
    rlop::cli::run_command(runs[k].first, runs[k].second, first);
    rlop::cli::cmd_replay(first / "manifest.json", second);
    for (const auto& entry : fs::recursive_directory_iterator(first)) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      if (slurp(entry.path()) != slurp(second / fs::relative(entry.path(), first))) ++differing;
    }
  }
  fs::remove_all(root);
  return {compared > 0 && differing == 0,
          std::to_string(compared) + " CSV files over 5 commands, " + std::to_string(differing) + " differ"};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion criteria[] = {
      {1, "BS price vs quadrature oracle, delta vs finite difference", c1_bs_oracle},
      {2, "cashflow telescoping to -Pi_0", c2_telescoping},
      {3, "forward/backward portfolio duality", c3_duality},
      {4, "discrete-hedging convergence in dt", c4_convergence},
      {5, "analytic vs finite-difference gradients", c5_gradients},
      {6, "learning demonstration", c6_learning},
      {7, "price monotone in lambda", c7_lambda},
      {8, "epsilon effect on price and hedge", c8_epsilon},
      {9, "fine-tuning improvement", c9_fine_tuning},
      {10, "manifest replay reproducibility", c10_replay},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
