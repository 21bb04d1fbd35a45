#include <cmath>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "fixtures.hpp"

#include "rlop/blackscholes.hpp"
#include "rlop/costs.hpp"
#include "rlop/qlbs_env.hpp"
#include "rlop/rlop_env.hpp"

using Catch::Approx;
using rlop::MarketParams;
namespace rep = rlop::replication;

TEST_CASE("rlop: forward step examples", "[rlop]") {
  CHECK(rep::forward_portfolio_step(0.3, 0.0, 0.0, 1.0, 1.4, 0.05, 2.0, 0.0) ==
        Approx(0.3 * std::exp(0.1)).epsilon(1e-15));
  CHECK(rep::forward_portfolio_step(0.3, 1.0, 1.0, 1.0, 1.4, 0.0, 1.0, 0.0) == Approx(0.7).epsilon(1e-15));
  // The new position is paid for at the new mid price.
  CHECK(rep::forward_portfolio_step(0.3, 1.0, 0.5, 1.0, 1.4, 0.0, 1.0, 0.1) ==
        Approx(0.7 - 0.05 * 1.4 * 0.5).epsilon(1e-15));
  CHECK_THROWS_AS(rep::forward_portfolio_step(0.3, 1.0, 1.0, 0.0, 1.4, 0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rep::forward_portfolio_step(0.3, 1.0, 1.0, 1.0, -1.0, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("rlop: terminal penalty", "[rlop]") {
  const rep::PenaltySpec sq{rep::PenaltyKind::squared};
  const rep::PenaltySpec ab{rep::PenaltyKind::absolute};
  CHECK(rep::terminal_penalty(0.4, 0.4, sq) == 0.0);
  CHECK(rep::terminal_penalty(0.4, 0.4, ab) == 0.0);
  CHECK(rep::terminal_penalty(0.3, 0.2, sq) == Approx(-0.01).margin(1e-15));
  CHECK(rep::terminal_penalty(0.3, 0.2, ab) == Approx(-0.1).margin(1e-15));
  CHECK(rep::penalty_from_string("absolute") == rep::PenaltyKind::absolute);
  CHECK(rep::to_string(rep::PenaltyKind::squared) == "squared");
  CHECK_THROWS_AS(rep::penalty_from_string("huber"), std::invalid_argument);
}

TEST_CASE("rlop: penalty is strictly decreasing in the replication gap", "[rlop][property]") {
  rlop::Rng rng(1);
  for (auto kind : {rep::PenaltyKind::squared, rep::PenaltyKind::absolute}) {
    for (int i = 0; i < 1000; ++i) {
      const double payoff = rng.uniform();
      const double g1 = rng.uniform();
      const double g2 = g1 + 1e-3 + rng.uniform();
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      CHECK(rep::terminal_penalty(payoff, payoff + sign * g2, {kind}) <
            rep::terminal_penalty(payoff, payoff - sign * g1, {kind}));
      CHECK(rep::terminal_penalty(payoff, payoff + g1, {kind}) <= 0.0);
    }
  }
}

TEST_CASE("rlop: stack initialisation", "[rlop]") {
  MarketParams p;
  rlop::Rng rng(2);
  const auto path = rlop::simulate_gbm_path(p, rng);

  const auto zero = rep::init_stack(path, rep::Pi0Rule::constant(0.0), rng);
  REQUIRE(zero.states.size() == static_cast<std::size_t>(p.T));
  for (const auto& s : zero.states) CHECK(s.pi == 0.0);
  for (double u : zero.prev_positions) CHECK(u == 0.0);
  CHECK(zero.live().size() == static_cast<std::size_t>(p.T));

  const auto bs = rep::init_stack(path, rep::Pi0Rule::bs_oracle(), rng);
  for (int i = 1; i <= p.T; ++i) {
    MarketParams q = p;
    q.T = i;
    CHECK(bs.states[i - 1].maturity == i);
    CHECK(bs.states[i - 1].pi == Approx(rlop::bs_price(0, p.S0, q)).margin(1e-15));
  }

  SECTION("uniform rule has the BS price as its mean") {
    const int n = 10000;
    std::vector<double> sum(p.T, 0.0);
    for (int k = 0; k < n; ++k) {
      const auto st = rep::init_stack(path, rep::Pi0Rule::uniform(), rng);
      for (int i = 0; i < p.T; ++i) {
        CHECK(st.states[i].pi >= 0.0);
        CHECK(st.states[i].pi <= 2.0 * bs.states[i].pi);
        sum[i] += st.states[i].pi;
      }
    }
    for (int i = 0; i < p.T; ++i) {
      const double c = bs.states[i].pi;
      const double se = 2.0 * c / std::sqrt(12.0 * n);
      CHECK(std::abs(sum[i] / n - c) <= 3.0 * se);
    }
  }
}

TEST_CASE("rlop: pi0 rule parsing", "[rlop]") {
  CHECK(rep::pi0_rule_from_string("bs").kind == rep::Pi0Rule::Kind::bs_oracle);
  CHECK(rep::pi0_rule_from_string("uniform").kind == rep::Pi0Rule::Kind::uniform);
  const auto c = rep::pi0_rule_from_string("constant:0.25");
  CHECK(c.kind == rep::Pi0Rule::Kind::constant);
  CHECK(c.value == 0.25);
  CHECK(rep::to_string(c) == "constant:0.25");
  CHECK_THROWS_AS(rep::pi0_rule_from_string("constant:"), std::invalid_argument);
  CHECK_THROWS_AS(rep::pi0_rule_from_string("mystery"), std::invalid_argument);
}

TEST_CASE("rlop: stepping the stack", "[rlop]") {
  rlop::Rng rng(3);
  const rep::PenaltySpec sq{};

  SECTION("a one-step stack terminates with a single reward") {
    MarketParams p;
    p.T = 1;
    const auto path = fixture::fixed_path(p, {1.0, 1.2});
    const auto stack = rep::init_stack(path, rep::Pi0Rule::constant(0.1), rng);
    const std::vector<double> a{0.5};
    const auto tr = rep::step_stack(stack, a, 1.2, sq);
    CHECK(tr.next.done());
    CHECK(tr.next.live().empty());
    const double pi1 = std::exp(p.r) * (0.1 - 0.5) + 0.5 * 1.2;
    CHECK(tr.rewards[0] == Approx(-(0.2 - pi1) * (0.2 - pi1)).margin(1e-15));
  }
  SECTION("no reward before any maturity") {
    MarketParams p;
    const auto path = rlop::simulate_gbm_path(p, rng);
    auto stack = rep::init_stack(path, rep::Pi0Rule::bs_oracle(), rng);
    auto tr = rep::step_stack(stack, std::vector<double>(5, 0.5), path.prices[1], sq);
    CHECK(tr.rewards[0] != 0.0);
    for (int i = 1; i < 5; ++i) CHECK(tr.rewards[i] == 0.0);
    CHECK(tr.next.live() == std::vector<int>{2, 3, 4, 5});
    tr = rep::step_stack(tr.next, std::vector<double>(4, 0.5), path.prices[2], sq);
    for (int i = 0; i < 5; ++i) {
      if (i != 1) CHECK(tr.rewards[i] == 0.0);
    }
  }
  SECTION("action count must match the live portfolios") {
    MarketParams p;
    const auto path = rlop::simulate_gbm_path(p, rng);
    const auto stack = rep::init_stack(path, rep::Pi0Rule::bs_oracle(), rng);
    CHECK_THROWS_AS(rep::step_stack(stack, std::vector<double>(4, 0.5), path.prices[1], sq),
                    std::invalid_argument);
  }
  SECTION("perfect replication scores zero under either penalty") {
    MarketParams p;
    p.T = 1;
    p.epsilon = 0.0;
    const auto path = fixture::fixed_path(p, {1.0, 1.3});
    for (auto kind : {rep::PenaltyKind::squared, rep::PenaltyKind::absolute}) {
      auto stack = rep::init_stack(path, rep::Pi0Rule::constant(0.0), rng);
      // Pi_0 chosen so that e^{r}(Pi_0 - u S_0) + u S_1 = payoff.
      const double u = 0.4;
      stack.states[0].pi = std::exp(-p.r) * (0.3 - u * 1.3) + u * 1.0;
      const auto tr = rep::step_stack(stack, std::vector<double>{u}, 1.3, {kind});
      CHECK(std::abs(tr.rewards[0]) <= 1e-15);
    }
  }
}

TEST_CASE("rlop: stack and backward solve agree including costs", "[rlop][property]") {
  // The stack charges the opening trade from cash, so its initial balance is
  // the backward-solved value plus that cost.
  rlop::Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const MarketParams p = fixture::random_market(rng);
    const auto path = rlop::simulate_gbm_path(p, rng);
    const auto u = fixture::random_positions(rng, p.T);
    const auto pi = rlop::qlbs::solve_portfolio_backward(path, u, p.epsilon);

    auto stack = rep::init_stack(path, rep::Pi0Rule::constant(0.0), rng);
    const std::size_t last = static_cast<std::size_t>(p.T - 1);
    stack.states[last].pi = pi[0] + rlop::transaction_cost(u[0], path.prices[0], p.epsilon);
    for (int t = 0; t < p.T; ++t) {
      std::vector<double> actions(stack.live().size(), 0.0);
      actions.back() = u[t];
      auto tr = rep::step_stack(stack, actions, path.prices[t + 1], {});
      stack = std::move(tr.next);
      if (t + 1 < p.T) {
        // Balance before the next rehedge equals the backward value plus the
        // cost that rehedge is about to pay.
        const double tc = rlop::transaction_cost(u[t + 1] - u[t], path.prices[t + 1], p.epsilon);
        CHECK(std::abs(stack.states[last].pi - (pi[t + 1] + tc)) <= 1e-10);
      } else {
        CHECK(std::abs(stack.states[last].pi - pi[p.T]) <= 1e-10);
        CHECK(std::abs(tr.rewards[last]) <= 1e-18 + 1e-10);
      }
    }
  }
}

TEST_CASE("rlop: frictionless deterministic BS hedge replicates exactly", "[rlop][property]") {
  // With sigma = 0 and mu = r the moneyness of every portfolio is frozen, so
  // the degenerate delta (0 or 1) replicates the payoff without error.
  for (double s0 : {0.7, 0.9, 1.0, 1.2, 1.6}) {
    MarketParams p;
    p.sigma = 0.0;
    p.epsilon = 0.0;
    p.mu = p.r;
    p.S0 = s0;
    rlop::Rng rng(5);
    const auto path = rlop::simulate_gbm_path(p, rng);
    const auto ep = rep::run_stack_episode(path, rlop::BsPolicy{}, rep::Pi0Rule::bs_oracle(), {}, rng);
    for (double r : ep.terminal_rewards) CHECK(std::abs(r) <= 1e-10);
  }
}

TEST_CASE("rlop: BS replication error shrinks with dt", "[rlop][property]") {
  double prev = 1e300;
  for (double dt : {1.0, 0.5, 0.25}) {
    MarketParams p;
    p.mu = p.r;
    p.dt = dt;
    p.T = static_cast<int>(std::lround(5.0 / dt));
    rlop::Rng rng(6);
    const int paths = 10000;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < paths; ++i) {
      const auto ep = rep::run_stack_episode(rlop::simulate_gbm_path(p, rng), rlop::BsPolicy{},
                                             rep::Pi0Rule::bs_oracle(), {}, rng);
      for (double r : ep.terminal_rewards) {
        sum += -r;
        ++count;
      }
    }
    const double mse = sum / count;
    CHECK(mse < prev);
    prev = mse;
  }
}

TEST_CASE("rlop: episode trace", "[rlop]") {
  MarketParams p;
  p.T = 2;
  rlop::Rng rng(7);
  const auto path = fixture::fixed_path(p, {1.0, 1.1, 0.95});
  const auto ep = rep::run_stack_episode(path, rlop::BsPolicy{}, rep::Pi0Rule::bs_oracle(), {}, rng);
  // t=0: two live rows; t=1: terminal row for maturity 1, live row for 2; t=2: terminal row.
  REQUIRE(ep.trace.size() == 5);
  CHECK(ep.total_reward == Approx(ep.terminal_rewards[0] + ep.terminal_rewards[1]).margin(1e-16));
  std::ostringstream out;
  rep::write_stack_csv(out, ep);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,S,maturity,position,portfolio,reward");
  int rows = 0, terminal_rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",,") != std::string::npos) ++terminal_rows;
  }
  CHECK(rows == 5);
  CHECK(terminal_rows == 2);
}
