#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rlop/market.hpp"
#include "rlop/policy.hpp"
#include "rlop/random.hpp"

// Forward replication environment: one portfolio per maturity i = 1..T,
// all driven by the same asset path and scored only at their own maturity.
namespace rlop::replication {

enum class PenaltyKind { squared, absolute };

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::squared;
};

std::string to_string(PenaltyKind kind);
PenaltyKind penalty_from_string(const std::string& name);

// squared: -(payoff - pi)^2, absolute: -|payoff - pi|.
double terminal_penalty(double payoff, double pi, PenaltySpec spec);

// Value after holding u shares and the remaining cash over one step.
double grow_portfolio(double pi, double u, double s_t, double s_next, double r, double dt);

// e^{r dt} (pi_t - u_prev s_t) + u_prev s_next - TC(u_new - u_prev, s_next).
// u_prev is the position held over [t, t+1], u_new the one chosen at t+1.
double forward_portfolio_step(double pi_t, double u_prev, double u_new, double s_t, double s_next,
                              double r, double dt, double epsilon);

struct RlopState {
  int t = 0;
  double s = 1.0;
  double pi = 0.0;  // balance before this step's rehedge
  int maturity = 1;
};

struct Pi0Rule {
  enum class Kind { constant, bs_oracle, uniform };
  Kind kind = Kind::bs_oracle;
  double value = 0.0;  // used by `constant`

  static Pi0Rule constant(double c) { return {Kind::constant, c}; }
  static Pi0Rule bs_oracle() { return {Kind::bs_oracle, 0.0}; }
  static Pi0Rule uniform() { return {Kind::uniform, 0.0}; }
};

std::string to_string(const Pi0Rule& rule);
Pi0Rule pi0_rule_from_string(const std::string& text);  // "bs", "uniform", "constant:<c>"

struct RlopStack {
  MarketParams params;
  int t = 0;
  std::vector<RlopState> states;        // states[i-1] is the portfolio maturing at step i
  std::vector<double> prev_positions;   // last hedge per portfolio, 0 before the first trade
  std::vector<bool> terminated;

  // Maturities still trading, ascending.
  std::vector<int> live() const;
  bool done() const;
};

// One portfolio per maturity 1..T at the path's S_0; `rng` is only drawn from
// by the uniform rule.
RlopStack init_stack(const PricePath& path, const Pi0Rule& rule, Rng& rng);

struct StackTransition {
  RlopStack next;
  std::vector<double> rewards;  // one per maturity, nonzero only for the one expiring now
};

// `actions` holds one position per live portfolio, in live() order. Each live
// portfolio pays the cost of rehedging into its action, holds it to t+1, and
// the portfolio maturing at t+1 is liquidated and scored.
StackTransition step_stack(const RlopStack& stack, std::span<const double> actions, double s_next,
                           PenaltySpec penalty);

struct TraceRow {
  int t;
  double s;
  int maturity;
  double position;  // NaN on terminal rows
  double portfolio;
  double reward;
};

struct StackEpisode {
  PricePath path;
  std::vector<TraceRow> trace;
  std::vector<double> terminal_rewards;  // R_i per maturity
  double total_reward = 0.0;
};

StackEpisode run_stack_episode(const PricePath& path, const Policy& policy, const Pi0Rule& rule,
                               PenaltySpec penalty, Rng& rng);

// CSV `t,S,maturity,position,portfolio,reward`; terminal rows leave position empty.
void write_stack_csv(std::ostream& out, const StackEpisode& episode);

}  // namespace rlop::replication
