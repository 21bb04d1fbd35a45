#include "rlop/rlop_env.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "rlop/blackscholes.hpp"
#include "rlop/costs.hpp"
#include "rlop/format.hpp"

namespace rlop::replication {

std::string to_string(PenaltyKind kind) {
  return kind == PenaltyKind::squared ? "squared" : "absolute";
}

PenaltyKind penalty_from_string(const std::string& name) {
  if (name == "squared") return PenaltyKind::squared;
  if (name == "absolute") return PenaltyKind::absolute;
  throw std::invalid_argument("unknown penalty '" + name + "'");
}

double terminal_penalty(double payoff, double pi, PenaltySpec spec) {
  const double gap = payoff - pi;
  return spec.kind == PenaltyKind::squared ? -gap * gap : -std::abs(gap);
}

double grow_portfolio(double pi, double u, double s_t, double s_next, double r, double dt) {
  if (!(s_t > 0.0) || !(s_next > 0.0)) throw std::invalid_argument("grow_portfolio: prices must be > 0");
  return std::exp(r * dt) * (pi - u * s_t) + u * s_next;
}

double forward_portfolio_step(double pi_t, double u_prev, double u_new, double s_t, double s_next,
                              double r, double dt, double epsilon) {
  return grow_portfolio(pi_t, u_prev, s_t, s_next, r, dt) -
         transaction_cost(u_new - u_prev, s_next, epsilon);
}

std::string to_string(const Pi0Rule& rule) {
  switch (rule.kind) {
    case Pi0Rule::Kind::bs_oracle: return "bs";
    case Pi0Rule::Kind::uniform: return "uniform";
    case Pi0Rule::Kind::constant: return "constant:" + fmt_double(rule.value);
  }
  return "bs";
}

Pi0Rule pi0_rule_from_string(const std::string& text) {
  if (text == "bs") return Pi0Rule::bs_oracle();
  if (text == "uniform") return Pi0Rule::uniform();
  const std::string prefix = "constant:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    const std::string number = text.substr(prefix.size());
    const double value = std::stod(number, &used);
    if (used == number.size()) return Pi0Rule::constant(value);
  }
  throw std::invalid_argument("unknown pi0 rule '" + text + "' (bs | uniform | constant:<c>)");
}

std::vector<int> RlopStack::live() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!terminated[k]) out.push_back(states[k].maturity);
  }
  return out;
}

bool RlopStack::done() const {
  for (bool flag : terminated) {
    if (!flag) return false;
  }
  return true;
}

RlopStack init_stack(const PricePath& path, const Pi0Rule& rule, Rng& rng) {
  path.params.validate();
  if (path.steps() != path.params.T) throw std::invalid_argument("init_stack: path length != T+1");
  const MarketParams& p = path.params;
  const double s0 = path.prices[0];
  RlopStack stack{p, 0, {}, std::vector<double>(static_cast<std::size_t>(p.T), 0.0),
                  std::vector<bool>(static_cast<std::size_t>(p.T), false)};
  for (int i = 1; i <= p.T; ++i) {
    double pi0 = rule.value;
    if (rule.kind != Pi0Rule::Kind::constant) {
      const double price = bs_quote_tau(i * p.dt, s0, p.K, p.r, p.sigma).price;
      pi0 = rule.kind == Pi0Rule::Kind::bs_oracle ? price : 2.0 * price * rng.uniform();
    }
    stack.states.push_back({0, s0, pi0, i});
  }
  return stack;
}

StackTransition step_stack(const RlopStack& stack, std::span<const double> actions, double s_next,
                           PenaltySpec penalty) {
  const auto live = stack.live();
  if (actions.size() != live.size()) {
    throw std::invalid_argument("step_stack: need exactly one action per live portfolio");
  }
  if (!(s_next > 0.0)) throw std::invalid_argument("step_stack: price must be > 0");
  const MarketParams& p = stack.params;
  StackTransition out{stack, std::vector<double>(stack.states.size(), 0.0)};
  out.next.t = stack.t + 1;
  for (std::size_t a = 0; a < live.size(); ++a) {
    const auto k = static_cast<std::size_t>(live[a] - 1);
    RlopState& state = out.next.states[k];
    const double u = actions[a];
    const double s_t = state.s;
    const double rehedged = state.pi - transaction_cost(u - stack.prev_positions[k], s_t, p.epsilon);
    const bool expires = out.next.t == state.maturity;
    state.pi = expires ? forward_portfolio_step(rehedged, u, 0.0, s_t, s_next, p.r, p.dt, p.epsilon)
                       : grow_portfolio(rehedged, u, s_t, s_next, p.r, p.dt);
    state.t = out.next.t;
    state.s = s_next;
    out.next.prev_positions[k] = u;
    if (expires) {
      out.next.terminated[k] = true;
      out.next.prev_positions[k] = 0.0;
      out.rewards[k] = terminal_penalty(payoff_european_call(s_next, p.K), state.pi, penalty);
    }
  }
  // Portfolios with no live action still advance their clock and spot.
  for (std::size_t k = 0; k < out.next.states.size(); ++k) {
    out.next.states[k].t = out.next.t;
    out.next.states[k].s = s_next;
  }
  return out;
}

StackEpisode run_stack_episode(const PricePath& path, const Policy& policy, const Pi0Rule& rule,
                               PenaltySpec penalty, Rng& rng) {
  const MarketParams& p = path.params;
  StackEpisode episode{path, {}, std::vector<double>(static_cast<std::size_t>(p.T), 0.0), 0.0};
  RlopStack stack = init_stack(path, rule, rng);
  std::vector<double> actions;
  for (int t = 0; t < p.T; ++t) {
    const double s = path.prices[static_cast<std::size_t>(t)];
    const auto live = stack.live();
    actions.clear();
    for (int i : live) {
      const auto& state = stack.states[static_cast<std::size_t>(i - 1)];
      const double u = policy.act(p, {t, s, i, state.pi}, rng);
      actions.push_back(u);
      episode.trace.push_back({t, s, i, u, state.pi, 0.0});
    }
    auto transition = step_stack(stack, actions, path.prices[static_cast<std::size_t>(t + 1)], penalty);
    for (int i : live) {
      if (i != t + 1) continue;
      const auto k = static_cast<std::size_t>(i - 1);
      episode.terminal_rewards[k] = transition.rewards[k];
      episode.total_reward += transition.rewards[k];
      episode.trace.push_back({i, transition.next.states[k].s, i,
                               std::numeric_limits<double>::quiet_NaN(),
                               transition.next.states[k].pi, transition.rewards[k]});
    }
    stack = std::move(transition.next);
  }
  return episode;
}

void write_stack_csv(std::ostream& out, const StackEpisode& episode) {
  out << "t,S,maturity,position,portfolio,reward\n";
  for (const auto& row : episode.trace) {
    out << row.t << ',' << fmt_double(row.s) << ',' << row.maturity << ',';
    if (!std::isnan(row.position)) out << fmt_double(row.position);
    out << ',' << fmt_double(row.portfolio) << ',' << fmt_double(row.reward) << '\n';
  }
}

}  // namespace rlop::replication
