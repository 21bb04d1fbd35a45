// rlop: experiment runner for the QLBS and RLOP hedging environments.

#include <cstring>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "settings.hpp"

namespace {

using rlop::cli::Settings;

// The config file sits under the flags, so it has to be read before CLI11
// binds options to the fields it fills in.
std::string find_config(int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc; ++i) {
    const char* arg = argv[i];
    if (std::strcmp(arg, "--config") == 0 && i + 1 < argc) {
      path = argv[++i];
    } else if (std::strncmp(arg, "--config=", 9) == 0) {
      path = arg + 9;
    }
  }
  return path;
}

const CLI::Validator kNonEmpty(
    [](std::string& value) { return value.empty() ? std::string("empty list entry") : std::string(); },
    "NONEMPTY");

void add_common(CLI::App* cmd, Settings& s, std::string& config, std::string& output) {
  cmd->add_option("--config", config, "JSON config file layered over the paper-default profile");
  cmd->add_option("-o,--output", output, "output directory (relative paths go under $RLOP_OUTPUT_ROOT)");
  cmd->add_option("--env", s.env, "qlbs | rlop");
  cmd->add_option("--r", s.market.r, "risk-free rate per unit time");
  cmd->add_option("--mu", s.market.mu, "drift");
  cmd->add_option("--sigma", s.market.sigma, "volatility");
  cmd->add_option("--T", s.market.T, "number of hedging steps");
  cmd->add_option("--dt", s.market.dt, "step length");
  cmd->add_option("--S0", s.market.S0, "initial spot");
  cmd->add_option("--K", s.market.K, "strike");
  cmd->add_option("--lambda", s.market.lambda, "risk aversion");
  cmd->add_option("--epsilon", s.market.epsilon, "transaction cost rate");
}

void add_training(CLI::App* cmd, Settings& s) {
  cmd->add_option("--episodes", s.episodes, "training episodes");
  cmd->add_option("--lr-policy", s.lr_policy);
  cmd->add_option("--lr-baseline", s.lr_baseline);
  cmd->add_option("--m-subrollouts", s.m_subrollouts, "QLBS reward sub-rollouts per step");
  cmd->add_option("--adjust-intensity", s.adjustment.intensity, "Poisson intensity of parameter adjustments");
  cmd->add_option("--adjust-scale", s.adjustment.scale, "log-normal adjustment scale");
  cmd->add_option("--adjust-targets", s.adjustment.targets, "adjusted parameters")->delimiter(',')->check(kNonEmpty);
  cmd->add_option("--seed", s.seed);
  cmd->add_option("--penalty", s.penalty, "squared | absolute");
  cmd->add_option("--pi0", s.pi0, "bs | uniform | constant:<c>");
  cmd->add_option("--ema-halflife", s.ema_halflife);
  cmd->add_option("--latent-dim", s.network.latent_dim);
  cmd->add_option("--blocks", s.network.blocks);
  cmd->add_option("--layers-per-block", s.network.layers_per_block);
  cmd->add_option("--activation", s.network.activation, "tanh | relu | identity");
  cmd->add_option("--eval-episodes", s.eval_episodes);
  cmd->add_option("--eval-seed", s.eval_seed);
}

}  // namespace

int main(int argc, char** argv) {
  Settings settings;
  try {
    const std::string config = find_config(argc, argv);
    if (!config.empty()) settings = rlop::cli::load_settings(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"Hedging-by-replication experiments: QLBS and RLOP environments"};
  app.require_subcommand(1);
  std::string config;
  std::string output;
  std::string manifest;

  auto* train = app.add_subcommand("train", "train an agent; writes log, checkpoints, trace and plot");
  add_common(train, settings, config, output);
  add_training(train, settings);
  train->add_option("--checkpoint-every", settings.checkpoint_every, "0 disables periodic checkpoints");
  train->add_option("--resume", settings.resume, "continue from a checkpoint file");

  auto* sweep = app.add_subcommand("sweep", "price under a range of lambda or epsilon values");
  add_common(sweep, settings, config, output);
  add_training(sweep, settings);
  sweep->add_option("--param", settings.sweep_param, "lambda | epsilon");
  sweep->add_option("--values", settings.sweep_values)->delimiter(',')->check(kNonEmpty);
  sweep->add_option("--sweep-lambda", settings.sweep_lambda, "lambda used by epsilon sweeps");
  sweep->add_option("--policy", settings.policy, "trained | bs");
  sweep->add_option("--seeds", settings.seeds)->delimiter(',')->check(kNonEmpty);

  auto* hedge = app.add_subcommand("hedge-compare", "learned hedge against BS delta on a grid");
  add_common(hedge, settings, config, output);
  hedge->add_option("--checkpoint", settings.checkpoints, "checkpoint file (repeatable)");
  hedge->add_option("--policy", settings.policy, "trained | bs");
  hedge->add_option("--spots", settings.spots)->delimiter(',')->check(kNonEmpty);
  hedge->add_option("--remaining", settings.remaining, "steps to maturity")->delimiter(',')->check(kNonEmpty);

  auto* mixed = app.add_subcommand("mixed-train", "train across two conditions, then refine on their mean");
  add_common(mixed, settings, config, output);
  add_training(mixed, settings);
  mixed->add_option("--switch-intensity", settings.switch_intensity);
  mixed->add_option("--refine-episodes", settings.refine_episodes);

  auto* quote = app.add_subcommand("bs-quote", "print a Black-Scholes price and delta");
  add_common(quote, settings, config, output);
  quote->add_option("--t", settings.t, "step index");
  quote->add_option("--x", settings.x, "spot");

  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
  replay->add_option("--manifest", manifest)->required();
  replay->add_option("-o,--output", output, "output directory (defaults to the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*quote) {
      rlop::cli::cmd_bs_quote(settings, std::cout);
      return 0;
    }
    if (*replay) {
      rlop::cli::cmd_replay(manifest, output.empty() ? "" : rlop::cli::resolve_output(output));
      return 0;
    }
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    const std::string dir = output.empty() ? "runs/" + name : output;
    rlop::cli::run_command(name, settings, rlop::cli::resolve_output(dir));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
