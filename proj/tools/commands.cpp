#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "report.hpp"
#include "rlop/blackscholes.hpp"
#include "rlop/checkpoint.hpp"
#include "rlop/format.hpp"
#include "rlop/policy.hpp"
#include "rlop/qlbs_env.hpp"
#include "rlop/rlop_env.hpp"
#include "rlop/trainer.hpp"

namespace fs = std::filesystem;

namespace rlop::cli {

namespace {

std::string csv_log(const train::TrainLog& log) {
  std::ostringstream out;
  train::write_log_csv(out, log);
  return out.str();
}

std::string checkpoint_text(const nn::Checkpoint& ckpt) {
  std::ostringstream out;
  nn::write_checkpoint(out, ckpt);
  return out.str();
}

report::Series ema_series(const train::TrainLog& log, const std::string& label, double offset = 0.0) {
  report::Series s{label, {}, {}};
  for (const auto& r : log.records) {
    s.x.push_back(r.episode + offset);
    s.y.push_back(r.ema);
  }
  return s;
}

report::LinePlot learning_curve(const train::TrainLog& log, const std::string& title) {
  report::LinePlot plot{title, "episode", "return", {}, {}};
  report::Series ret{"return", {}, {}};
  for (const auto& r : log.records) {
    ret.x.push_back(r.episode);
    ret.y.push_back(r.ret);
    if (r.adjusted) plot.markers.push_back(r.episode);
  }
  plot.series.push_back(std::move(ret));
  plot.series.push_back(ema_series(log, "ema"));
  return plot;
}

struct Interval {
  double mean;
  double low;
  double high;
};

// Across seeds when there are several, otherwise from the single
// evaluation's standard error.
Interval price_interval(const std::vector<double>& prices, double single_std_error) {
  const double n = static_cast<double>(prices.size());
  double mean = 0.0;
  for (double p : prices) mean += p;
  mean /= n;
  double half = 1.96 * single_std_error;
  if (prices.size() > 1) {
    double ss = 0.0;
    for (double p : prices) ss += (p - mean) * (p - mean);
    half = 1.96 * std::sqrt(ss / (n - 1.0) / n);
  }
  return {mean, mean - half, mean + half};
}

struct HedgeSource {
  std::string label;
  EnvKind env;
  MarketParams market;
  std::unique_ptr<nn::GaussianPolicy> net;  // null for the BS stand-in
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

fs::path resolve_output(const fs::path& dir) {
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv("RLOP_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return fs::path(root) / dir;
  }
  return dir;
}

nlohmann::json make_manifest(const std::string& subcommand, const Settings& settings,
                             const fs::path& out_dir) {
  const nlohmann::json config = to_json_value(settings);
  nlohmann::json m;
  m["subcommand"] = subcommand;
  m["config"] = config;
  m["seeds"] = settings.seed_list();
  m["config_hash"] = report::git_blob_hash(config.dump(2) + "\n");
  m["output_dir"] = out_dir.string();
  return m;
}

void write_manifest(const std::string& subcommand, const Settings& settings, const fs::path& out_dir) {
  report::write_file(out_dir / "manifest.json", make_manifest(subcommand, settings, out_dir).dump(2) + "\n");
}

void cmd_train(const Settings& settings, const fs::path& out_dir) {
  train::TrainConfig config = to_train_config(settings);
  // Only train writes periodic checkpoints.
  config.checkpoint_every = settings.checkpoint_every;
  config.checkpoint_dir = out_dir / "checkpoints";
  std::optional<nn::Checkpoint> resume;
  if (!settings.resume.empty()) {
    if (!fs::exists(settings.resume)) throw std::invalid_argument("missing checkpoint " + settings.resume);
    resume = nn::load_checkpoint(settings.resume);
  }
  write_manifest("train", settings, out_dir);

  auto trainer = resume ? std::make_unique<train::Trainer>(config, *resume)
                        : std::make_unique<train::Trainer>(config);
  trainer->run();
  const train::TrainLog& log = trainer->log();
  report::write_file(out_dir / "log.csv", csv_log(log));
  report::write_file(out_dir / "checkpoint_final.txt", checkpoint_text(trainer->checkpoint()));

  // One episode of the trained policy on the final market.
  Rng rng(settings.eval_seed);
  const NetworkPolicy policy(trainer->agent().policy, config.env);
  const PricePath path = simulate_gbm_path(trainer->market(), rng);
  std::ostringstream trace;
  if (config.env == EnvKind::qlbs) {
    qlbs::write_episode_csv(trace, qlbs::run_episode(path, policy, {config.m_subrollouts}, rng));
  } else {
    replication::write_stack_csv(
        trace, replication::run_stack_episode(path, policy, config.pi0, config.penalty, rng));
  }
  report::write_file(out_dir / "trace.csv", trace.str());
  report::write_file(out_dir / "learning_curve.svg",
                     report::render_svg(learning_curve(log, settings.env + " learning curve")));
}

void cmd_sweep(const Settings& settings, const fs::path& out_dir) {
  if (settings.sweep_values.empty()) throw std::invalid_argument("sweep: empty value list");
  if (settings.sweep_param != "lambda" && settings.sweep_param != "epsilon") {
    throw std::invalid_argument("sweep: parameter must be lambda or epsilon");
  }
  if (settings.policy != "bs" && settings.policy != "trained") {
    throw std::invalid_argument("sweep: policy must be bs or trained");
  }
  if (settings.env != "qlbs") throw std::invalid_argument("sweep: prices come from the qlbs environment");
  if (settings.eval_episodes < 1) throw std::invalid_argument("sweep: eval_episodes must be >= 1");
  const bool sweep_lambda = settings.sweep_param == "lambda";
  std::vector<Settings> runs;
  for (double value : settings.sweep_values) {
    Settings s = settings;
    if (sweep_lambda) {
      s.market.lambda = value;
    } else {
      s.market.epsilon = value;
      s.market.lambda = settings.sweep_lambda;
    }
    to_train_config(s);  // reject a bad value before anything is written
    runs.push_back(std::move(s));
  }
  write_manifest("sweep", settings, out_dir);

  std::ostringstream table, per_seed;
  table << "value,lambda,epsilon,policy,price_mean,ci_low,ci_high,n\n";
  per_seed << "value,seed,price,std_error\n";
  report::BarPlot plot{"price by " + settings.sweep_param + " (" + settings.policy + " policy)", "price", {}};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const double value = settings.sweep_values[k];
    std::vector<double> prices;
    double last_se = 0.0;
    for (std::uint64_t seed : settings.seed_list()) {
      Settings s = runs[k];
      s.seed = seed;
      const train::TrainConfig config = to_train_config(s);
      train::Evaluation ev;
      if (settings.policy == "bs") {
        ev = train::evaluate(BsPolicy{}, config, config.market, settings.eval_episodes,
                             settings.eval_seed + seed);
      } else {
        const train::TrainResult trained = train::train(config);
        ev = train::evaluate(NetworkPolicy(trained.agent.policy, config.env), config, config.market,
                             settings.eval_episodes, settings.eval_seed + seed);
      }
      prices.push_back(ev.price());
      last_se = ev.std_error;
      per_seed << fmt_double(value) << ',' << seed << ',' << fmt_double(ev.price()) << ','
               << fmt_double(ev.std_error) << '\n';
    }
    const Interval ci = price_interval(prices, last_se);
    table << fmt_double(value) << ',' << fmt_double(runs[k].market.lambda) << ','
          << fmt_double(runs[k].market.epsilon) << ',' << settings.policy << ',' << fmt_double(ci.mean)
          << ',' << fmt_double(ci.low) << ',' << fmt_double(ci.high) << ',' << prices.size() << '\n';
    char label[64];
    std::snprintf(label, sizeof label, "%s=%g", settings.sweep_param.c_str(), value);
    plot.bars.push_back({label, ci.mean, ci.low, ci.high});
  }
  report::write_file(out_dir / "sweep.csv", table.str());
  report::write_file(out_dir / "sweep_seeds.csv", per_seed.str());
  report::write_file(out_dir / "sweep.svg", report::render_svg(plot));
}

void cmd_hedge_compare(const Settings& settings, const fs::path& out_dir) {
  std::vector<HedgeSource> sources;
  if (settings.policy == "bs") {
    settings.market.validate();
    sources.push_back({"bs", train::env_from_string(settings.env), settings.market, nullptr});
  } else if (settings.policy == "trained") {
    if (settings.checkpoints.empty()) {
      throw std::invalid_argument("hedge-compare: give --checkpoint or --policy bs");
    }
    for (const std::string& file : settings.checkpoints) {
      if (!fs::exists(file)) throw std::invalid_argument("missing checkpoint " + file);
      const nn::Checkpoint ckpt = nn::load_checkpoint(file);
      sources.push_back({file, train::checkpoint_env(ckpt),
                         train::checkpoint_market(ckpt),
                         std::make_unique<nn::GaussianPolicy>(train::checkpoint_policy(ckpt))});
    }
  } else {
    throw std::invalid_argument("hedge-compare: policy must be bs or trained");
  }
  if (settings.spots.empty()) throw std::invalid_argument("hedge-compare: empty spot grid");
  for (double s : settings.spots) {
    if (!(s > 0.0)) throw std::invalid_argument("hedge-compare: spots must be > 0");
  }
  for (const HedgeSource& src : sources) {
    for (int rem : settings.remaining) {
      if (rem < 1 || rem > src.market.T) {
        throw std::invalid_argument("hedge-compare: remaining steps must lie in [1, T]");
      }
    }
  }
  write_manifest("hedge-compare", settings, out_dir);

  std::ostringstream summary;
  summary << "source,epsilon,median_learned,median_bs\n";
  report::LinePlot plot{"hedge position vs spot", "S", "position", {}, {}};
  Rng unused(0);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const HedgeSource& src = sources[k];
    const MarketParams& p = src.market;
    std::vector<int> remaining = settings.remaining;
    if (remaining.empty()) {
      for (int rem = 1; rem <= p.T; ++rem) remaining.push_back(rem);
    }
    std::ostringstream csv;
    csv << "S,t,position_learned,position_bs\n";
    std::vector<double> learned_all, bs_all;
    report::Series curve{src.label + " eps=" + fmt_double(p.epsilon), {}, {}};
    report::Series bs_curve{"bs eps=" + fmt_double(p.epsilon), {}, {}};
    for (double spot : settings.spots) {
      for (int rem : remaining) {
        const int t = p.T - rem;
        const double bs = bs_delta(t, spot, p);
        // The portfolio feature is set to the BS value of the claim.
        const Observation obs{t, spot, p.T, bs_price(t, spot, p)};
        const double learned =
            src.net ? src.net->evaluate(encode_features(src.env, p, obs)).mean : BsPolicy{}.act(p, obs, unused);
        csv << fmt_double(spot) << ',' << t << ',' << fmt_double(learned) << ',' << fmt_double(bs) << '\n';
        learned_all.push_back(learned);
        bs_all.push_back(bs);
        if (rem == remaining.front()) {
          curve.x.push_back(spot);
          curve.y.push_back(learned);
          bs_curve.x.push_back(spot);
          bs_curve.y.push_back(bs);
        }
      }
    }
    report::write_file(out_dir / ("hedge_" + std::to_string(k) + ".csv"), csv.str());
    summary << src.label << ',' << fmt_double(p.epsilon) << ',' << fmt_double(median(learned_all)) << ','
            << fmt_double(median(bs_all)) << '\n';
    plot.series.push_back(std::move(curve));
    if (k == 0) plot.series.push_back(std::move(bs_curve));
  }
  report::write_file(out_dir / "hedge_summary.csv", summary.str());
  report::write_file(out_dir / "hedge.svg", report::render_svg(plot));
}

void cmd_mixed_train(const Settings& settings, const fs::path& out_dir) {
  Settings sa = settings;
  sa.market = settings.condition_a;
  Settings sb = settings;
  sb.market = settings.condition_b;
  const train::TrainConfig a = to_train_config(sa);
  const train::TrainConfig b = to_train_config(sb);
  train::TrainConfig refine = train::average_condition(a, b);
  refine.episodes = settings.refine_episodes;
  refine.validate();
  if (settings.eval_episodes < 1) throw std::invalid_argument("mixed-train: eval_episodes must be >= 1");
  write_manifest("mixed-train", settings, out_dir);

  const train::MixedLogs logs = train::mixed_condition_train(a, b, settings.switch_intensity, refine);
  report::write_file(out_dir / "phase1_log.csv", csv_log(logs.phase1));
  report::write_file(out_dir / "refine_log.csv", csv_log(logs.refine));

  const auto before = train::evaluate(NetworkPolicy(logs.pre_refine.policy, refine.env), refine,
                                      refine.market, settings.eval_episodes, settings.eval_seed);
  const auto after = train::evaluate(NetworkPolicy(logs.agent.policy, refine.env), refine, refine.market,
                                     settings.eval_episodes, settings.eval_seed);
  std::ostringstream summary;
  summary << "stage,mean_return,std_error,episodes\n";
  summary << "before_refine," << fmt_double(before.mean_return) << ',' << fmt_double(before.std_error)
          << ',' << before.episodes << '\n';
  summary << "after_refine," << fmt_double(after.mean_return) << ',' << fmt_double(after.std_error) << ','
          << after.episodes << '\n';
  report::write_file(out_dir / "summary.csv", summary.str());

  report::LinePlot plot = learning_curve(logs.phase1, "mixed-condition training");
  plot.series.erase(plot.series.begin());
  plot.series.front().label = "phase 1 ema";
  plot.series.push_back(ema_series(logs.refine, "refine ema"));
  report::write_file(out_dir / "mixed.svg", report::render_svg(plot));
}

void cmd_bs_quote(const Settings& settings, std::ostream& out) {
  const BsQuote q = bs_quote(settings.t, settings.x, settings.market);
  out << "price,delta,d_plus,d_minus\n"
      << fmt_double(q.price) << ',' << fmt_double(q.delta) << ',' << fmt_double(q.d_plus) << ','
      << fmt_double(q.d_minus) << '\n';
}

void run_command(const std::string& subcommand, const Settings& settings, const fs::path& out_dir) {
  if (subcommand == "train") return cmd_train(settings, out_dir);
  if (subcommand == "sweep") return cmd_sweep(settings, out_dir);
  if (subcommand == "hedge-compare") return cmd_hedge_compare(settings, out_dir);
  if (subcommand == "mixed-train") return cmd_mixed_train(settings, out_dir);
  throw std::invalid_argument("not a replayable subcommand: " + subcommand);
}

void cmd_replay(const fs::path& manifest, const fs::path& out_dir) {
  std::ifstream in(manifest);
  if (!in) throw std::invalid_argument("cannot open manifest " + manifest.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("cannot parse manifest: " + std::string(e.what()));
  }
  if (!m.contains("subcommand") || !m.contains("config") || !m.contains("output_dir")) {
    throw std::invalid_argument("manifest is missing subcommand, config or output_dir");
  }
  const Settings settings = settings_from_json(m.at("config"));
  const fs::path target = out_dir.empty() ? fs::path(m.at("output_dir").get<std::string>()) : out_dir;
  run_command(m.at("subcommand").get<std::string>(), settings, target);
}

}  // namespace rlop::cli
