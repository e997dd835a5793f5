#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "powcal/csv_io.hpp"
#include "powcal/harness.hpp"
#include "powcal/synthgen.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t pos = s.find(',', start);
    if (pos == std::string::npos) {
      if (start < s.size()) out.push_back(s.substr(start));
      break;
    }
    if (pos > start) out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Inserts manifest entries as --key=value arguments ahead of the explicit
// command line, so flags typed by the user win.
std::vector<std::string> expand_manifest(std::vector<std::string> args) {
  std::string manifest_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest") {
      if (i + 1 >= args.size()) {
        throw std::runtime_error("--manifest needs a file argument");
      }
      manifest_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--manifest=", 0) == 0) {
      manifest_path = args[i].substr(std::string("--manifest=").size());
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (manifest_path.empty()) return args;
  const powcal::RunManifest manifest = powcal::RunManifest::load(manifest_path);

  const auto present = [&args](const std::string& key) {
    const std::string flag = "--" + key;
    for (const std::string& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> merged;
  if (!args.empty()) merged.push_back(args.front());  // subcommand name
  for (const auto& [key, value] : manifest.flags.items()) {
    if (present(key)) continue;
    std::string v;
    if (value.is_string()) {
      v = value.get<std::string>();
    } else {
      v = value.dump();
    }
    merged.push_back("--" + key + "=" + v);
  }
  merged.insert(merged.end(), args.begin() + (args.empty() ? 0 : 1),
                args.end());
  return merged;
}

struct SynthArgs {
  std::string out;
  int dates = 200;
  int members = 51;
  int max_lead = 10;
  std::uint64_t seed = 1;
  double target_mean = 50.0;
  double bias_end = 0.0;
  double rho_end = 1.0;
  double error_start = 5.0;
  double error_end = 5.0;
  int sat_lead = 1;
  double shared_error = 1.0;
  int history_years = 30;
};

int cmd_synth(const SynthArgs& a) {
  powcal::ScenarioConfig config;
  config.n_dates = a.dates;
  config.members = a.members;
  for (powcal::LeadTime l = 1; l <= a.max_lead; ++l) {
    config.leads.push_back(l);
  }
  config.seed = a.seed;
  config.target_mean = a.target_mean;
  config.bias = powcal::Schedule{0.0, a.bias_end, std::max(a.sat_lead, 1)};
  config.dispersion =
      powcal::Schedule{1.0, a.rho_end, std::max(a.sat_lead, 1)};
  config.error_scale =
      powcal::Schedule{a.error_start, a.error_end, std::max(a.sat_lead, 1)};
  config.shared_error_scale = a.shared_error;
  config.history_years = a.history_years;

  const powcal::Scenario scenario = powcal::generate(config);
  const powcal::ObservationSeries hist =
      powcal::history(config, a.history_years);

  std::filesystem::create_directories(a.out);
  const std::filesystem::path dir(a.out);
  powcal::write_forecasts((dir / "forecasts.csv").string(), scenario.panel);
  powcal::write_observations((dir / "observations.csv").string(),
                             scenario.obs);
  powcal::write_observations((dir / "history.csv").string(), hist);
  std::cout << "wrote " << (dir / "forecasts.csv").string() << " ("
            << scenario.panel.size() << " ensembles), observations.csv, "
            << "history.csv\n";
  return 0;
}

struct RunArgs {
  std::string forecasts;
  std::string obs;
  std::string history;
  std::string methods = "emos,qr";
  int warmup = 30;
  std::uint64_t seed = 1;
  std::string out;
  int grid = 51;
  double reliability_step = 0.05;
  std::vector<std::string> stride;
  bool bma_full = false;
  bool lead_feature = false;
  std::string moe_algorithm = "ewa";
  double moe_fixed_share = 0.05;
  int drn_hidden = 16;
  int qrn_hidden = 32;
  int qrf_trees = 200;
  int qrf_min_leaf = 5;
};

powcal::OnlineConfig online_config(const RunArgs& a,
                                   const powcal::ObservationSeries* history) {
  powcal::OnlineConfig config;
  config.warmup = a.warmup;
  config.methods = split_csv(a.methods);
  config.seed = a.seed;
  config.grid = powcal::QuantileGrid::regular(a.grid);
  config.reliability_step = a.reliability_step;
  config.history = history;
  config.options.bma_exchangeable = !a.bma_full;
  config.options.lead_feature = a.lead_feature;
  config.options.moe_algorithm = a.moe_algorithm;
  config.options.moe_fixed_share = a.moe_fixed_share;
  config.options.drn_hidden = a.drn_hidden;
  config.options.qrn_hidden = a.qrn_hidden;
  config.options.qrf_trees = a.qrf_trees;
  config.options.qrf_min_leaf = a.qrf_min_leaf;
  for (const std::string& s : a.stride) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("--stride expects method=value, got '" + s +
                               "'");
    }
    config.refit_stride[s.substr(0, eq)] = std::stoi(s.substr(eq + 1));
  }
  return config;
}

void write_run_info(const std::filesystem::path& dir,
                    const powcal::OnlineConfig& config,
                    const std::vector<std::string>& warnings) {
  nlohmann::json info{
      {"format_version", powcal::RunManifest::kFormatVersion},
      {"seed", config.seed},
      {"warmup", config.warmup},
      {"methods", config.methods.empty() ? powcal::Calibrator::method_ids()
                                         : config.methods},
      {"grid_size", config.grid.levels.size()},
      {"warnings", warnings}};
  std::ofstream out(dir / "run_info.json");
  out << info.dump(2) << '\n';
}

int cmd_run(const RunArgs& a) {
  const powcal::ForecastPanel panel = powcal::load_forecasts(a.forecasts);
  const powcal::ObservationSeries obs = powcal::load_observations(a.obs);
  powcal::ObservationSeries history;
  if (!a.history.empty()) history = powcal::load_observations(a.history);

  const powcal::OnlineConfig config =
      online_config(a, a.history.empty() ? nullptr : &history);
  const powcal::OnlineResult result = powcal::run_online(panel, obs, config);

  std::filesystem::create_directories(a.out);
  const std::filesystem::path dir(a.out);
  powcal::write_scores((dir / "scores.csv").string(), result.scores);
  powcal::write_reliability((dir / "reliability.csv").string(),
                            result.reliability);
  powcal::write_calibrated((dir / "calibrated.csv").string(),
                           result.calibrated, config.grid);
  write_run_info(dir, config, result.warnings);
  for (const std::string& w : result.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  std::cout << "wrote scores.csv, reliability.csv, calibrated.csv in " << a.out
            << '\n';
  return 0;
}

struct ConvergeArgs {
  std::string forecasts;
  std::string obs;
  std::string methods = "emos,qr,qrf,qrn";
  std::string sizes = "30,60,120,250,500";
  std::uint64_t seed = 1;
  std::string out;
  int grid = 51;
};

int cmd_converge(const ConvergeArgs& a) {
  const powcal::ForecastPanel panel = powcal::load_forecasts(a.forecasts);
  const powcal::ObservationSeries obs = powcal::load_observations(a.obs);
  powcal::OnlineConfig config;
  config.methods = split_csv(a.methods);
  config.seed = a.seed;
  config.grid = powcal::QuantileGrid::regular(a.grid);
  std::vector<int> sizes;
  for (const std::string& s : split_csv(a.sizes)) sizes.push_back(std::stoi(s));
  const powcal::ConvergenceCurve curve =
      powcal::convergence_study(panel, obs, config, sizes);
  std::filesystem::create_directories(a.out);
  powcal::write_convergence(
      (std::filesystem::path(a.out) / "convergence.csv").string(), curve);
  std::cout << "wrote convergence.csv in " << a.out << '\n';
  return 0;
}

struct ReportArgs {
  std::string scores;
};

int cmd_report(const ReportArgs& a) {
  std::ifstream in(a.scores);
  if (!in) throw std::runtime_error("cannot open " + a.scores);
  std::string line;
  if (!std::getline(in, line) ||
      line != "lead_days,method,crps,crpss,mse_ens,msess") {
    throw std::runtime_error(a.scores + ": not a scores.csv file");
  }
  struct Row {
    int lead;
    std::string method;
    double crps, crpss, mse, msess;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 6) {
      throw std::runtime_error(a.scores + ": malformed row '" + line + "'");
    }
    rows.push_back(Row{std::stoi(f[0]), f[1], std::stod(f[2]), std::stod(f[3]),
                       std::stod(f[4]), std::stod(f[5])});
  }
  std::printf("%5s  %-16s %12s %8s %12s %8s\n", "lead", "method", "crps",
              "crpss", "mse_ens", "msess");
  int prev_lead = -1;
  for (const Row& r : rows) {
    if (prev_lead >= 0 && r.lead != prev_lead) std::printf("\n");
    prev_lead = r.lead;
    std::printf("%5d  %-16s %12.4f %8.4f %12.4f %8.4f\n", r.lead,
                r.method.c_str(), r.crps, r.crpss, r.mse, r.msess);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic calibration toolkit for ensemble power forecasts"};
  app.require_subcommand(1);
  app.footer(
      "Any subcommand accepts --manifest FILE, a flat JSON object of default\n"
      "flag values; flags given on the command line take precedence.");

  SynthArgs synth;
  CLI::App* s = app.add_subcommand(
      "synth", "Generate a synthetic scenario (forecasts, observations, history)");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--dates", synth.dates, "Number of issue dates");
  s->add_option("--members", synth.members, "Ensemble size");
  s->add_option("--max-lead", synth.max_lead, "Leads 1..L (days)");
  s->add_option("--seed", synth.seed, "RNG seed");
  s->add_option("--target-mean", synth.target_mean, "Mean power (MW)");
  s->add_option("--bias-end", synth.bias_end, "Forecast bias at saturation (MW)");
  s->add_option("--rho-end", synth.rho_end,
                "Spread deflation at saturation, in (0,1]");
  s->add_option("--error-start", synth.error_start,
                "Forecast error scale at lead 1 (MW)");
  s->add_option("--error-end", synth.error_end,
                "Forecast error scale at saturation (MW)");
  s->add_option("--sat-lead", synth.sat_lead, "Lead where schedules saturate");
  s->add_option("--shared-error", synth.shared_error,
                "Irreducible shared error fraction");
  s->add_option("--history-years", synth.history_years,
                "Years of climatology history");

  RunArgs run;
  CLI::App* r = app.add_subcommand(
      "run", "Online expanding-window evaluation with post-processing");
  r->add_option("--forecasts", run.forecasts, "Forecast CSV")->required();
  r->add_option("--obs", run.obs, "Observation CSV")->required();
  r->add_option("--history", run.history,
                "Climatology history CSV (defaults to --obs)");
  r->add_option("--methods", run.methods, "Comma-separated method ids");
  r->add_option("--warmup", run.warmup, "Training pairs before first output");
  r->add_option("--seed", run.seed, "RNG seed");
  r->add_option("--out", run.out, "Output directory")->required();
  r->add_option("--grid", run.grid, "Number of quantile levels");
  r->add_option("--reliability-step", run.reliability_step,
                "Reliability grid step");
  r->add_option("--stride", run.stride,
                "Per-method refit stride, e.g. qrf=20 (repeatable)");
  r->add_flag("--bma-full", run.bma_full,
              "Per-member BMA instead of the exchangeable shortcut");
  r->add_flag("--lead-feature", run.lead_feature,
              "Feed lead time to qr/qrf/drn/qrn as a feature");
  r->add_option("--moe-algorithm", run.moe_algorithm, "ewa or fixed_share");
  r->add_option("--moe-fixed-share", run.moe_fixed_share,
                "Fixed-share mixing fraction");
  r->add_option("--drn-hidden", run.drn_hidden, "DRN hidden width");
  r->add_option("--qrn-hidden", run.qrn_hidden, "QRN hidden width");
  r->add_option("--qrf-trees", run.qrf_trees, "QRF tree count");
  r->add_option("--qrf-min-leaf", run.qrf_min_leaf, "QRF minimum leaf size");

  ConvergeArgs conv;
  CLI::App* c = app.add_subcommand(
      "converge", "CRPS as a function of training-set size");
  c->add_option("--forecasts", conv.forecasts, "Forecast CSV")->required();
  c->add_option("--obs", conv.obs, "Observation CSV")->required();
  c->add_option("--methods", conv.methods, "Comma-separated method ids");
  c->add_option("--sizes", conv.sizes, "Comma-separated training sizes");
  c->add_option("--seed", conv.seed, "RNG seed");
  c->add_option("--out", conv.out, "Output directory")->required();
  c->add_option("--grid", conv.grid, "Number of quantile levels");

  ReportArgs rep;
  CLI::App* p = app.add_subcommand("report", "Pretty-print a scores.csv");
  p->add_option("--scores", rep.scores, "scores.csv path")->required();

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_manifest(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  // CLI11 consumes arguments in reverse order.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (r->parsed()) return cmd_run(run);
    if (c->parsed()) return cmd_converge(conv);
    if (p->parsed()) return cmd_report(rep);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
