// Command-line front end: offline gain optimization, single simulations,
// and the three experiments, all driven by a flat key=value config file.
// Exit codes: 0 success, 2 config error, 3 runtime/numerical error.

#include "remest/config.hpp"
#include "remest/harness.hpp"
#include "remest/matrix_io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace remest;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_override;
  int threads = 1;
};

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xCBF29CE484222325ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Tracks files created by one invocation so a failure can remove
/// partial outputs.
class OutputSet {
 public:
  explicit OutputSet(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  std::string path(const std::string& name) {
    std::string p = (fs::path(dir_) / name).string();
    created_.push_back(p);
    return p;
  }

  void discard_all() {
    for (const auto& p : created_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::string dir_;
  std::vector<std::string> created_;
};

void write_manifest(OutputSet& outs, const CommonArgs& args, std::uint64_t effective_seed) {
  std::ofstream out(outs.path("manifest.txt"));
  out << "config = " << args.config_path << "\n";
  out << "config_fnv1a64 = " << hex64(fnv1a64_file(args.config_path)) << "\n";
  out << "seed = " << effective_seed << "\n";
  out << "threads = " << args.threads << "\n";
  out << "remest_version = " << REMEST_VERSION << "\n";
  if (!out) {
    throw std::runtime_error("cannot write manifest");
  }
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = parse_config(args.config_path);
  if (args.seed_override) {
    cfg.seed = *args.seed_override;
  }
  return cfg;
}

std::string fmt_int(double v) { return std::to_string(static_cast<long long>(v)); }

void write_rows(CsvWriter& csv, const std::string& x_name,
                const std::vector<ExperimentRow>& rows) {
  csv.header({"scheme", x_name, "metric", "mean", "std_err", "n_runs", "seed"});
  for (const auto& r : rows) {
    csv.row({r.scheme, fmt_int(r.x), r.metric, format_double(r.mean), format_double(r.std_err),
             std::to_string(r.n_runs), std::to_string(r.seed)});
  }
  csv.close();
}

int cmd_optimize_gain(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  ExperimentSetup setup = cfg.to_setup(args.threads);
  setup.schemes = {Scheme::kProposed};  // a gain is what was asked for
  OutputSet outs(args.out_dir);
  try {
    ScenarioBundle bundle = prepare_bundle(setup, setup.m_sensors);
    save_matrix(outs.path("gain.txt"), bundle.gain.k);
    CsvWriter csv(outs.path("cssca_trace.csv"));
    csv.header({"r", "f0_hat", "f1_hat", "step_norm", "feasibility_flag"});
    for (const auto& rec : bundle.cssca.trace) {
      csv.row({std::to_string(rec.r), format_double(rec.f0_hat), format_double(rec.f1_hat),
               format_double(rec.step_norm), rec.feasible ? "1" : "0"});
    }
    csv.close();
  } catch (...) {
    outs.discard_all();
    throw;
  }
  return 0;
}

int cmd_simulate(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  ExperimentSetup setup = cfg.to_setup(args.threads);
  if (cfg.gain_file) {
    setup.cssca.k_init = load_matrix(*cfg.gain_file);
    setup.cssca.total_iters = 0;
  }
  OutputSet outs(args.out_dir);
  try {
    ScenarioBundle bundle = prepare_bundle(setup, setup.m_sensors);
    CsvWriter trace_csv(outs.path("trace.csv"));
    trace_csv.header({"scheme", "t", "metric", "mean", "std_err", "n_runs", "seed"});
    CsvWriter summary_csv(outs.path("summary.csv"));
    summary_csv.header({"scheme", "T", "metric", "mean", "std_err", "n_runs", "seed"});
    for (Scheme scheme : setup.schemes) {
      Scenario sc = make_scenario(setup, bundle, scheme);
      MonteCarloSummary mc = run_monte_carlo(sc, setup.n_runs, setup.n_threads);
      for (std::size_t t = 0; t < mc.sq_err_mean.size(); ++t) {
        trace_csv.row({scheme_name(scheme), std::to_string(t), "sq_error",
                       format_double(mc.sq_err_mean[t]), format_double(mc.sq_err_std_err[t]),
                       std::to_string(mc.n_runs), std::to_string(setup.seed)});
      }
      auto summary_row = [&](const std::string& metric, double mean, double std_err) {
        summary_csv.row({scheme_name(scheme), std::to_string(setup.horizon), metric,
                         format_double(mean), format_double(std_err), std::to_string(mc.n_runs),
                         std::to_string(setup.seed)});
      };
      summary_row("nmse", mc.nmse_mean, mc.nmse_std_err);
      summary_row("total_power", mc.cum_power_mean.back(),
                  mc.cum_power_std_err.back());
    }
    trace_csv.close();
    summary_csv.close();
    write_manifest(outs, args, setup.seed);
  } catch (...) {
    outs.discard_all();
    throw;
  }
  return 0;
}

int cmd_experiment(const CommonArgs& args, const std::string& which) {
  RunConfig cfg = load_config(args);
  ExperimentSetup setup = cfg.to_setup(args.threads);
  if (which == "fig2" && cfg.m_values.empty()) {
    throw ConfigError("experiment fig2 requires key 'm_values'");
  }
  if (which == "fig4" && cfg.s_values.empty()) {
    throw ConfigError("experiment fig4 requires key 's_values'");
  }
  OutputSet outs(args.out_dir);
  try {
    if (which == "fig2") {
      CsvWriter csv(outs.path("fig2.csv"));
      write_rows(csv, "M", experiment_nmse_vs_sensors(setup, cfg.m_values));
    } else if (which == "fig3") {
      CsvWriter csv(outs.path("fig3.csv"));
      write_rows(csv, "t", experiment_power_vs_time(setup));
    } else {
      setup.n_threads = 1;  // timing experiment pins to sequential execution
      CsvWriter csv(outs.path("fig4.csv"));
      write_rows(csv, "S",
                 experiment_cpu_vs_dimension(setup, cfg.s_values, cfg.fig4_slots, cfg.fig4_reps));
    }
    write_manifest(outs, args, setup.seed);
  } catch (...) {
    outs.discard_all();
    throw;
  }
  return 0;
}

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "run configuration file")->required();
  sub->add_option("--out", args.out_dir, "output directory");
  sub->add_option("--seed", args.seed_override, "override the config seed");
  sub->add_option("--threads", args.threads, "worker thread cap")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CSI-free remote state estimation over MIMO fading channels"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string which;

  CLI::App* opt = app.add_subcommand("optimize-gain", "design the constant filtering gain");
  add_common(opt, args);
  CLI::App* sim = app.add_subcommand("simulate", "Monte-Carlo simulation of configured schemes");
  add_common(sim, args);
  CLI::App* exp = app.add_subcommand("experiment", "reproduce one of the figure experiments");
  add_common(exp, args);
  exp->add_option("--which", which, "fig2 | fig3 | fig4")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (opt->parsed()) return cmd_optimize_gain(args);
    if (sim->parsed()) return cmd_simulate(args);
    return cmd_experiment(args, which);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
