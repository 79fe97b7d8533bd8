// Command-line harness: single runs, convergence studies, the experiment
// tables, and symplecticity checks. Exit codes: 0 success, 2 configuration
// error, 3 solver failure, 4 I/O failure.

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adsym/adsym.hpp"

namespace {

struct CliOptions {
  std::string problem = "kepler";
  double ecc = 0.9;
  int dim = 1;
  std::string integrator = "euler-b";
  std::string monitor = "unit";
  double tol = 1e-5;
  bool fourth_root = false;
  double gamma = 1.0;
  double g_min = 0.0, g_max = 0.0;
  double dt_min = 0.0, dt_max = 0.0;
  bool no_bound = false;
  double h = 0.1;
  double t_end = 10.0;
  std::string csv;
  long max_steps = 100000000;
  bool verbose = false;
  std::string config_path;
};

void add_run_options(CLI::App* cmd, CliOptions* opt) {
  cmd->set_help_flag("--help", "Print help");
  cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--problem", opt->problem, "Problem: kepler | harmonic");
  cmd->add_option("--ecc", opt->ecc, "Kepler eccentricity in [0,1)");
  cmd->add_option("--dim", opt->dim, "Harmonic oscillator dimension");
  cmd->add_option("--integrator", opt->integrator,
                  "euler-b | htvi4 | euler-b-fixed | stormer-verlet | explicit-euler");
  cmd->add_option("--monitor", opt->monitor, "unit | trunc | arclength | power | energy");
  cmd->add_option("--tol", opt->tol, "Trunc-monitor tolerance");
  cmd->add_flag("--fourth-root", opt->fourth_root, "Fourth-root form of the trunc monitor");
  cmd->add_option("--gamma", opt->gamma, "Power-monitor exponent");
  cmd->add_option("--g-min", opt->g_min, "Lower bound on the monitor value");
  cmd->add_option("--g-max", opt->g_max, "Upper bound on the monitor value");
  cmd->add_option("--dt-min", opt->dt_min, "Lower bound on the physical step");
  cmd->add_option("--dt-max", opt->dt_max, "Upper bound on the physical step");
  cmd->add_flag("--no-bound", opt->no_bound, "Run the raw monitor without bounds");
  cmd->add_option("--h", opt->h, "Fictive time step");
  cmd->add_option("--t-end", opt->t_end, "Final physical time");
  cmd->add_option("--csv", opt->csv, "Per-step trajectory output path");
  cmd->add_option("--max-steps", opt->max_steps, "Step budget");
  cmd->add_flag("--verbose", opt->verbose, "Print extra diagnostics");
  cmd->add_option("--config", opt->config_path,
                  "key=value configuration file (flags take precedence)");
}

/// Expands `--config FILE` into option tokens placed before the explicit
/// flags, so the command line keeps precedence over the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in.good()) throw adsym::IoError("cannot read config file '" + path + "'");
  std::vector<std::string> expanded(args.begin(), args.begin() + 2);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config file line is not key=value: '" + line + "'");
    expanded.push_back("--" + strip(line.substr(0, eq)));
    expanded.push_back(strip(line.substr(eq + 1)));
  }
  expanded.insert(expanded.end(), args.begin() + 2, args.end());
  return expanded;
}

adsym::RunConfig to_config(const CliOptions& opt) {
  adsym::RunConfig cfg;
  cfg.problem = adsym::problem_from_name(opt.problem);
  cfg.eccentricity = opt.ecc;
  cfg.dimension = opt.dim;
  cfg.integrator = adsym::integrator_from_name(opt.integrator);
  cfg.monitor = adsym::monitor_from_name(opt.monitor);
  cfg.tol = opt.tol;
  cfg.trunc_fourth_root = opt.fourth_root;
  cfg.gamma = opt.gamma;
  const bool has_g = opt.g_min > 0.0 || opt.g_max > 0.0;
  const bool has_dt = opt.dt_min > 0.0 || opt.dt_max > 0.0;
  if (has_g && has_dt)
    throw std::invalid_argument("choose either --g-min/--g-max or --dt-min/--dt-max");
  if (opt.no_bound) {
    cfg.bound_mode = adsym::BoundMode::kNone;
  } else if (has_g) {
    cfg.bound_mode = adsym::BoundMode::kRatio;
    cfg.bound_lo = opt.g_min;
    cfg.bound_hi = opt.g_max;
  } else if (has_dt) {
    cfg.bound_mode = adsym::BoundMode::kStep;
    cfg.bound_lo = opt.dt_min;
    cfg.bound_hi = opt.dt_max;
  }
  cfg.h = opt.h;
  cfg.t_end = opt.t_end;
  cfg.csv_path = opt.csv;
  cfg.max_steps = opt.max_steps;
  cfg.verbose = opt.verbose;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-step symplectic integration via time-transformed Hamiltonians"};
  app.set_help_flag("--help", "Print help");
  app.require_subcommand(1);

  CliOptions run_opt, conv_opt, symp_opt;
  std::vector<double> h_list;
  std::string preset = "e09";
  int samples = 20;

  CLI::App* run = app.add_subcommand("run", "Integrate one configuration, print a summary");
  add_run_options(run, &run_opt);

  CLI::App* conv = app.add_subcommand("convergence", "Global-error slope over halved steps");
  add_run_options(conv, &conv_opt);
  conv->add_option("--h-list", h_list, "Fictive steps, each half the previous")->expected(-3);

  CLI::App* table = app.add_subcommand("table", "Run an experiment-table preset");
  table->set_help_flag("--help", "Print help");
  table->add_option("--preset", preset, "e09 | e099");

  CLI::App* symp = app.add_subcommand("symplecticity", "Jacobian test of one step");
  add_run_options(symp, &symp_opt);
  symp->add_option("--samples", samples, "Number of sampled states");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    // CLI11 consumes reversed argument lists.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    reversed.pop_back();  // drop the program name
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const adsym::IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  }

  try {
    if (run->parsed()) {
      const adsym::RunConfig cfg = to_config(run_opt);
      const adsym::RunSummary s = adsym::run_single(cfg);
      std::printf("%s\n", adsym::format_summary(s).c_str());
    } else if (conv->parsed()) {
      if (h_list.empty()) h_list = {0.2, 0.1, 0.05, 0.025};
      const adsym::ConvergenceResult r = adsym::convergence_study(to_config(conv_opt), h_list);
      for (const auto& p : r.points)
        std::printf("h=%-10g global_error=%.8g\n", p.h, p.error);
      std::printf("slope=%.4f\n", r.slope);
    } else if (table->parsed()) {
      const auto rows = adsym::run_table(preset);
      std::printf("Kepler two-body problem, preset %s\n%s", preset.c_str(),
                  adsym::format_table(rows).c_str());
      for (const auto& row : rows)
        if (!row.ok) return 3;
    } else if (symp->parsed()) {
      const adsym::SymplecticityReport r =
          adsym::symplecticity_check(to_config(symp_opt), samples);
      std::printf("max deviation (extended) = %.6g\nmax deviation (reduced)  = %.6g\n",
                  r.max_extended, r.max_reduced);
    }
  } catch (const adsym::IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 4;
  } catch (const adsym::NumericsError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
