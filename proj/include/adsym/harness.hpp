#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "adsym/integrators.hpp"
#include "adsym/monitors.hpp"
#include "adsym/poincare.hpp"
#include "adsym/problems.hpp"

namespace adsym {

enum class ProblemKind { kKepler, kHarmonic };
enum class IntegratorKind { kEulerB, kHtvi4, kEulerBFixed, kStormerVerlet, kExplicitEuler };
enum class MonitorKind { kUnit, kTrunc, kArclength, kPower, kEnergy };

/// How the step-bounding wrapper is parametrized for a run.
enum class BoundMode {
  kMonitorDefault,  ///< per-monitor defaults (the experiment tables' bounds)
  kNone,            ///< raw monitor, no wrapper
  kRatio,           ///< bounds on the monitor value g itself
  kStep,            ///< bounds on the physical step, divided by the fictive h
};

inline ProblemKind problem_from_name(const std::string& s) {
  if (s == "kepler") return ProblemKind::kKepler;
  if (s == "harmonic") return ProblemKind::kHarmonic;
  throw std::invalid_argument("unknown problem '" + s + "' (expected: kepler, harmonic)");
}

inline IntegratorKind integrator_from_name(const std::string& s) {
  if (s == "euler-b") return IntegratorKind::kEulerB;
  if (s == "htvi4") return IntegratorKind::kHtvi4;
  if (s == "euler-b-fixed") return IntegratorKind::kEulerBFixed;
  if (s == "stormer-verlet") return IntegratorKind::kStormerVerlet;
  if (s == "explicit-euler") return IntegratorKind::kExplicitEuler;
  throw std::invalid_argument(
      "unknown integrator '" + s +
      "' (expected: euler-b, htvi4, euler-b-fixed, stormer-verlet, explicit-euler)");
}

inline MonitorKind monitor_from_name(const std::string& s) {
  if (s == "unit") return MonitorKind::kUnit;
  if (s == "trunc") return MonitorKind::kTrunc;
  if (s == "arclength") return MonitorKind::kArclength;
  if (s == "power") return MonitorKind::kPower;
  if (s == "energy") return MonitorKind::kEnergy;
  throw std::invalid_argument("unknown monitor '" + s +
                              "' (expected: unit, trunc, arclength, power, energy)");
}

struct RunConfig {
  ProblemKind problem = ProblemKind::kKepler;
  double eccentricity = 0.9;
  int dimension = 1;  ///< harmonic oscillator only
  IntegratorKind integrator = IntegratorKind::kEulerB;
  MonitorKind monitor = MonitorKind::kUnit;
  double tol = 1e-5;  ///< truncation-error monitor
  bool trunc_fourth_root = false;
  double gamma = 1.0;  ///< power monitor
  BoundMode bound_mode = BoundMode::kMonitorDefault;
  double bound_lo = 0.0;
  double bound_hi = 0.0;
  double h = 0.1;
  double t0 = 0.0;
  double t_end = 10.0;
  std::string csv_path;
  NewtonConfig newton;
  long max_steps = 100000000;
  double finish_tolerance = 1e-10;
  bool verbose = false;  ///< sample the degeneracy diagnostic along the run

  void validate() const {
    std::vector<std::string> faults;
    if (!(h > 0.0)) faults.push_back("h must be positive");
    if (!(t_end > t0)) faults.push_back("t-end must exceed t0");
    if (problem == ProblemKind::kKepler && !(eccentricity >= 0.0 && eccentricity < 1.0))
      faults.push_back("eccentricity must lie in [0,1)");
    if (problem == ProblemKind::kHarmonic && dimension < 1)
      faults.push_back("dimension must be >= 1");
    if (monitor == MonitorKind::kTrunc && !(tol > 0.0))
      faults.push_back("tol must be positive for the trunc monitor");
    const bool fixed_step = integrator == IntegratorKind::kEulerBFixed ||
                            integrator == IntegratorKind::kStormerVerlet ||
                            integrator == IntegratorKind::kExplicitEuler;
    if (fixed_step && monitor != MonitorKind::kUnit)
      faults.push_back("fixed-step integrators require the unit monitor");
    if ((bound_mode == BoundMode::kRatio || bound_mode == BoundMode::kStep) &&
        !(bound_lo > 0.0 && bound_lo < bound_hi))
      faults.push_back("monitor bounds need 0 < lower < upper");
    if (!(max_steps > 0)) faults.push_back("max-steps must be positive");
    if (!faults.empty()) {
      std::string msg = "invalid run configuration:";
      for (const auto& f : faults) msg += "\n  - " + f;
      throw std::invalid_argument(msg);
    }
  }
};

struct RunSummary {
  long steps = 0;
  double max_energy_error = 0.0;
  double global_error = 0.0;
  double min_step = 0.0;
  double max_step = 0.0;
  double min_g = 0.0;
  double max_g = 0.0;
  double wall_time_seconds = 0.0;
  double final_t = 0.0;
};

// ---------------------------------------------------------------------------
// CSV output

/// Streams trajectory rows in the fixed schema
///   step,tau,t,h_fictive,h_physical,q1..qn,p1..pn,pt,energy_error
/// with 17 significant digits. Rows hit the file as they arrive, so an
/// aborted run leaves a usable partial file.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, int n) : n_(n) {
    f_ = std::fopen(path.c_str(), "w");
    if (!f_) throw IoError("cannot open '" + path + "' for writing");
    std::string header = "step,tau,t,h_fictive,h_physical";
    for (int i = 1; i <= n; ++i) header += ",q" + std::to_string(i);
    for (int i = 1; i <= n; ++i) header += ",p" + std::to_string(i);
    header += ",pt,energy_error\n";
    if (std::fputs(header.c_str(), f_) < 0) fail(path);
  }

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }

  void write(const StepRecord& rec) {
    std::fprintf(f_, "%ld,%.17g,%.17g,%.17g,%.17g", rec.index, rec.tau, rec.t,
                 rec.h_fictive, rec.h_physical);
    for (int i = 0; i < n_; ++i) std::fprintf(f_, ",%.17g", rec.q[i]);
    for (int i = 0; i < n_; ++i) std::fprintf(f_, ",%.17g", rec.p[i]);
    std::fprintf(f_, ",%.17g,%.17g\n", rec.pt, rec.energy_error);
    if (std::ferror(f_)) throw IoError("short write on CSV output");
  }

  void flush() {
    if (f_) std::fflush(f_);
  }

 private:
  void fail(const std::string& path) { throw IoError("cannot write to '" + path + "'"); }

  std::FILE* f_ = nullptr;
  int n_ = 0;
};

/// Writes a collected trajectory in one go.
inline void write_csv(const std::vector<StepRecord>& records, const std::string& path,
                      int base_dim) {
  CsvWriter w(path, base_dim);
  for (const auto& r : records) w.write(r);
}

// ---------------------------------------------------------------------------
// Dispatch over the run configuration

namespace detail {

template <class F>
decltype(auto) with_problem(const RunConfig& cfg, F&& f) {
  if (cfg.problem == ProblemKind::kKepler) return f(KeplerProblem{});
  return f(HarmonicOscillator{cfg.dimension});
}

/// Resolves the bound parameters for a monitor, handing the (possibly
/// wrapped) monitor to the continuation. Defaults reproduce the experiment
/// tables: power and energy bound g directly, arclength bounds the physical
/// step; the trunc and unit monitors run unbounded.
template <class Mon, class F>
decltype(auto) wrap_bounds(const RunConfig& cfg, Mon mon, BoundMode def_mode, double def_lo,
                           double def_hi, F&& f) {
  BoundMode mode = cfg.bound_mode;
  double lo = cfg.bound_lo, hi = cfg.bound_hi;
  if (mode == BoundMode::kMonitorDefault) {
    mode = def_mode;
    lo = def_lo;
    hi = def_hi;
  }
  switch (mode) {
    case BoundMode::kRatio:
      return f(BoundedMonitor<Mon>::from_ratios(std::move(mon), lo, hi));
    case BoundMode::kStep:
      return f(BoundedMonitor<Mon>(std::move(mon), lo, hi, cfg.h));
    default:
      return f(std::move(mon));
  }
}

template <class Sys, class F>
decltype(auto) with_monitor(const RunConfig& cfg, const Sys& sys, double energy0, F&& f) {
  switch (cfg.monitor) {
    case MonitorKind::kTrunc:
      return wrap_bounds(cfg,
                         TruncationErrorMonitor<Sys>(sys, cfg.tol, cfg.h,
                                                     cfg.trunc_fourth_root),
                         BoundMode::kNone, 0.0, 0.0, std::forward<F>(f));
    case MonitorKind::kArclength:
      return wrap_bounds(cfg, ArclengthMonitor<Sys>(sys, energy0), BoundMode::kStep, 0.003,
                         0.3, std::forward<F>(f));
    case MonitorKind::kPower:
      return wrap_bounds(cfg, PowerMonitor(cfg.gamma), BoundMode::kRatio, 0.01, 8.0,
                         std::forward<F>(f));
    case MonitorKind::kEnergy:
      return wrap_bounds(cfg, EnergyLagrangianMonitor<Sys>(sys), BoundMode::kRatio, 1e-4,
                         2.0, std::forward<F>(f));
    default:
      return f(UnitMonitor{});
  }
}

template <class PSys, class F>
decltype(auto) with_stepper(const RunConfig& cfg, const PSys&, F&& f) {
  using Base = std::decay_t<decltype(std::declval<const PSys&>().base())>;
  switch (cfg.integrator) {
    case IntegratorKind::kHtvi4:
      return f(HtviStepper<PSys>(HtviScheme::htvi4(), cfg.newton, cfg.newton));
    case IntegratorKind::kStormerVerlet:
      return f(make_fixed_adapter([](const Base& sys, const PhaseState& s, double h) {
        return stormer_verlet_step(sys, s, h);
      }));
    case IntegratorKind::kExplicitEuler:
      return f(make_fixed_adapter([](const Base& sys, const PhaseState& s, double h) {
        return explicit_euler_step(sys, s, h);
      }));
    default:
      // euler-b and euler-b-fixed share the stepper; the fixed flavour is
      // simply the unit monitor.
      return f(EulerBStepper<PSys>(cfg.newton));
  }
}

template <class Sys>
PhaseState initial_state(const RunConfig& cfg, const Sys&) {
  if constexpr (std::is_same_v<Sys, KeplerProblem>) {
    return kepler_initial_conditions(cfg.eccentricity);
  } else {
    Vecd q(cfg.dimension), p(cfg.dimension);
    q[0] = 1.0;
    return PhaseState{q, p};
  }
}

template <class Sys>
double reference_error(const RunConfig& cfg, const Sys& sys, const PhaseState& start,
                       const ExtendedState& final_state) {
  PhaseState ref;
  if constexpr (std::is_same_v<Sys, KeplerProblem>) {
    (void)sys;
    (void)start;
    ref = kepler_reference_state(final_state.qt() - cfg.t0, cfg.eccentricity);
  } else {
    ref = sys.exact_state(start, final_state.qt() - cfg.t0);
  }
  const Vecd dq = final_state.q() - ref.q;
  const Vecd dp = final_state.p() - ref.p;
  return std::sqrt(dot(dq, dq) + dot(dp, dp));
}

}  // namespace detail

/// Runs one configured experiment; returns the summary and optionally
/// streams the per-step CSV. Fully deterministic apart from the wall time.
inline RunSummary run_single(const RunConfig& cfg) {
  cfg.validate();
  return detail::with_problem(cfg, [&](auto sys) -> RunSummary {
    const PhaseState start = detail::initial_state(cfg, sys);
    const double energy0 = sys.hamiltonian(start.q, start.p);
    return detail::with_monitor(cfg, sys, energy0, [&](auto mon) -> RunSummary {
      using Sys = decltype(sys);
      using Mon = decltype(mon);
      PoincareSystem<Sys, Mon> psys(sys, mon);
      return detail::with_stepper(cfg, psys, [&](auto stepper) -> RunSummary {
        const ExtendedState x0 = init_extended(sys, start.q, start.p, cfg.t0);
        DriverConfig dcfg;
        dcfg.finish_tolerance = cfg.finish_tolerance;
        dcfg.max_steps = cfg.max_steps;

        std::optional<CsvWriter> csv;
        if (!cfg.csv_path.empty()) csv.emplace(cfg.csv_path, sys.dimension());
        // Warn-level diagnostic: sample the determinant of the momentum
        // block at every accepted step when asked to.
        double min_abs_det = std::numeric_limits<double>::infinity();
        auto recorder = [&](const StepRecord& rec) {
          if (csv) csv->write(rec);
          if (cfg.verbose) {
            const ExtendedState at = ExtendedState::from_parts(rec.q, rec.t, rec.p, rec.pt);
            min_abs_det = std::min(min_abs_det, std::abs(psys.degeneracy_block(at).second));
          }
        };

        const auto t_begin = std::chrono::steady_clock::now();
        RunStats stats;
        try {
          stats = integrate(psys, stepper, x0, cfg.h, cfg.t_end, dcfg, recorder);
        } catch (...) {
          if (csv) csv->flush();
          throw;
        }
        const auto t_done = std::chrono::steady_clock::now();

        RunSummary s;
        s.steps = stats.steps;
        s.max_energy_error = stats.max_energy_error;
        s.global_error = detail::reference_error(cfg, sys, start, stats.final_state);
        s.min_step = stats.min_h_physical;
        s.max_step = stats.max_h_physical;
        s.min_g = stats.min_g;
        s.max_g = stats.max_g;
        s.final_t = stats.final_state.qt();
        s.wall_time_seconds = std::chrono::duration<double>(t_done - t_begin).count();
        if (cfg.verbose) {
          std::fprintf(stderr, "degeneracy diagnostic: min |det| of the momentum block = %.6g%s\n",
                       min_abs_det,
                       min_abs_det < 1e-12 ? " (WARNING: nearly singular)" : "");
        }
        return s;
      });
    });
  });
}

inline std::string format_summary(const RunSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "steps=%ld energy_error=%.6g global_error=%.6g min_step=%.6g "
                "max_step=%.6g min_g=%.6g max_g=%.6g final_t=%.12g time=%.3fs",
                s.steps, s.max_energy_error, s.global_error, s.min_step, s.max_step, s.min_g,
                s.max_g, s.final_t, s.wall_time_seconds);
  return buf;
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergencePoint {
  double h = 0.0;
  double error = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergencePoint> points;
  double slope = 0.0;
};

/// Runs the same configuration over a list of fictive steps (each half the
/// previous) and fits the log-log slope of the global error.
inline ConvergenceResult convergence_study(RunConfig cfg, const std::vector<double>& h_list) {
  if (h_list.size() < 3)
    throw std::invalid_argument("convergence_study: need at least 3 step sizes");
  for (size_t i = 1; i < h_list.size(); ++i)
    if (std::abs(h_list[i] / h_list[i - 1] - 0.5) > 1e-9)
      throw std::invalid_argument("convergence_study: each h must halve the previous");

  ConvergenceResult result;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double h : h_list) {
    cfg.h = h;
    cfg.csv_path.clear();
    const RunSummary s = run_single(cfg);
    result.points.push_back({h, s.global_error});
    const double x = std::log(h), y = std::log(s.global_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(h_list.size());
  result.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return result;
}

// ---------------------------------------------------------------------------
// Experiment tables

struct TableRowSpec {
  std::string method;
  std::string monitor_label;
  RunConfig cfg;
};

struct TableRowResult {
  TableRowSpec spec;
  bool ok = false;
  std::string error;
  RunSummary summary;
};

/// Row presets of the two Kepler experiment tables ("e09" and "e099").
inline std::vector<TableRowSpec> table_preset(const std::string& name) {
  auto base = [&](double e) {
    RunConfig cfg;
    cfg.problem = ProblemKind::kKepler;
    cfg.eccentricity = e;
    cfg.integrator = IntegratorKind::kHtvi4;
    cfg.t_end = 10.0;
    return cfg;
  };
  std::vector<TableRowSpec> rows;
  if (name == "e09") {
    const double e = 0.9;
    {
      RunConfig c = base(e);
      c.monitor = MonitorKind::kPower;
      c.gamma = 1.0;
      c.h = 0.1;
      c.bound_mode = BoundMode::kRatio;
      c.bound_lo = 0.01;
      c.bound_hi = 8.0;
      rows.push_back({"HTVI4", "Gamma", c});
    }
    {
      RunConfig c = base(e);
      c.monitor = MonitorKind::kEnergy;
      c.h = 0.1;
      c.bound_mode = BoundMode::kRatio;
      c.bound_lo = 1e-4;
      c.bound_hi = 2.0;
      rows.push_back({"HTVI4", "Energy", c});
    }
    {
      RunConfig c = base(e);
      c.monitor = MonitorKind::kArclength;
      c.h = 0.1;
      c.bound_mode = BoundMode::kStep;
      c.bound_lo = 0.003;
      c.bound_hi = 0.3;
      rows.push_back({"HTVI4", "Arclength", c});
    }
    {
      RunConfig c = base(e);
      c.monitor = MonitorKind::kUnit;
      c.h = 0.0025;
      rows.push_back({"HTVI4", "-", c});
    }
  } else if (name == "e099") {
    const double e = 0.99;
    {
      RunConfig c = base(e);
      c.monitor = MonitorKind::kPower;
      c.gamma = 1.0;
      c.h = 0.1;
      c.bound_mode = BoundMode::kRatio;
      c.bound_lo = 5e-4;
      c.bound_hi = 8.0;
      rows.push_back({"HTVI4", "Gamma", c});
    }
    {
      RunConfig c = base(e);
      c.monitor = MonitorKind::kEnergy;
      c.h = 0.03;
      c.bound_mode = BoundMode::kRatio;
      c.bound_lo = 1e-6;
      c.bound_hi = 5.0;
      rows.push_back({"HTVI4", "Energy", c});
    }
    {
      RunConfig c = base(e);
      c.monitor = MonitorKind::kArclength;
      c.h = 0.1;
      c.bound_mode = BoundMode::kRatio;
      c.bound_lo = 8e-4;
      c.bound_hi = 10.0;
      rows.push_back({"HTVI4", "Arclength", c});
    }
    {
      RunConfig c = base(e);
      c.monitor = MonitorKind::kUnit;
      c.h = 5e-4;
      rows.push_back({"HTVI4", "-", c});
    }
    {
      RunConfig c = base(e);
      c.integrator = IntegratorKind::kStormerVerlet;
      c.monitor = MonitorKind::kUnit;
      c.h = 5e-7;
      rows.push_back({"SV", "-", c});
    }
  } else {
    throw std::invalid_argument("unknown table preset '" + name + "' (expected: e09, e099)");
  }
  return rows;
}

/// Runs every row of a preset; a failing row is reported and the rest
/// still run.
inline std::vector<TableRowResult> run_table(const std::string& preset) {
  std::vector<TableRowResult> results;
  for (const TableRowSpec& spec : table_preset(preset)) {
    TableRowResult r;
    r.spec = spec;
    try {
      r.summary = run_single(spec.cfg);
      r.ok = true;
    } catch (const std::exception& err) {
      r.error = err.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

inline std::string format_table(const std::vector<TableRowResult>& rows) {
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "%-7s %-10s %-9s %-11s %-11s %-11s %-11s %-12s %-12s %-9s %s\n",
                "Method", "Monitor", "h", "min Step", "max Step", "min g", "max g",
                "Energy Err", "Global Err", "Steps", "Time");
  out << line;
  for (const auto& r : rows) {
    if (!r.ok) {
      std::snprintf(line, sizeof line, "%-7s %-10s %-9g FAILED: %s\n", r.spec.method.c_str(),
                    r.spec.monitor_label.c_str(), r.spec.cfg.h, r.error.c_str());
      out << line;
      continue;
    }
    const RunSummary& s = r.summary;
    std::snprintf(line, sizeof line,
                  "%-7s %-10s %-9g %-11.4g %-11.4g %-11.4g %-11.4g %-12.3g %-12.3g %-9ld %.1f\n",
                  r.spec.method.c_str(), r.spec.monitor_label.c_str(), r.spec.cfg.h, s.min_step,
                  s.max_step, s.min_g, s.max_g, s.max_energy_error, s.global_error, s.steps,
                  s.wall_time_seconds);
    out << line;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Symplecticity check

struct SymplecticityReport {
  double max_extended = 0.0;
  double max_reduced = 0.0;
  int samples = 0;
};

namespace detail {

inline Matd canonical_form(int dof) {
  Matd omega(2 * dof, 2 * dof);
  for (int i = 0; i < dof; ++i) {
    omega(i, dof + i) = 1.0;
    omega(dof + i, i) = -1.0;
  }
  return omega;
}

inline double symplectic_deviation(const Matd& jac) {
  const int dof = jac.rows() / 2;
  const Matd omega = canonical_form(dof);
  const int m = 2 * dof;
  double dev = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) s += jac(k, i) * omega(k, l) * jac(l, j);
      dev = std::max(dev, std::abs(s - omega(i, j)));
    }
  }
  return dev;
}

}  // namespace detail

/// Central finite-difference Jacobians (step 1e-6) of one integrator step at
/// states sampled along the initialized level set; reports the worst
/// deviation |J^T O J - O| in both the extended and the reduced variables.
inline SymplecticityReport symplecticity_check(const RunConfig& cfg, int samples) {
  if (cfg.h == 0.0) {
    RunConfig relaxed = cfg;
    relaxed.h = 1.0;
    relaxed.validate();
  } else {
    cfg.validate();
  }
  return detail::with_problem(cfg, [&](auto sys) -> SymplecticityReport {
    const PhaseState start = detail::initial_state(cfg, sys);
    const double energy0 = sys.hamiltonian(start.q, start.p);
    return detail::with_monitor(cfg, sys, energy0, [&](auto mon) -> SymplecticityReport {
      using Sys = decltype(sys);
      using Mon = decltype(mon);
      PoincareSystem<Sys, Mon> psys(sys, mon);
      return detail::with_stepper(cfg, psys, [&](auto stepper) -> SymplecticityReport {
        const int n = sys.dimension();
        const double fd = 1e-6;
        SymplecticityReport report;
        report.samples = samples;

        for (int sample = 0; sample < samples; ++sample) {
          // States along the level set, one per orbit phase.
          PhaseState s0;
          if constexpr (std::is_same_v<std::decay_t<Sys>, KeplerProblem>) {
            const double ecc_anomaly = 2.0 * std::numbers::pi * sample / samples;
            const double mean = ecc_anomaly - cfg.eccentricity * std::sin(ecc_anomaly);
            s0 = kepler_reference_state(mean, cfg.eccentricity);
          } else {
            const double angle = 2.0 * std::numbers::pi * sample / samples;
            s0 = sys.exact_state(start, angle);
          }
          const ExtendedState x0 = init_extended(sys, s0.q, s0.p, cfg.t0);

          // Extended form: all 2(n+1) variables.
          {
            const int m = n + 1;
            auto map = [&](const Vecd& z) {
              ExtendedState x;
              x.qbar = z.head(m);
              x.pbar = Vecd(m);
              for (int i = 0; i < m; ++i) x.pbar[i] = z[m + i];
              const StepResult r = stepper(psys, x, cfg.h);
              Vecd out(2 * m);
              for (int i = 0; i < m; ++i) out[i] = r.state.qbar[i];
              for (int i = 0; i < m; ++i) out[m + i] = r.state.pbar[i];
              return out;
            };
            Vecd z0(2 * m);
            for (int i = 0; i < m; ++i) z0[i] = x0.qbar[i];
            for (int i = 0; i < m; ++i) z0[m + i] = x0.pbar[i];
            const Matd jac = fd_jacobian(map, z0, fd);
            report.max_extended =
                std::max(report.max_extended, detail::symplectic_deviation(jac));
          }

          // Reduced form: (q, p) with the time pair frozen.
          {
            auto map = [&](const Vecd& z) {
              Vecd p(n);
              for (int i = 0; i < n; ++i) p[i] = z[n + i];
              const ExtendedState x = ExtendedState::from_parts(z.head(n), x0.qt(), p, x0.pt());
              const StepResult r = stepper(psys, x, cfg.h);
              Vecd out(2 * n);
              for (int i = 0; i < n; ++i) out[i] = r.state.qbar[i];
              for (int i = 0; i < n; ++i) out[n + i] = r.state.pbar[i];
              return out;
            };
            Vecd z0(2 * n);
            for (int i = 0; i < n; ++i) z0[i] = x0.qbar[i];
            for (int i = 0; i < n; ++i) z0[n + i] = x0.pbar[i];
            const Matd jac = fd_jacobian(map, z0, fd);
            report.max_reduced =
                std::max(report.max_reduced, detail::symplectic_deviation(jac));
          }
        }
        return report;
      });
    });
  });
}

}  // namespace adsym
