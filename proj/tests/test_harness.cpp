#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "adsym/harness.hpp"
#include "support.hpp"

using namespace adsym;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("csv schema: header, initial row, row count") {
  const std::string path = "/tmp/adsym_test_run.csv";
  RunConfig cfg;
  cfg.problem = ProblemKind::kKepler;
  cfg.eccentricity = 0.5;
  cfg.integrator = IntegratorKind::kEulerB;
  cfg.monitor = MonitorKind::kPower;
  cfg.bound_mode = BoundMode::kNone;
  cfg.h = 0.05;
  cfg.t_end = 1.0;
  cfg.csv_path = path;
  const RunSummary s = run_single(cfg);

  const auto lines = split_lines(slurp(path));
  REQUIRE(!lines.empty());
  CHECK(lines[0] == "step,tau,t,h_fictive,h_physical,q1,q2,p1,p2,pt,energy_error");
  CHECK(static_cast<long>(lines.size()) == s.steps + 2);  // header + initial + steps

  // The initial row: step 0, tau 0, t = t0, zero step sizes, zero error.
  std::istringstream first(lines[1]);
  std::string field;
  std::getline(first, field, ',');
  CHECK(field == "0");
  std::getline(first, field, ',');
  CHECK(std::stod(field) == 0.0);
  std::getline(first, field, ',');
  CHECK(std::stod(field) == 0.0);
  std::getline(first, field, ',');
  CHECK(std::stod(field) == 0.0);

  // Summary agrees with the file: max energy error equals the column max.
  double max_energy = 0.0;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto pos = lines[i].rfind(',');
    max_energy = std::max(max_energy, std::stod(lines[i].substr(pos + 1)));
  }
  CHECK(max_energy == Catch::Approx(s.max_energy_error).epsilon(1e-12));
  std::remove(path.c_str());
}

TEST_CASE("csv output is byte-identical across runs") {
  RunConfig cfg;
  cfg.problem = ProblemKind::kKepler;
  cfg.eccentricity = 0.9;
  cfg.integrator = IntegratorKind::kHtvi4;
  cfg.monitor = MonitorKind::kEnergy;
  cfg.h = 0.1;
  cfg.t_end = 2.0;

  cfg.csv_path = "/tmp/adsym_det_a.csv";
  run_single(cfg);
  cfg.csv_path = "/tmp/adsym_det_b.csv";
  run_single(cfg);
  CHECK(slurp("/tmp/adsym_det_a.csv") == slurp("/tmp/adsym_det_b.csv"));
  std::remove("/tmp/adsym_det_a.csv");
  std::remove("/tmp/adsym_det_b.csv");
}

TEST_CASE("empty trajectory writes a header-only file") {
  const std::string path = "/tmp/adsym_empty.csv";
  write_csv({}, path, 2);
  const auto lines = split_lines(slurp(path));
  REQUIRE(lines.size() == 1);
  CHECK(lines[0] == "step,tau,t,h_fictive,h_physical,q1,q2,p1,p2,pt,energy_error");
  std::remove(path.c_str());
}

TEST_CASE("csv open failure raises IoError") {
  CHECK_THROWS_AS(write_csv({}, "/nonexistent-dir/x.csv", 2), IoError);
}

TEST_CASE("run_single: euler-b physical steps track h g(q) exactly") {
  RunConfig cfg;
  cfg.problem = ProblemKind::kKepler;
  cfg.eccentricity = 0.9;
  cfg.integrator = IntegratorKind::kEulerB;
  cfg.monitor = MonitorKind::kPower;
  cfg.bound_mode = BoundMode::kNone;
  cfg.h = 0.01;
  cfg.t_end = 0.5;
  const RunSummary s = run_single(cfg);
  // Worked start: g(q0) = 0.01, so the first physical step is exactly h g.
  CHECK(s.min_step >= 0.0);
  CHECK(s.min_step <= s.max_step);
  CHECK(s.min_g <= s.max_g);

  // Per-row consistency against the trajectory itself.
  const KeplerProblem kep;
  PoincareSystem psys(kep, PowerMonitor(1.0));
  EulerBStepper<decltype(psys)> stepper;
  const PhaseState s0 = kepler_initial_conditions(0.9);
  const auto recs =
      integrate_collect(psys, stepper, init_extended(kep, s0.q, s0.p, 0.0), 0.01, 0.5);
  for (size_t k = 1; k < recs.size(); ++k) {
    // h_physical is stored as q1^t - q0^t, so the identity holds to one
    // ulp of the running time rather than of the step itself.
    CHECK(recs[k].h_physical ==
          Catch::Approx(recs[k].h_fictive * recs[k].monitor_g)
              .margin(1e-15 * (1.0 + recs[k].t))
              .epsilon(1e-12));
  }
}

TEST_CASE("config validation rejects invalid combinations exhaustively") {
  RunConfig cfg;
  cfg.h = -1.0;
  cfg.t_end = -2.0;
  cfg.eccentricity = 1.5;
  cfg.integrator = IntegratorKind::kStormerVerlet;
  cfg.monitor = MonitorKind::kPower;
  cfg.bound_mode = BoundMode::kRatio;
  cfg.bound_lo = 2.0;
  cfg.bound_hi = 1.0;
  try {
    cfg.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("h must be positive") != std::string::npos);
    CHECK(msg.find("t-end") != std::string::npos);
    CHECK(msg.find("eccentricity") != std::string::npos);
    CHECK(msg.find("unit monitor") != std::string::npos);
    CHECK(msg.find("bounds") != std::string::npos);
  }
}

TEST_CASE("name parsing for problems, integrators, monitors") {
  CHECK(problem_from_name("kepler") == ProblemKind::kKepler);
  CHECK(integrator_from_name("htvi4") == IntegratorKind::kHtvi4);
  CHECK(monitor_from_name("arclength") == MonitorKind::kArclength);
  CHECK_THROWS_AS(problem_from_name("pendulum"), std::invalid_argument);
  CHECK_THROWS_AS(integrator_from_name("rk4"), std::invalid_argument);
  CHECK_THROWS_AS(monitor_from_name("curvature"), std::invalid_argument);
}

TEST_CASE("convergence study validates the h list and fits the slope") {
  RunConfig cfg;
  cfg.problem = ProblemKind::kHarmonic;
  cfg.integrator = IntegratorKind::kEulerB;
  cfg.monitor = MonitorKind::kUnit;
  cfg.t_end = 1.0;
  CHECK_THROWS_AS(convergence_study(cfg, {0.2, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(convergence_study(cfg, {0.2, 0.15, 0.1}), std::invalid_argument);

  const ConvergenceResult r = convergence_study(cfg, {0.2, 0.1, 0.05, 0.025});
  CHECK(r.points.size() == 4);
  CHECK(r.slope > 0.9);
  CHECK(r.slope < 1.1);
}

TEST_CASE("table presets carry the printed row parameters") {
  const auto e09 = table_preset("e09");
  REQUIRE(e09.size() == 4);
  CHECK(e09[0].monitor_label == "Gamma");
  CHECK(e09[0].cfg.bound_lo == 0.01);
  CHECK(e09[0].cfg.bound_hi == 8.0);
  CHECK(e09[1].cfg.h == 0.1);
  CHECK(e09[2].cfg.bound_mode == BoundMode::kStep);
  CHECK(e09[3].cfg.h == 0.0025);
  const auto e099 = table_preset("e099");
  REQUIRE(e099.size() == 5);
  CHECK(e099[4].method == "SV");
  CHECK_THROWS_AS(table_preset("e05"), std::invalid_argument);
}

TEST_CASE("symplecticity harness distinguishes the control method") {
  RunConfig cfg;
  cfg.problem = ProblemKind::kKepler;
  cfg.eccentricity = 0.9;
  cfg.h = 0.01;
  cfg.integrator = IntegratorKind::kEulerB;
  cfg.monitor = MonitorKind::kPower;
  const auto good = symplecticity_check(cfg, 4);
  CHECK(good.max_extended <= 1e-6);
  CHECK(good.max_reduced <= 1e-6);

  cfg.integrator = IntegratorKind::kExplicitEuler;
  cfg.monitor = MonitorKind::kUnit;
  const auto bad = symplecticity_check(cfg, 4);
  CHECK(bad.max_reduced >= 1e-3);
}

TEST_CASE("aborted runs flush a usable partial csv") {
  const std::string path = "/tmp/adsym_partial.csv";
  RunConfig cfg;
  cfg.problem = ProblemKind::kKepler;
  cfg.eccentricity = 0.9;
  cfg.integrator = IntegratorKind::kEulerB;
  cfg.monitor = MonitorKind::kPower;
  cfg.h = 0.01;
  cfg.t_end = 50.0;
  cfg.max_steps = 25;
  cfg.csv_path = path;
  CHECK_THROWS_AS(run_single(cfg), NumericsError);
  const auto lines = split_lines(slurp(path));
  CHECK(lines.size() == 27);  // header + initial row + 25 accepted steps
  std::remove(path.c_str());
}

TEST_CASE("verbose runs report the degeneracy diagnostic without failing") {
  RunConfig cfg;
  cfg.problem = ProblemKind::kKepler;
  cfg.eccentricity = 0.5;
  cfg.integrator = IntegratorKind::kEulerB;
  cfg.monitor = MonitorKind::kPower;
  cfg.h = 0.05;
  cfg.t_end = 1.0;
  cfg.verbose = true;
  const RunSummary s = run_single(cfg);
  CHECK(s.steps > 0);
}

TEST_CASE("convergence: fourth order survives an adaptive kepler run") {
  RunConfig cfg;
  cfg.problem = ProblemKind::kKepler;
  cfg.eccentricity = 0.5;
  cfg.integrator = IntegratorKind::kHtvi4;
  cfg.monitor = MonitorKind::kArclength;
  cfg.bound_mode = BoundMode::kNone;
  cfg.t_end = 3.0;
  const ConvergenceResult r = convergence_study(cfg, {0.2, 0.1, 0.05, 0.025});
  CHECK(r.slope >= 3.5);
  CHECK(r.slope <= 4.5);
}

TEST_CASE("symplecticity of the zero-step identity map is exact") {
  RunConfig cfg;
  cfg.problem = ProblemKind::kKepler;
  cfg.eccentricity = 0.9;
  cfg.integrator = IntegratorKind::kEulerB;
  cfg.monitor = MonitorKind::kPower;
  cfg.h = 0.0;
  const SymplecticityReport r = symplecticity_check(cfg, 5);
  CHECK(r.max_extended <= 1e-12);
  CHECK(r.max_reduced <= 1e-12);
}
