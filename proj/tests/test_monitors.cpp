#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "adsym/monitors.hpp"
#include "adsym/problems.hpp"
#include "support.hpp"

using namespace adsym;
using testsupport::FreeParticle;
using testsupport::TestRng;

namespace {

/// Constant-value stub for exercising the bounding transform directly.
class StubMonitor {
 public:
  static constexpr bool p_independent = true;
  static constexpr bool pt_dependent = false;

  explicit StubMonitor(double g) : g_(g) {}

  template <class S>
  MonitorValue<S> evaluate_unchecked(const Vec<S>& q, const Vec<S>& p, const S&) const {
    MonitorValue<S> mv;
    mv.g = S(g_);
    mv.grad_q = Vec<S>(q.size());
    mv.grad_p = Vec<S>(p.size());
    return mv;
  }

  template <class S>
  MonitorValue<S> evaluate(const Vec<S>& q, const Vec<S>& p, const S& pt) const {
    return evaluate_unchecked(q, p, pt);
  }

 private:
  double g_;
};

/// Central finite differences of a monitor's value in every argument.
template <class Mon>
void check_partials_against_fd(const Mon& mon, const Vecd& q, const Vecd& p, double pt,
                               double step = 1e-6, double tol = 1e-5) {
  const MonitorValue<double> mv = mon.evaluate(q, p, pt);
  auto value = [&](const Vecd& qq, const Vecd& pp, double tt) {
    return mon.evaluate(qq, pp, tt).g;
  };
  for (int i = 0; i < q.size(); ++i) {
    Vecd qp = q, qm = q;
    qp[i] += step;
    qm[i] -= step;
    const double fd = (value(qp, p, pt) - value(qm, p, pt)) / (2.0 * step);
    const double scale = std::max(1.0, std::abs(mv.grad_q[i]));
    CHECK(std::abs(fd - mv.grad_q[i]) / scale < tol);
  }
  for (int i = 0; i < p.size(); ++i) {
    Vecd pp = p, pm = p;
    pp[i] += step;
    pm[i] -= step;
    const double fd = (value(q, pp, pt) - value(q, pm, pt)) / (2.0 * step);
    const double scale = std::max(1.0, std::abs(mv.grad_p[i]));
    CHECK(std::abs(fd - mv.grad_p[i]) / scale < tol);
  }
  {
    const double fd = (value(q, p, pt + step) - value(q, p, pt - step)) / (2.0 * step);
    const double scale = std::max(1.0, std::abs(mv.d_pt));
    CHECK(std::abs(fd - mv.d_pt) / scale < tol);
  }
}

}  // namespace

TEST_CASE("truncation-error monitor worked values") {
  const HarmonicOscillator osc(2);
  const TruncationErrorMonitor<HarmonicOscillator> mon(osc, 1e-5, 0.1);
  // grad V = q = (1, 0): g = 1e-5 / 0.005 = 2e-3.
  const auto mv = mon.evaluate(Vecd{1.0, 0.0}, Vecd{0.0, 0.0}, 0.0);
  CHECK(mv.g == Catch::Approx(2e-3).epsilon(1e-13));

  // Linear in tol.
  const TruncationErrorMonitor<HarmonicOscillator> scaled(osc, 3.7e-5, 0.1);
  const auto mv2 = scaled.evaluate(Vecd{1.0, 0.0}, Vecd{0.0, 0.0}, 0.0);
  CHECK(mv2.g == Catch::Approx(3.7 * mv.g).epsilon(1e-13));

  // Kepler near the perihelion: grad V = (100, 0).
  const KeplerProblem kep;
  const TruncationErrorMonitor<KeplerProblem> km(kep, 1e-5, 0.1);
  const auto mv3 = km.evaluate(Vecd{0.1, 0.0}, Vecd{0.0, 4.0}, -0.5);
  CHECK(mv3.g == Catch::Approx(2e-5).epsilon(1e-12));

  // Fourth-root variant takes the quarter power of the printed ratio.
  const TruncationErrorMonitor<KeplerProblem> k4(kep, 1e-5, 0.1, true);
  const auto mv4 = k4.evaluate(Vecd{0.1, 0.0}, Vecd{0.0, 4.0}, -0.5);
  CHECK(mv4.g == Catch::Approx(std::pow(mv3.g, 0.25)).epsilon(1e-12));

  // Vanishing force: raw monitor refuses, the bounded wrapper saturates.
  CHECK_THROWS_AS(mon.evaluate(Vecd{0.0, 0.0}, Vecd{1.0, 0.0}, 0.0), PositivityError);
  const BoundedMonitor<TruncationErrorMonitor<HarmonicOscillator>> bounded(mon, 0.01, 0.4, 0.1);
  const auto capped = bounded.evaluate(Vecd{0.0, 0.0}, Vecd{1.0, 0.0}, 0.0);
  CHECK(capped.g == 4.0);
}

TEST_CASE("arclength monitor worked values") {
  const HarmonicOscillator osc(1);
  const ArclengthMonitor<HarmonicOscillator> mon(osc, 0.5);
  // V = q^2/2, H0 = 1/2, q = 1: s = 2(0.5 - 0.5) + 1 = 1.
  const auto mv = mon.evaluate(Vecd{1.0}, Vecd{0.0}, -0.5);
  CHECK(mv.g == Catch::Approx(1.0).margin(1e-14));

  const KeplerProblem kep;
  const ArclengthMonitor<KeplerProblem> km(kep, -0.5);
  const auto mv2 = km.evaluate(Vecd{0.1, 0.0}, Vecd{0.0, 4.0}, 0.5);
  CHECK(mv2.g == Catch::Approx(1.0 / std::sqrt(10019.0)).epsilon(1e-12));

  // Free particle: g is the constant (2 H0)^{-1/2}.
  const FreeParticle fp(2);
  const ArclengthMonitor<FreeParticle> fm(fp, 2.0);
  const auto mv3 = fm.evaluate(Vecd{0.4, -1.0}, Vecd{1.5, 0.5}, -2.0);
  const auto mv4 = fm.evaluate(Vecd{-3.0, 2.0}, Vecd{0.1, 0.2}, -2.0);
  CHECK(mv3.g == Catch::Approx(0.5).margin(1e-14));
  CHECK(mv4.g == mv3.g);
}

TEST_CASE("power monitor worked values and homogeneity") {
  const PowerMonitor unit_gamma(1.0);
  const auto mv = unit_gamma.evaluate(Vecd{1.0, 0.0}, Vecd{0.0, 0.0}, 0.0);
  CHECK(mv.g == 1.0);
  CHECK(mv.grad_q[0] == 2.0);
  CHECK(mv.grad_q[1] == 0.0);

  const PowerMonitor half(0.5);
  const auto mv2 = half.evaluate(Vecd{3.0, 4.0}, Vecd{0.0, 0.0}, 0.0);
  CHECK(mv2.g == Catch::Approx(5.0).epsilon(1e-14));
  CHECK(mv2.grad_q[0] == Catch::Approx(0.6).epsilon(1e-14));
  CHECK(mv2.grad_q[1] == Catch::Approx(0.8).epsilon(1e-14));

  const auto mv3 = unit_gamma.evaluate(Vecd{0.1, 0.0}, Vecd{0.0, 0.0}, 0.0);
  CHECK(mv3.g == Catch::Approx(0.01).epsilon(1e-14));

  CHECK_THROWS_AS(unit_gamma.evaluate(Vecd{0.0, 0.0}, Vecd{0.0, 0.0}, 0.0), PositivityError);

  // g(c q) = c^{2 gamma} g(q).
  TestRng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const double gamma = trial % 2 == 0 ? 0.5 : 1.0;
    const PowerMonitor mon(gamma);
    const Vecd q{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double c = rng.uniform(0.1, 3.0);
    const double lhs = mon.evaluate(q * c, Vecd(2), 0.0).g;
    const double rhs = std::pow(c, 2.0 * gamma) * mon.evaluate(q, Vecd(2), 0.0).g;
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("energy-lagrangian monitor worked values") {
  const KeplerProblem kep;
  const EnergyLagrangianMonitor<KeplerProblem> mon(kep);

  // Initialized Kepler start at e = 0.9: p^t - L = -2T with T = 9.5.
  const Vecd q{0.1, 0.0};
  const Vecd p{0.0, std::sqrt(19.0)};
  const auto mv = mon.evaluate(q, p, 0.5);
  CHECK(mv.g == Catch::Approx(1.0 / 19.0).epsilon(1e-13));

  // L = 0 at rest with zero potential: g = 1/|p^t|.
  const FreeParticle fp(2);
  const EnergyLagrangianMonitor<FreeParticle> fm(fp);
  const auto mv2 = fm.evaluate(Vecd{1.0, 2.0}, Vecd{0.0, 0.0}, -1.0);
  CHECK(mv2.g == 1.0);

  // Harmonic point where p^t equals the Lagrangian: positivity failure.
  const HarmonicOscillator osc(1);
  const EnergyLagrangianMonitor<HarmonicOscillator> om(osc);
  CHECK_THROWS_AS(om.evaluate(Vecd{1.0}, Vecd{0.0}, -0.5), PositivityError);
  const auto bounded =
      BoundedMonitor<EnergyLagrangianMonitor<HarmonicOscillator>>::from_ratios(om, 1e-4, 2.0);
  CHECK(bounded.evaluate(Vecd{1.0}, Vecd{0.0}, -0.5).g == 2.0);
}

TEST_CASE("bounding transform: worked values, range, monotonicity") {
  const StubMonitor stub(4.0);
  const auto b = BoundedMonitor<StubMonitor>::from_ratios(stub, 1.0, 4.0);
  CHECK(b.evaluate(Vecd{1.0}, Vecd{1.0}, 0.0).g == Catch::Approx(2.5).margin(1e-15));

  const auto at_zero = BoundedMonitor<StubMonitor>::from_ratios(StubMonitor(0.0), 1.0, 4.0);
  CHECK(at_zero.evaluate(Vecd{1.0}, Vecd{1.0}, 0.0).g == Catch::Approx(1.0).margin(1e-15));

  const auto infinite =
      BoundedMonitor<StubMonitor>::from_ratios(StubMonitor(1.0 / 0.0), 1.0, 4.0);
  CHECK(infinite.evaluate(Vecd{1.0}, Vecd{1.0}, 0.0).g == 4.0);

  // a <= ghat <= b, strictly increasing in g.
  TestRng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = rng.uniform(1e-4, 0.5);
    const double bb = a + rng.uniform(0.1, 10.0);
    double prev = -1.0;
    for (double g = 0.0; g < 40.0; g += 0.25) {
      const auto wrapped =
          BoundedMonitor<StubMonitor>::from_ratios(StubMonitor(g), a, bb);
      const double ghat = wrapped.evaluate(Vecd{1.0}, Vecd{1.0}, 0.0).g;
      CHECK(ghat >= a - 1e-15);
      CHECK(ghat <= bb + 1e-15);
      CHECK(ghat > prev);
      prev = ghat;
    }
  }

  CHECK_THROWS_AS(BoundedMonitor<StubMonitor>(stub, 0.5, 0.2, 1.0), std::invalid_argument);
}

TEST_CASE("monitor partials match central finite differences") {
  const KeplerProblem kep;
  TestRng rng(33);

  const TruncationErrorMonitor<KeplerProblem> trunc(kep, 1e-5, 0.1);
  const TruncationErrorMonitor<KeplerProblem> trunc4(kep, 1e-5, 0.1, true);
  const ArclengthMonitor<KeplerProblem> arc(kep, -0.5);
  const PowerMonitor pow_half(0.5);
  const PowerMonitor pow_one(1.0);
  const EnergyLagrangianMonitor<KeplerProblem> energy(kep);
  const auto bounded_energy =
      BoundedMonitor<EnergyLagrangianMonitor<KeplerProblem>>::from_ratios(energy, 1e-4, 2.0);
  const auto bounded_arc = BoundedMonitor<ArclengthMonitor<KeplerProblem>>(arc, 0.003, 0.3, 0.1);

  for (int trial = 0; trial < 100; ++trial) {
    // Admissible states on the attracting side with nonzero velocity.
    const double angle = rng.uniform(0.0, 6.28);
    const double r = rng.uniform(0.25, 2.0);
    const Vecd q{r * std::cos(angle), r * std::sin(angle)};
    const Vecd p{rng.uniform(-2.0, 2.0), rng.uniform(0.5, 3.0)};
    const double pt = rng.uniform(0.2, 1.0);

    check_partials_against_fd(trunc, q, p, pt);
    check_partials_against_fd(trunc4, q, p, pt);
    check_partials_against_fd(arc, q, p, pt);
    check_partials_against_fd(pow_half, q, p, pt);
    check_partials_against_fd(pow_one, q, p, pt);
    check_partials_against_fd(energy, q, p, pt);
    check_partials_against_fd(bounded_energy, q, p, pt);
    check_partials_against_fd(bounded_arc, q, p, pt);
  }
}

TEST_CASE("p-independent monitors report exactly zero momentum partials") {
  const KeplerProblem kep;
  const TruncationErrorMonitor<KeplerProblem> trunc(kep, 1e-5, 0.1);
  const ArclengthMonitor<KeplerProblem> arc(kep, -0.5);
  const PowerMonitor power(1.0);

  TestRng rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    const Vecd q{rng.uniform(0.3, 2.0), rng.uniform(-1.0, 1.0)};
    const Vecd p{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const double pt = rng.uniform(-1.0, 1.0);
    for (const auto& mv :
         {trunc.evaluate(q, p, pt), arc.evaluate(q, p, pt), power.evaluate(q, p, pt)}) {
      CHECK(mv.grad_p[0] == 0.0);
      CHECK(mv.grad_p[1] == 0.0);
      CHECK(mv.d_pt == 0.0);
    }
  }
  CHECK(TruncationErrorMonitor<KeplerProblem>::p_independent);
  CHECK(ArclengthMonitor<KeplerProblem>::p_independent);
  CHECK(PowerMonitor::p_independent);
  CHECK_FALSE(EnergyLagrangianMonitor<KeplerProblem>::p_independent);
  CHECK(EnergyLagrangianMonitor<KeplerProblem>::pt_dependent);
}

TEST_CASE("monitor partials on jets track the flow composition") {
  // Evaluate grad_q on a jet-valued curve and compare with dual seeding.
  const PowerMonitor mon(1.0);
  const Vecd q0{0.4, 0.7};
  const Vecd dir{0.3, -0.2};

  Vec<Jetd> qj(2);
  for (int i = 0; i < 2; ++i) qj[i] = Jetd::linear(q0[i], dir[i], 3);
  const auto mvj = mon.evaluate(qj, Vec<Jetd>(2), Jetd::constant(0.0, 3));

  Vec<Dual> qd(2);
  for (int i = 0; i < 2; ++i) qd[i] = Dual(q0[i], dir[i]);
  const auto mvd = mon.evaluate(qd, Vec<Dual>(2), Dual(0.0));

  CHECK(mvj.g.coefficient(1) == Catch::Approx(mvd.g.d).epsilon(1e-13));
  for (int i = 0; i < 2; ++i)
    CHECK(mvj.grad_q[i].coefficient(1) == Catch::Approx(mvd.grad_q[i].d).epsilon(1e-13));
}
