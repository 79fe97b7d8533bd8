#pragma once

#include <cmath>
#include <utility>

#include "adsym/core.hpp"
#include "adsym/monitors.hpp"

namespace adsym {

/// Point of the extended phase space: qbar = (q, q^t), pbar = (p, p^t),
/// where q^t carries physical time and p^t its conjugate momentum.
struct ExtendedState {
  Vecd qbar;
  Vecd pbar;

  int base_dim() const { return qbar.size() - 1; }
  Vecd q() const { return qbar.head(base_dim()); }
  Vecd p() const { return pbar.head(base_dim()); }
  double qt() const { return qbar[base_dim()]; }
  double pt() const { return pbar[base_dim()]; }

  static ExtendedState from_parts(const Vecd& q, double qt, const Vecd& p, double pt) {
    return {q.appended(qt), p.appended(pt)};
  }
};

/// Time-transformed Hamiltonian system
///   Hbar(qbar, pbar) = g(q, p, p^t) * (H(q, p) + p^t)
/// over the extended phase space. Fixed steps of the fictive time become
/// physical steps of size g * dtau.
template <BaseSystem Sys, TimeMonitor Mon>
class PoincareSystem {
 public:
  PoincareSystem(Sys base, Mon monitor)
      : base_(std::move(base)), monitor_(std::move(monitor)) {}

  const Sys& base() const { return base_; }
  const Mon& monitor() const { return monitor_; }
  int base_dim() const { return base_.dimension(); }
  int extended_dim() const { return base_.dimension() + 1; }

  template <class S>
  S extended_hamiltonian(const Vec<S>& qbar, const Vec<S>& pbar) const {
    const int n = base_.dimension();
    Vec<S> q = qbar.head(n), p = pbar.head(n);
    MonitorValue<S> mv = monitor_.evaluate(q, p, pbar[n]);
    return mv.g * (base_.hamiltonian(q, p) + pbar[n]);
  }

  /// Full extended Hamiltonian vector field. The p^t rate is identically
  /// zero (autonomous base Hamiltonian), assigned as an exact zero. The
  /// (H + p^t) terms are kept even though they vanish on the initial level
  /// set: only the full field is Hamiltonian at perturbed states.
  template <class S>
  void extended_field(const Vec<S>& qbar, const Vec<S>& pbar, Vec<S>* qdot,
                      Vec<S>* pdot) const {
    const int n = base_.dimension();
    Vec<S> q = qbar.head(n), p = pbar.head(n);
    const S& pt = pbar[n];
    MonitorValue<S> mv = monitor_.evaluate(q, p, pt);
    S e = base_.hamiltonian(q, p) + pt;
    Vec<S> hq = base_.grad_q(q, p);
    Vec<S> hp = base_.grad_p(q, p);

    *qdot = Vec<S>(n + 1);
    *pdot = Vec<S>(n + 1);
    for (int i = 0; i < n; ++i) {
      (*qdot)[i] = mv.grad_p[i] * e + mv.g * hp[i];
      (*pdot)[i] = -(mv.grad_q[i] * e + mv.g * hq[i]);
    }
    (*qdot)[n] = mv.g + mv.d_pt * e;
    (*pdot)[n] = S{};
  }

  /// The momentum block whose nonsingularity the implicit momentum solve
  /// needs: dH/dp grad_p g^T + g d2H/dp2 + grad_p g dH/dp^T. Returned with
  /// its determinant as a diagnostic.
  std::pair<Matd, double> degeneracy_block(const ExtendedState& x) const
    requires SeparableSystem<Sys>
  {
    const int n = base_.dimension();
    const Vecd q = x.q(), p = x.p();
    const MonitorValue<double> mv = monitor_.evaluate(q, p, x.pt());
    const Vecd hp = base_.grad_p(q, p);
    const Matd minv = base_.mass_inverse();
    Matd block(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        block(i, j) = hp[i] * mv.grad_p[j] + mv.g * minv(i, j) + mv.grad_p[i] * hp[j];
    return {block, determinant(block)};
  }

 private:
  Sys base_;
  Mon monitor_;
};

/// Lifts (q0, p0) at time t0 onto the zero level set of the extended
/// Hamiltonian: q^t = t0 and p^t = -H(q0, p0).
template <BaseSystem Sys>
ExtendedState init_extended(const Sys& sys, const Vecd& q0, const Vecd& p0, double t0) {
  const double h0 = sys.hamiltonian(q0, p0);
  if (!std::isfinite(h0))
    throw NonFiniteError("init_extended: Hamiltonian is not finite at the initial state");
  return ExtendedState::from_parts(q0, t0, p0, -h0);
}

}  // namespace adsym
