#pragma once

#include <concepts>

#include "adsym/core/errors.hpp"
#include "adsym/core/linalg.hpp"

namespace adsym {

/// A point (q, p) of the base phase space.
struct PhaseState {
  Vecd q;
  Vecd p;

  PhaseState() = default;
  PhaseState(Vecd q_in, Vecd p_in) : q(std::move(q_in)), p(std::move(p_in)) {
    if (q.size() != p.size() || q.size() < 1)
      throw std::invalid_argument("PhaseState: q and p must have equal length >= 1");
    if (!all_finite(q) || !all_finite(p))
      throw NonFiniteError("PhaseState: non-finite entry");
  }
};

/// Evaluation contract for a Hamiltonian and its first derivatives. The
/// member templates must also accept jet- and dual-valued arguments; that is
/// how all higher directional derivatives are obtained.
template <class Sys>
concept BaseSystem = requires(const Sys& s, const Vecd& v) {
  { s.dimension() } -> std::convertible_to<int>;
  { s.hamiltonian(v, v) } -> std::convertible_to<double>;
  { s.grad_q(v, v) } -> std::convertible_to<Vecd>;
  { s.grad_p(v, v) } -> std::convertible_to<Vecd>;
};

/// Separable form H = p^T M^{-1} p / 2 + V(q) with analytic potential
/// derivatives. The potential templates feed the jet machinery; the hessian
/// template additionally backs monitor gradients.
template <class Sys>
concept SeparableSystem = BaseSystem<Sys> && requires(const Sys& s, const Vecd& q) {
  { s.mass_inverse() } -> std::convertible_to<Matd>;
  { s.potential(q) } -> std::convertible_to<double>;
  { s.grad_potential(q) } -> std::convertible_to<Vecd>;
  { s.hess_potential(q) } -> std::convertible_to<Matd>;
};

}  // namespace adsym
