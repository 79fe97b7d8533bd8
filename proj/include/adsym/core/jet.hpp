#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "adsym/core/dual.hpp"
#include "adsym/core/errors.hpp"
#include "adsym/core/linalg.hpp"

namespace adsym {

/// Truncated univariate Taylor polynomial ("jet") of configurable order
/// k <= 4, with coefficient type T (double, or Dual for one extra level of
/// differentiation through compositions).
///
/// Coefficients are Taylor coefficients: a jet represents
///   f(s) = c_0 + c_1 s + ... + c_k s^k,
/// so the k-th directional derivative is k! * c_k. Arithmetic follows the
/// standard truncated recurrences; order-0 jets behave exactly like plain
/// scalars.
template <class T = double>
class Jet {
 public:
  static constexpr int kMaxOrder = 4;

  Jet() = default;

  /// Order-0 constant. Coefficients beyond a jet's order are exact zeros, so
  /// constants combine with higher-order jets without losing terms.
  explicit Jet(const T& value) { c_[0] = value; }

  static Jet constant(const T& value, int order) {
    Jet j;
    j.order_ = checked(order);
    j.c_[0] = value;
    return j;
  }

  /// value + slope * s, the seed for differentiating along a direction.
  static Jet linear(const T& value, const T& slope, int order) {
    Jet j = constant(value, order);
    if (order >= 1) j.c_[1] = slope;
    return j;
  }

  int order() const { return order_; }
  const T& coefficient(int k) const { return c_[k]; }
  T& coefficient(int k) { return c_[k]; }

  /// k-th derivative at s = 0, i.e. k! * coefficient(k).
  T derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c_[k] * f;
  }

  /// Horner evaluation at s = h, using coefficients up to min(order, trunc).
  T eval(double h, int trunc) const {
    const int m = trunc < order_ ? trunc : order_;
    T r = c_[m];
    for (int k = m - 1; k >= 0; --k) r = r * h + c_[k];
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r = common(a, b);
    for (int k = 0; k <= r.order_; ++k) r.c_[k] = a.c_[k] + b.c_[k];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r = common(a, b);
    for (int k = 0; k <= r.order_; ++k) r.c_[k] = a.c_[k] - b.c_[k];
    return r;
  }
  friend Jet operator-(const Jet& a) {
    Jet r = a;
    for (int k = 0; k <= r.order_; ++k) r.c_[k] = -a.c_[k];
    return r;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r = common(a, b);
    for (int k = 0; k <= r.order_; ++k) {
      T s{};
      for (int j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
      r.c_[k] = s;
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r = common(a, b);
    for (int k = 0; k <= r.order_; ++k) {
      T s = a.c_[k];
      for (int j = 0; j < k; ++j) s -= r.c_[j] * b.c_[k - j];
      r.c_[k] = s / b.c_[0];
    }
    return r;
  }

  Jet& operator+=(const Jet& o) { return *this = *this + o; }
  Jet& operator-=(const Jet& o) { return *this = *this - o; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }

  // Mixed scalar forms keep templated evaluators readable.
  friend Jet operator+(const Jet& a, double b) {
    Jet r = a;
    r.c_[0] = r.c_[0] + b;
    return r;
  }
  friend Jet operator+(double a, const Jet& b) { return b + a; }
  friend Jet operator-(const Jet& a, double b) { return a + (-b); }
  friend Jet operator-(double a, const Jet& b) { return -b + a; }
  friend Jet operator*(const Jet& a, double b) {
    Jet r = a;
    for (int k = 0; k <= r.order_; ++k) r.c_[k] = r.c_[k] * b;
    return r;
  }
  friend Jet operator*(double a, const Jet& b) { return b * a; }
  friend Jet operator/(const Jet& a, double b) { return a * (1.0 / b); }
  friend Jet operator/(double a, const Jet& b) {
    return constant(T(a), b.order_) / b;
  }

  friend Jet sqrt(const Jet& a) {
    using std::sqrt;
    Jet r;
    r.order_ = a.order_;
    r.c_[0] = sqrt(a.c_[0]);
    for (int k = 1; k <= r.order_; ++k) {
      T s = a.c_[k];
      for (int j = 1; j < k; ++j) s -= r.c_[j] * r.c_[k - j];
      r.c_[k] = s / (r.c_[0] * 2.0);
    }
    return r;
  }

  /// Real-exponent power via the recurrence p' a = e p a'.
  friend Jet pow(const Jet& a, double e) {
    using std::pow;
    Jet r;
    r.order_ = a.order_;
    r.c_[0] = pow(a.c_[0], e);
    for (int k = 1; k <= r.order_; ++k) {
      T s{};
      for (int j = 0; j < k; ++j)
        s += (e * (k - j) - j) * (a.c_[k - j] * r.c_[j]);
      r.c_[k] = s / (a.c_[0] * static_cast<double>(k));
    }
    return r;
  }

  friend Jet abs(const Jet& a) { return value_of(a.c_[0]) < 0.0 ? -a : a; }

  friend Jet exp(const Jet& a) {
    using std::exp;
    Jet r;
    r.order_ = a.order_;
    r.c_[0] = exp(a.c_[0]);
    for (int k = 1; k <= r.order_; ++k) {
      T s{};
      for (int j = 1; j <= k; ++j) s += static_cast<double>(j) * (a.c_[j] * r.c_[k - j]);
      r.c_[k] = s / static_cast<double>(k);
    }
    return r;
  }

  friend Jet log(const Jet& a) {
    using std::log;
    Jet r;
    r.order_ = a.order_;
    r.c_[0] = log(a.c_[0]);
    for (int k = 1; k <= r.order_; ++k) {
      T s = a.c_[k] * static_cast<double>(k);
      for (int j = 1; j < k; ++j) s -= static_cast<double>(j) * (r.c_[j] * a.c_[k - j]);
      r.c_[k] = s / (a.c_[0] * static_cast<double>(k));
    }
    return r;
  }

  friend Jet sin(const Jet& a) { return sincos(a).first; }
  friend Jet cos(const Jet& a) { return sincos(a).second; }

  friend std::pair<Jet, Jet> sincos(const Jet& a) {
    using std::cos;
    using std::sin;
    Jet s, c;
    s.order_ = c.order_ = a.order_;
    s.c_[0] = sin(a.c_[0]);
    c.c_[0] = cos(a.c_[0]);
    for (int k = 1; k <= a.order_; ++k) {
      T ss{}, cc{};
      for (int j = 1; j <= k; ++j) {
        ss += static_cast<double>(j) * (a.c_[j] * c.c_[k - j]);
        cc += static_cast<double>(j) * (a.c_[j] * s.c_[k - j]);
      }
      s.c_[k] = ss / static_cast<double>(k);
      c.c_[k] = -cc / static_cast<double>(k);
    }
    return {s, c};
  }

 private:
  static int checked(int order) {
    if (order < 0 || order > kMaxOrder)
      throw std::invalid_argument("Jet order out of [0,4]");
    return order;
  }
  // Jets are zero-padded polynomials, so binary results carry the larger
  // order; missing coefficients of the shorter operand read as zero.
  static Jet common(const Jet& a, const Jet& b) {
    Jet r;
    r.order_ = a.order_ > b.order_ ? a.order_ : b.order_;
    return r;
  }

  std::array<T, kMaxOrder + 1> c_{};
  int order_ = 0;
};

using Jetd = Jet<double>;

template <class T>
double value_of(const Jet<T>& j) {
  return value_of(j.coefficient(0));
}

/// Evaluates a scalar field on the line x + s * direction as a jet,
/// yielding directional derivatives d^k/ds^k up to the requested order.
/// The field must be callable on Vec<Jet<double>>.
template <class F>
Jetd jet_lift(F&& field, const Vecd& x, const Vecd& direction, int order) {
  if (order < 0 || order > Jetd::kMaxOrder)
    throw std::invalid_argument("jet_lift: order out of [0,4]");
  Vec<Jetd> args(x.size());
  for (int i = 0; i < x.size(); ++i)
    args[i] = Jetd::linear(x[i], direction[i], order);
  Jetd y = field(args);
  for (int k = 0; k <= y.order(); ++k)
    if (!std::isfinite(y.coefficient(k)))
      throw NonFiniteError("jet_lift: non-finite derivative");
  return y;
}

}  // namespace adsym
