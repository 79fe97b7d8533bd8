#pragma once

#include <cmath>

namespace adsym {

/// First-order forward-mode scalar: value plus one directional derivative.
/// Used to differentiate templated evaluators exactly, including through
/// truncated Taylor (jet) coefficients.
struct Dual {
  double v = 0.0;  ///< value
  double d = 0.0;  ///< derivative along the seeded direction

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design, mirrors double
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

inline Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const double q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}

inline Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
inline Dual operator+(double a, const Dual& b) { return {a + b.v, b.d}; }
inline Dual operator-(const Dual& a, double b) { return {a.v - b, a.d}; }
inline Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
inline Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }
inline Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }
inline Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }
inline Dual operator/(double a, const Dual& b) {
  const double q = a / b.v;
  return {q, -q * b.d / b.v};
}

inline Dual& operator+=(Dual& a, const Dual& b) { return a = a + b; }
inline Dual& operator-=(Dual& a, const Dual& b) { return a = a - b; }
inline Dual& operator*=(Dual& a, const Dual& b) { return a = a * b; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<(const Dual& a, double b) { return a.v < b; }
inline bool operator>(const Dual& a, double b) { return a.v > b; }

inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}

inline Dual pow(const Dual& a, double e) {
  const double p = std::pow(a.v, e);
  return {p, e * std::pow(a.v, e - 1.0) * a.d};
}

inline Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}

inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }

inline Dual sin(const Dual& a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }

}  // namespace adsym
