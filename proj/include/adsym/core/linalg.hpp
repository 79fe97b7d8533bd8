#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <utility>

#include "adsym/core/dual.hpp"
#include "adsym/core/errors.hpp"

namespace adsym {

/// Dense vector with inline storage. Phase-space dimensions here are tiny
/// (extended Kepler is 3+3), so no heap allocation anywhere on the hot path.
template <class S = double>
class Vec {
 public:
  static constexpr int kMaxDim = 12;

  Vec() = default;
  explicit Vec(int n) : n_(checked(n)) {}
  Vec(std::initializer_list<S> xs) : n_(checked(static_cast<int>(xs.size()))) {
    int i = 0;
    for (const S& x : xs) v_[i++] = x;
  }

  static Vec filled(int n, const S& value) {
    Vec r(n);
    for (int i = 0; i < n; ++i) r.v_[i] = value;
    return r;
  }

  int size() const { return n_; }
  S& operator[](int i) { return v_[i]; }
  const S& operator[](int i) const { return v_[i]; }

  Vec head(int m) const {
    Vec r(m);
    for (int i = 0; i < m; ++i) r.v_[i] = v_[i];
    return r;
  }

  /// Returns (v..., extra) with one appended component.
  Vec appended(const S& extra) const {
    Vec r(n_ + 1);
    for (int i = 0; i < n_; ++i) r.v_[i] = v_[i];
    r.v_[n_] = extra;
    return r;
  }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n_; ++i) v_[i] += o.v_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n_; ++i) v_[i] -= o.v_[i];
    return *this;
  }
  template <class C>
  Vec& operator*=(const C& c) {
    for (int i = 0; i < n_; ++i) v_[i] = v_[i] * c;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator-(Vec a) {
    for (int i = 0; i < a.n_; ++i) a.v_[i] = -a.v_[i];
    return a;
  }

 private:
  static int checked(int n) {
    if (n < 0 || n > kMaxDim) throw std::length_error("Vec dimension out of range");
    return n;
  }

  std::array<S, kMaxDim> v_{};
  int n_ = 0;
};

using Vecd = Vec<double>;

template <class S, class C>
Vec<S> operator*(Vec<S> a, const C& c) {
  return a *= c;
}
template <class S, class C>
Vec<S> operator*(const C& c, Vec<S> a) {
  return a *= c;
}

template <class S>
S dot(const Vec<S>& a, const Vec<S>& b) {
  S s{};
  for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <class S>
S norm(const Vec<S>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

inline double max_abs(const Vecd& a) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

inline bool all_finite(const Vecd& a) {
  for (int i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i])) return false;
  return true;
}

/// Dense matrix with inline storage, same size regime as Vec.
template <class S = double>
class Mat {
 public:
  static constexpr int kMaxDim = Vec<S>::kMaxDim;

  Mat() = default;
  Mat(int rows, int cols) : r_(checked(rows)), c_(checked(cols)) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = S(1.0);
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  S& operator()(int i, int j) { return v_[i * c_ + j]; }
  const S& operator()(int i, int j) const { return v_[i * c_ + j]; }

  void set_column(int j, const Vec<S>& col) {
    for (int i = 0; i < r_; ++i) (*this)(i, j) = col[i];
  }

 private:
  static int checked(int n) {
    if (n < 0 || n > kMaxDim) throw std::length_error("Mat dimension out of range");
    return n;
  }

  std::array<S, kMaxDim * kMaxDim> v_{};
  int r_ = 0;
  int c_ = 0;
};

using Matd = Mat<double>;

/// Matrix-vector product; scalar types may differ (a double matrix applied
/// to a jet- or dual-valued vector).
template <class S, class T>
Vec<T> apply(const Mat<S>& m, const Vec<T>& x) {
  Vec<T> y(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    T s{};
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

template <class S>
Mat<S> outer(const Vec<S>& a, const Vec<S>& b) {
  Mat<S> m(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

inline double max_abs(const Matd& m) {
  double r = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r = std::max(r, std::abs(m(i, j)));
  return r;
}

/// Solves Ax = b by Gaussian elimination with partial pivoting.
/// A pivot below 1e-14 * max|A_ij| raises SingularMatrixError.
inline Vecd solve_linear(Matd a, Vecd b) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw std::invalid_argument("solve_linear: dimension mismatch");
  const int n = a.rows();
  const double threshold = 1e-14 * max_abs(a);

  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (std::abs(a(pivot, k)) <= threshold)
      throw SingularMatrixError("solve_linear: singular matrix (pivot below threshold)");
    if (pivot != k) {
      for (int j = k; j < n; ++j) std::swap(a(k, j), a(pivot, j));
      std::swap(b[k], b[pivot]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }

  Vecd x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

/// Determinant by the same elimination; returns 0 when a pivot vanishes.
inline double determinant(Matd a) {
  const int n = a.rows();
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (a(pivot, k) == 0.0) return 0.0;
    if (pivot != k) {
      for (int j = k; j < n; ++j) std::swap(a(k, j), a(pivot, j));
      det = -det;
    }
    det *= a(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

}  // namespace adsym
