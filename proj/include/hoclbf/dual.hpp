#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hoclbf/errors.hpp"
#include "hoclbf/log.hpp"

namespace hoclbf {

// ============================================================
// Truncated first-order dual numbers, nestable for higher-order
// directional derivatives.
//
// A Dual<T> carries a value and its partials with respect to the
// seeded coordinates. An empty partials vector means "all zero",
// which lets plain constants stay cheap at any nesting depth.
// Nesting (Dual<Dual<double>> and so on) yields exact higher-order
// derivatives through the chain rule.
// ============================================================

template <class T>
struct Dual {
  T v{};
  std::vector<T> d;  // empty == zero vector

  Dual() = default;
  Dual(double c) : v(c) {}  // NOLINT: implicit constant promotion is the point
  Dual(T value, std::vector<T> partials) : v(std::move(value)), d(std::move(partials)) {}
};

using D0 = double;
using D1 = Dual<D0>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;
using D4 = Dual<D3>;

// Maximum supported nesting depth (chains of relative degree <= 4).
inline constexpr int kMaxJetDepth = 4;

inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) { return primal(x.v); }

// ---- arithmetic ----

template <class T>
Dual<T> operator-(const Dual<T>& a) {
  Dual<T> r;
  r.v = -a.v;
  r.d.reserve(a.d.size());
  for (const auto& di : a.d) r.d.push_back(-di);
  return r;
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.v = a.v + b.v;
  if (a.d.empty()) {
    r.d = b.d;
  } else if (b.d.empty()) {
    r.d = a.d;
  } else {
    r.d.resize(a.d.size());
    for (size_t i = 0; i < a.d.size(); ++i) r.d[i] = a.d[i] + b.d[i];
  }
  return r;
}

template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.v = a.v - b.v;
  if (b.d.empty()) {
    r.d = a.d;
  } else if (a.d.empty()) {
    r.d.resize(b.d.size());
    for (size_t i = 0; i < b.d.size(); ++i) r.d[i] = -b.d[i];
  } else {
    r.d.resize(a.d.size());
    for (size_t i = 0; i < a.d.size(); ++i) r.d[i] = a.d[i] - b.d[i];
  }
  return r;
}

template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.v = a.v * b.v;
  if (a.d.empty() && b.d.empty()) return r;
  if (a.d.empty()) {
    r.d.resize(b.d.size());
    for (size_t i = 0; i < b.d.size(); ++i) r.d[i] = a.v * b.d[i];
  } else if (b.d.empty()) {
    r.d.resize(a.d.size());
    for (size_t i = 0; i < a.d.size(); ++i) r.d[i] = a.d[i] * b.v;
  } else {
    r.d.resize(a.d.size());
    for (size_t i = 0; i < a.d.size(); ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  }
  return r;
}

template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.v = a.v / b.v;
  if (a.d.empty() && b.d.empty()) return r;
  const size_t n = a.d.empty() ? b.d.size() : a.d.size();
  r.d.resize(n);
  const T inv_b2 = T(1.0) / (b.v * b.v);
  for (size_t i = 0; i < n; ++i) {
    const T ad = i < a.d.size() && !a.d.empty() ? a.d[i] : T(0.0);
    const T bd = i < b.d.size() && !b.d.empty() ? b.d[i] : T(0.0);
    r.d[i] = (ad * b.v - a.v * bd) * inv_b2;
  }
  return r;
}

template <class T> Dual<T> operator+(const Dual<T>& a, double b) { return a + Dual<T>(b); }
template <class T> Dual<T> operator+(double a, const Dual<T>& b) { return Dual<T>(a) + b; }
template <class T> Dual<T> operator-(const Dual<T>& a, double b) { return a - Dual<T>(b); }
template <class T> Dual<T> operator-(double a, const Dual<T>& b) { return Dual<T>(a) - b; }
template <class T> Dual<T> operator*(const Dual<T>& a, double b) { return a * Dual<T>(b); }
template <class T> Dual<T> operator*(double a, const Dual<T>& b) { return Dual<T>(a) * b; }
template <class T> Dual<T> operator/(const Dual<T>& a, double b) { return a / Dual<T>(b); }
template <class T> Dual<T> operator/(double a, const Dual<T>& b) { return Dual<T>(a) / b; }

// ---- elementary functions ----
// Unqualified calls below resolve to these for Dual and to std:: for double.

using std::abs;
using std::cos;
using std::exp;
using std::pow;
using std::sin;
using std::sqrt;

namespace detail {

// f applied to x with local derivative dfdx, pushed through the partials.
template <class T>
Dual<T> lift(const Dual<T>& x, T value, const T& dfdx) {
  Dual<T> r;
  r.v = std::move(value);
  r.d.reserve(x.d.size());
  for (const auto& di : x.d) r.d.push_back(dfdx * di);
  return r;
}

}  // namespace detail

template <class T>
Dual<T> sin(const Dual<T>& x) {
  return detail::lift(x, sin(x.v), cos(x.v));
}

template <class T>
Dual<T> cos(const Dual<T>& x) {
  return detail::lift(x, cos(x.v), T(0.0) - sin(x.v));
}

template <class T>
Dual<T> exp(const Dual<T>& x) {
  T e = exp(x.v);
  return detail::lift(x, e, e);
}

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  if (primal(x) <= 0.0)
    throw NonDifferentiable("sqrt evaluated at a non-positive argument");
  T s = sqrt(x.v);
  return detail::lift(x, s, T(0.5) / s);
}

template <class T>
Dual<T> abs(const Dual<T>& x) {
  const double sign = primal(x) > 0.0 ? 1.0 : (primal(x) < 0.0 ? -1.0 : 0.0);
  return detail::lift(x, sign > 0 ? x.v : T(0.0) - x.v, T(sign));
}

// Integer power, valid for any sign of the base.
inline double powi(double x, int k) {
  return std::pow(x, k);
}
template <class T>
Dual<T> powi(const Dual<T>& x, int k) {
  if (k == 0) return Dual<T>(1.0);
  T value = powi(x.v, k);
  T dfdx = double(k) * powi(x.v, k - 1);
  return detail::lift(x, std::move(value), dfdx);
}

// Real-exponent power. Requires a positive base unless the exponent is an
// exact integer; throws NonDifferentiable on the q < 1 kink at base == 0.
inline double rpow(double x, double q) {
  if (double r = std::round(q); r == q && std::abs(q) < 64) return powi(x, int(r));
  if (x < 0.0) throw NonDifferentiable("negative base with non-integer exponent");
  if (x == 0.0 && q < 1.0)
    throw NonDifferentiable("x^q with q < 1 evaluated at x = 0");
  return std::pow(x, q);
}
template <class T>
Dual<T> rpow(const Dual<T>& x, double q) {
  if (double r = std::round(q); r == q && std::abs(q) < 64) return powi(x, int(r));
  const double xv = primal(x);
  if (xv < 0.0) throw NonDifferentiable("negative base with non-integer exponent");
  if (xv == 0.0 && q < 1.0)
    throw NonDifferentiable("x^q with q < 1 evaluated at x = 0");
  T value = rpow(x.v, q);
  T dfdx = q * rpow(x.v, q - 1.0);
  return detail::lift(x, std::move(value), dfdx);
}

// Sign-preserving power sign(x)|x|^q, the extended power class-K form.
// Its slope at 0 blows up for q < 1; there the derivative is clamped to a
// large finite constant so a crossing instant does not propagate NaNs.
inline constexpr double kSpowDerivativeClamp = 1e12;

inline double spow(double x, double q) {
  if (x == 0.0) return 0.0;
  return x > 0.0 ? std::pow(x, q) : -std::pow(-x, q);
}

namespace detail {
// Slope of spow at the primal point; finite clamp at the q<1 kink.
inline double spow_slope(double x, double q, bool* clamped) {
  const double ax = std::abs(x);
  if (ax == 0.0) {
    if (q > 1.0) return 0.0;
    if (q == 1.0) return 1.0;
    *clamped = true;
    return kSpowDerivativeClamp;
  }
  double s = q * std::pow(ax, q - 1.0);
  if (s > kSpowDerivativeClamp) {
    *clamped = true;
    s = kSpowDerivativeClamp;
  }
  return s;
}
}  // namespace detail

inline double spow_slope(double x, double q) {
  bool clamped = false;
  double s = detail::spow_slope(x, q, &clamped);
  if (clamped) log_warn("sign-preserving power slope clamped near 0");
  return s;
}

template <class T>
Dual<T> spow(const Dual<T>& x, double q) {
  const double xv = primal(x);
  bool clamped = false;
  const double slope = detail::spow_slope(xv, q, &clamped);
  if (clamped) {
    // Freeze the slope at the primal point: |.|^q for q<1 is not twice
    // differentiable near 0, and evaluating the slope in T arithmetic would
    // reintroduce the blow-up one level down.
    log_warn("sign-preserving power slope clamped near 0");
    return detail::lift(x, T(spow(xv, q)), T(slope));
  }
  if (xv == 0.0) return detail::lift(x, T(0.0), T(slope));
  T ax = xv > 0.0 ? x.v : T(0.0) - x.v;
  T value = rpow(ax, q);
  if (xv < 0.0) value = T(0.0) - value;
  T dfdx = q * rpow(ax, q - 1.0);
  return detail::lift(x, std::move(value), dfdx);
}

}  // namespace hoclbf
