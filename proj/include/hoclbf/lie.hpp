#pragma once

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

#include "hoclbf/field.hpp"

namespace hoclbf {

namespace detail {

// Value and gradient of a field at nesting depth K, obtained by seeding
// one extra dual layer and evaluating the field at depth K+1.
template <int K>
std::pair<depth_t<K>, std::vector<depth_t<K>>> grad_at(const ScalarField& field,
                                                       std::span<const depth_t<K>> x) {
  using T = depth_t<K>;
  const size_t n = x.size();
  std::vector<Dual<T>> lifted(n);
  for (size_t j = 0; j < n; ++j) {
    lifted[j].v = x[j];
    lifted[j].d.assign(n, T(0.0));
    lifted[j].d[j] = T(1.0);
  }
  Dual<T> r = field.eval<K + 1>(std::span<const Dual<T>>(lifted));
  std::vector<T> g(n, T(0.0));
  for (size_t j = 0; j < r.d.size() && j < n; ++j) g[j] = r.d[j];
  return {std::move(r.v), std::move(g)};
}

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T s(0.0);
  for (size_t i = 0; i < a.size(); ++i) s = s + a[i] * b[i];
  return s;
}

inline std::span<const double> as_span(const Eigen::VectorXd& x) {
  return {x.data(), static_cast<size_t>(x.size())};
}

}  // namespace detail

struct GradResult {
  double value;
  Eigen::VectorXd gradient;
};

// Value and gradient of the field at x. Uses the analytic override when one
// was supplied, the jet evaluation otherwise.
inline GradResult grad(const ScalarField& field, const Eigen::VectorXd& x) {
  if (field.gradient_override()) {
    return {field(x), (*field.gradient_override())(x)};
  }
  auto [v, g] = detail::grad_at<0>(field, detail::as_span(x));
  return {v, Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<long>(g.size()))};
}

// One Lie step along the drift: returns the field  x -> grad(field)(x) . f(x),
// differentiable to one order less than its input.
inline ScalarField lie_f(const ScalarField& field, const AffineSystem& sys) {
  if (field.order() < 1)
    throw std::logic_error("lie_f needs a field differentiable at least once");
  const int out_order = field.order() - 1;
  auto step = [field, sys]<int K>(std::span<const depth_t<K>> x) {
    auto [v, g] = detail::grad_at<K>(field, x);
    (void)v;
    return detail::dot(g, sys.drift<K>(x));
  };
  return ScalarField::from_evaluators(
      [step](std::span<const D0> x) { return step.template operator()<0>(x); },
      out_order >= 1 ? std::function<D1(std::span<const D1>)>(
                           [step](std::span<const D1> x) { return step.template operator()<1>(x); })
                     : nullptr,
      out_order >= 2 ? std::function<D2(std::span<const D2>)>(
                           [step](std::span<const D2> x) { return step.template operator()<2>(x); })
                     : nullptr,
      out_order >= 3 ? std::function<D3(std::span<const D3>)>(
                           [step](std::span<const D3> x) { return step.template operator()<3>(x); })
                     : nullptr,
      nullptr, out_order);
}

// Control coefficient row grad(field)(x)^T g(x): the factor multiplying u in
// the field's time derivative along the dynamics.
inline Eigen::VectorXd lie_g_row(const ScalarField& field, const AffineSystem& sys,
                                 const Eigen::VectorXd& x) {
  GradResult gr = grad(field, x);
  return sys.input_at(x).transpose() * gr.gradient;
}

// Checks that u first shows up in the m-th derivative of the field along the
// dynamics: the control row of every lower Lie derivative vanishes at all
// samples and the (m-1)-th row is nonzero somewhere.
inline bool check_relative_degree(const ScalarField& field, const AffineSystem& sys, int m,
                                  const std::vector<Eigen::VectorXd>& samples) {
  if (m < 1) throw std::invalid_argument("relative degree must be >= 1");
  if (samples.empty()) throw std::invalid_argument("need at least one sample");
  if (field.order() < m)
    throw std::logic_error("field order too low for the requested relative degree");
  constexpr double kZeroTol = 1e-9;
  ScalarField level = field;
  for (int k = 0; k + 1 < m; ++k) {
    for (const auto& s : samples) {
      if (lie_g_row(level, sys, s).norm() >= kZeroTol) return false;
    }
    level = lie_f(level, sys);
  }
  for (const auto& s : samples) {
    if (lie_g_row(level, sys, s).norm() > kZeroTol) return true;
  }
  return false;
}

}  // namespace hoclbf
