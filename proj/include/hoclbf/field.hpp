#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hoclbf/dual.hpp"

namespace hoclbf {

template <int K>
struct depth_type;
template <> struct depth_type<0> { using type = D0; };
template <> struct depth_type<1> { using type = D1; };
template <> struct depth_type<2> { using type = D2; };
template <> struct depth_type<3> { using type = D3; };
template <> struct depth_type<4> { using type = D4; };
template <int K>
using depth_t = typename depth_type<K>::type;

// ============================================================
// A scalar function of the state, evaluable in nested dual
// arithmetic up to a declared derivative order. This is what
// barrier predicates and psi-chain levels are made of.
// ============================================================

class ScalarField {
public:
  ScalarField() = default;

  // Wraps a generic callable T(std::span<const T>) valid for any scalar T.
  template <class F>
  static ScalarField from(F f, int order = kMaxJetDepth) {
    ScalarField s;
    s.order_ = order;
    s.e0_ = [f](std::span<const D0> x) { return f(x); };
    if (order >= 1) s.e1_ = [f](std::span<const D1> x) { return f(x); };
    if (order >= 2) s.e2_ = [f](std::span<const D2> x) { return f(x); };
    if (order >= 3) s.e3_ = [f](std::span<const D3> x) { return f(x); };
    if (order >= 4) s.e4_ = [f](std::span<const D4> x) { return f(x); };
    return s;
  }

  // Assembles a field from per-depth evaluators (used by composition).
  static ScalarField from_evaluators(
      std::function<D0(std::span<const D0>)> e0,
      std::function<D1(std::span<const D1>)> e1,
      std::function<D2(std::span<const D2>)> e2,
      std::function<D3(std::span<const D3>)> e3,
      std::function<D4(std::span<const D4>)> e4, int order) {
    ScalarField s;
    s.e0_ = std::move(e0);
    s.e1_ = std::move(e1);
    s.e2_ = std::move(e2);
    s.e3_ = std::move(e3);
    s.e4_ = std::move(e4);
    s.order_ = order;
    return s;
  }

  bool valid() const { return static_cast<bool>(e0_); }
  int order() const { return order_; }

  template <int K>
  depth_t<K> eval(std::span<const depth_t<K>> x) const {
    if constexpr (K == 0) { return e0_(x); }
    else if constexpr (K == 1) { require(1); return e1_(x); }
    else if constexpr (K == 2) { require(2); return e2_(x); }
    else if constexpr (K == 3) { require(3); return e3_(x); }
    else { require(4); return e4_(x); }
  }

  double operator()(Eigen::Ref<const Eigen::VectorXd> x) const {
    return e0_(std::span<const double>(x.data(), static_cast<size_t>(x.size())));
  }

  void set_gradient_override(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> g) {
    grad_override_ = std::move(g);
  }
  const std::optional<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>>&
  gradient_override() const {
    return grad_override_;
  }

private:
  void require(int depth) const {
    if (order_ < depth)
      throw std::logic_error("field differentiated beyond its declared order");
  }

  std::function<D0(std::span<const D0>)> e0_;
  std::function<D1(std::span<const D1>)> e1_;
  std::function<D2(std::span<const D2>)> e2_;
  std::function<D3(std::span<const D3>)> e3_;
  std::function<D4(std::span<const D4>)> e4_;
  int order_ = 0;
  std::optional<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>> grad_override_;
};

// ============================================================
// Affine control system  x' = f(x) + g(x) u  with box-bounded u.
// The drift is evaluable in dual arithmetic so psi-chains can be
// differentiated through it; the input matrix is only ever needed
// at plain states.
// ============================================================

class AffineSystem {
public:
  AffineSystem() = default;

  template <class FDrift>
  static AffineSystem make(int n, int q, FDrift drift,
                           std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> input,
                           Eigen::VectorXd u_min, Eigen::VectorXd u_max) {
    if (u_min.size() != q || u_max.size() != q)
      throw std::invalid_argument("control bound dimension mismatch");
    for (int i = 0; i < q; ++i)
      if (!(u_min[i] <= u_max[i]))
        throw std::invalid_argument("u_min must be <= u_max componentwise");
    AffineSystem s;
    s.n_ = n;
    s.q_ = q;
    s.f0_ = [drift](std::span<const D0> x) { return drift(x); };
    s.f1_ = [drift](std::span<const D1> x) { return drift(x); };
    s.f2_ = [drift](std::span<const D2> x) { return drift(x); };
    s.f3_ = [drift](std::span<const D3> x) { return drift(x); };
    s.input_ = std::move(input);
    s.u_min_ = std::move(u_min);
    s.u_max_ = std::move(u_max);
    return s;
  }

  int state_dim() const { return n_; }
  int control_dim() const { return q_; }

  template <int K>
  std::vector<depth_t<K>> drift(std::span<const depth_t<K>> x) const {
    static_assert(K <= 3, "drift supports nesting depth <= 3");
    if constexpr (K == 0) return f0_(x);
    else if constexpr (K == 1) return f1_(x);
    else if constexpr (K == 2) return f2_(x);
    else return f3_(x);
  }

  Eigen::VectorXd drift_at(const Eigen::VectorXd& x) const {
    auto v = f0_(std::span<const double>(x.data(), static_cast<size_t>(x.size())));
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
  }

  Eigen::MatrixXd input_at(const Eigen::VectorXd& x) const { return input_(x); }

  const Eigen::VectorXd& u_min() const { return u_min_; }
  const Eigen::VectorXd& u_max() const { return u_max_; }

private:
  int n_ = 0;
  int q_ = 0;
  std::function<std::vector<D0>(std::span<const D0>)> f0_;
  std::function<std::vector<D1>(std::span<const D1>)> f1_;
  std::function<std::vector<D2>(std::span<const D2>)> f2_;
  std::function<std::vector<D3>(std::span<const D3>)> f3_;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> input_;
  Eigen::VectorXd u_min_, u_max_;
};

}  // namespace hoclbf
