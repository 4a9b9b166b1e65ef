#include "hoclbf/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hoclbf/errors.hpp"
#include "hoclbf/log.hpp"

namespace hoclbf {

namespace {

bool is_odd_power_or_root(double q) {
  constexpr double kTol = 1e-9;
  double r = std::round(q);
  if (r >= 1.0 && std::abs(q - r) < kTol && std::fmod(r, 2.0) == 1.0) return true;
  for (int k = 1; k <= 99; k += 2) {
    if (std::abs(q - 1.0 / k) < kTol) return true;
  }
  return false;
}

// Class-K power term p * beta(s) in T arithmetic. Levels with p == 0 are
// plain-derivative levels and contribute nothing.
template <class T>
T level_term(const ClassKSpec& lv, const T& s) {
  if (lv.p == 0.0) return T(0.0);
  if (lv.form == PowerForm::PlainPower) {
    double r = std::round(lv.q);
    if (r == lv.q) return lv.p * powi(s, static_cast<int>(r));
  }
  return lv.p * spow(s, lv.q);
}

// psi_i at nesting depth K by recursion: psi_i = grad(psi_{i-1}) . f + term.
template <int K>
depth_t<K> psi_eval(const BarrierChain& chain, const AffineSystem& sys, int i,
                    std::span<const depth_t<K>> x);

template <int K>
std::pair<depth_t<K>, std::vector<depth_t<K>>> psi_grad(const BarrierChain& chain,
                                                        const AffineSystem& sys, int i,
                                                        std::span<const depth_t<K>> x) {
  if constexpr (K >= kMaxJetDepth) {
    throw std::logic_error("psi-chain differentiated beyond the supported depth");
  } else {
    using T = depth_t<K>;
    const size_t n = x.size();
    std::vector<Dual<T>> lifted(n);
    for (size_t j = 0; j < n; ++j) {
      lifted[j].v = x[j];
      lifted[j].d.assign(n, T(0.0));
      lifted[j].d[j] = T(1.0);
    }
    Dual<T> r = psi_eval<K + 1>(chain, sys, i, std::span<const Dual<T>>(lifted));
    std::vector<T> g(n, T(0.0));
    for (size_t j = 0; j < r.d.size() && j < n; ++j) g[j] = r.d[j];
    return {std::move(r.v), std::move(g)};
  }
}

template <int K>
depth_t<K> psi_eval(const BarrierChain& chain, const AffineSystem& sys, int i,
                    std::span<const depth_t<K>> x) {
  using T = depth_t<K>;
  if (i == 0) return chain.predicate().eval<K>(x);
  if constexpr (K >= kMaxJetDepth) {
    throw std::logic_error("psi-chain differentiated beyond the supported depth");
  } else {
    auto [prev, g] = psi_grad<K>(chain, sys, i - 1, x);
    T psidot = detail::dot(g, sys.drift<K>(x));
    return psidot + level_term(chain.level(i), prev);
  }
}

// Same recursion with all class-K terms dropped: L_f^i of the predicate.
template <int K>
depth_t<K> lie_eval(const ScalarField& field, const AffineSystem& sys, int i,
                    std::span<const depth_t<K>> x) {
  if (i == 0) return field.eval<K>(x);
  if constexpr (K >= kMaxJetDepth) {
    throw std::logic_error("Lie derivative beyond the supported depth");
  } else {
    using T = depth_t<K>;
    const size_t n = x.size();
    std::vector<Dual<T>> lifted(n);
    for (size_t j = 0; j < n; ++j) {
      lifted[j].v = x[j];
      lifted[j].d.assign(n, T(0.0));
      lifted[j].d[j] = T(1.0);
    }
    Dual<T> r = lie_eval<K + 1>(field, sys, i - 1, std::span<const Dual<T>>(lifted));
    std::vector<T> g(n, T(0.0));
    for (size_t j = 0; j < r.d.size() && j < n; ++j) g[j] = r.d[j];
    return detail::dot(g, sys.drift<K>(x));
  }
}

std::span<const double> as_span(const Eigen::VectorXd& x) {
  return {x.data(), static_cast<size_t>(x.size())};
}

}  // namespace

BarrierChain::BarrierChain(ScalarField predicate, std::vector<ClassKSpec> levels,
                           ChainMode mode, ChainStructure structure, int m0)
    : predicate_(std::move(predicate)),
      levels_(std::move(levels)),
      mode_(mode),
      structure_(structure),
      m0_(m0) {
  const int m = degree();
  if (m < 1) throw std::invalid_argument("chain needs at least one level");
  if (m > kMaxJetDepth) throw std::invalid_argument("chain degree exceeds supported depth");
  if (predicate_.order() < m)
    throw std::invalid_argument("predicate not differentiable to the chain degree");
  if (m0_ < 1 || m0_ > m) throw std::invalid_argument("m0 out of range");
  for (const auto& lv : levels_) {
    if (lv.p < 0.0) throw std::invalid_argument("level gain must be >= 0");
    if (lv.q <= 0.0) throw std::invalid_argument("level exponent must be > 0");
    if (lv.form == PowerForm::PlainPower && !is_odd_power_or_root(lv.q))
      throw std::invalid_argument("plain power requires q = k or 1/k with odd k");
  }
}

BarrierChain BarrierChain::with_level(int i, ClassKSpec spec) const {
  BarrierChain c = *this;
  c.levels_.at(static_cast<size_t>(i - 1)) = spec;
  return c;
}

BarrierChain BarrierChain::with_m0(int m0) const {
  BarrierChain c = *this;
  if (m0 < 1 || m0 > degree()) throw std::invalid_argument("m0 out of range");
  c.m0_ = m0;
  return c;
}

BarrierChain BarrierChain::with_mode(ChainMode mode) const {
  BarrierChain c = *this;
  c.mode_ = mode;
  return c;
}

Eigen::VectorXd psi_values(const BarrierChain& chain, const AffineSystem& sys,
                           const Eigen::VectorXd& x) {
  const int m = chain.degree();
  Eigen::VectorXd out(m);
  for (int i = 0; i < m; ++i) out[i] = psi_eval<0>(chain, sys, i, as_span(x));
  return out;
}

Eigen::VectorXd lie_derivatives(const ScalarField& field, const AffineSystem& sys,
                                const Eigen::VectorXd& x, int count) {
  Eigen::VectorXd out(count + 1);
  for (int i = 0; i <= count; ++i) out[i] = lie_eval<0>(field, sys, i, as_span(x));
  return out;
}

ConstraintRow constraint_row(const BarrierChain& chain, const AffineSystem& sys,
                             const Eigen::VectorXd& x, const std::string& owner) {
  const int m = chain.degree();
  auto [value, g] = psi_grad<0>(chain, sys, m - 1, as_span(x));
  Eigen::Map<const Eigen::VectorXd> grad_v(g.data(), static_cast<long>(g.size()));

  ConstraintRow row;
  row.a = sys.input_at(x).transpose() * grad_v;
  row.c = grad_v.dot(sys.drift_at(x)) + level_term(chain.level(m), value);
  row.owner = owner;
  row.relaxable = chain.mode() == ChainMode::Class1;
  if (row.a.norm() < 1e-12 && row.c < 0.0)
    throw DegenerateRow("constraint row unsatisfiable: zero control coefficient, c = " +
                        std::to_string(row.c) + (owner.empty() ? "" : " (" + owner + ")"));
  return row;
}

ChainMode classify(const BarrierChain& chain) {
  for (const auto& lv : chain.levels()) {
    if (lv.q > 0.0 && lv.q < 1.0) return ChainMode::Class1;
  }
  return ChainMode::Class2;
}

int compute_m0(const Eigen::VectorXd& psi0_values, int m) {
  for (int i = 0; i < psi0_values.size() && i < m - 1; ++i) {
    if (psi0_values[i] > 0.0) return i + 1;
  }
  return m;
}

double finite_time_bound(double psi0, double p, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw InvalidExponent("finite-time bound requires q in (0,1), got q = " +
                          std::to_string(q));
  if (!(p > 0.0)) throw std::invalid_argument("finite-time bound requires p > 0");
  if (psi0 == 0.0) return 0.0;
  return std::pow(std::abs(psi0), 1.0 - q) / (p * (1.0 - q));
}

ClosedFormBound closed_form_lower_bound(double psi0, double p, double q, double t) {
  if (!(q > 0.0)) throw InvalidExponent("exponent must be > 0");
  if (!(p > 0.0)) throw std::invalid_argument("gain must be > 0");
  if (t < 0.0) throw std::invalid_argument("time must be >= 0");
  if (psi0 == 0.0) return {0.0, false};
  const double sign = psi0 > 0.0 ? 1.0 : -1.0;
  const double a = std::abs(psi0);
  if (q == 1.0) return {psi0 * std::exp(-p * t), false};
  if (q > 1.0) {
    // |psi| = (|psi0|^{1-q} + p(q-1)t)^{-1/(q-1)}
    return {sign * std::pow(std::pow(a, 1.0 - q) + p * (q - 1.0) * t, -1.0 / (q - 1.0)),
            false};
  }
  const double w = std::pow(a, 1.0 - q) - p * (1.0 - q) * t;
  if (w <= 0.0) return {0.0, w < 0.0};
  return {sign * std::pow(w, 1.0 / (1.0 - q)), false};
}

BarrierChain switch_update(const BarrierChain& chain, const AffineSystem& sys,
                           const Eigen::VectorXd& x, double eps_switch, double q_class2) {
  if (chain.mode() != ChainMode::Class1) return chain;
  constexpr double kPFloor = 0.1;
  constexpr double kMargin = 0.5;
  // A grazing crossing would ask for an unbounded gain; the cap keeps the
  // promoted row's coefficients at a scale the discretized QP can track.
  constexpr double kPCap = 10.0;

  BarrierChain updated = chain;
  for (int i = 1; i <= updated.degree(); ++i) {
    const ClassKSpec& lv = updated.level(i);
    const bool unpromoted = lv.p == 0.0 || lv.q < 1.0;
    if (!unpromoted) continue;
    // Argument of level i is psi_{i-1}, evaluated under the levels promoted
    // so far.
    Eigen::VectorXd psis = psi_values(updated, sys, x);
    const double arg = psis[i - 1];
    if (arg <= eps_switch) continue;
    // Drift part of d/dt psi_{i-1}; with q = q_class2 >= 1 the new gain keeps
    // psi_i(x) >= kMargin * arg > 0 at the switch state.
    auto [prev, g] = psi_grad<0>(updated, sys, i - 1, as_span(x));
    (void)prev;
    Eigen::Map<const Eigen::VectorXd> grad_v(g.data(), static_cast<long>(g.size()));
    const double psidot = grad_v.dot(sys.drift_at(x));
    const double p_new = std::clamp(-psidot / arg + kMargin, kPFloor, kPCap);
    updated = updated.with_level(i, ClassKSpec{p_new, q_class2, PowerForm::SignedPower});
  }

  // The finite-time slot sits at the highest level still waiting its turn;
  // promotions above it pull the slot down, and m0 never increases.
  int new_m0 = 0;
  for (int i = updated.degree(); i >= 1; --i) {
    const ClassKSpec& lv = updated.level(i);
    if (lv.p == 0.0 || lv.q < 1.0) {
      new_m0 = i;
      break;
    }
  }
  if (new_m0 == 0) {
    updated = updated.with_mode(ChainMode::Class2);
  } else {
    updated = updated.with_m0(std::min(updated.m0(), new_m0));
  }
  return updated;
}

double convergence_time_upper_bound(const BarrierChain& chain,
                                    const Eigen::VectorXd& psi_at_crossings) {
  if (chain.mode() != ChainMode::Class1)
    throw std::invalid_argument("convergence bound applies to Class 1 chains");
  const int m0 = chain.m0();
  if (psi_at_crossings.size() < m0)
    throw std::invalid_argument("need one psi value per level up to m0");
  double total = 0.0;
  for (int i = 1; i <= m0; ++i) {
    const ClassKSpec& lv = chain.level(i);
    total += finite_time_bound(psi_at_crossings[i - 1], lv.p, lv.q);
  }
  return total;
}

}  // namespace hoclbf
