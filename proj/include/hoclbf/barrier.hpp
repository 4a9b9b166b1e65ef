#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hoclbf/field.hpp"
#include "hoclbf/lie.hpp"

namespace hoclbf {

// ============================================================
// psi-chains for high order control barrier / Lyapunov-barrier
// functions. A chain is a predicate b together with per-level
// extended class-K power terms:
//
//   psi_0 = b
//   psi_i = d/dt psi_{i-1} + p_i * beta_i(psi_{i-1})
//
// Levels with p_i == 0 carry no class-K term, which is how the
// staged structure (only the m0 level gets a finite-time term,
// lower levels are plain derivatives) is represented.
// ============================================================

enum class PowerForm {
  PlainPower,   // s^q, valid for q = k or 1/k with odd k >= 1
  SignedPower,  // sign(s)|s|^q, valid for any q > 0
};

struct ClassKSpec {
  double p = 1.0;
  double q = 1.0;
  PowerForm form = PowerForm::SignedPower;
};

enum class ChainMode { Hocbf, Class1, Class2 };
enum class ChainStructure { Standard, GStructure };

// One linear-in-u inequality a . u + c >= 0 at a frozen state.
struct ConstraintRow {
  Eigen::VectorXd a;
  double c = 0.0;
  std::string owner;
  bool relaxable = false;
};

struct ClosedFormBound {
  double value = 0.0;
  bool past_horizon = false;
};

class BarrierChain {
public:
  BarrierChain() = default;
  BarrierChain(ScalarField predicate, std::vector<ClassKSpec> levels, ChainMode mode,
               ChainStructure structure = ChainStructure::Standard, int m0 = 1);

  const ScalarField& predicate() const { return predicate_; }
  int degree() const { return static_cast<int>(levels_.size()); }
  const ClassKSpec& level(int i) const { return levels_.at(static_cast<size_t>(i - 1)); }
  const std::vector<ClassKSpec>& levels() const { return levels_; }
  ChainMode mode() const { return mode_; }
  ChainStructure structure() const { return structure_; }
  int m0() const { return m0_; }

  BarrierChain with_level(int i, ClassKSpec spec) const;
  BarrierChain with_m0(int m0) const;
  BarrierChain with_mode(ChainMode mode) const;

private:
  ScalarField predicate_;
  std::vector<ClassKSpec> levels_;
  ChainMode mode_ = ChainMode::Class2;
  ChainStructure structure_ = ChainStructure::Standard;
  int m0_ = 1;
};

// Values psi_0 .. psi_{m-1} at x, computed by full recursion through the
// drift (u never appears below the final level for a chain of matching
// relative degree).
Eigen::VectorXd psi_values(const BarrierChain& chain, const AffineSystem& sys,
                           const Eigen::VectorXd& x);

// Plain iterated Lie derivatives b, L_f b, ..., L_f^count b at x.
Eigen::VectorXd lie_derivatives(const ScalarField& field, const AffineSystem& sys,
                                const Eigen::VectorXd& x, int count);

// The final-level constraint psi_m >= 0, linearized in u at the frozen
// state: a = grad(psi_{m-1})^T g,  c = grad(psi_{m-1}) . f + p_m beta_m(psi_{m-1}).
// Throws DegenerateRow when ||a|| vanishes and c < 0.
ConstraintRow constraint_row(const BarrierChain& chain, const AffineSystem& sys,
                             const Eigen::VectorXd& x, const std::string& owner = "");

// Class 1 iff some exponent lies in (0,1); Class 2 otherwise.
ChainMode classify(const BarrierChain& chain);

// Smallest 1-based index whose start value is positive, else m.
// `psi0_values` holds psi_1 .. psi_{m-1} at the current time.
int compute_m0(const Eigen::VectorXd& psi0_values, int m);

// Time for the finite-time lower bound to reach 0: |psi0|^{1-q} / (p (1-q)).
double finite_time_bound(double psi0, double p, double q);

// Exact solution of  psi' = -p sign(psi)|psi|^q  from psi(0) = psi0.
// For q < 1 the value is 0 from the finite-time horizon onward and the
// past_horizon flag is set once t strictly exceeds it.
ClosedFormBound closed_form_lower_bound(double psi0, double p, double q, double t);

// Promotes every level whose argument has crossed positive (beyond the
// switch tolerance) to the class-2 exponent, recomputing its gain so the
// updated level value stays positive at x. Once all levels are promoted the
// chain mode becomes Class2. Chains not in Class1 mode are returned as-is.
BarrierChain switch_update(const BarrierChain& chain, const AffineSystem& sys,
                           const Eigen::VectorXd& x, double eps_switch = 1e-3,
                           double q_class2 = 1.0);

// Sum of per-level finite-time bounds for levels 1..m0, seeded with the
// supplied psi values at the respective crossing instants.
double convergence_time_upper_bound(const BarrierChain& chain,
                                    const Eigen::VectorXd& psi_at_crossings);

}  // namespace hoclbf
