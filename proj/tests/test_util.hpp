#pragma once

#include <Eigen/Core>
#include <cmath>
#include <random>

#include "hoclbf/field.hpp"

namespace hoclbf::testing {

// Unicycle with constant forward speed; control is the angular rate.
inline AffineSystem unicycle(double v, double u_max) {
  auto drift = [v]<class Span>(Span x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{v * cos(x[2]), v * sin(x[2]), T(0.0)};
  };
  auto input = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd g(3, 1);
    g << 0.0, 0.0, 1.0;
    return g;
  };
  return AffineSystem::make(3, 1, drift, input, Eigen::VectorXd::Constant(1, -u_max),
                            Eigen::VectorXd::Constant(1, u_max));
}

// b1 of the unicycle study: R^2 - x^2 - y^2.
inline ScalarField disk_field(double r2 = 16.0) {
  return ScalarField::from([r2]<class Span>(Span x) {
    using T = std::decay_t<decltype(x[0])>;
    return T(r2) - x[0] * x[0] - x[1] * x[1];
  });
}

inline Eigen::VectorXd state3(double x, double y, double th) {
  Eigen::VectorXd s(3);
  s << x, y, th;
  return s;
}

inline Eigen::VectorXd paper_x0() { return state3(0.0, -7.7, M_PI / 4); }

}  // namespace hoclbf::testing
