#include <doctest.h>

#include <cmath>
#include <random>

#include "hoclbf/dual.hpp"
#include "hoclbf/errors.hpp"

using namespace hoclbf;

namespace {

D1 seed(double v, int i, int n) {
  D1 d(v);
  d.d.assign(static_cast<size_t>(n), 0.0);
  d.d[static_cast<size_t>(i)] = 1.0;
  return d;
}

}  // namespace

TEST_CASE("arithmetic chain rule on a rational expression") {
  // f(a, b) = (a*b + sin(a)) / (1 + b^2)
  auto f = [](auto a, auto b) { return (a * b + sin(a)) / (1.0 + b * b); };
  const double a = 0.7, b = -1.3;
  D1 fa = f(seed(a, 0, 2), seed(b, 1, 2));
  const double denom = 1 + b * b;
  const double dfda = (b + std::cos(a)) / denom;
  const double dfdb = (a * denom - (a * b + std::sin(a)) * 2 * b) / (denom * denom);
  CHECK(fa.v == doctest::Approx(f(a, b)).epsilon(1e-15));
  CHECK(fa.d[0] == doctest::Approx(dfda).epsilon(1e-14));
  CHECK(fa.d[1] == doctest::Approx(dfdb).epsilon(1e-14));
}

TEST_CASE("polynomial derivatives are exact to rounding") {
  // p(x) = 3x^4 - 2x^3 + x - 7, p'(x) = 12x^3 - 6x^2 + 1
  auto p = [](auto x) { return 3.0 * powi(x, 4) - 2.0 * powi(x, 3) + x - 7.0; };
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    double x = dist(rng);
    D1 r = p(seed(x, 0, 1));
    double exact = 12 * x * x * x - 6 * x * x + 1;
    CHECK(r.d[0] == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("nested duals give second derivatives") {
  // f(x) = sin(x) * x^2; f'' = 2 sin x + 4x cos x - x^2 sin x
  auto f = [](auto x) { return sin(x) * x * x; };
  const double x = 1.1;
  Dual<D1> xx;
  xx.v = seed(x, 0, 1);
  xx.d.assign(1, D1(1.0));
  Dual<D1> r = f(xx);
  const double fpp = 2 * std::sin(x) + 4 * x * std::cos(x) - x * x * std::sin(x);
  CHECK(primal(r) == doctest::Approx(std::sin(x) * x * x));
  CHECK(r.d[0].v == doctest::Approx(std::cos(x) * x * x + 2 * x * std::sin(x)));
  CHECK(r.v.d[0] == doctest::Approx(r.d[0].v));  // mixed partials agree
  CHECK(r.d[0].d[0] == doctest::Approx(fpp).epsilon(1e-13));
}

TEST_CASE("third-order nesting matches the analytic derivative") {
  // f(x) = x^5: f''' = 60 x^2
  auto f = [](auto x) { return powi(x, 5); };
  const double x = 0.9;
  D3 lifted;
  lifted.v.v.v = x;
  lifted.v.v.d = {1.0};
  lifted.v.d = {D1(1.0)};
  lifted.d = {D2(1.0)};
  D3 r = f(lifted);
  CHECK(r.d[0].d[0].d[0] == doctest::Approx(60 * x * x).epsilon(1e-12));
}

TEST_CASE("signed power behaves at and near zero") {
  CHECK(spow(0.0, 1.0 / 3.0) == 0.0);
  CHECK(spow(-8.0, 1.0 / 3.0) == doctest::Approx(-2.0));
  CHECK(spow(8.0, 1.0 / 3.0) == doctest::Approx(2.0));
  // slope clamp at the q < 1 kink
  CHECK(spow_slope(0.0, 0.5) == kSpowDerivativeClamp);
  CHECK(spow_slope(0.0, 1.0) == 1.0);
  CHECK(spow_slope(0.0, 2.0) == 0.0);
  D1 at_zero = spow(seed(0.0, 0, 1), 1.0 / 3.0);
  CHECK(at_zero.v == 0.0);
  CHECK(at_zero.d[0] == kSpowDerivativeClamp);
}

TEST_CASE("real-exponent power rejects the non-differentiable kink") {
  CHECK_THROWS_AS(rpow(0.0, 0.5), NonDifferentiable);
  CHECK_THROWS_AS(rpow(-1.0, 0.5), NonDifferentiable);
  CHECK(rpow(-2.0, 3.0) == doctest::Approx(-8.0));  // integer exponents stay legal
  CHECK(rpow(4.0, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("division with empty partials acts as constants") {
  D1 c(3.0);  // constant: no partials
  D1 x = seed(2.0, 0, 1);
  D1 r = c / x;
  CHECK(r.v == doctest::Approx(1.5));
  CHECK(r.d[0] == doctest::Approx(-3.0 / 4.0));
}
