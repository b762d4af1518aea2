#include "bergman/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace bergman;

TEST_CASE("one-dimensional rules") {
  const Rule1D g = gauss_legendre(6, 0.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.w[i] * std::pow(g.x[i], 11);
  CHECK(s == doctest::Approx(std::pow(2.0, 12) / 12.0).epsilon(1e-13));
  // int_0^1 (1 - x)^{-1/2} x^2 dx = B(3, 1/2) = 16/15
  const Rule1D j = gauss_jacobi_right(8, 0.0, 1.0, 0.5);
  double t = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) t += j.w[i] * j.x[i] * j.x[i] / std::sqrt(1.0 - j.x[i]);
  CHECK(t == doctest::Approx(16.0 / 15.0).epsilon(1e-10));
}

TEST_CASE("volumes and areas") {
  CHECK(volume_rule(make_ball(1)).total_weight() == doctest::Approx(M_PI).epsilon(1e-3));
  CHECK(volume_rule(make_ball(2)).total_weight() == doctest::Approx(M_PI * M_PI / 2).epsilon(1e-3));
  CHECK(std::abs(surface_rule(make_ball(1)).total_weight() - 2 * M_PI) < 1e-6);
  CHECK(surface_rule(make_ball(2)).total_weight() == doctest::Approx(2 * M_PI * M_PI).epsilon(1e-3));
  CHECK(volume_rule(make_ellipsoid({1.0, 2.0})).total_weight() == doctest::Approx(M_PI * M_PI / 2 * 4.0).epsilon(1e-3));
}

TEST_CASE("polynomial integrands") {
  const DomainSpec disc = make_ball(1);
  const QuadratureRule r = volume_rule(disc);
  CHECK(integrate(r, [](const CVec&) { return 1.0; }).value.real() == doctest::Approx(M_PI));
  CHECK(integrate(r, [](const CVec& w) { return w.squaredNorm(); }).value.real() == doctest::Approx(M_PI / 2));
  const QuadratureRule b = volume_rule(make_ball(2));
  CHECK(std::abs(integrate(b, [](const CVec& w) { return w(0).real(); }).value) < 1e-12);
  // int_B |w_1|^2 = pi^2 / 6
  CHECK(integrate(b, [](const CVec& w) { return std::norm(w(0)); }).value.real() ==
        doctest::Approx(M_PI * M_PI / 6).epsilon(1e-10));
}

TEST_CASE("stratified Monte Carlo is deterministic and unbiased") {
  const DomainSpec b = make_ball(2);
  const QuadratureRule r1 = stratified_rule(b, 20000, 9);
  const QuadratureRule r2 = stratified_rule(b, 20000, 9);
  CHECK(r1.size() == r2.size());
  CHECK((r1.nodes[17] - r2.nodes[17]).norm() == 0.0);
  // polar angles are sampled, so the volume itself is a Monte Carlo estimate
  CHECK(r1.total_weight() == doctest::Approx(M_PI * M_PI / 2).epsilon(1e-2));
  CHECK(integrate(r1, [](const CVec& w) { return std::norm(w(0)); }).value.real() ==
        doctest::Approx(M_PI * M_PI / 6).epsilon(2e-2));
}

TEST_CASE("graded rules integrate endpoint singularities") {
  // int_D (1 - |w|^2)^{-1/2} dV = pi / (1 - 1/2) on the disc
  const DomainSpec d = make_ball(1);
  CVec e = CVec::Zero(1);
  e(0) = 1.0;
  AdaptedOptions o = AdaptedOptions::for_scale(1e-3);
  o.radial_exponent = 0.5;
  const cplx v = integrate_adapted(d, e, o, [&](const CVec& w) { return std::pow(-d.rho(w), -0.5); });
  CHECK(v.real() == doctest::Approx(2 * M_PI).epsilon(1e-6));
}

TEST_CASE("layer rule covers the whole disc when the thickness is one") {
  const QuadratureRule r = layer_rule(make_ball(1), 1.0, 1.0 / 16);
  CHECK(r.total_weight() == doctest::Approx(M_PI).epsilon(1e-2));
}
