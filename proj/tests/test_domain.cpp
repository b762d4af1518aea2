#include "bergman/domain_model.hpp"
#include "bergman/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace bergman;

namespace {

CVec pt(std::initializer_list<cplx> v) {
  CVec w(static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (cplx c : v) w(j++) = c;
  return w;
}

/// d^2 rho / dw_j dwbar_k by central differences of rho.
cplx fd_mixed(const DomainSpec& d, const CVec& w, int j, int k, double h = 1e-4) {
  auto f = [&](double dxj, double dyj, double dxk, double dyk) {
    CVec v = w;
    v(j) += cplx(dxj, dyj);
    v(k) += cplx(dxk, dyk);
    return d.rho(v);
  };
  // d_j dbar_k = 1/4 (d_xj - i d_yj)(d_xk + i d_yk)
  const double xx = (f(h, 0, h, 0) - f(h, 0, -h, 0) - f(-h, 0, h, 0) + f(-h, 0, -h, 0)) / (4 * h * h);
  const double yy = (f(0, h, 0, h) - f(0, h, 0, -h) - f(0, -h, 0, h) + f(0, -h, 0, -h)) / (4 * h * h);
  const double xy = (f(h, 0, 0, h) - f(h, 0, 0, -h) - f(-h, 0, 0, h) + f(-h, 0, 0, -h)) / (4 * h * h);
  const double yx = (f(0, h, h, 0) - f(0, h, -h, 0) - f(0, -h, h, 0) + f(0, -h, -h, 0)) / (4 * h * h);
  return 0.25 * cplx(xx + yy, xy - yx);
}

}  // namespace

TEST_CASE("disc centre") {
  const DomainSpec d = make_ball(1);
  const CVec w = pt({0.0});
  CHECK(d.rho(w) == doctest::Approx(-1.0));
  CHECK(std::abs(d.d_rho(w)(0)) == doctest::Approx(0.0));
  CHECK(d.hess_mixed(w)(0, 0).real() == doctest::Approx(1.0));
}

TEST_CASE("ball n=2 boundary point derivatives") {
  const DomainSpec d = make_ball(2);
  const CVec w = pt({1.0, 0.0});
  CHECK(d.rho(w) == doctest::Approx(0.0));
  CHECK(std::abs(d.d_rho(w)(0) - 1.0) < 1e-15);
  CHECK(std::abs(d.d_rho(w)(1)) < 1e-15);
  CHECK(d.grad_rho(w).squaredNorm() == doctest::Approx(4.0));
  const CVec v = pt({cplx(0.3, -0.2), cplx(-0.1, 0.5)});
  CHECK(d.hess_holo(v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ellipsoid Levi matrix and degenerate case") {
  const DomainSpec e = make_ellipsoid({1.0, 2.0});
  const CMat l = levi_form(e, pt({0.0, 0.0})).matrix;
  CHECK(l(0, 0).real() == doctest::Approx(1.0));
  CHECK(l(1, 1).real() == doctest::Approx(0.25));
  CHECK(std::abs(l(0, 1)) < 1e-15);
  CHECK(levi_form(e, pt({0.0, 0.0})).min_eigenvalue() == doctest::Approx(0.25));

  const DomainSpec same = make_ellipsoid({1.0, 1.0});
  const DomainSpec ball = make_ball(2);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const CVec w = sample_interior(ball, rng);
    CHECK(same.rho(w) == doctest::Approx(ball.rho(w)).epsilon(1e-14));
    CHECK((same.d_rho(w) - ball.d_rho(w)).norm() < 1e-14);
  }
}

TEST_CASE("perturbed ball: delta 0 is the ball, mixed Hessian matches finite differences") {
  const DomainSpec p0 = make_c2_perturbed_ball(2, 0.0);
  const DomainSpec b = make_ball(2);
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const CVec w = sample_interior(b, rng);
    CHECK(p0.rho(w) == doctest::Approx(b.rho(w)));
  }
  const DomainSpec d = make_c2_perturbed_ball(1, 0.1);
  for (double x : {-0.4, -0.01, 0.0, 0.02, 0.3}) {
    const CVec w = pt({cplx(x, 0.2)});
    const cplx fd = fd_mixed(d, w, 0, 0);
    CHECK(std::abs(d.hess_mixed(w)(0, 0) - fd) < 1e-5);
    // d dbar |x|^3 = (6|x|)/4
    CHECK(d.hess_mixed(w)(0, 0).real() == doctest::Approx(1.0 + 0.1 * 1.5 * std::abs(x)).epsilon(1e-12));
  }
  // the Hessian is continuous across Re w = 0 while its slope jumps
  const double h = 1e-6;
  const double left = (d.hess_mixed(pt({cplx(0.0, 0.1)}))(0, 0) - d.hess_mixed(pt({cplx(-h, 0.1)}))(0, 0)).real() / h;
  const double right = (d.hess_mixed(pt({cplx(h, 0.1)}))(0, 0) - d.hess_mixed(pt({cplx(0.0, 0.1)}))(0, 0)).real() / h;
  CHECK(left == doctest::Approx(-0.15));
  CHECK(right == doctest::Approx(0.15));
}

TEST_CASE("perturbed ball construction limits") {
  CHECK_NOTHROW(make_c2_perturbed_ball(2, 0.05));
  CHECK_THROWS_AS(make_c2_perturbed_ball(2, 10.0), PerturbationTooLarge);
}

TEST_CASE("unknown domain kind") {
  DomainParams p;
  p.kind = "torus";
  CHECK_THROWS_AS(make_domain(p), UnsupportedDomain);
}

TEST_CASE("ball calibration meets the exact identity with c = 1") {
  for (int n : {1, 2}) {
    const CalibrationResult c = calibrate_constants(make_ball(n), 2000, 3);
    CHECK(c.mu >= 2.0);
    CHECK(c.c == doctest::Approx(1.0));
    CHECK(c.c_levi == doctest::Approx(1.0));
  }
}

TEST_CASE("boundary points and sublevel sets") {
  const DomainSpec d = make_ball(2);
  const CVec u = pt({cplx(0.6, 0.0), cplx(0.0, 0.8)});
  CHECK(std::abs(d.rho(boundary_point(d, u))) < 1e-12);
  const DomainSpec s = sublevel(d, 0.36);
  CHECK(s.rho(pt({0.8, 0.0})) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(bergman_constant(2) == doctest::Approx(2.0 / (M_PI * M_PI)));
}
