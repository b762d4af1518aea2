#include "bergman/bergman_oracle.hpp"
#include "bergman/cf_kernel.hpp"
#include "bergman/quadrature.hpp"

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

/// Disc kernel from its monomial expansion sum_k (k+1)/pi (z conj w)^k.
cplx disc_series(cplx w, cplx z) {
  cplx s = 0.0, q = 1.0;
  for (int k = 0; k < 400; ++k) {
    s += double(k + 1) / M_PI * q;
    q *= z * std::conj(w);
  }
  return s;
}

}  // namespace

TEST_CASE("disc kernel against its series") {
  const KernelContext ctx = make_context(make_ball(1), 0.0);
  CHECK(kernel_b1(ctx, pt({0.0}), pt({0.0})).value.real() == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  CHECK(kernel_b1(ctx, pt({0.5}), pt({0.5})).value.real() == doctest::Approx(16.0 / (9.0 * M_PI)).epsilon(1e-14));
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    const CVec w = 0.8 * sample_interior(ctx.domain, rng);
    const CVec z = 0.8 * sample_interior(ctx.domain, rng);
    const cplx s = disc_series(w(0), z(0));
    CHECK(std::abs(kernel_b1(ctx, w, z).value - s) / std::abs(s) < 1e-12);
  }
}

TEST_CASE("ball n=2 kernel against the determinant identity") {
  const DomainSpec d = make_ball(2);
  const KernelContext ctx = make_context(d, 0.0);
  Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    const CVec w = sample_interior(d, rng);
    const CVec z = sample_interior(d, rng);
    const cplx q = 1.0 - z(0) * std::conj(w(0)) - z(1) * std::conj(w(1));
    const cplx exact = 2.0 / (M_PI * M_PI) / (q * q * q);
    CHECK(std::abs(kernel_b1(ctx, w, z).value - exact) / std::abs(exact) < 1e-12);
  }
}

TEST_CASE("generating form on the ball is conj(w)") {
  const DomainSpec d = make_ball(2);
  const KernelContext ctx = make_context(d, 0.0);
  const CVec w = pt({cplx(0.3, 0.1), cplx(-0.2, 0.4)});
  const CVec z = pt({cplx(-0.5, 0.2), cplx(0.1, 0.1)});
  CHECK((eta_eps(ctx, w, z).coeffs - w.conjugate()).norm() < 1e-15);
}

TEST_CASE("leading term on the sphere") {
  const KernelContext c1 = make_context(make_ball(1), 0.0);
  const KernelContext c2 = make_context(make_ball(2), 0.0);
  // (n!/pi^n) |grad rho|^2 det L with |grad rho|^2 = 4 on the sphere
  CHECK(4.0 * leading_term(c1, pt({cplx(0.6, 0.8)})) == doctest::Approx(4.0 / M_PI));
  CHECK(4.0 * leading_term(c2, pt({cplx(0.6, 0.0), cplx(0.0, 0.8)})) == doctest::Approx(8.0 / (M_PI * M_PI)));
  const CVec w = pt({cplx(0.6, 0.0), cplx(0.0, 0.8)});
  CHECK(kernel_parts(c2, w, w).remainder < 1e-12);
}

TEST_CASE("boundary density: Cauchy kernel on the circle and constants on the sphere") {
  const KernelContext c1 = make_context(make_ball(1), 0.0);
  const CVec z = pt({cplx(0.2, -0.3)});
  for (double t : {0.0, 1.0, 2.5}) {
    const CVec w = pt({std::polar(1.0, t)});
    // dw/(2 pi i (w - z)) against arclength: dw = i w ds
    const cplx cauchy = w(0) / (2.0 * M_PI * (w(0) - z(0)));
    const BoundaryDensity bd = kernel_b1_hat(c1, w, z);
    CHECK(std::abs(bd.density - cauchy) < 1e-14);
    CHECK(std::abs(bd.pairing - 1.0) < 1e-14);
  }
  const DomainSpec s = make_ball(2);
  const KernelContext c2 = make_context(s, 0.0);
  const QuadratureRule rule = surface_rule(s);
  const CVec z2 = pt({cplx(0.1, 0.2), cplx(-0.3, 0.1)});
  std::vector<cplx> terms;
  for (std::size_t i = 0; i < rule.size(); ++i) terms.push_back(rule.weights[i] * kernel_b1_hat(c2, rule.nodes[i], z2).density);
  CHECK(std::abs(pairwise_sum(terms) - 1.0) < 1e-10);
}
