#include "bergman/errors.hpp"
#include "bergman/levi_engine.hpp"

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

}  // namespace

TEST_CASE("Levi polynomial on the ball") {
  const KernelContext c1 = make_context(make_ball(1), 0.0);
  CHECK(std::abs(levi_polynomial(c1, pt({0.0}), pt({cplx(0.3, 0.4)}))) == 0.0);

  const DomainSpec d = make_ball(2);
  const KernelContext c2 = make_context(d, 0.0);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const CVec w = sample_interior(d, rng);
    const CVec z = sample_interior(d, rng);
    // sum_j conj(w_j)(z_j - w_j)
    const cplx hand = std::conj(w(0)) * (z(0) - w(0)) + std::conj(w(1)) * (z(1) - w(1));
    CHECK(std::abs(levi_polynomial(c2, w, z) - hand) < 1e-14);
    CHECK(std::abs(levi_polynomial(c2, w, w)) == 0.0);
    // global mode: g(w, z) = 1 - <z, conj w>
    CHECK(std::abs(g(c2, w, z) - (1.0 - z(0) * std::conj(w(0)) - z(1) * std::conj(w(1)))) < 1e-14);
  }
}

TEST_CASE("g on the diagonal and the far branch") {
  const DomainSpec d = make_c2_perturbed_ball(2, 0.05);
  ContextOptions o;
  o.global_mode = false;
  const KernelContext ctx = make_context(d, 0.05, o);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const CVec w = sample_interior(d, rng);
    CHECK(std::abs(g(ctx, w, w) + d.rho(w)) < 1e-14);
  }
  for (int i = 0; i < 200; ++i) {
    const CVec w = sample_interior(d, rng);
    const CVec z = sample_interior(d, rng);
    if ((z - w).norm() < ctx.mu) continue;
    const cplx v = g(ctx, w, z);
    CHECK(std::abs(v - ((z - w).squaredNorm() - d.rho(w))) < 1e-13);
  }
}

TEST_CASE("exact and mollified Hessians agree where they must") {
  const DomainSpec b = make_ball(2);
  ContextOptions o;
  o.tau_policy = TauPolicy::Mollified;
  const KernelContext mol = make_context(b, 0.1, o);
  const KernelContext ex = make_context(b, 0.0, o);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const CVec w = sample_interior(b, rng);
    const CVec z = sample_interior(b, rng);
    CHECK(std::abs(g_eps(mol, w, z) - g(ex, w, z)) < 1e-14);
    CHECK(std::abs(levi_polynomial_eps(ex, w, z) - levi_polynomial(ex, w, z)) < 1e-15);
  }
}

TEST_CASE("mollified Hessian is within epsilon of the exact one on the perturbed ball") {
  const DomainSpec d = make_c2_perturbed_ball(1, 0.1);
  const KernelContext ctx = make_context(d, 0.1);
  double worst = 0.0;
  for (const CVec& w : calibration_grid(d, 40)) worst = std::max(worst, (d.hess_holo(w) - ctx.tau(w)).cwiseAbs().maxCoeff());
  CHECK(worst <= 0.1);
}

TEST_CASE("size proxy by hand") {
  const KernelContext ctx = make_context(make_ball(1), 0.0);
  // |rho| 0.19 each, |Im conj(w)(w - z)| = 0.81, |w - z|^2 = 1.62
  CHECK(size_proxy(ctx, pt({0.9}), pt({cplx(0.0, 0.9)})) == doctest::Approx(2.81));
  const CVec w = pt({cplx(0.2, -0.3)});
  CHECK(size_proxy(ctx, w, w) == doctest::Approx(2.0 * std::abs(ctx.domain.rho(w))));
  const CVec b = pt({cplx(0.6, 0.8)});
  CHECK(size_proxy(ctx, b, b) < 1e-15);
}

TEST_CASE("modulus of continuity") {
  const DomainSpec ball = make_ball(2);
  const ModulusOfContinuity m0 = modulus_of_continuity(ball, default_deltas(ball), 500, 1);
  for (double om : m0.omegas) CHECK(om == 0.0);
  CHECK(delta_for_epsilon(m0, 0.01) == doctest::Approx(m0.deltas.back()));

  const DomainSpec p = make_c2_perturbed_ball(1, 0.1);
  const ModulusOfContinuity m = modulus_of_continuity(p, default_deltas(p), 4000, 1);
  for (std::size_t i = 1; i < m.omegas.size(); ++i) CHECK(m.omegas[i] >= m.omegas[i - 1]);
  // d^2/dx^2 of 0.1 |x|^3 is 0.6 |x|: Lipschitz with constant 0.6 in the real Hessian
  for (std::size_t i = 0; i < m.deltas.size(); ++i) {
    if (m.deltas[i] > 0.01) break;
    CHECK(m.omegas[i] <= 0.6 * m.deltas[i] * 1.05);
    CHECK(m.omegas[i] >= 0.1 * m.deltas[i]);
  }
  CHECK_THROWS_AS(delta_for_epsilon(m, 0.0), NoAdmissibleDelta);
}
