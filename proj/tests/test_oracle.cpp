#include "bergman/bergman_oracle.hpp"
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

}  // namespace

TEST_CASE("closed-form disc kernel values") {
  CHECK(ball_kernel(1, pt({0.0}), pt({0.0})).real() == doctest::Approx(1.0 / M_PI));
  CHECK(ball_kernel(1, pt({0.5}), pt({0.5})).real() == doctest::Approx(16.0 / (9.0 * M_PI)));
}

TEST_CASE("disc basis is the normalized monomials") {
  const DomainSpec d = make_ball(1);
  const QuadratureRule rule = volume_rule(d, gram_rule_options(1, 10));
  const OrthonormalBasis b = build_basis(d, rule, 10);
  const CVec z = pt({cplx(0.3, -0.4)});
  const Eigen::VectorXcd phi = b.evaluate(z);
  // each basis function is a multiple of one monomial; compare magnitudes with sqrt((k+1)/pi) |z|^k
  for (int k = 0; k <= 10; ++k) {
    double best = 1e300;
    for (long m = 0; m < phi.size(); ++m) {
      best = std::min(best, std::abs(std::abs(phi(m)) - std::sqrt((k + 1) / M_PI) * std::pow(std::abs(z(0)), k)));
    }
    CHECK(best < 1e-6);
  }
}

TEST_CASE("norm of w_1 on the ball") {
  const DomainSpec d = make_ball(2);
  const QuadratureRule rule = volume_rule(d, gram_rule_options(2, 4));
  const OrthonormalBasis b = build_basis(d, rule, 2);
  std::vector<cplx> f(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) f[i] = rule.nodes[i](0);
  // Parseval in the orthonormal basis
  CHECK(project(b, rule, f).squaredNorm() == doctest::Approx(M_PI * M_PI / 6).epsilon(1e-4));
}

TEST_CASE("constant weight scales the basis") {
  const DomainSpec d = make_ball(1);
  const QuadratureRule rule = volume_rule(d, gram_rule_options(1, 6));
  const OrthonormalBasis b1 = build_basis(d, rule, 6);
  const OrthonormalBasis b2 = build_basis(d, rule, 6, [](const CVec&) { return 2.0; }, "2");
  const CVec z = pt({cplx(0.1, 0.5)});
  CHECK((b2.evaluate(z) - b1.evaluate(z) / std::sqrt(2.0)).norm() < 1e-12);
}

TEST_CASE("projection fixes holomorphic polynomials and kills conj(z)") {
  const DomainSpec d = make_ball(1);
  const QuadratureRule rule = volume_rule(d, gram_rule_options(1, 12));
  const OrthonormalBasis b = build_basis(d, rule, 12);
  std::vector<cplx> f(rule.size()), h(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const cplx z = rule.nodes[i](0);
    f[i] = 1.0 - 2.0 * z + cplx(0, 3) * z * z * z * z * z;
    h[i] = std::conj(z);
  }
  const std::vector<cplx> pf = apply_projection(b, rule, f);
  double err = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) err = std::max(err, std::abs(pf[i] - f[i]));
  CHECK(err < 1e-8);
  CHECK(project(b, rule, h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("expansion converges to the disc kernel") {
  const DomainSpec d = make_ball(1);
  const QuadratureRule rule = volume_rule(d, gram_rule_options(1, 40));
  const OrthonormalBasis b = build_basis(d, rule, 40);
  const CVec w = pt({cplx(0.7, 0.0)}), z = pt({cplx(0.0, 0.7)});
  CHECK(std::abs(kernel_from_basis(b, w, z) - ball_kernel(1, w, z)) / std::abs(ball_kernel(1, w, z)) < 1e-6);
}

TEST_CASE("basis JSON round trip") {
  const DomainSpec d = make_ball(2);
  const QuadratureRule rule = volume_rule(d, gram_rule_options(2, 3));
  const OrthonormalBasis b = build_basis(d, rule, 3);
  const OrthonormalBasis c = basis_from_json(nlohmann::json::parse(basis_to_json(b).dump()));
  CHECK(c.multi_indices == b.multi_indices);
  CHECK(c.pivot_order == b.pivot_order);
  CHECK((c.gram_factor - b.gram_factor).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("under-resolved Gram matrices are rejected") {
  const DomainSpec d = make_ball(1);
  VolumeOptions o = gram_rule_options(1, 4);
  o.angular = 6;
  o.radial = 2;
  o.interior = 2;
  CHECK_THROWS_AS(build_basis(d, volume_rule(d, o), 20), IllConditionedGram);
}
