#include "bergman/bergman_oracle.hpp"
#include "bergman/errors.hpp"
#include "bergman/operators.hpp"
#include "bergman/verification.hpp"

#include <doctest.h>

#include <cmath>

using namespace bergman;

namespace {

DiscreteOperator dense(const DenseMatrix& m, std::size_t n) {
  DiscreteOperator op;
  op.matrix = m;
  op.source_weights.assign(n, 1.0);
  op.target_weights.assign(n, 1.0);
  op.label = "test";
  return op;
}

}  // namespace

TEST_CASE("norm estimates of exact matrices") {
  const std::size_t n = 12;
  const DiscreteOperator id = dense(DenseMatrix::Identity(n, n), n);
  for (double p : {4.0 / 3, 2.0, 4.0}) CHECK(estimate_norm(id, p, 2, 1).value == doctest::Approx(1.0).epsilon(1e-6));

  Rng rng(3);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u(i) = cplx(normal(rng), normal(rng));
    v(i) = cplx(normal(rng), normal(rng));
  }
  u.normalize();
  v.normalize();
  const DiscreteOperator r1 = dense(u * v.adjoint(), n);
  CHECK(estimate_norm(r1, 2.0, 1, 5).value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("weighted adjoint identity") {
  const DomainSpec d = make_ball(1);
  const QuadratureRule rule = layer_rule(d, 1.0, 0.25);
  const KernelContext ctx = make_context(d, 0.0);
  const DiscreteOperator b = b1_operator(ctx, rule, rule);
  Rng rng(8);
  std::normal_distribution<double> normal;
  Vector f(b.cols()), h(b.rows());
  for (long i = 0; i < f.size(); ++i) f(i) = cplx(normal(rng), normal(rng));
  for (long i = 0; i < h.size(); ++i) h(i) = cplx(normal(rng), normal(rng));
  const cplx lhs = weighted_inner(b.apply(f), h, b.target_weights);
  const cplx rhs = weighted_inner(f, b.apply_adjoint(h), b.source_weights);
  CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-12);
}

TEST_CASE("Gamma of the constant at the disc centre is the area") {
  const DomainSpec d = make_ball(1);
  const KernelContext ctx = make_context(d, 0.0);
  const QuadratureRule rule = volume_rule(d);
  // g(w, 0) = 1 in global mode, so the kernel is 1
  const cplx v = integrate(rule, [&](const CVec& w) { return std::pow(std::abs(g(ctx, w, CVec::Zero(1))), -2.0); }).value;
  CHECK(v.real() == doctest::Approx(M_PI).epsilon(1e-10));
}

TEST_CASE("Schur integral at the disc centre") {
  const KernelContext ctx = make_context(make_ball(1), 0.0);
  const CVec z = CVec::Zero(1);
  for (double a : {0.25, 0.5, 0.75}) {
    const SchurResult s = schur_integral(ctx, z, a, schur_options(ctx, z));
    CHECK(s.value == doctest::Approx(M_PI / (1 - a)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(schur_integral(ctx, z, 1.0, schur_options(ctx, z)), std::invalid_argument);
}

TEST_CASE("model integral: Beta reduction and the elementary integral") {
  const ModelIntegral m = rescaled_model_integral(1, 0.5);
  CHECK(m.c_alpha == doctest::Approx(M_PI / 2).epsilon(1e-12));
  // int_R (1 + |u|)^{-3/2} du = 4
  CHECK(m.remaining == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(m.relative_difference < 1e-2);
  CHECK(model_integral_closed_form(1, 0.5) == doctest::Approx(2 * M_PI).epsilon(1e-12));
  CHECK(rescaled_model_integral(1, 0.999).c_alpha > 500.0);
}

TEST_CASE("truncation profile: saturation and partition") {
  const TruncationProfile p{1.0};
  CHECK(p.phi(0.0) == 1.0);
  CHECK(p.phi(0.5) == 1.0);
  CHECK(p.phi(0.75) == doctest::Approx(0.5));
  CHECK(p.phi(1.0) == 0.0);
  // D_r + E_r reproduces B1 entry by entry
  const DomainSpec d = make_c2_perturbed_ball(1, 0.1);
  const KernelContext ctx = make_context(d, 0.1);
  const QuadratureRule rule = layer_rule(d, 1.0, 0.3);
  const TruncatedPair t = truncate(ctx, rule, rule, TruncationProfile{0.4});
  const DenseMatrix full = b1_operator(ctx, rule, rule).to_dense();
  CHECK((t.near.to_dense() + t.far.to_dense() - full).cwiseAbs().maxCoeff() < 1e-12 * full.cwiseAbs().maxCoeff());
  // large r keeps everything near
  const TruncatedPair all = truncate(ctx, rule, rule, TruncationProfile{20.0});
  CHECK(all.far.to_dense().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("defect vanishes for Hermitian kernels") {
  const DomainSpec d = make_ball(1);
  const KernelContext ctx = make_context(d, 0.0);
  const QuadratureRule rule = layer_rule(d, 0.3, 0.05);
  for (DefectKernel k : {DefectKernel::B1, DefectKernel::BallOracle}) {
    const DiscreteOperator a = defect_A_eps(ctx, rule, TruncationProfile{0.3}, k);
    CHECK(estimate_norm(a, 2.0, 1, 1).value < 1e-10);
  }
}

TEST_CASE("abs operator leaves positive kernels unchanged") {
  const DomainSpec d = make_ball(1);
  const KernelContext ctx = make_context(d, 0.0);
  const QuadratureRule rule = layer_rule(d, 1.0, 0.25);
  const DiscreteOperator gm = gamma_operator(ctx, rule, rule, false);
  CHECK((abs_operator(gm).to_dense() - gm.to_dense()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("NotInLp exactly when beta p reaches the planar threshold") {
  const KernelContext ctx = make_context(make_ball(1), 0.0);
  Thresholds th;
  CHECK_THROWS_AS(density_experiment(ctx, 0.5, 4.0, {4}, th), NotInLp);
  CHECK_THROWS_AS(density_experiment(ctx, 1.0, 2.0, {4}, th), NotInLp);
  const auto ok = lp_refinement(ctx.domain, 0.25, 2.0);
  CHECK(ok[2] - ok[1] < 0.8 * (ok[1] - ok[0]));
}
