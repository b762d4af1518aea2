#pragma once

#include "bergman/cf_kernel.hpp"
#include "bergman/quadrature.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace bergman {

using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor, long>;
using Vector = Eigen::VectorXcd;

/// Integral operator on a grid: matrix(i, j) = K(source_j, target_i) * source weight j.
/// Inner products are weighted: <f, h> = sum_i weight_i f_i conj(h_i).
struct DiscreteOperator {
  std::variant<DenseMatrix, SparseMatrix> matrix;
  std::vector<double> source_weights;
  std::vector<double> target_weights;
  std::string label;

  long rows() const;
  long cols() const;
  bool is_dense() const { return std::holds_alternative<DenseMatrix>(matrix); }
  Vector apply(const Vector& f) const;
  /// W^{-1} M^H V g
  Vector apply_adjoint(const Vector& g) const;
  DiscreteOperator adjoint() const;
  DenseMatrix to_dense() const;
};

double weighted_norm(const Vector& f, const std::vector<double>& w, double p);
cplx weighted_inner(const Vector& f, const Vector& h, const std::vector<double>& w);

/// Scalar kernel K(w, z) between a source node w and a target z.
using KernelFunction = std::function<cplx(const CVec& w, const CVec& z)>;

DiscreteOperator kernel_operator(const KernelFunction& k, const QuadratureRule& rule, const QuadratureRule& targets,
                                 std::string label);
DiscreteOperator gamma_operator(const KernelContext& ctx, const QuadratureRule& rule, const QuadratureRule& targets,
                                bool use_eps);
DiscreteOperator b1_operator(const KernelContext& ctx, const QuadratureRule& rule, const QuadratureRule& targets);
/// B1(f) at the targets without storing a matrix (for very large rules).
std::vector<cplx> b1_apply(const KernelContext& ctx, const QuadratureRule& rule, const std::vector<cplx>& f,
                           const std::vector<CVec>& targets);
DiscreteOperator abs_operator(const DiscreteOperator& op);

struct SchurResult {
  double value = 0.0;
  double coarse = 0.0;
  double relative_change = 0.0;
  std::size_t nodes = 0;
};

/// int_D |g(w, z)|^{-n-1} |rho(w)|^{-alpha} dV(w), graded toward z, checked by refinement.
SchurResult schur_integral(const KernelContext& ctx, const CVec& z, double alpha, const AdaptedOptions& opts);
/// w-slot variant: int_D |g(w, z)|^{-n-1} |rho(z)|^{-alpha} dV(z).
SchurResult schur_integral_w(const KernelContext& ctx, const CVec& w, double alpha, const AdaptedOptions& opts);
AdaptedOptions schur_options(const KernelContext& ctx, const CVec& z);

struct ModelIntegral {
  double direct = 0.0;
  double reduced = 0.0;
  double c_alpha = 0.0;
  double remaining = 0.0;     // the (u, x') integral after the s-reduction
  double relative_difference = 0.0;
  bool diverging = false;
};

/// int s^{-alpha} (1 + s + |u| + |x'|^2)^{-(n+1)} over R+ x R x C^{n-1}, two ways.
ModelIntegral rescaled_model_integral(int n, double alpha, double cutoff = 1e6);
/// Closed form of the same integral.
double model_integral_closed_form(int n, double alpha);

/// phi(t): 1 on [0, 1/2], linear to 0 at 1, 0 beyond.
struct TruncationProfile {
  double r = 1.0;
  double phi(double t) const;
  double weight(const DomainSpec& d, const CVec& w, const CVec& z) const;
};

struct TruncatedPair {
  DiscreteOperator near;   // D_r
  DiscreteOperator far;    // E_r
};

TruncatedPair truncate(const KernelContext& ctx, const QuadratureRule& rule, const QuadratureRule& targets,
                       const TruncationProfile& profile);

enum class DefectKernel { B1, BallOracle };

/// D_r - D_r^* on the square grid (diagonal removed), sparse.
DiscreteOperator defect_A_eps(const KernelContext& ctx, const QuadratureRule& rule, const TruncationProfile& profile,
                              DefectKernel kernel = DefectKernel::B1);
/// Sparse D_r alone.
DiscreteOperator truncated_sparse(const KernelContext& ctx, const QuadratureRule& rule,
                                  const TruncationProfile& profile, DefectKernel kernel = DefectKernel::B1);

struct NormEstimate {
  double value = 0.0;
  bool lower_bound = false;
  int iterations = 0;
  int trials = 0;
};

NormEstimate estimate_norm(const DiscreteOperator& op, double p, int trials, std::uint64_t seed, int max_iter = 100);

/// Truncation radius r = min(delta_eps, delta'_eps, eps / A_eps).
struct RadiusChoice {
  double r = 0.0;
  double delta_eps = 0.0;
  double delta_k0 = 0.0;
  double slope = 0.0;   // A_eps
};
RadiusChoice select_truncation_radius(const KernelContext& ctx, const ModulusOfContinuity& mod, int samples,
                                      std::uint64_t seed);
/// Largest delta on the grid with sampled sup |K0(w) - K0(z)| <= eps over |w - z| <= delta.
double k0_modulus_delta(const KernelContext& ctx, const std::vector<double>& deltas, int samples, std::uint64_t seed);
/// Sampled sup of |b1 g^{n+1} - K0(w)| / |w - z| for w on bD, z nearby.
double remainder_slope(const KernelContext& ctx, int samples, std::uint64_t seed);

}  // namespace bergman
