#pragma once

#include "bergman/types.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace bergman {

struct Box {
  RVec lower;
  RVec upper;
};

/// Construction parameters, kept so a domain can be echoed into configs and rebuilt.
struct DomainParams {
  std::string kind;           // ball | ellipsoid | perturbed_ball
  int dim = 1;
  std::vector<double> axes;   // ellipsoid only
  double delta = 0.0;         // perturbed_ball only
  double shift = 0.0;         // sublevel offset lambda: D_lambda = {rho < -lambda}
};

/// Bounded domain {rho < 0} with analytic derivative evaluators.
///
/// Wirtinger conventions: d_rho(w)_j = d rho / d w_j, hess_holo(j,k) = d^2 rho / dw_j dw_k,
/// hess_mixed(j,k) = d^2 rho / dw_j dwbar_k.
struct DomainSpec {
  int dim = 1;
  std::string name;
  DomainParams params;

  std::function<double(const CVec&)> rho;
  std::function<CVec(const CVec&)> d_rho;
  std::function<CMat(const CVec&)> hess_holo;
  std::function<CMat(const CVec&)> hess_mixed;

  /// Mollified holomorphic Hessian at spatial scale s (s = 0 gives hess_holo) and its
  /// wbar-derivatives, both analytic.
  std::function<CMat(const CVec&, double)> smoothed_hess_holo;
  std::function<DbarTensor(const CVec&, double)> dbar_smoothed_hess_holo;

  /// Star-shaped parametrization hook: distance from the origin to bD along the unit
  /// direction u. Empty for domains without one.
  std::function<double(const CVec&)> radial_extent;

  Box bounding_box;
  double diameter = 2.0;
  double rho_sup = 1.0;         // sup |rho| over the closure
  bool constant_hessian = false;
  double omega_cap = 0.0;       // declared cap on omega(1e-4)

  /// Real gradient in R^{2n}: (d/dx_1, d/dy_1, ...).
  RVec grad_rho(const CVec& w) const;
  double grad_norm(const CVec& w) const;
  bool contains(const CVec& w) const { return rho(w) < 0.0; }
};

struct LeviForm {
  CMat matrix;
  CVec point;
  double value(const CVec& v) const { return (v.adjoint() * matrix * v)(0, 0).real(); }
  double min_eigenvalue() const;
  double max_eigenvalue() const;
};

LeviForm levi_form(const DomainSpec& domain, const CVec& w);

DomainSpec make_ball(int dim);
DomainSpec make_ellipsoid(const std::vector<double>& semi_axes);
DomainSpec make_c2_perturbed_ball(int dim, double delta);
/// D_lambda = {rho < -lambda}, defined by rho + lambda.
DomainSpec sublevel(const DomainSpec& domain, double lambda);
DomainSpec make_domain(const DomainParams& params);

/// Levi eigenvalues must stay in this band over the calibration grid of a perturbed ball.
inline constexpr double kLeviBandLow = 0.5;
inline constexpr double kLeviBandHigh = 2.0;

struct CalibrationResult {
  double mu = 0.0;
  double c = 0.0;
  double lambda0 = 0.0;
  double c_levi = 0.0;
  bool global = false;   // bound holds with chi = 1 for every pair
  int samples = 0;
  std::uint64_t seed = 0;
};

CalibrationResult calibrate_constants(const DomainSpec& domain, int samples, std::uint64_t seed);

/// Largest c with the support-function lower bounds on the given pairs at cutoff mu
/// (exact Hessian). Pairs closer than 1e-3 * diameter are skipped in the quadratic branch.
double bound_constant(const DomainSpec& domain, double mu, bool global,
                      const std::vector<std::pair<CVec, CVec>>& pairs);

// Seeded sampling of the closure. Uniform in volume unless stated.

using Rng = std::mt19937_64;

CVec random_direction(int dim, Rng& rng);
CVec sample_interior(const DomainSpec& domain, Rng& rng);
CVec sample_boundary(const DomainSpec& domain, Rng& rng);
/// Point at distance about `depth` inside bD along a random ray.
CVec sample_near_boundary(const DomainSpec& domain, double depth, Rng& rng);
/// Point on bD along the ray through u (|u| = 1).
CVec boundary_point(const DomainSpec& domain, const CVec& u);

/// Mixed pair population: uniform pairs, boundary-concentrated near-diagonal pairs at
/// log-uniform separations, and boundary-boundary pairs.
std::vector<std::pair<CVec, CVec>> sample_pairs(const DomainSpec& domain, int count,
                                                std::uint64_t seed);

/// Deterministic tensor grid of the bounding box (odd count per axis) clipped to the closure.
std::vector<CVec> calibration_grid(const DomainSpec& domain, int per_axis);

}  // namespace bergman
