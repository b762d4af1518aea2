#pragma once

#include "bergman/domain_model.hpp"

#include <omp.h>

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace bergman {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
  void append(const Rule1D& other);
  std::size_t size() const { return x.size(); }
};

Rule1D gauss_legendre(int m, double a, double b);
/// Gauss-Jacobi nodes for integrands behaving like (b - x)^{-alpha}; the weight function is
/// folded back into the weights so the rule applies to the full integrand.
Rule1D gauss_jacobi_right(int m, double a, double b, double alpha);
/// m-point periodic trapezoid on [a, a + period), shifted by `offset` spacings.
Rule1D trapezoid(int m, double a, double period, double offset = 0.0);

/// Composite Gauss rule on [a, b] graded geometrically toward b:
/// [a, b - r0], then [b - r0 q^k, b - r0 q^{k+1}] for k < levels, then [b - r0 q^levels, b].
struct GradedSpec {
  double r0 = 0.1;
  double ratio = 0.5;
  int levels = 12;
  int order = 8;
  int interior = 16;
  double endpoint_exponent = 0.0;   // integrand ~ (b - x)^{-exponent} on the last panel
};
Rule1D graded_toward_end(double a, double b, const GradedSpec& spec);
/// Same grading toward the start a.
Rule1D graded_toward_start(double a, double b, const GradedSpec& spec);

/// Points of the unit sphere S^{2n-1} with weights of the surface measure.
struct DirectionSet {
  std::vector<CVec> u;
  std::vector<double> w;
  std::size_t size() const { return u.size(); }
};

/// w_j = r_j e^{i phi_j}, r on the positive orthant of S^{n-1} in hyperspherical angles
/// (Gauss in theta, trapezoid in phi). Areas: 2 pi, 2 pi^2, pi^3 for n = 1, 2, 3.
DirectionSet sphere_tensor(int n, int n_theta, int n_phi, double phase_offset = 0.0);

/// Directions graded toward `target` (unit vector): phi_1 and theta_1 geometric in the frame
/// where target = e_1.
struct AdaptedOptions {
  int levels = 16;
  double ratio = 0.5;
  int order = 4;
  int interior = 8;
  int phase = 6;      // trapezoid count for the remaining phases
  int polar = 6;      // Gauss count for the remaining polar angles
  double radial_exponent = 0.0;
  /// Options resolving features of width `scale` near the target.
  static AdaptedOptions for_scale(double scale, int order = 4);
  AdaptedOptions refined() const;
};
DirectionSet adapted_directions(int n, const CVec& target, const AdaptedOptions& opts);
Rule1D adapted_radial(const AdaptedOptions& opts);

enum class RuleKind { Volume, Surface };

struct RuleMetadata {
  std::string scheme;
  std::vector<double> strata;   // radial panel breakpoints
  std::uint64_t seed = 0;
  int order = 0;
};

struct QuadratureRule {
  std::vector<CVec> nodes;
  std::vector<double> weights;
  RuleKind kind = RuleKind::Volume;
  RuleMetadata meta;
  std::shared_ptr<const QuadratureRule> coarse;   // half-resolution companion for error estimates
  int dim = 1;

  std::size_t size() const { return nodes.size(); }
  double total_weight() const;
};

struct VolumeOptions {
  int angular = 128;   // phase trapezoid count
  int polar = 12;      // hyperspherical Gauss count
  int radial = 8;      // Gauss order per shell
  int interior = 16;   // Gauss order on the interior panel
  int shells = 12;
  double r0 = 0.1;
  double ratio = 0.5;
  double endpoint_exponent = 0.0;
  bool stagger = false;     // half-step phase shift and different radial orders
  bool companion = false;   // attach the half-resolution rule
  std::uint64_t seed = 0;
  VolumeOptions halved() const;
  VolumeOptions doubled() const;
  /// Default resolution for complex dimension n (the member defaults are the n = 1 rule).
  static VolumeOptions for_dim(int n);
};

QuadratureRule volume_rule(const DomainSpec& domain);
QuadratureRule volume_rule(const DomainSpec& domain, const VolumeOptions& opts);
/// Jittered stratified Monte Carlo in (s^{2n}, angles), about `nodes` points.
QuadratureRule stratified_rule(const DomainSpec& domain, long nodes, std::uint64_t seed);

/// Shell 1 - thickness <= s <= 1 of the star parametrization, midpoint in s and uniform in angle,
/// with node spacing about `spacing` in both directions.
QuadratureRule layer_rule(const DomainSpec& domain, double thickness, double spacing);

struct SurfaceOptions {
  int angular = 128;
  int polar = 24;
  double phase_offset = 0.0;
  static SurfaceOptions for_dim(int n);
};
QuadratureRule surface_rule(const DomainSpec& domain);
QuadratureRule surface_rule(const DomainSpec& domain, const SurfaceOptions& opts);

/// Rule graded toward the target point (interior or boundary) for near-singular integrands.
QuadratureRule adapted_rule(const DomainSpec& domain, const CVec& target, const AdaptedOptions& opts);

struct IntegrationResult {
  cplx value;
  double error = std::numeric_limits<double>::quiet_NaN();
  std::size_t nodes = 0;
};

template <class T>
T pairwise_sum(const T* v, std::size_t n) {
  if (n <= 8) {
    T s{};
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v.data(), v.size());
}

namespace detail {
template <class F>
cplx weighted_sum(const QuadratureRule& rule, F&& f) {
  std::vector<cplx> terms(rule.size());
  const long n = static_cast<long>(rule.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) terms[i] = rule.weights[i] * cplx(f(rule.nodes[i]));
  return pairwise_sum(terms);
}
}  // namespace detail

/// Weighted sum over the rule; error estimate against the coarse companion when present.
template <class F>
IntegrationResult integrate(const QuadratureRule& rule, F&& f) {
  IntegrationResult r;
  r.value = detail::weighted_sum(rule, f);
  r.nodes = rule.size();
  if (rule.coarse) r.error = std::abs(r.value - detail::weighted_sum(*rule.coarse, f));
  return r;
}

/// Streams the adapted rule without materializing it: sum over directions (parallel) of
/// radial sums (sequential), combined pairwise.
template <class F>
cplx integrate_star(const DomainSpec& domain, const DirectionSet& dirs, const Rule1D& radial, F&& f) {
  const int n = domain.dim;
  const long nd = static_cast<long>(dirs.size());
  std::vector<cplx> partial(nd);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < nd; ++i) {
    const CVec& u = dirs.u[i];
    const double r = domain.radial_extent(u);
    const double scale = dirs.w[i] * std::pow(r, 2 * n);
    cplx acc = 0.0;
    for (std::size_t k = 0; k < radial.size(); ++k) {
      const double s = radial.x[k];
      acc += radial.w[k] * std::pow(s, 2 * n - 1) * cplx(f(CVec((s * r) * u)));
    }
    partial[i] = scale * acc;
  }
  return pairwise_sum(partial);
}

template <class F>
cplx integrate_adapted(const DomainSpec& domain, const CVec& target, const AdaptedOptions& opts, F&& f) {
  if (!domain.radial_extent) throw std::invalid_argument(domain.name + " has no radial parametrization");
  const double tn = target.norm();
  CVec dir = target;
  if (tn > 0.0) {
    dir /= tn;
  } else {
    dir = CVec::Zero(domain.dim);
    dir(0) = 1.0;
  }
  return integrate_star(domain, adapted_directions(domain.dim, dir, opts), adapted_radial(opts), f);
}

/// Rule nodes and weights as CSV (Re/Im per coordinate, weight).
std::string rule_csv(const QuadratureRule& rule);

}  // namespace bergman
