#pragma once

#include "bergman/domain_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bergman {

enum class TauPolicy { Exact, Mollified };

/// Frozen evaluation bundle for g_eps, eta_eps and the kernel.
struct KernelContext {
  DomainSpec domain;
  double epsilon = 0.0;
  double mu = 2.0;
  double c_bound = 1.0;
  std::string chi_profile = "exp-step";
  TauPolicy tau_policy = TauPolicy::Exact;
  double tau_scale = 0.0;   // mollifier width s(eps); 0 means the exact Hessian
  bool global_mode = true;

  int dim() const { return domain.dim; }
  /// chi(|z-w|^2): 1 below mu^2/4, 0 above mu^2, C-infinity in between.
  double chi(double t) const;
  double chi_prime(double t) const;
  CMat tau(const CVec& w) const;
  DbarTensor dbar_tau(const CVec& w) const;
};

struct ContextOptions {
  std::optional<double> mu_override;
  bool global_mode = true;
  std::string chi_profile = "exp-step";
  TauPolicy tau_policy = TauPolicy::Mollified;
  int calibration_samples = 4000;
  std::uint64_t seed = 20240917;
  int grid_per_axis = 0;                          // 0 picks a dimension-dependent default
  std::optional<CalibrationResult> calibration;   // reuse an earlier scan
};

KernelContext make_context(const DomainSpec& domain, double epsilon, const ContextOptions& opts = {});

/// Smallest grid-uniform mollifier width search: largest s with
/// sup_grid |hess_holo - tau_s| <= eps (bisection). Returns 0 for constant Hessians.
double mollifier_scale(const DomainSpec& domain, double epsilon, const std::vector<CVec>& grid);
double hessian_gap(const DomainSpec& domain, double scale, const std::vector<CVec>& grid);

/// Everything about w that the support function and kernel need.
struct BasePoint {
  CVec w;
  double rho = 0.0;
  CVec d_rho;
  CMat hess_holo;
  CMat levi;
  CMat tau;
  DbarTensor dtau;
};

BasePoint base_point(const KernelContext& ctx, const CVec& w);

cplx levi_polynomial(const KernelContext& ctx, const CVec& w, const CVec& z);
cplx levi_polynomial_eps(const KernelContext& ctx, const CVec& w, const CVec& z);
cplx g(const KernelContext& ctx, const CVec& w, const CVec& z);
cplx g_eps(const KernelContext& ctx, const CVec& w, const CVec& z);
cplx g(const KernelContext& ctx, const BasePoint& b, const CVec& z);
cplx g_eps(const KernelContext& ctx, const BasePoint& b, const CVec& z);

/// |rho(w)| + |rho(z)| + |Im <d rho(w), w - z>| + |w - z|^2
double size_proxy(const KernelContext& ctx, const CVec& w, const CVec& z);

struct ModulusOfContinuity {
  std::vector<double> deltas;
  std::vector<double> omegas;
  std::vector<std::vector<double>> per_entry;   // [delta index][j * n + k]
  int samples = 0;
  std::uint64_t seed = 0;
};

ModulusOfContinuity modulus_of_continuity(const DomainSpec& domain, const std::vector<double>& deltas,
                                          int samples, std::uint64_t seed);
double delta_for_epsilon(const ModulusOfContinuity& mod, double epsilon);

/// Geometric delta grid from 1e-4 up to the domain diameter.
std::vector<double> default_deltas(const DomainSpec& domain, int per_decade = 8);

}  // namespace bergman
