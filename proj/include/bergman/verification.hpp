#pragma once

#include "bergman/bergman_oracle.hpp"
#include "bergman/operators.hpp"
#include "bergman/thresholds.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace bergman {

/// One pass/fail check: lower <= value <= upper.
struct Gate {
  std::string name;
  double value = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool pass = false;
};

struct ValidationReport {
  std::string experiment;
  std::string domain;
  nlohmann::json parameters = nlohmann::json::object();
  nlohmann::json constants = nlohmann::json::object();
  std::vector<Gate> gates;
  std::vector<std::string> csv_header;
  std::vector<std::vector<double>> csv_rows;
  double runtime_seconds = 0.0;   // kept out of to_json so reports stay reproducible

  Gate& gate(const std::string& name, double value, double lower, double upper);
  Gate& gate_at_most(const std::string& name, double value, double upper);
  bool passed() const;
  nlohmann::json to_json() const;
  std::string csv() const;
  /// <dir>/<experiment>[-<suffix>].csv
  std::filesystem::path write_csv(const std::filesystem::path& dir, const std::string& suffix = "") const;
};

/// Contexts for each epsilon, sharing one calibration scan.
std::vector<KernelContext> contexts_over_eps(const DomainSpec& domain, const std::vector<double>& eps_list,
                                             const ContextOptions& opts = {});

/// Spread (max - min) / max of a positive sequence.
double relative_spread(const std::vector<double>& values);

/// kernel_b1 in global mode against the closed-form ball kernel, plus Hermitian symmetry.
ValidationReport validate_ball_exactness(const std::vector<int>& dims, int pairs, std::uint64_t seed,
                                         const Thresholds& th);

/// Holomorphic monomials z^a reproduced at the targets. A volume rule integrates against b1;
/// a surface rule integrates against the boundary Cauchy-Fantappie density.
ValidationReport validate_reproducing(const KernelContext& ctx, const QuadratureRule& rule,
                                      const std::vector<std::vector<int>>& polynomials,
                                      const std::vector<CVec>& targets, double tolerance, const Thresholds& th);

/// |b1 g^{n+1} - K0(w)| <= C |w - z| with w on bD; the intercept is extrapolated per pair.
ValidationReport validate_k0_law(const KernelContext& ctx, int pairs, std::uint64_t seed, const Thresholds& th);

/// Two-sided constants C (|g| vs size proxy), C'' (swap symmetry) at N and 2N pairs, and C'(eps).
ValidationReport validate_size_estimate(const std::vector<KernelContext>& eps_contexts, int samples,
                                        std::uint64_t seed, const Thresholds& th);

/// sup |g_eps(w,z) - conj g_eps(z,w)| / |w-z|^2 over |w-z| < delta_eps, per epsilon.
ValidationReport validate_conjugate_symmetry(const std::vector<KernelContext>& eps_contexts,
                                             const ModulusOfContinuity& mod, int samples, std::uint64_t seed,
                                             const Thresholds& th);

/// Schur integrals times |rho(z)|^alpha along the inward normal ray through the e_1 boundary point.
ValidationReport validate_schur(const KernelContext& ctx, const std::vector<double>& alphas,
                                const std::vector<double>& depths, const Thresholds& th);

ValidationReport validate_model_integral(const std::vector<int>& dims, const std::vector<double>& alphas,
                                         const Thresholds& th);

/// p = 2 norms of Gamma_eps on a shared uniform grid.
ValidationReport validate_gamma_uniformity(const std::vector<KernelContext>& eps_contexts, double spacing,
                                           const Thresholds& th);

/// ||A_eps||_2 with r = min(delta_eps, delta'_eps, eps / A_eps) on a layer grid of spacing r / ratio.
ValidationReport validate_defect_decay(const std::vector<KernelContext>& eps_contexts, const ModulusOfContinuity& mod,
                                       double spacing_ratio, int samples, std::uint64_t seed, const Thresholds& th);

/// Norm estimates of |B| for the ball kernel on successively halved uniform grids.
ValidationReport validate_abs_bergman(int dim, const std::vector<double>& spacings, const std::vector<double>& p_list,
                                      int trials, std::uint64_t seed, const Thresholds& th);

/// ||B1(f 1_{D_{1/n}}) - f||_p for f = (1 - z_1)^{-beta}; NotInLp when ||f||_p grows under refinement.
ValidationReport density_experiment(const KernelContext& ctx, double beta, double p, const std::vector<int>& n_list,
                                    const Thresholds& th);
/// Refinement test behind the NotInLp error; returns the three refined values of int |f|^p.
std::vector<double> lp_refinement(const DomainSpec& domain, double beta, double p);

/// Gram identity on an independent rule, idempotence, self-adjointness, closed-form agreement and
/// the geometric convergence rate of the truncated kernel.
ValidationReport validate_oracle(int dim, int degree_cap, std::uint64_t seed, const Thresholds& th);

}  // namespace bergman
