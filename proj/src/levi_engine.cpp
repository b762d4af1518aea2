#include "bergman/levi_engine.hpp"

#include "bergman/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace bergman {

namespace {

double psi(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double psi_prime(double x) { return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

}  // namespace

double KernelContext::chi(double t) const {
  if (global_mode) return 1.0;
  const double a = 0.25 * mu * mu;
  const double b = mu * mu;
  if (t <= a) return 1.0;
  if (t >= b) return 0.0;
  const double u = (t - a) / (b - a);
  const double p = psi(1.0 - u);
  const double q = psi(u);
  return p / (p + q);
}

double KernelContext::chi_prime(double t) const {
  if (global_mode) return 0.0;
  const double a = 0.25 * mu * mu;
  const double b = mu * mu;
  if (t <= a || t >= b) return 0.0;
  const double u = (t - a) / (b - a);
  const double p = psi(1.0 - u);
  const double q = psi(u);
  const double dp = -psi_prime(1.0 - u);
  const double dq = psi_prime(u);
  return (dp * q - p * dq) / ((p + q) * (p + q)) / (b - a);
}

CMat KernelContext::tau(const CVec& w) const {
  if (tau_scale <= 0.0) return domain.hess_holo(w);
  return domain.smoothed_hess_holo(w, tau_scale);
}

DbarTensor KernelContext::dbar_tau(const CVec& w) const { return domain.dbar_smoothed_hess_holo(w, tau_scale); }

double hessian_gap(const DomainSpec& domain, double scale, const std::vector<CVec>& grid) {
  double gap = 0.0;
  for (const CVec& w : grid) {
    const CMat diff = domain.hess_holo(w) - domain.smoothed_hess_holo(w, scale);
    gap = std::max(gap, diff.cwiseAbs().maxCoeff());
  }
  return gap;
}

double mollifier_scale(const DomainSpec& domain, double epsilon, const std::vector<CVec>& grid) {
  if (domain.constant_hessian || epsilon <= 0.0) return 0.0;
  double hi = domain.diameter;
  if (hessian_gap(domain, hi, grid) <= epsilon) return hi;
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hessian_gap(domain, mid, grid) <= epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

KernelContext make_context(const DomainSpec& domain, double epsilon, const ContextOptions& opts) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  if (opts.chi_profile != "exp-step") throw ConfigError("chi_profile", "unknown profile '" + opts.chi_profile + "'");
  KernelContext ctx;
  ctx.domain = domain;
  ctx.epsilon = epsilon;
  ctx.chi_profile = opts.chi_profile;

  const CalibrationResult cal =
      opts.calibration ? *opts.calibration : calibrate_constants(domain, opts.calibration_samples, opts.seed);
  if (opts.mu_override) {
    if (!(*opts.mu_override > 0.0)) throw ConfigError("mu_override", "must be positive");
    ctx.global_mode = false;
    ctx.mu = *opts.mu_override;
    ctx.c_bound = bound_constant(domain, ctx.mu, false, sample_pairs(domain, opts.calibration_samples, opts.seed));
    if (!(ctx.c_bound > 0.0)) throw CalibrationFailed("support-function bounds fail at mu_override");
  } else if (opts.global_mode) {
    if (!cal.global) throw CalibrationFailed("global holomorphic mode needs the bounds with chi = 1 on all pairs");
    ctx.global_mode = true;
    ctx.mu = std::max(cal.mu, domain.diameter);
    ctx.c_bound = cal.c;
  } else {
    ctx.global_mode = false;
    ctx.mu = cal.mu;
    ctx.c_bound = cal.c;
  }

  if (opts.tau_policy == TauPolicy::Mollified && epsilon > 0.0 && !domain.constant_hessian) {
    const int per_axis = opts.grid_per_axis > 0 ? opts.grid_per_axis : (domain.dim == 1 ? 201 : (domain.dim == 2 ? 15 : 5));
    ctx.tau_policy = TauPolicy::Mollified;
    ctx.tau_scale = mollifier_scale(domain, epsilon, calibration_grid(domain, per_axis));
  } else {
    ctx.tau_policy = opts.tau_policy;
    ctx.tau_scale = 0.0;
  }
  return ctx;
}

BasePoint base_point(const KernelContext& ctx, const CVec& w) {
  const DomainSpec& d = ctx.domain;
  BasePoint b;
  b.w = w;
  b.rho = d.rho(w);
  b.d_rho = d.d_rho(w);
  b.hess_holo = d.hess_holo(w);
  b.levi = d.hess_mixed(w);
  b.tau = ctx.tau(w);
  if (!d.constant_hessian) b.dtau = ctx.dbar_tau(w);
  return b;
}

namespace {

cplx quadratic_part(const CVec& d_rho, const CMat& h, const CVec& v) {
  return pair(d_rho, v) + 0.5 * pair(v, h * v);
}

cplx support(const KernelContext& ctx, const BasePoint& b, const CVec& z, const CMat& h) {
  const int n = ctx.dim();
  std::array<cplx, kMaxDim> v;
  double t = 0.0;
  for (int j = 0; j < n; ++j) {
    v[j] = z(j) - b.w(j);
    t += std::norm(v[j]);
  }
  cplx p = 0.0;
  for (int j = 0; j < n; ++j) {
    cplx hv = 0.0;
    for (int k = 0; k < n; ++k) hv += h(j, k) * v[k];
    p += (b.d_rho(j) + 0.5 * hv) * v[j];
  }
  const double x = ctx.chi(t);
  return -p * x + t * (1.0 - x) - b.rho;
}

}  // namespace

cplx levi_polynomial(const KernelContext& ctx, const CVec& w, const CVec& z) {
  return quadratic_part(ctx.domain.d_rho(w), ctx.domain.hess_holo(w), CVec(z - w));
}

cplx levi_polynomial_eps(const KernelContext& ctx, const CVec& w, const CVec& z) {
  return quadratic_part(ctx.domain.d_rho(w), ctx.tau(w), CVec(z - w));
}

cplx g(const KernelContext& ctx, const BasePoint& b, const CVec& z) { return support(ctx, b, z, b.hess_holo); }
cplx g_eps(const KernelContext& ctx, const BasePoint& b, const CVec& z) { return support(ctx, b, z, b.tau); }

cplx g(const KernelContext& ctx, const CVec& w, const CVec& z) {
  const DomainSpec& d = ctx.domain;
  BasePoint b;
  b.w = w;
  b.rho = d.rho(w);
  b.d_rho = d.d_rho(w);
  return support(ctx, b, z, d.hess_holo(w));
}

cplx g_eps(const KernelContext& ctx, const CVec& w, const CVec& z) {
  const DomainSpec& d = ctx.domain;
  BasePoint b;
  b.w = w;
  b.rho = d.rho(w);
  b.d_rho = d.d_rho(w);
  return support(ctx, b, z, ctx.tau(w));
}

double size_proxy(const KernelContext& ctx, const CVec& w, const CVec& z) {
  const DomainSpec& d = ctx.domain;
  const CVec v = w - z;
  return std::abs(d.rho(w)) + std::abs(d.rho(z)) + std::abs(pair(d.d_rho(w), v).imag()) + v.squaredNorm();
}

std::vector<double> default_deltas(const DomainSpec& domain, int per_decade) {
  std::vector<double> out;
  const double top = domain.diameter;
  for (double e = -4.0; std::pow(10.0, e) <= top * (1.0 + 1e-12); e += 1.0 / per_decade) out.push_back(std::pow(10.0, e));
  return out;
}

ModulusOfContinuity modulus_of_continuity(const DomainSpec& domain, const std::vector<double>& deltas, int samples,
                                          std::uint64_t seed) {
  if (!std::is_sorted(deltas.begin(), deltas.end())) throw std::invalid_argument("deltas must be increasing");
  const int n = domain.dim;
  ModulusOfContinuity mod;
  mod.deltas = deltas;
  mod.samples = samples;
  mod.seed = seed;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> running(n * n, 0.0);
  for (double delta : deltas) {
    auto visit = [&](const CVec& w, const CVec& z) {
      if (domain.rho(z) > 0.0) return;
      const CMat dh = domain.hess_holo(w) - domain.hess_holo(z);
      const CMat dm = domain.hess_mixed(w) - domain.hess_mixed(z);
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          running[j * n + k] = std::max(running[j * n + k], std::abs(dh(j, k)) + std::abs(dm(j, k)));
        }
      }
    };
    for (int s = 0; s < samples; ++s) {
      const CVec w = sample_interior(domain, rng);
      if (s % 2 == 0) {
        visit(w, CVec(w + delta * std::pow(unif(rng), 1.0 / (2 * n)) * random_direction(n, rng)));
      } else {
        // axis-aligned displacements along a random real coordinate
        const int axis = static_cast<int>(unif(rng) * 2 * n) % (2 * n);
        CVec e = CVec::Zero(n);
        e(axis / 2) = axis % 2 == 0 ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
        visit(w, CVec(w + delta * e));
        visit(w, CVec(w - delta * e));
      }
    }
    mod.per_entry.push_back(running);
    double total = 0.0;
    for (double v : running) total += v;
    mod.omegas.push_back(total);
  }
  return mod;
}

double delta_for_epsilon(const ModulusOfContinuity& mod, double epsilon) {
  double best = -1.0;
  for (std::size_t i = 0; i < mod.deltas.size(); ++i) {
    if (mod.omegas[i] <= epsilon) best = mod.deltas[i];
  }
  if (best < 0.0) throw NoAdmissibleDelta("omega exceeds epsilon=" + std::to_string(epsilon) + " at every sampled delta");
  return best;
}

}  // namespace bergman
