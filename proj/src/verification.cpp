#include "bergman/verification.hpp"

#include "bergman/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bergman {

namespace {

using Json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<std::pair<const char*, double Thresholds::*>>& threshold_fields() {
  static const std::vector<std::pair<const char*, double Thresholds::*>> fields = {
      {"ball_exactness", &Thresholds::ball_exactness},
      {"reproduce_volume", &Thresholds::reproduce_volume},
      {"reproduce_monte_carlo", &Thresholds::reproduce_monte_carlo},
      {"reproduce_boundary", &Thresholds::reproduce_boundary},
      {"k0_intercept", &Thresholds::k0_intercept},
      {"sample_stability", &Thresholds::sample_stability},
      {"singular_stability", &Thresholds::singular_stability},
      {"eps_uniformity", &Thresholds::eps_uniformity},
      {"halving_low", &Thresholds::halving_low},
      {"halving_high", &Thresholds::halving_high},
      {"schur_spread", &Thresholds::schur_spread},
      {"schur_closed_form", &Thresholds::schur_closed_form},
      {"model_agreement", &Thresholds::model_agreement},
      {"gamma_uniformity", &Thresholds::gamma_uniformity},
      {"defect_baseline", &Thresholds::defect_baseline},
      {"defect_kappa_factor", &Thresholds::defect_kappa_factor},
      {"abs_stability", &Thresholds::abs_stability},
      {"density_ratio", &Thresholds::density_ratio},
      {"gram_identity", &Thresholds::gram_identity},
      {"projection_identity", &Thresholds::projection_identity},
      {"oracle_agreement", &Thresholds::oracle_agreement},
      {"oracle_slope", &Thresholds::oracle_slope},
  };
  return fields;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

cplx monomial(const std::vector<int>& a, const CVec& z) {
  cplx v = 1.0;
  for (std::size_t j = 0; j < a.size(); ++j) v *= int_pow(z(static_cast<Eigen::Index>(j)), a[j]);
  return v;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

/// Inward normal ray z = p - d nu through the boundary point on the positive Re w_1 axis.
CVec ray_point(const DomainSpec& d, double depth) {
  CVec e = CVec::Zero(d.dim);
  e(0) = 1.0;
  const CVec p = boundary_point(d, e);
  const CVec dr = d.d_rho(p);
  return p - depth * CVec(dr.conjugate() / dr.norm());
}

/// Guard against tensor layer grids that would not fit in memory.
void check_layer_size(int dim, double thickness, double spacing, const std::string& key) {
  const double angular = std::ceil(2 * kPi / spacing);
  const double polar = std::ceil(kPi / 2 / spacing);
  const double nodes = std::pow(angular, dim) * std::pow(polar, dim - 1) * std::ceil(thickness / spacing);
  if (nodes > 4e6) {
    throw ConfigError(key, "uniform grid would need " + label(nodes) + " nodes; use a planar domain or a coarser spacing");
  }
}

double ball_volume_weight_integral(int n, double alpha) {
  // int_B (1 - |w|^2)^{-alpha} dV
  return std::pow(kPi, n) / std::tgamma(static_cast<double>(n)) * std::beta(static_cast<double>(n), 1.0 - alpha);
}

}  // namespace

Json Thresholds::to_json() const {
  Json j;
  j["version"] = kThresholdsVersion;
  for (const auto& [name, field] : threshold_fields()) j[name] = this->*field;
  return j;
}

void Thresholds::apply_overrides(const Json& overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) throw ConfigError("thresholds", "must be an object of name: number");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "version") continue;
    const auto& fields = threshold_fields();
    auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return key == f.first; });
    if (it == fields.end()) throw ConfigError("thresholds." + key, "unknown threshold");
    if (!value.is_number()) throw ConfigError("thresholds." + key, "must be a number");
    this->*(it->second) = value.get<double>();
  }
}

Gate& ValidationReport::gate(const std::string& name, double value, double lower, double upper) {
  Gate g;
  g.name = name;
  g.value = value;
  g.lower = lower;
  g.upper = upper;
  g.pass = std::isfinite(value) && value >= lower && value <= upper;
  gates.push_back(g);
  return gates.back();
}

Gate& ValidationReport::gate_at_most(const std::string& name, double value, double upper) {
  return gate(name, value, -kInf, upper);
}

bool ValidationReport::passed() const {
  return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.pass; });
}

Json ValidationReport::to_json() const {
  Json j;
  j["experiment"] = experiment;
  j["domain"] = domain;
  j["parameters"] = parameters;
  j["constants"] = constants;
  Json gs = Json::array();
  for (const Gate& g : gates) {
    Json e;
    e["name"] = g.name;
    e["value"] = std::isfinite(g.value) ? Json(g.value) : Json(label(g.value));
    if (std::isfinite(g.lower)) e["lower"] = g.lower;
    if (std::isfinite(g.upper)) e["upper"] = g.upper;
    e["pass"] = g.pass;
    gs.push_back(e);
  }
  j["gates"] = gs;
  j["pass"] = passed();
  j["csv_rows"] = csv_rows.size();
  return j;
}

std::string ValidationReport::csv() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < csv_header.size(); ++k) os << (k ? "," : "") << csv_header[k];
  os << "\n";
  char buf[40];
  for (const auto& row : csv_rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      os << (k ? "," : "") << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::filesystem::path ValidationReport::write_csv(const std::filesystem::path& dir, const std::string& suffix) const {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p = dir / (experiment + (suffix.empty() ? "" : "-" + suffix) + ".csv");
  std::ofstream out(p);
  out << csv();
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return p;
}

std::vector<KernelContext> contexts_over_eps(const DomainSpec& domain, const std::vector<double>& eps_list,
                                             const ContextOptions& opts) {
  ContextOptions o = opts;
  if (!o.calibration) o.calibration = calibrate_constants(domain, o.calibration_samples, o.seed);
  std::vector<KernelContext> out;
  for (double eps : eps_list) out.push_back(make_context(domain, eps, o));
  return out;
}

double relative_spread(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return (*hi - *lo) / *hi;
}

// ---------------------------------------------------------------------------------------------

ValidationReport validate_ball_exactness(const std::vector<int>& dims, int pairs, std::uint64_t seed,
                                         const Thresholds& th) {
  Stopwatch clock;
  ValidationReport r;
  r.experiment = "ball-exactness";
  r.domain = "ball";
  r.parameters = {{"dims", dims}, {"pairs", pairs}, {"seed", seed}};
  r.csv_header = {"n", "pair", "abs_value", "rel_error", "hermitian_defect"};
  double worst = 0.0, worst_herm = 0.0;
  for (int n : dims) {
    const DomainSpec d = make_ball(n);
    const KernelContext ctx = make_context(d, 0.0);
    Rng rng(seed + static_cast<std::uint64_t>(n));
    double local = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const CVec w = sample_interior(d, rng);
      const CVec z = sample_interior(d, rng);
      const cplx b = kernel_b1(ctx, w, z).value;
      const cplx o = ball_kernel(n, w, z);
      const double rel = std::abs(b - o) / std::abs(o);
      const double herm = std::abs(b - std::conj(kernel_b1(ctx, z, w).value)) / std::abs(b);
      local = std::max(local, rel);
      worst_herm = std::max(worst_herm, herm);
      r.csv_rows.push_back({double(n), double(i), std::abs(b), rel, herm});
    }
    r.constants["max_rel_error_n" + std::to_string(n)] = local;
    worst = std::max(worst, local);
  }
  r.gate_at_most("max_rel_error", worst, th.ball_exactness);
  r.gate_at_most("hermitian_defect", worst_herm, th.ball_exactness);
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_reproducing(const KernelContext& ctx, const QuadratureRule& rule,
                                      const std::vector<std::vector<int>>& polynomials,
                                      const std::vector<CVec>& targets, double tolerance, const Thresholds&) {
  Stopwatch clock;
  const bool volume = rule.kind == RuleKind::Volume;
  ValidationReport r;
  r.experiment = volume ? "reproduce" : "reproduce-boundary";
  r.domain = ctx.domain.name;
  r.parameters = {{"nodes", rule.size()},       {"scheme", rule.meta.scheme}, {"seed", rule.meta.seed},
                  {"polynomials", polynomials}, {"targets", targets.size()},  {"tolerance", tolerance},
                  {"epsilon", ctx.epsilon},     {"global_mode", ctx.global_mode}};
  r.csv_header = {"polynomial", "target", "abs_exact", "abs_error", "rel_error"};

  const long nt = static_cast<long>(targets.size());
  const long nn = static_cast<long>(rule.size());
  // boundary densities are shared by all test functions
  std::vector<std::vector<cplx>> dens;
  double pairing = 0.0;
  if (!volume) {
    dens.assign(nt, std::vector<cplx>(nn));
    std::vector<double> pair_err(nt, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
    for (long t = 0; t < nt; ++t) {
      for (long i = 0; i < nn; ++i) {
        const BoundaryDensity bd = kernel_b1_hat(ctx, rule.nodes[i], targets[t]);
        dens[t][i] = bd.density * rule.weights[i];
        pair_err[t] = std::max(pair_err[t], std::abs(bd.pairing - 1.0));
      }
    }
    pairing = *std::max_element(pair_err.begin(), pair_err.end());
    r.constants["max_pairing_defect"] = pairing;
  }

  double worst = 0.0;
  for (std::size_t p = 0; p < polynomials.size(); ++p) {
    std::vector<cplx> f(nn);
    for (long i = 0; i < nn; ++i) f[i] = monomial(polynomials[p], rule.nodes[i]);
    std::vector<cplx> out(nt);
    if (volume) {
      out = b1_apply(ctx, rule, f, targets);
    } else {
      for (long t = 0; t < nt; ++t) {
        std::vector<cplx> terms(nn);
        for (long i = 0; i < nn; ++i) terms[i] = dens[t][i] * f[i];
        out[t] = pairwise_sum(terms);
      }
    }
    double local = 0.0;
    for (long t = 0; t < nt; ++t) {
      const cplx exact = monomial(polynomials[p], targets[t]);
      const double err = std::abs(out[t] - exact);
      const double rel = err / std::abs(exact);
      local = std::max(local, rel);
      r.csv_rows.push_back({double(p), double(t), std::abs(exact), err, rel});
    }
    r.constants["max_rel_error_poly" + std::to_string(p)] = local;
    worst = std::max(worst, local);
  }
  r.gate_at_most("max_rel_error", worst, tolerance);
  if (!volume) r.gate_at_most("pairing_defect", pairing, 1e-10);
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_k0_law(const KernelContext& ctx, int pairs, std::uint64_t seed, const Thresholds& th) {
  Stopwatch clock;
  const DomainSpec& d = ctx.domain;
  const int n = d.dim;
  ValidationReport r;
  r.experiment = "k0-law";
  r.domain = d.name;
  r.parameters = {{"pairs", pairs}, {"seed", seed}, {"epsilon", ctx.epsilon}, {"tau_scale", ctx.tau_scale}};
  r.csv_header = {"t", "remainder", "ratio", "intercept"};
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double slope = 0.0, intercept = 0.0, k0_min = kInf, k0_max = 0.0;
  int taken = 0;
  while (taken < pairs) {
    const CVec w = sample_boundary(d, rng);
    CVec dir = random_direction(n, rng);
    const CVec dr = d.d_rho(w);
    const double normal = 2.0 * pair(dr, dir).real() / (2.0 * dr.norm());
    if (std::abs(normal) < 0.2) continue;
    if (normal > 0.0) dir = -dir;
    const double t = 1e-5 * std::pow(1e4, unif(rng));
    const double t0 = 1e-5 * std::pow(1e2, unif(rng));
    const CVec z = w + t * dir;
    if (!(d.rho(z) < 0.0) || !(d.rho(CVec(w + t0 * dir)) < 0.0)) continue;
    ++taken;
    const KernelParts kp = kernel_parts(ctx, w, z);
    const double ratio = kp.remainder / t;
    slope = std::max(slope, ratio);
    k0_min = std::min(k0_min, kp.k0);
    k0_max = std::max(k0_max, kp.k0);
    // quadratic extrapolation of the remainder to |w - z| = 0 from t0, t0/2, t0/4
    const double r1 = kernel_parts(ctx, w, CVec(w + t0 * dir)).remainder;
    const double r2 = kernel_parts(ctx, w, CVec(w + 0.5 * t0 * dir)).remainder;
    const double r4 = kernel_parts(ctx, w, CVec(w + 0.25 * t0 * dir)).remainder;
    const double a = (8.0 * r4 - 6.0 * r2 + r1) / 3.0;
    intercept = std::max(intercept, std::abs(a));
    r.csv_rows.push_back({t, kp.remainder, ratio, a});
  }
  r.constants["C_eps"] = slope;
  r.constants["max_intercept"] = intercept;
  r.constants["k0_min"] = k0_min;
  r.constants["k0_max"] = k0_max;
  r.gate_at_most("intercept", intercept, th.k0_intercept);
  r.gate("C_eps_finite", slope, 0.0, 1e12);
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_size_estimate(const std::vector<KernelContext>& ctxs, int samples, std::uint64_t seed,
                                        const Thresholds& th) {
  Stopwatch clock;
  if (ctxs.empty()) throw std::invalid_argument("need at least one context");
  const KernelContext& c0 = ctxs.front();
  const DomainSpec& d = c0.domain;
  ValidationReport r;
  r.experiment = "size-estimate";
  r.domain = d.name;
  std::vector<double> eps;
  for (const auto& c : ctxs) eps.push_back(c.epsilon);
  r.parameters = {{"samples", samples}, {"seed", seed}, {"eps", eps}};
  r.csv_header = {"kind", "abs_g", "size_proxy", "ratio", "swap_ratio"};

  const auto pairs = sample_pairs(d, 2 * samples, seed);
  double rmax[2] = {0, 0}, rmin[2] = {kInf, kInf}, smax[2] = {0, 0};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [w, z] = pairs[i];
    const double proxy = size_proxy(c0, w, z);
    if (!(proxy > 0.0)) continue;
    const double gw = std::abs(g(c0, w, z));
    const double gz = std::abs(g(c0, z, w));
    const double ratio = gw / proxy;
    const double swap = std::max(gw / gz, gz / gw);
    for (int h = (i < static_cast<std::size_t>(samples) ? 0 : 1); h < 2; ++h) {
      rmax[h] = std::max(rmax[h], ratio);
      rmin[h] = std::min(rmin[h], ratio);
      smax[h] = std::max(smax[h], swap);
    }
    r.csv_rows.push_back({double(i % 4), gw, proxy, ratio, swap});
  }
  const double c1 = std::max(rmax[0], 1.0 / rmin[0]);
  const double c2 = std::max(rmax[1], 1.0 / rmin[1]);
  r.constants["C"] = c2;
  r.constants["C_half_samples"] = c1;
  r.constants["ratio_min"] = rmin[1];
  r.constants["ratio_max"] = rmax[1];
  r.constants["C_swap"] = smax[1];
  r.constants["C_swap_half_samples"] = smax[0];
  r.gate_at_most("C_doubling_change", std::abs(c2 - c1) / c1, th.sample_stability);
  r.gate_at_most("C_swap_doubling_change", std::abs(smax[1] - smax[0]) / smax[0], th.sample_stability);

  std::vector<double> cprime;
  for (const auto& c : ctxs) {
    double hi = 1.0;
    for (const auto& [w, z] : pairs) {
      const double a = std::abs(g_eps(c, w, z));
      const double b = std::abs(g(c, w, z));
      if (!(a > 0.0 && b > 0.0)) continue;
      hi = std::max({hi, a / b, b / a});
    }
    cprime.push_back(hi);
    r.constants["C_prime_eps_" + label(c.epsilon)] = hi;
  }
  if (cprime.size() > 1) r.gate_at_most("C_prime_eps_variation", relative_spread(cprime), th.eps_uniformity);
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_conjugate_symmetry(const std::vector<KernelContext>& ctxs, const ModulusOfContinuity& mod,
                                             int samples, std::uint64_t seed, const Thresholds& th) {
  Stopwatch clock;
  if (ctxs.empty()) throw std::invalid_argument("need at least one context");
  const DomainSpec& d = ctxs.front().domain;
  const int n = d.dim;
  ValidationReport r;
  r.experiment = "conjugate-symmetry";
  r.domain = d.name;
  r.parameters = {{"samples", samples}, {"seed", seed}, {"modulus_samples", mod.samples}, {"modulus_seed", mod.seed}};
  r.csv_header = {"eps", "tau_scale", "delta_eps", "sup_ratio", "sup_ratio_half_samples"};
  std::vector<double> sups;
  for (const KernelContext& ctx : ctxs) {
    const double de = delta_for_epsilon(mod, ctx.epsilon);
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double sup = 0.0, half = 0.0;
    for (int s = 0; s < samples; ++s) {
      CVec w = sample_interior(d, rng);
      if (s % 2 == 0) {
        // concentrate on the band around Re w_1 = 0 where the Hessian is not differentiable
        w(0) = cplx((2.0 * unif(rng) - 1.0) * 2.0 * de, w(0).imag());
        if (!(d.rho(w) < 0.0)) continue;
      }
      const CVec z = w + de * std::pow(unif(rng), 1.0 / (2 * n)) * random_direction(n, rng);
      if (!(d.rho(z) < 0.0)) continue;
      const double dist2 = (z - w).squaredNorm();
      if (!(dist2 > 0.0)) continue;
      const double ratio = std::abs(g_eps(ctx, w, z) - std::conj(g_eps(ctx, z, w))) / dist2;
      sup = std::max(sup, ratio);
      if (s < samples / 2) half = sup;
    }
    sups.push_back(sup);
    r.constants["sup_ratio_eps_" + label(ctx.epsilon)] = sup;
    r.constants["delta_eps_" + label(ctx.epsilon)] = de;
    r.csv_rows.push_back({ctx.epsilon, ctx.tau_scale, de, sup, half});
  }
  for (std::size_t i = 0; i + 1 < sups.size(); ++i) {
    r.gate("halving_factor_" + label(ctxs[i].epsilon) + "_to_" + label(ctxs[i + 1].epsilon), sups[i] / sups[i + 1],
           th.halving_low, th.halving_high);
  }
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_schur(const KernelContext& ctx, const std::vector<double>& alphas,
                                const std::vector<double>& depths, const Thresholds& th) {
  Stopwatch clock;
  const DomainSpec& d = ctx.domain;
  const int n = d.dim;
  ValidationReport r;
  r.experiment = "schur";
  r.domain = d.name;
  r.parameters = {{"alphas", alphas}, {"depths", depths}, {"epsilon", ctx.epsilon}};
  r.csv_header = {"alpha", "depth", "abs_rho_z", "integral", "scaled", "refinement_change", "w_slot_ratio"};

  // swap constant for the w-slot comparison
  double swap = 1.0;
  for (const auto& [w, z] : sample_pairs(d, 4000, 20240917)) {
    const double a = std::abs(g(ctx, w, z));
    const double b = std::abs(g(ctx, z, w));
    if (a > 0.0 && b > 0.0) swap = std::max({swap, a / b, b / a});
  }
  r.constants["C_swap"] = swap;
  const double half = alphas.empty() ? 0.5 : *std::min_element(alphas.begin(), alphas.end(), [](double a, double b) {
    return std::abs(a - 0.5) < std::abs(b - 0.5);
  });

  double worst_change = 0.0;
  for (double alpha : alphas) {
    std::vector<double> scaled;
    for (double depth : depths) {
      const CVec z = ray_point(d, depth);
      const double rz = std::abs(d.rho(z));
      const AdaptedOptions opts = schur_options(ctx, z);
      const SchurResult s = schur_integral(ctx, z, alpha, opts);
      worst_change = std::max(worst_change, s.relative_change);
      double wratio = std::numeric_limits<double>::quiet_NaN();
      if (alpha == half) {
        const SchurResult sw = schur_integral_w(ctx, z, alpha, opts);
        wratio = sw.value / s.value;
        const double bound = std::pow(swap, n + 1);
        r.gate("w_slot_ratio_depth_" + label(depth), wratio, 1.0 / bound, bound);
      }
      scaled.push_back(s.value * std::pow(rz, alpha));
      r.csv_rows.push_back({alpha, depth, rz, s.value, scaled.back(), s.relative_change, wratio});
    }
    r.constants["spread_alpha_" + label(alpha)] = relative_spread(scaled);
    r.gate_at_most("spread_alpha_" + label(alpha), relative_spread(scaled), th.schur_spread);
  }
  r.constants["max_refinement_change"] = worst_change;

  if (d.params.kind == "ball" && d.params.shift == 0.0) {
    const CVec origin = CVec::Zero(n);
    for (double alpha : alphas) {
      const SchurResult s = schur_integral(ctx, origin, alpha, schur_options(ctx, origin));
      const double exact = ball_volume_weight_integral(n, alpha);
      r.constants["origin_alpha_" + label(alpha)] = s.value;
      r.gate_at_most("origin_closed_form_alpha_" + label(alpha), std::abs(s.value - exact) / exact, th.schur_closed_form);
      r.csv_rows.push_back({alpha, 1.0, 1.0, s.value, s.value, s.relative_change, std::numeric_limits<double>::quiet_NaN()});
    }
  }
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_model_integral(const std::vector<int>& dims, const std::vector<double>& alphas,
                                         const Thresholds& th) {
  Stopwatch clock;
  ValidationReport r;
  r.experiment = "model-integral";
  r.domain = "model";
  r.parameters = {{"dims", dims}, {"alphas", alphas}};
  r.csv_header = {"n", "alpha", "direct", "reduced", "c_alpha", "remaining", "closed_form", "relative_difference"};
  for (int n : dims) {
    for (double alpha : alphas) {
      const ModelIntegral m = rescaled_model_integral(n, alpha);
      const double closed = model_integral_closed_form(n, alpha);
      r.csv_rows.push_back({double(n), alpha, m.direct, m.reduced, m.c_alpha, m.remaining, closed, m.relative_difference});
      r.gate_at_most("agreement_n" + std::to_string(n) + "_alpha_" + label(alpha), m.relative_difference,
                     th.model_agreement);
    }
  }
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_gamma_uniformity(const std::vector<KernelContext>& ctxs, double spacing,
                                           const Thresholds& th) {
  Stopwatch clock;
  if (ctxs.empty()) throw std::invalid_argument("need at least one context");
  const DomainSpec& d = ctxs.front().domain;
  check_layer_size(d.dim, 1.0, spacing, "experiments.gamma-uniformity.spacing");
  const QuadratureRule rule = layer_rule(d, 1.0, spacing);
  ValidationReport r;
  r.experiment = "gamma-uniformity";
  r.domain = d.name;
  r.parameters = {{"spacing", spacing}, {"nodes", rule.size()}, {"p", 2}};
  r.csv_header = {"eps", "tau_scale", "norm_gamma_eps", "norm_gamma", "iterations"};
  const NormEstimate exact = estimate_norm(gamma_operator(ctxs.front(), rule, rule, false), 2.0, 1, 1);
  r.constants["norm_gamma"] = exact.value;
  std::vector<double> norms;
  for (const KernelContext& ctx : ctxs) {
    const NormEstimate e = estimate_norm(gamma_operator(ctx, rule, rule, true), 2.0, 1, 1);
    norms.push_back(e.value);
    r.constants["norm_gamma_eps_" + label(ctx.epsilon)] = e.value;
    r.csv_rows.push_back({ctx.epsilon, ctx.tau_scale, e.value, exact.value, double(e.iterations)});
  }
  r.gate_at_most("eps_spread", relative_spread(norms), th.gamma_uniformity);
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_defect_decay(const std::vector<KernelContext>& ctxs, const ModulusOfContinuity& mod,
                                       double spacing_ratio, int samples, std::uint64_t seed, const Thresholds& th) {
  Stopwatch clock;
  if (ctxs.empty()) throw std::invalid_argument("need at least one context");
  const DomainSpec& d = ctxs.front().domain;
  const bool hermitian_baseline = d.constant_hessian;
  ValidationReport r;
  r.experiment = "defect-decay";
  r.domain = d.name;
  r.parameters = {{"spacing_ratio", spacing_ratio}, {"samples", samples}, {"seed", seed}};
  r.csv_header = {"eps", "r", "delta_eps", "delta_k0", "remainder_slope", "nodes", "nonzeros", "norm_A", "kappa",
                  "norm_A_oracle"};
  std::vector<double> norms, kappas;
  for (const KernelContext& ctx : ctxs) {
    const RadiusChoice rc = select_truncation_radius(ctx, mod, samples, seed);
    const double thickness = std::min(1.0, rc.r);
    const double spacing = rc.r / spacing_ratio;
    check_layer_size(d.dim, thickness, spacing, "experiments.defect-decay");
    const QuadratureRule rule = layer_rule(d, thickness, spacing);
    const TruncationProfile prof{rc.r};
    const DiscreteOperator a = defect_A_eps(ctx, rule, prof);
    const NormEstimate e = estimate_norm(a, 2.0, 1, seed);
    double oracle = std::numeric_limits<double>::quiet_NaN();
    if (d.params.kind == "ball") {
      oracle = estimate_norm(defect_A_eps(ctx, rule, prof, DefectKernel::BallOracle), 2.0, 1, seed).value;
      r.gate_at_most("oracle_defect_eps_" + label(ctx.epsilon), oracle, th.defect_baseline);
    }
    norms.push_back(e.value);
    kappas.push_back(e.value / ctx.epsilon);
    r.constants["norm_A_eps_" + label(ctx.epsilon)] = e.value;
    r.constants["r_eps_" + label(ctx.epsilon)] = rc.r;
    r.csv_rows.push_back({ctx.epsilon, rc.r, rc.delta_eps, rc.delta_k0, rc.slope, double(rule.size()),
                          double(std::get<SparseMatrix>(a.matrix).nonZeros()), e.value, e.value / ctx.epsilon, oracle});
    if (hermitian_baseline) r.gate_at_most("baseline_eps_" + label(ctx.epsilon), e.value, th.defect_baseline);
  }
  if (!hermitian_baseline) {
    for (std::size_t i = 0; i + 1 < norms.size(); ++i) {
      r.gate("halving_factor_" + label(ctxs[i].epsilon) + "_to_" + label(ctxs[i + 1].epsilon), norms[i] / norms[i + 1],
             th.halving_low, th.halving_high);
    }
    const auto [lo, hi] = std::minmax_element(kappas.begin(), kappas.end());
    r.constants["kappa_min"] = *lo;
    r.constants["kappa_max"] = *hi;
    r.gate_at_most("kappa_factor", *hi / *lo, th.defect_kappa_factor);
  }
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_abs_bergman(int dim, const std::vector<double>& spacings, const std::vector<double>& p_list,
                                      int trials, std::uint64_t seed, const Thresholds& th) {
  Stopwatch clock;
  const DomainSpec d = make_ball(dim);
  ValidationReport r;
  r.experiment = "abs-bergman";
  r.domain = d.name;
  r.parameters = {{"spacings", spacings}, {"p", p_list}, {"trials", trials}, {"seed", seed}};
  r.csv_header = {"spacing", "nodes", "p", "norm_estimate", "lower_bound", "iterations"};
  std::vector<std::vector<double>> est(p_list.size());
  double triangle = 0.0;
  for (double h : spacings) {
    check_layer_size(dim, 1.0, h, "experiments.abs-bergman.spacings");
    const QuadratureRule rule = layer_rule(d, 1.0, h);
    const DiscreteOperator b =
        kernel_operator([dim](const CVec& w, const CVec& z) { return ball_kernel(dim, w, z); }, rule, rule, "B");
    const DiscreteOperator ab = abs_operator(b);
    // |B| f >= |B f| pointwise for f >= 0
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector f(static_cast<long>(rule.size()));
    for (long i = 0; i < f.size(); ++i) f(i) = unif(rng);
    const Vector bf = b.apply(f);
    const Vector abf = ab.apply(f);
    for (long i = 0; i < f.size(); ++i) triangle = std::max(triangle, (std::abs(bf(i)) - abf(i).real()) / abf(i).real());
    for (std::size_t k = 0; k < p_list.size(); ++k) {
      const NormEstimate e = estimate_norm(ab, p_list[k], trials, seed);
      est[k].push_back(e.value);
      r.csv_rows.push_back({h, double(rule.size()), p_list[k], e.value, e.lower_bound ? 1.0 : 0.0, double(e.iterations)});
    }
  }
  r.gate_at_most("triangle_inequality_violation", std::max(triangle, 0.0), 1e-12);
  for (std::size_t k = 0; k < p_list.size(); ++k) {
    for (std::size_t i = 0; i + 1 < est[k].size(); ++i) {
      const double change = std::abs(est[k][i + 1] - est[k][i]) / est[k][i];
      r.gate_at_most("refinement_change_p_" + label(p_list[k]) + "_h_" + label(spacings[i + 1]), change, th.abs_stability);
    }
  }
  r.runtime_seconds = clock.seconds();
  return r;
}

std::vector<double> lp_refinement(const DomainSpec& domain, double beta, double p) {
  CVec e = CVec::Zero(domain.dim);
  e(0) = 1.0;
  std::vector<double> out;
  for (int levels : {8, 16, 24}) {
    AdaptedOptions o;
    o.levels = levels;
    out.push_back(integrate_adapted(domain, e, o, [&](const CVec& z) {
                    return std::pow(std::abs(1.0 - z(0)), -beta * p);
                  }).real());
  }
  return out;
}

ValidationReport density_experiment(const KernelContext& ctx, double beta, double p, const std::vector<int>& n_list,
                                    const Thresholds& th) {
  Stopwatch clock;
  const DomainSpec& d = ctx.domain;
  if (d.dim != 1) throw UnsupportedDomain("the density experiment runs on planar domains");
  if (!ctx.global_mode) throw ConfigError("domain", "the density experiment needs global holomorphic mode");
  if (!(p > 1.0) || !(beta > 0.0)) throw ConfigError("density", "needs p > 1 and beta > 0");
  const std::vector<double> ref = lp_refinement(d, beta, p);
  const double inc1 = ref[1] - ref[0];
  const double inc2 = ref[2] - ref[1];
  if (!std::isfinite(ref[2]) || (inc2 > 0.8 * inc1 && inc2 > 1e-9 * std::abs(ref[2]))) {
    throw NotInLp("int |f|^p grows under refinement: " + label(ref[0]) + ", " + label(ref[1]) + ", " + label(ref[2]));
  }

  ValidationReport r;
  r.experiment = "density";
  r.domain = d.name;
  r.parameters = {{"beta", beta}, {"p", p}, {"n_list", n_list}, {"epsilon", ctx.epsilon}};
  r.constants["norm_f_p"] = std::pow(ref[2], 1.0 / p);
  r.csv_header = {"n", "inner_nodes", "outer_nodes", "error_p"};

  auto f = [beta](const CVec& z) { return std::pow(1.0 - z(0), -beta); };
  CVec e = CVec::Zero(1);
  e(0) = 1.0;
  AdaptedOptions oo;
  oo.levels = 10;
  const QuadratureRule outer = adapted_rule(d, e, oo);

  std::vector<double> errors;
  for (int n : n_list) {
    if (n < 2) throw ConfigError("density.n_list", "entries must be at least 2");
    const DomainSpec inner_domain = sublevel(d, 1.0 / n);
    VolumeOptions vo;
    vo.angular = 8 * n + 48;
    vo.r0 = 0.2;
    vo.shells = static_cast<int>(std::ceil(std::log2(1.6 * n)));
    vo.radial = 6;
    vo.interior = 12;
    const QuadratureRule inner = volume_rule(inner_domain, vo);
    std::vector<cplx> fs(inner.size());
    for (std::size_t i = 0; i < inner.size(); ++i) fs[i] = f(inner.nodes[i]);
    const std::vector<cplx> fn = b1_apply(ctx, inner, fs, outer.nodes);
    std::vector<double> terms(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) terms[i] = outer.weights[i] * std::pow(std::abs(fn[i] - f(outer.nodes[i])), p);
    const double err = std::pow(pairwise_sum(terms), 1.0 / p);
    errors.push_back(err);
    r.constants["error_n_" + std::to_string(n)] = err;
    r.csv_rows.push_back({double(n), double(inner.size()), double(outer.size()), err});
  }
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    r.gate_at_most("decrease_" + std::to_string(n_list[i]) + "_to_" + std::to_string(n_list[i + 1]),
                   errors[i + 1] / errors[i], 1.0);
  }
  if (errors.size() > 1) r.gate_at_most("final_over_first", errors.back() / errors.front(), th.density_ratio);
  r.runtime_seconds = clock.seconds();
  return r;
}

ValidationReport validate_oracle(int dim, int degree_cap, std::uint64_t seed, const Thresholds& th) {
  Stopwatch clock;
  const DomainSpec d = make_ball(dim);
  ValidationReport r;
  r.experiment = "oracle";
  r.domain = d.name;
  r.parameters = {{"dim", dim}, {"degree_cap", degree_cap}, {"seed", seed}};
  r.csv_header = {"degree_cap", "kernel_error"};

  const VolumeOptions go = gram_rule_options(dim, degree_cap);
  const QuadratureRule rule = volume_rule(d, go);
  const OrthonormalBasis basis = build_basis(d, rule, degree_cap);
  r.constants["condition_number"] = basis.condition_number;
  r.constants["basis_size"] = basis.size();

  VolumeOptions co = go;
  co.angular += 6;
  co.polar += 3;
  co.radial += 5;
  co.interior = co.radial;
  co.stagger = true;
  const QuadratureRule check = volume_rule(d, co);
  const Eigen::MatrixXcd gram = basis_gram(basis, check);
  const double gram_err = (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  r.gate_at_most("gram_identity_independent_rule", gram_err, th.gram_identity);

  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::vector<cplx> f(rule.size()), h(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    f[i] = cplx(normal(rng), normal(rng));
    h[i] = cplx(normal(rng), normal(rng));
  }
  const std::vector<cplx> pf = apply_projection(basis, rule, f);
  const std::vector<cplx> ppf = apply_projection(basis, rule, pf);
  const std::vector<cplx> ph = apply_projection(basis, rule, h);
  double idem = 0.0, scale = 0.0;
  cplx lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    idem = std::max(idem, std::abs(ppf[i] - pf[i]));
    scale = std::max(scale, std::abs(pf[i]));
    lhs += rule.weights[i] * pf[i] * std::conj(h[i]);
    rhs += rule.weights[i] * f[i] * std::conj(ph[i]);
  }
  r.gate_at_most("idempotence", idem / scale, th.projection_identity);
  r.gate_at_most("self_adjointness", std::abs(lhs - rhs) / std::abs(lhs), th.projection_identity);

  // closed-form agreement inside a radius where the truncation tail is negligible
  const double radius = dim == 1 ? 0.7 : 0.3;
  double agree = 0.0;
  for (int i = 0; i < 20; ++i) {
    const CVec w = radius * std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(rng), 1.0 / (2 * dim)) *
                   random_direction(dim, rng);
    const CVec z = radius * std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(rng), 1.0 / (2 * dim)) *
                   random_direction(dim, rng);
    const cplx exact = ball_kernel(dim, w, z);
    agree = std::max(agree, std::abs(kernel_from_basis(basis, w, z) - exact) / std::abs(exact));
  }
  r.constants["agreement_radius"] = radius;
  r.gate_at_most("closed_form_agreement", agree, th.oracle_agreement);

  // geometric convergence on the diagonal w = z = q e_1
  const double q = dim == 1 ? 0.7 : 0.5;
  CVec w = CVec::Zero(dim);
  w(0) = q;
  const cplx exact = ball_kernel(dim, w, w);
  const int step = dim == 1 ? 4 : 2;
  std::vector<double> caps, logs;
  for (int cap = degree_cap - 4 * step; cap <= degree_cap; cap += step) {
    if (cap < 1) continue;
    const OrthonormalBasis b = cap == degree_cap ? basis : build_basis(d, rule, cap);
    const double err = std::abs(kernel_from_basis(b, w, w) - exact);
    caps.push_back(cap);
    logs.push_back(std::log(err));
    r.csv_rows.push_back({double(cap), err});
  }
  const double mc = std::accumulate(caps.begin(), caps.end(), 0.0) / caps.size();
  const double ml = std::accumulate(logs.begin(), logs.end(), 0.0) / logs.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    sxy += (caps[i] - mc) * (logs[i] - ml);
    sxx += (caps[i] - mc) * (caps[i] - mc);
  }
  const double slope = sxy / sxx;
  const double target = std::log(q * q);
  r.constants["convergence_slope"] = slope;
  r.constants["expected_slope"] = target;
  r.gate_at_most("convergence_slope_deviation", std::abs(slope - target) / std::abs(target), th.oracle_slope);
  r.runtime_seconds = clock.seconds();
  return r;
}

}  // namespace bergman
