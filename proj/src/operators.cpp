#include "bergman/operators.hpp"

#include "bergman/bergman_oracle.hpp"
#include "bergman/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <unordered_map>

namespace bergman {

long DiscreteOperator::rows() const {
  return std::visit([](const auto& m) { return static_cast<long>(m.rows()); }, matrix);
}

long DiscreteOperator::cols() const {
  return std::visit([](const auto& m) { return static_cast<long>(m.cols()); }, matrix);
}

Vector DiscreteOperator::apply(const Vector& f) const {
  return std::visit([&](const auto& m) -> Vector { return m * f; }, matrix);
}

Vector DiscreteOperator::apply_adjoint(const Vector& gv) const {
  Vector vg(gv.size());
  for (long i = 0; i < gv.size(); ++i) vg(i) = target_weights[i] * gv(i);
  Vector out = std::visit([&](const auto& m) -> Vector { return m.adjoint() * vg; }, matrix);
  for (long j = 0; j < out.size(); ++j) out(j) /= source_weights[j];
  return out;
}

DiscreteOperator DiscreteOperator::adjoint() const {
  DiscreteOperator a;
  a.source_weights = target_weights;
  a.target_weights = source_weights;
  a.label = label + "*";
  if (is_dense()) {
    const DenseMatrix& m = std::get<DenseMatrix>(matrix);
    DenseMatrix t = m.adjoint();
    for (long i = 0; i < t.rows(); ++i) {
      for (long j = 0; j < t.cols(); ++j) t(i, j) *= target_weights[j] / source_weights[i];
    }
    a.matrix = std::move(t);
  } else {
    SparseMatrix t = std::get<SparseMatrix>(matrix).adjoint();
    for (long i = 0; i < t.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(t, i); it; ++it) it.valueRef() *= target_weights[it.col()] / source_weights[i];
    }
    a.matrix = std::move(t);
  }
  return a;
}

DenseMatrix DiscreteOperator::to_dense() const {
  if (is_dense()) return std::get<DenseMatrix>(matrix);
  return DenseMatrix(std::get<SparseMatrix>(matrix));
}

double weighted_norm(const Vector& f, const std::vector<double>& w, double p) {
  std::vector<double> terms(f.size());
  for (long i = 0; i < f.size(); ++i) terms[i] = w[i] * std::pow(std::abs(f(i)), p);
  return std::pow(pairwise_sum(terms), 1.0 / p);
}

cplx weighted_inner(const Vector& f, const Vector& h, const std::vector<double>& w) {
  std::vector<cplx> terms(f.size());
  for (long i = 0; i < f.size(); ++i) terms[i] = w[i] * f(i) * std::conj(h(i));
  return pairwise_sum(terms);
}

DiscreteOperator kernel_operator(const KernelFunction& k, const QuadratureRule& rule, const QuadratureRule& targets,
                                 std::string label) {
  const long nt = static_cast<long>(targets.size());
  const long ns = static_cast<long>(rule.size());
  DenseMatrix m(nt, ns);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < ns; ++j) {
    for (long i = 0; i < nt; ++i) m(i, j) = k(rule.nodes[j], targets.nodes[i]) * rule.weights[j];
  }
  return {std::move(m), rule.weights, targets.weights, std::move(label)};
}

DiscreteOperator gamma_operator(const KernelContext& ctx, const QuadratureRule& rule, const QuadratureRule& targets,
                                bool use_eps) {
  const int n = ctx.dim();
  const long nt = static_cast<long>(targets.size());
  const long ns = static_cast<long>(rule.size());
  DenseMatrix m(nt, ns);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < ns; ++j) {
    const BasePoint b = base_point(ctx, rule.nodes[j]);
    for (long i = 0; i < nt; ++i) {
      const cplx gv = use_eps ? g_eps(ctx, b, targets.nodes[i]) : g(ctx, b, targets.nodes[i]);
      const double a = std::abs(gv);
      if (a < kSingularGuard) throw SingularKernel("gamma kernel at a coincident node/target");
      m(i, j) = std::pow(a, -(n + 1)) * rule.weights[j];
    }
  }
  return {std::move(m), rule.weights, targets.weights, use_eps ? "gamma_eps" : "gamma"};
}

DiscreteOperator b1_operator(const KernelContext& ctx, const QuadratureRule& rule, const QuadratureRule& targets) {
  const long nt = static_cast<long>(targets.size());
  const long ns = static_cast<long>(rule.size());
  DenseMatrix m(nt, ns);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < ns; ++j) {
    const BasePoint b = base_point(ctx, rule.nodes[j]);
    for (long i = 0; i < nt; ++i) m(i, j) = kernel_b1(ctx, b, targets.nodes[i]).value * rule.weights[j];
  }
  return {std::move(m), rule.weights, targets.weights, "b1"};
}

std::vector<cplx> b1_apply(const KernelContext& ctx, const QuadratureRule& rule, const std::vector<cplx>& f,
                           const std::vector<CVec>& targets) {
  const long ns = static_cast<long>(rule.size());
  const long nt = static_cast<long>(targets.size());
  std::vector<BasePoint> base(ns);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < ns; ++j) base[j] = base_point(ctx, rule.nodes[j]);
  std::vector<cplx> out(nt);
#pragma omp parallel
  {
    std::vector<cplx> terms(ns);
#pragma omp for schedule(dynamic, 4)
    for (long i = 0; i < nt; ++i) {
      for (long j = 0; j < ns; ++j) terms[j] = kernel_b1(ctx, base[j], targets[i]).value * (f[j] * rule.weights[j]);
      out[i] = pairwise_sum(terms);
    }
  }
  return out;
}

DiscreteOperator abs_operator(const DiscreteOperator& op) {
  DiscreteOperator a = op;
  a.label = "|" + op.label + "|";
  if (a.is_dense()) {
    DenseMatrix& m = std::get<DenseMatrix>(a.matrix);
    m = m.cwiseAbs().cast<cplx>();
  } else {
    SparseMatrix& m = std::get<SparseMatrix>(a.matrix);
    for (long i = 0; i < m.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(m, i); it; ++it) it.valueRef() = std::abs(it.value());
    }
  }
  return a;
}

// ---------------------------------------------------------------------------------------------
// Schur integrals

AdaptedOptions schur_options(const KernelContext& ctx, const CVec& z) {
  const double depth = std::max(std::abs(ctx.domain.rho(z)), 1e-12);
  return AdaptedOptions::for_scale(depth);
}

namespace {

template <class Integrand>
SchurResult refine_checked(const DomainSpec& d, const CVec& center, double alpha, const AdaptedOptions& opts,
                           Integrand&& f) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("Schur exponent must lie in (0, 1)");
  AdaptedOptions o1 = opts;
  o1.radial_exponent = alpha;
  AdaptedOptions o2 = o1.refined();
  SchurResult r;
  r.coarse = integrate_adapted(d, center, o1, f).real();
  r.value = integrate_adapted(d, center, o2, f).real();
  r.relative_change = std::abs(r.value - r.coarse) / std::abs(r.value);
  if (!std::isfinite(r.value) || r.relative_change > 0.25) {
    throw NonIntegrable("Schur integral changes by " + std::to_string(r.relative_change) + " under refinement");
  }
  return r;
}

}  // namespace

SchurResult schur_integral(const KernelContext& ctx, const CVec& z, double alpha, const AdaptedOptions& opts) {
  const int n = ctx.dim();
  const DomainSpec& d = ctx.domain;
  return refine_checked(d, z, alpha, opts, [&](const CVec& w) {
    return std::pow(std::abs(g(ctx, w, z)), -(n + 1)) * std::pow(std::abs(d.rho(w)), -alpha);
  });
}

SchurResult schur_integral_w(const KernelContext& ctx, const CVec& w, double alpha, const AdaptedOptions& opts) {
  const int n = ctx.dim();
  const DomainSpec& d = ctx.domain;
  const BasePoint b = base_point(ctx, w);
  return refine_checked(d, w, alpha, opts, [&](const CVec& z) {
    return std::pow(std::abs(g(ctx, b, z)), -(n + 1)) * std::pow(std::abs(d.rho(z)), -alpha);
  });
}

// ---------------------------------------------------------------------------------------------
// Rescaled model integral

namespace {

/// Geometric panels on [0, L]: [0, 1], [1, 2], [2, 4], ...; Gauss-Jacobi at 0 for x^{-alpha}.
Rule1D half_line(double cutoff, int order, double alpha_at_zero) {
  Rule1D r;
  Rule1D first = gauss_jacobi_right(order, -1.0, 0.0, alpha_at_zero);
  for (std::size_t i = first.size(); i-- > 0;) {
    r.x.push_back(-first.x[i]);
    r.w.push_back(first.w[i]);
  }
  for (double a = 1.0; a < cutoff; a *= 2.0) r.append(gauss_legendre(order, a, std::min(2.0 * a, cutoff)));
  return r;
}

double aitken(double a, double b, double c) {
  const double d1 = b - a;
  const double d2 = c - b;
  const double den = d2 - d1;
  if (std::abs(den) < 1e-300) return c;
  return c - d2 * d2 / den;
}

double complex_measure(int n, double t) {
  // dV(x') on C^{n-1} in t = |x'|^2: pi^{n-1} t^{n-2} / (n-2)! dt
  if (n == 1) return 1.0;
  return std::pow(kPi, n - 1) * std::pow(t, n - 2) / std::tgamma(n - 1.0);
}

double direct_truncated(int n, double alpha, double cutoff, int order) {
  const Rule1D s = half_line(cutoff, order, alpha);
  const Rule1D u = half_line(cutoff, order, 0.0);
  double total = 0.0;
  if (n == 1) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) acc += u.w[k] * std::pow(1.0 + s.x[i] + u.x[k], -(n + 1));
      total += s.w[i] * std::pow(s.x[i], -alpha) * acc;
    }
  } else {
    const Rule1D t = half_line(cutoff, order, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        for (std::size_t m = 0; m < t.size(); ++m) {
          acc += u.w[k] * t.w[m] * complex_measure(n, t.x[m]) * std::pow(1.0 + s.x[i] + u.x[k] + t.x[m], -(n + 1));
        }
      }
      total += s.w[i] * std::pow(s.x[i], -alpha) * acc;
    }
  }
  return 2.0 * total;   // u over R
}

double remaining_truncated(int n, double alpha, double cutoff, int order) {
  const Rule1D u = half_line(cutoff, order, 0.0);
  double total = 0.0;
  if (n == 1) {
    for (std::size_t k = 0; k < u.size(); ++k) total += u.w[k] * std::pow(1.0 + u.x[k], -n - alpha);
  } else {
    const Rule1D t = half_line(cutoff, order, 0.0);
    for (std::size_t k = 0; k < u.size(); ++k) {
      for (std::size_t m = 0; m < t.size(); ++m) {
        total += u.w[k] * t.w[m] * complex_measure(n, t.x[m]) * std::pow(1.0 + u.x[k] + t.x[m], -n - alpha);
      }
    }
  }
  return 2.0 * total;
}

}  // namespace

double model_integral_closed_form(int n, double alpha) {
  const double c = std::beta(1.0 - alpha, n + alpha);
  double rest = 2.0 / alpha;
  if (n >= 2) rest *= std::pow(kPi, n - 1) * std::beta(n - 1.0, 1.0 + alpha) / std::tgamma(n - 1.0);
  return c * rest;
}

ModelIntegral rescaled_model_integral(int n, double alpha, double cutoff) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("model integral needs 0 < alpha < 1");
  if (n < 1 || n > 3) throw std::invalid_argument("model integral supports n = 1, 2, 3");
  ModelIntegral m;
  m.c_alpha = std::beta(1.0 - alpha, n + alpha);
  m.diverging = alpha > 0.999 || m.c_alpha > 1e6;
  const int order = n == 1 ? 24 : 10;
  const double d1 = direct_truncated(n, alpha, cutoff, order);
  const double d2 = direct_truncated(n, alpha, 2 * cutoff, order);
  const double d3 = direct_truncated(n, alpha, 4 * cutoff, order);
  m.direct = aitken(d1, d2, d3);
  const double r1 = remaining_truncated(n, alpha, cutoff, order);
  const double r2 = remaining_truncated(n, alpha, 2 * cutoff, order);
  const double r3 = remaining_truncated(n, alpha, 4 * cutoff, order);
  m.remaining = aitken(r1, r2, r3);
  m.reduced = m.c_alpha * m.remaining;
  m.relative_difference = std::abs(m.direct - m.reduced) / std::abs(m.reduced);
  return m;
}

// ---------------------------------------------------------------------------------------------
// Truncation and defect

double TruncationProfile::phi(double t) const {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  return 2.0 * (1.0 - t);
}

double TruncationProfile::weight(const DomainSpec& d, const CVec& w, const CVec& z) const {
  return phi((std::abs(d.rho(z)) + std::abs(d.rho(w)) + (z - w).norm()) / r);
}

TruncatedPair truncate(const KernelContext& ctx, const QuadratureRule& rule, const QuadratureRule& targets,
                       const TruncationProfile& profile) {
  if (!(profile.r > 0.0)) throw std::invalid_argument("truncation radius must be positive");
  DiscreteOperator full = b1_operator(ctx, rule, targets);
  const DenseMatrix& m = std::get<DenseMatrix>(full.matrix);
  DenseMatrix near(m.rows(), m.cols());
  DenseMatrix far(m.rows(), m.cols());
  for (long j = 0; j < m.cols(); ++j) {
    for (long i = 0; i < m.rows(); ++i) {
      const double ph = profile.weight(ctx.domain, rule.nodes[j], targets.nodes[i]);
      near(i, j) = ph * m(i, j);
      far(i, j) = m(i, j) - near(i, j);
    }
  }
  return {{std::move(near), rule.weights, targets.weights, "D_r"}, {std::move(far), rule.weights, targets.weights, "E_r"}};
}

namespace {

struct CellKey {
  std::uint64_t packed;
  bool operator==(const CellKey& o) const { return packed == o.packed; }
};
struct CellHash {
  std::size_t operator()(const CellKey& k) const { return std::hash<std::uint64_t>{}(k.packed); }
};

std::uint64_t pack(const std::vector<long>& c) {
  std::uint64_t p = 0;
  for (long v : c) p = p * 1048573ULL + static_cast<std::uint64_t>(v + (1L << 20));
  return p;
}

}  // namespace

DiscreteOperator truncated_sparse(const KernelContext& ctx, const QuadratureRule& rule,
                                  const TruncationProfile& profile, DefectKernel kernel) {
  const DomainSpec& d = ctx.domain;
  const int n = ctx.dim();
  const long N = static_cast<long>(rule.size());
  const double r = profile.r;
  std::vector<double> rho(N);
  for (long i = 0; i < N; ++i) rho[i] = d.rho(rule.nodes[i]);

  std::unordered_map<CellKey, std::vector<long>, CellHash> grid;
  std::vector<long> cand;
  auto cell_of = [&](const CVec& p) {
    std::vector<long> c(2 * n);
    for (int j = 0; j < n; ++j) {
      c[2 * j] = static_cast<long>(std::floor(p(j).real() / r));
      c[2 * j + 1] = static_cast<long>(std::floor(p(j).imag() / r));
    }
    return c;
  };
  for (long i = 0; i < N; ++i) {
    if (std::abs(rho[i]) < r) {
      cand.push_back(i);
      grid[CellKey{pack(cell_of(rule.nodes[i]))}].push_back(i);
    }
  }

  std::vector<std::vector<std::pair<long, cplx>>> rows(N);
  const long nc = static_cast<long>(cand.size());
  const int m = 2 * n;
  int offsets = 1;
  for (int k = 0; k < m; ++k) offsets *= 3;
#pragma omp parallel for schedule(dynamic, 64)
  for (long ci = 0; ci < nc; ++ci) {
    const long i = cand[ci];
    const CVec& z = rule.nodes[i];
    const std::vector<long> base = cell_of(z);
    std::vector<long> c(m);
    auto& row = rows[i];
    for (int o = 0; o < offsets; ++o) {
      int rem = o;
      for (int k = 0; k < m; ++k) {
        c[k] = base[k] + (rem % 3) - 1;
        rem /= 3;
      }
      auto it = grid.find(CellKey{pack(c)});
      if (it == grid.end()) continue;
      for (long j : it->second) {
        if (j == i) continue;
        const CVec& w = rule.nodes[j];
        const double t = (std::abs(rho[i]) + std::abs(rho[j]) + (z - w).norm()) / r;
        const double ph = profile.phi(t);
        if (ph <= 0.0) continue;
        const cplx k = kernel == DefectKernel::B1 ? kernel_b1(ctx, w, z).value : ball_kernel(n, w, z);
        row.emplace_back(j, ph * k * rule.weights[j]);
      }
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  std::vector<Eigen::Triplet<cplx, long>> trips;
  for (long i = 0; i < N; ++i) {
    for (const auto& [j, v] : rows[i]) trips.emplace_back(i, j, v);
  }
  SparseMatrix mat(N, N);
  mat.setFromTriplets(trips.begin(), trips.end());
  return {std::move(mat), rule.weights, rule.weights, "D_r"};
}

DiscreteOperator defect_A_eps(const KernelContext& ctx, const QuadratureRule& rule, const TruncationProfile& profile,
                              DefectKernel kernel) {
  const DiscreteOperator dr = truncated_sparse(ctx, rule, profile, kernel);
  const DiscreteOperator da = dr.adjoint();
  SparseMatrix a = std::get<SparseMatrix>(dr.matrix) - std::get<SparseMatrix>(da.matrix);
  a.prune(cplx(0.0));
  return {std::move(a), rule.weights, rule.weights, "A_eps"};
}

// ---------------------------------------------------------------------------------------------
// Norm estimation

namespace {

Vector duality_map(const Vector& y, double p) {
  Vector out(y.size());
  for (long i = 0; i < y.size(); ++i) {
    const double a = std::abs(y(i));
    out(i) = a > 0.0 ? y(i) * std::pow(a, p - 2.0) : cplx(0.0);
  }
  return out;
}

Vector start_vector(long n, int family, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(n);
  for (long i = 0; i < n; ++i) {
    switch (family % 4) {
      case 0: x(i) = unif(rng); break;                                   // positive
      case 1: x(i) = cplx(normal(rng), normal(rng)); break;              // rough
      case 2: x(i) = std::polar(1.0, 2.0 * kPi * unif(rng)); break;      // oscillatory phases
      default: x(i) = unif(rng) < 0.05 ? cplx(1.0 + unif(rng)) : cplx(0.01 * unif(rng)); break;   // spiky
    }
  }
  return x;
}

}  // namespace

NormEstimate estimate_norm(const DiscreteOperator& op, double p, int trials, std::uint64_t seed, int max_iter) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("p must lie in (1, inf)");
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  std::mt19937_64 rng(seed);
  NormEstimate est;
  est.trials = trials;
  est.lower_bound = std::abs(p - 2.0) > 1e-12;
  const std::vector<double>& ws = op.source_weights;
  const std::vector<double>& wt = op.target_weights;
  const double q = p / (p - 1.0);
  for (int t = 0; t < trials; ++t) {
    Vector x = start_vector(op.cols(), est.lower_bound ? t : 1, rng);
    double prev = 0.0;
    double best = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      const double nx = weighted_norm(x, ws, p);
      if (nx == 0.0) break;
      x /= nx;
      const Vector y = op.apply(x);
      const double ratio = weighted_norm(y, wt, p);
      best = std::max(best, ratio);
      ++est.iterations;
      if (it > 0 && std::abs(ratio - prev) <= 1e-6 * ratio) break;
      prev = ratio;
      if (est.lower_bound) {
        x = duality_map(op.apply_adjoint(duality_map(y, p)), q);
      } else {
        x = op.apply_adjoint(y);
      }
    }
    est.value = std::max(est.value, best);
  }
  return est;
}

// ---------------------------------------------------------------------------------------------
// Truncation radius

double k0_modulus_delta(const KernelContext& ctx, const std::vector<double>& deltas, int samples, std::uint64_t seed) {
  const DomainSpec& d = ctx.domain;
  const int n = d.dim;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double running = 0.0;
  double best = -1.0;
  for (double delta : deltas) {
    for (int s = 0; s < samples; ++s) {
      const CVec w = (s % 2 == 0) ? sample_interior(d, rng) : sample_near_boundary(d, delta * unif(rng), rng);
      const CVec z = w + delta * std::pow(unif(rng), 1.0 / (2 * n)) * random_direction(n, rng);
      if (d.rho(z) > 0.0) continue;
      running = std::max(running, std::abs(leading_term(ctx, w) - leading_term(ctx, z)));
    }
    if (running <= ctx.epsilon) best = delta;
  }
  if (best < 0.0) throw NoAdmissibleDelta("K0 oscillation exceeds epsilon at every sampled delta");
  return best;
}

double remainder_slope(const KernelContext& ctx, int samples, std::uint64_t seed) {
  const DomainSpec& d = ctx.domain;
  const int n = d.dim;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double slope = 0.0;
  int taken = 0;
  while (taken < samples) {
    const CVec w = sample_boundary(d, rng);
    const double t = 1e-4 * std::pow(1e3, unif(rng));
    const CVec z = w + t * random_direction(n, rng);
    if (d.rho(z) >= 0.0) continue;
    ++taken;
    slope = std::max(slope, kernel_parts(ctx, w, z).remainder / t);
  }
  return slope;
}

RadiusChoice select_truncation_radius(const KernelContext& ctx, const ModulusOfContinuity& mod, int samples,
                                      std::uint64_t seed) {
  RadiusChoice rc;
  rc.delta_eps = delta_for_epsilon(mod, ctx.epsilon);
  rc.delta_k0 = k0_modulus_delta(ctx, mod.deltas, samples, seed + 1);
  rc.slope = remainder_slope(ctx, samples, seed + 2);
  rc.r = std::min(rc.delta_eps, rc.delta_k0);
  if (rc.slope > 0.0) rc.r = std::min(rc.r, ctx.epsilon / rc.slope);
  return rc;
}

}  // namespace bergman
