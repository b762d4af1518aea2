#include "bergman/domain_model.hpp"

#include "bergman/errors.hpp"
#include "bergman/levi_engine.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace bergman {

double bergman_constant(int n) {
  static const std::array<double, kMaxDim + 1> table = [] {
    std::array<double, kMaxDim + 1> t{};
    for (int k = 0; k <= kMaxDim; ++k) t[k] = std::tgamma(k + 1.0) / std::pow(kPi, k);
    return t;
  }();
  return n >= 0 && n <= kMaxDim ? table[n] : std::tgamma(n + 1.0) / std::pow(kPi, n);
}

cplx small_determinant(const CMat& m) {
  switch (m.rows()) {
    case 1: return m(0, 0);
    case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default: return m.determinant();
  }
}

CMat adjugate(const CMat& m) {
  const Eigen::Index n = m.rows();
  CMat adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  if (n == 2) {
    adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return adj;
  }
  CMat minor(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // adj(i, j) = (-1)^{i+j} det(m without row j, column i)
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == j) continue;
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == i) continue;
          minor(rr, cc++) = m(r, c);
        }
        ++rr;
      }
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      adj(i, j) = sign * small_determinant(minor);
    }
  }
  return adj;
}

RVec DomainSpec::grad_rho(const CVec& w) const {
  const CVec d = d_rho(w);
  RVec g(2 * dim);
  for (int j = 0; j < dim; ++j) {
    g(2 * j) = 2.0 * d(j).real();
    g(2 * j + 1) = -2.0 * d(j).imag();
  }
  return g;
}

double DomainSpec::grad_norm(const CVec& w) const { return 2.0 * d_rho(w).norm(); }

double LeviForm::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMat> es(matrix, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double LeviForm::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMat> es(matrix, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

LeviForm levi_form(const DomainSpec& domain, const CVec& w) { return {domain.hess_mixed(w), w}; }

namespace {

Box symmetric_box(const std::vector<double>& half_widths) {
  const auto m = static_cast<Eigen::Index>(half_widths.size());
  Box b{RVec(2 * m), RVec(2 * m)};
  for (Eigen::Index j = 0; j < m; ++j) {
    for (int k = 0; k < 2; ++k) {
      b.lower(2 * j + k) = -half_widths[j];
      b.upper(2 * j + k) = half_widths[j];
    }
  }
  return b;
}

DbarTensor zero_tensor(int n) {
  DbarTensor t;
  for (int k = 0; k < kMaxDim; ++k) t[k] = CMat::Zero(n, n);
  return t;
}

/// Root of t -> f(t) on [lo, hi] with f(lo) < 0 < f(hi).
template <class F>
double bracketed_root(F f, double lo, double hi) {
  std::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

/// Radial extent by root finding along the ray, growing the bracket as needed.
double ray_root(const std::function<double(const CVec&)>& rho, const CVec& u, double guess) {
  auto f = [&](double t) { return rho(CVec(t * u)); };
  if (f(0.0) >= 0.0) throw UnsupportedDomain("origin is not inside the domain");
  double hi = guess;
  int grow = 0;
  while (f(hi) <= 0.0) {
    hi *= 2.0;
    if (++grow > 40) throw UnsupportedDomain("ray does not leave the domain");
  }
  return bracketed_root(f, 0.0, hi);
}

double abs_x(const CVec& w) { return std::abs(w(0).real()); }

}  // namespace

DomainSpec make_ball(int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("ball dimension out of range");
  DomainSpec d;
  d.dim = dim;
  d.name = "ball" + std::to_string(dim);
  d.params = {"ball", dim, {}, 0.0, 0.0};
  d.rho = [](const CVec& w) { return w.squaredNorm() - 1.0; };
  d.d_rho = [](const CVec& w) { return CVec(w.conjugate()); };
  d.hess_holo = [dim](const CVec&) { return CMat(CMat::Zero(dim, dim)); };
  d.hess_mixed = [dim](const CVec&) { return CMat(CMat::Identity(dim, dim)); };
  d.smoothed_hess_holo = [dim](const CVec&, double) { return CMat(CMat::Zero(dim, dim)); };
  d.dbar_smoothed_hess_holo = [dim](const CVec&, double) { return zero_tensor(dim); };
  d.radial_extent = [](const CVec&) { return 1.0; };
  d.bounding_box = symmetric_box(std::vector<double>(dim, 1.0));
  d.diameter = 2.0;
  d.rho_sup = 1.0;
  d.constant_hessian = true;
  return d;
}

DomainSpec make_ellipsoid(const std::vector<double>& semi_axes) {
  const int dim = static_cast<int>(semi_axes.size());
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("ellipsoid dimension out of range");
  for (double a : semi_axes) {
    if (!(a > 0.0)) throw std::invalid_argument("ellipsoid semi-axes must be positive");
  }
  Eigen::VectorXd inv2(dim);
  for (int j = 0; j < dim; ++j) inv2(j) = 1.0 / (semi_axes[j] * semi_axes[j]);
  DomainSpec d;
  d.dim = dim;
  d.name = "ellipsoid" + std::to_string(dim);
  d.params = {"ellipsoid", dim, semi_axes, 0.0, 0.0};
  d.rho = [inv2](const CVec& w) {
    double s = -1.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) s += std::norm(w(j)) * inv2(j);
    return s;
  };
  d.d_rho = [inv2](const CVec& w) {
    CVec out(w.size());
    for (Eigen::Index j = 0; j < w.size(); ++j) out(j) = std::conj(w(j)) * inv2(j);
    return out;
  };
  d.hess_holo = [dim](const CVec&) { return CMat(CMat::Zero(dim, dim)); };
  d.hess_mixed = [inv2, dim](const CVec&) {
    CMat m = CMat::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) m(j, j) = inv2(j);
    return m;
  };
  d.smoothed_hess_holo = [dim](const CVec&, double) { return CMat(CMat::Zero(dim, dim)); };
  d.dbar_smoothed_hess_holo = [dim](const CVec&, double) { return zero_tensor(dim); };
  d.radial_extent = [inv2](const CVec& u) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) s += std::norm(u(j)) * inv2(j);
    return 1.0 / std::sqrt(s);
  };
  d.bounding_box = symmetric_box(semi_axes);
  d.diameter = 2.0 * *std::max_element(semi_axes.begin(), semi_axes.end());
  d.rho_sup = 1.0;
  d.constant_hessian = true;
  return d;
}

DomainSpec make_c2_perturbed_ball(int dim, double delta) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("ball dimension out of range");
  if (delta == 0.0) {
    DomainSpec b = make_ball(dim);
    b.params = {"perturbed_ball", dim, {}, 0.0, 0.0};
    b.name = "perturbed_ball" + std::to_string(dim);
    return b;
  }
  DomainSpec d;
  d.dim = dim;
  d.name = "perturbed_ball" + std::to_string(dim);
  d.params = {"perturbed_ball", dim, {}, delta, 0.0};
  // rho = |w|^2 - 1 + delta |x|^3 with x = Re w_1. Wirtinger derivatives of f(x):
  // df/dw = f'/2, d2f/dw2 = d2f/dw dwbar = f''/4.
  d.rho = [delta](const CVec& w) {
    const double x = std::abs(w(0).real());
    return w.squaredNorm() - 1.0 + delta * x * x * x;
  };
  d.d_rho = [delta](const CVec& w) {
    CVec out = w.conjugate();
    const double x = w(0).real();
    out(0) += 1.5 * delta * x * std::abs(x);
    return out;
  };
  d.hess_holo = [dim, delta](const CVec& w) {
    CMat m = CMat::Zero(dim, dim);
    m(0, 0) = 1.5 * delta * abs_x(w);
    return m;
  };
  d.hess_mixed = [dim, delta](const CVec& w) {
    CMat m = CMat::Identity(dim, dim);
    m(0, 0) += 1.5 * delta * abs_x(w);
    return m;
  };
  // Gaussian mollification of |x| at width s: E|x + sZ| and its x-derivative erf(x / (s sqrt 2)).
  d.smoothed_hess_holo = [dim, delta](const CVec& w, double s) {
    CMat m = CMat::Zero(dim, dim);
    const double x = w(0).real();
    double mx = std::abs(x);
    if (s > 0.0) {
      mx = s * std::sqrt(2.0 / kPi) * std::exp(-x * x / (2.0 * s * s)) + x * std::erf(x / (s * std::sqrt(2.0)));
    }
    m(0, 0) = 1.5 * delta * mx;
    return m;
  };
  d.dbar_smoothed_hess_holo = [dim, delta](const CVec& w, double s) {
    DbarTensor t = zero_tensor(dim);
    const double x = w(0).real();
    const double slope = s > 0.0 ? std::erf(x / (s * std::sqrt(2.0))) : (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
    t[0](0, 0) = 0.75 * delta * slope;
    return t;
  };
  auto rho = d.rho;
  d.radial_extent = [rho](const CVec& u) { return ray_root(rho, u, 1.5); };

  CVec ex = CVec::Zero(dim);
  ex(0) = 1.0;
  double rx = 0.0;
  try {
    rx = d.radial_extent(ex);
  } catch (const UnsupportedDomain&) {
    throw PerturbationTooLarge("perturbed ball with delta=" + std::to_string(delta) + " is unbounded along Re w_1");
  }
  const double half = std::max(1.0, rx);
  d.bounding_box = symmetric_box(std::vector<double>(dim, half));
  d.diameter = 2.0 * half;
  d.constant_hessian = false;
  d.omega_cap = 10.0 * 3.0 * std::abs(delta) * 1e-4;

  // Strict plurisubharmonicity scan: Levi eigenvalues stay within [1/2, 2] on the grid.
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double rho_min = 0.0;
  for (const CVec& w : calibration_grid(d, dim <= 2 ? 9 : 5)) {
    const LeviForm lf = levi_form(d, w);
    lo = std::min(lo, lf.min_eigenvalue());
    hi = std::max(hi, lf.max_eigenvalue());
    rho_min = std::min(rho_min, d.rho(w));
  }
  if (lo < kLeviBandLow || hi > kLeviBandHigh) {
    throw PerturbationTooLarge("Levi eigenvalues in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                               "] leave the band [0.5, 2] for delta=" + std::to_string(delta));
  }
  d.rho_sup = std::max(1.0, -rho_min);
  return d;
}

DomainSpec sublevel(const DomainSpec& domain, double lambda) {
  DomainSpec d = domain;
  auto base = domain.rho;
  d.rho = [base, lambda](const CVec& w) { return base(w) + lambda; };
  d.params.shift += lambda;
  d.name = domain.name + "_sub";
  d.rho_sup = std::max(0.0, domain.rho_sup - lambda);
  if (domain.radial_extent) {
    auto outer = domain.radial_extent;
    auto rho = d.rho;
    d.radial_extent = [outer, rho](const CVec& u) {
      const double r0 = outer(u);
      auto f = [&](double t) { return rho(CVec(t * u)); };
      if (f(0.0) >= 0.0) throw UnsupportedDomain("sublevel set does not contain the origin");
      if (f(r0) <= 0.0) return r0;
      return bracketed_root(f, 0.0, r0);
    };
  }
  return d;
}

DomainSpec make_domain(const DomainParams& p) {
  DomainSpec d;
  if (p.kind == "ball") {
    d = make_ball(p.dim);
  } else if (p.kind == "ellipsoid") {
    d = make_ellipsoid(p.axes);
  } else if (p.kind == "perturbed_ball") {
    d = make_c2_perturbed_ball(p.dim, p.delta);
  } else {
    throw UnsupportedDomain("unknown domain kind '" + p.kind + "'");
  }
  if (p.shift != 0.0) d = sublevel(d, p.shift);
  return d;
}

CVec random_direction(int dim, Rng& rng) {
  std::normal_distribution<double> normal;
  CVec u(dim);
  for (int j = 0; j < dim; ++j) u(j) = cplx(normal(rng), normal(rng));
  return u / u.norm();
}

CVec sample_interior(const DomainSpec& domain, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Box& b = domain.bounding_box;
  RVec x(2 * domain.dim);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (int k = 0; k < x.size(); ++k) x(k) = b.lower(k) + (b.upper(k) - b.lower(k)) * unif(rng);
    CVec w = from_real(x);
    if (domain.rho(w) <= 0.0) return w;
  }
  throw UnsupportedDomain("rejection sampling found no interior point");
}

CVec boundary_point(const DomainSpec& domain, const CVec& u) {
  if (!domain.radial_extent) throw UnsupportedDomain(domain.name + " has no radial parametrization");
  return domain.radial_extent(u) * u;
}

CVec sample_boundary(const DomainSpec& domain, Rng& rng) {
  return boundary_point(domain, random_direction(domain.dim, rng));
}

CVec sample_near_boundary(const DomainSpec& domain, double depth, Rng& rng) {
  const CVec u = random_direction(domain.dim, rng);
  const double r = domain.radial_extent(u);
  return std::max(0.0, r - depth) * u;
}

std::vector<std::pair<CVec, CVec>> sample_pairs(const DomainSpec& domain, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, unif(rng)); };
  std::vector<std::pair<CVec, CVec>> pairs;
  pairs.reserve(count);
  const int n = domain.dim;
  const double diam = domain.diameter;
  for (int i = 0; i < count; ++i) {
    const int kind = i % 4;
    if (kind == 0) {
      pairs.emplace_back(sample_interior(domain, rng), sample_interior(domain, rng));
    } else if (kind == 1) {
      // near-diagonal pair close to bD
      for (;;) {
        CVec w = sample_near_boundary(domain, log_uniform(1e-6, 0.1) * diam, rng);
        CVec z = w + log_uniform(1e-5, 0.5) * diam * random_direction(n, rng);
        if (domain.rho(z) <= 0.0) {
          pairs.emplace_back(std::move(w), std::move(z));
          break;
        }
      }
    } else if (kind == 2) {
      // both on bD, nearby directions
      const CVec u = random_direction(n, rng);
      CVec u2 = u + log_uniform(1e-4, 1.0) * random_direction(n, rng);
      u2 /= u2.norm();
      pairs.emplace_back(boundary_point(domain, u), boundary_point(domain, u2));
    } else {
      CVec w = sample_boundary(domain, rng);
      pairs.emplace_back(std::move(w), sample_interior(domain, rng));
    }
  }
  return pairs;
}

std::vector<CVec> calibration_grid(const DomainSpec& domain, int per_axis) {
  const int m = 2 * domain.dim;
  const Box& b = domain.bounding_box;
  std::vector<CVec> pts;
  std::vector<int> idx(m, 0);
  const int total = static_cast<int>(std::pow(per_axis, m));
  RVec x(m);
  for (int flat = 0; flat < total; ++flat) {
    int rem = flat;
    for (int k = 0; k < m; ++k) {
      idx[k] = rem % per_axis;
      rem /= per_axis;
      const double t = per_axis == 1 ? 0.5 : static_cast<double>(idx[k]) / (per_axis - 1);
      x(k) = b.lower(k) + (b.upper(k) - b.lower(k)) * t;
    }
    CVec w = from_real(x);
    if (domain.rho(w) <= 0.0) pts.push_back(std::move(w));
  }
  return pts;
}

double bound_constant(const DomainSpec& domain, double mu, bool global,
                      const std::vector<std::pair<CVec, CVec>>& pairs) {
  KernelContext ctx;
  ctx.domain = domain;
  ctx.mu = mu;
  ctx.global_mode = global;
  const double skip = 1e-3 * domain.diameter;
  double c = std::numeric_limits<double>::infinity();
  for (const auto& [w, z] : pairs) {
    const double v = (z - w).norm();
    const double re2 = 2.0 * g(ctx, w, z).real();
    if (global || v <= mu) {
      if (v < skip) continue;
      c = std::min(c, (re2 + domain.rho(w) + domain.rho(z)) / (v * v));
    } else {
      c = std::min(c, re2);
    }
  }
  return c;
}

CalibrationResult calibrate_constants(const DomainSpec& domain, int samples, std::uint64_t seed) {
  if (samples < 1000) throw std::invalid_argument("calibration needs at least 1000 samples");
  const auto pairs = sample_pairs(domain, samples, seed);
  CalibrationResult res;
  res.samples = samples;
  res.seed = seed;
  res.c_levi = std::numeric_limits<double>::infinity();
  for (const CVec& w : calibration_grid(domain, domain.dim <= 2 ? 9 : 5)) {
    res.c_levi = std::min(res.c_levi, levi_form(domain, w).min_eigenvalue());
  }
  for (const auto& pr : pairs) res.c_levi = std::min(res.c_levi, levi_form(domain, pr.first).min_eigenvalue());

  const double c_global = bound_constant(domain, domain.diameter, true, pairs);
  if (c_global > 0.0) {
    res.global = true;
    res.mu = domain.diameter;
    res.c = c_global;
  } else {
    for (int k = 1; k <= 24; ++k) {
      const double mu = domain.diameter * std::pow(2.0, -0.5 * k);
      const double c = bound_constant(domain, mu, false, pairs);
      if (c > 0.0) {
        res.mu = mu;
        res.c = c;
        break;
      }
    }
    if (res.c <= 0.0) throw CalibrationFailed("no cutoff radius on the grid satisfies the support-function bounds");
  }
  res.lambda0 = res.c * res.mu * res.mu / 8.0;
  return res;
}

}  // namespace bergman
