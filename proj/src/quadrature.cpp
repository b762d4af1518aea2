#include "bergman/quadrature.hpp"

#include "bergman/errors.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace bergman {

void Rule1D::append(const Rule1D& other) {
  x.insert(x.end(), other.x.begin(), other.x.end());
  w.insert(w.end(), other.w.begin(), other.w.end());
}

namespace {

const gsl_integration_glfixed_table* gl_table(int m) {
  static std::mutex mtx;
  static std::map<int, gsl_integration_glfixed_table*> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<size_t>(m));
  cache.emplace(m, t);
  return t;
}

}  // namespace

Rule1D gauss_legendre(int m, double a, double b) {
  if (m < 1) throw std::invalid_argument("Gauss rule needs at least one node");
  Rule1D r;
  r.x.resize(m);
  r.w.resize(m);
  const auto* t = gl_table(m);
  for (int i = 0; i < m; ++i) gsl_integration_glfixed_point(a, b, static_cast<size_t>(i), &r.x[i], &r.w[i], t);
  // GSL orders nodes symmetrically around the midpoint; sort ascending for readability.
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int p, int q) { return r.x[p] < r.x[q]; });
  Rule1D s;
  for (int i : idx) {
    s.x.push_back(r.x[i]);
    s.w.push_back(r.w[i]);
  }
  return s;
}

Rule1D gauss_jacobi_right(int m, double a, double b, double alpha) {
  if (alpha == 0.0) return gauss_legendre(m, a, b);
  if (!(alpha < 1.0)) throw NonIntegrable("endpoint exponent must be below 1");
  gsl_integration_fixed_workspace* ws =
      gsl_integration_fixed_alloc(gsl_integration_fixed_jacobi, static_cast<size_t>(m), a, b, -alpha, 0.0);
  if (!ws) throw std::runtime_error("GSL Gauss-Jacobi allocation failed");
  const double* xs = gsl_integration_fixed_nodes(ws);
  const double* wsw = gsl_integration_fixed_weights(ws);
  Rule1D r;
  for (int i = 0; i < m; ++i) {
    r.x.push_back(xs[i]);
    r.w.push_back(wsw[i] * std::pow(b - xs[i], alpha));
  }
  gsl_integration_fixed_free(ws);
  return r;
}

Rule1D trapezoid(int m, double a, double period, double offset) {
  Rule1D r;
  const double h = period / m;
  for (int i = 0; i < m; ++i) {
    r.x.push_back(a + (i + offset) * h);
    r.w.push_back(h);
  }
  return r;
}

Rule1D graded_toward_end(double a, double b, const GradedSpec& spec) {
  Rule1D r;
  const double r0 = std::min(spec.r0, b - a);
  if (b - r0 > a) r.append(gauss_legendre(spec.interior, a, b - r0));
  double d = r0;
  for (int k = 0; k < spec.levels; ++k) {
    const double next = d * spec.ratio;
    r.append(gauss_legendre(spec.order, b - d, b - next));
    d = next;
  }
  r.append(gauss_jacobi_right(spec.order, b - d, b, spec.endpoint_exponent));
  return r;
}

Rule1D graded_toward_start(double a, double b, const GradedSpec& spec) {
  GradedSpec s = spec;
  s.endpoint_exponent = 0.0;
  Rule1D r = graded_toward_end(-b, -a, s);
  Rule1D out;
  for (std::size_t i = r.size(); i-- > 0;) {
    out.x.push_back(-r.x[i]);
    out.w.push_back(r.w[i]);
  }
  return out;
}

namespace {

/// Hyperspherical radii (cos t1, sin t1 cos t2, ...) and the Jacobian prod sin^{n-1-i} t_i.
void orthant_point(const std::vector<double>& theta, int n, std::vector<double>& r, double& jac) {
  r.assign(n, 0.0);
  jac = 1.0;
  double carry = 1.0;
  for (int i = 0; i < n - 1; ++i) {
    r[i] = carry * std::cos(theta[i]);
    jac *= std::pow(std::sin(theta[i]), n - 2 - i);
    carry *= std::sin(theta[i]);
  }
  r[n - 1] = carry;
}

/// Tensor product of per-axis rules; calls f(point indices) over all combinations.
template <class F>
void for_each_tensor(const std::vector<const Rule1D*>& axes, F&& f) {
  const std::size_t m = axes.size();
  std::vector<std::size_t> idx(m, 0);
  if (m == 0) {
    f(idx);
    return;
  }
  for (;;) {
    f(idx);
    std::size_t k = 0;
    while (k < m) {
      if (++idx[k] < axes[k]->size()) break;
      idx[k] = 0;
      ++k;
    }
    if (k == m) break;
  }
}

DirectionSet build_directions(int n, const std::vector<const Rule1D*>& thetas, const std::vector<const Rule1D*>& phis,
                              const CMat* frame) {
  DirectionSet ds;
  std::vector<const Rule1D*> axes = thetas;
  axes.insert(axes.end(), phis.begin(), phis.end());
  std::vector<double> theta(n - 1), r;
  for_each_tensor(axes, [&](const std::vector<std::size_t>& idx) {
    double w = 1.0;
    for (int i = 0; i < n - 1; ++i) {
      theta[i] = thetas[i]->x[idx[i]];
      w *= thetas[i]->w[idx[i]];
    }
    double jac = 1.0;
    orthant_point(theta, n, r, jac);
    CVec u(n);
    double rp = 1.0;
    for (int j = 0; j < n; ++j) {
      const double phi = phis[j]->x[idx[n - 1 + j]];
      w *= phis[j]->w[idx[n - 1 + j]];
      u(j) = std::polar(r[j], phi);
      rp *= r[j];
    }
    ds.u.push_back(frame ? CVec(*frame * u) : u);
    ds.w.push_back(w * rp * jac);
  });
  return ds;
}

/// Unitary matrix whose first column is the unit vector t.
CMat unitary_frame(const CVec& t) {
  const int n = static_cast<int>(t.size());
  CMat q(n, n);
  q.col(0) = t;
  int col = 1;
  for (int e = 0; e < n && col < n; ++e) {
    CVec v = CVec::Zero(n);
    v(e) = 1.0;
    for (int c = 0; c < col; ++c) v -= q.col(c).dot(v) * q.col(c);
    const double nv = v.norm();
    if (nv < 1e-8) continue;
    q.col(col++) = v / nv;
  }
  return q;
}

}  // namespace

DirectionSet sphere_tensor(int n, int n_theta, int n_phi, double phase_offset) {
  // Gauss in t = sin^2 theta: moments |w_j|^{2a} times the Jacobian are polynomials in t
  const Rule1D gt = gauss_legendre(n_theta, 0.0, 1.0);
  Rule1D theta;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double th = std::asin(std::sqrt(gt.x[i]));
    theta.x.push_back(th);
    theta.w.push_back(gt.w[i] / (2.0 * std::sin(th) * std::cos(th)));
  }
  const Rule1D phi = trapezoid(n_phi, 0.0, 2 * kPi, phase_offset);
  std::vector<const Rule1D*> thetas(n - 1, &theta), phis(n, &phi);
  return build_directions(n, thetas, phis, nullptr);
}

AdaptedOptions AdaptedOptions::for_scale(double scale, int order) {
  AdaptedOptions o;
  o.order = order;
  o.interior = 2 * order;
  o.polar = order + 2;
  const double need = std::log(1.0 / std::max(scale * 0.2, 1e-16)) / std::log(1.0 / o.ratio);
  o.levels = std::clamp(static_cast<int>(std::ceil(need)), 4, 60);
  return o;
}

AdaptedOptions AdaptedOptions::refined() const {
  AdaptedOptions o = *this;
  o.levels += 2;
  o.order += 2;
  o.interior += 4;
  o.phase += 3;
  o.polar += 2;
  return o;
}

DirectionSet adapted_directions(int n, const CVec& target, const AdaptedOptions& opts) {
  GradedSpec angle;
  angle.ratio = opts.ratio;
  angle.levels = opts.levels;
  angle.order = opts.order;
  angle.interior = opts.interior;
  // phi_1 on [-pi, pi] graded toward 0 from both sides
  angle.r0 = kPi / 2;
  Rule1D phi1 = graded_toward_end(-kPi, 0.0, angle);
  phi1.append(graded_toward_start(0.0, kPi, angle));
  const CVec t = target / target.norm();
  if (n == 1) {
    DirectionSet ds;
    for (std::size_t i = 0; i < phi1.size(); ++i) {
      CVec u(1);
      u(0) = t(0) * std::polar(1.0, phi1.x[i]);
      ds.u.push_back(u);
      ds.w.push_back(phi1.w[i]);
    }
    return ds;
  }
  angle.r0 = kPi / 4;
  const Rule1D theta1 = graded_toward_start(0.0, kPi / 2, angle);
  const Rule1D theta_rest = gauss_legendre(opts.polar, 0.0, kPi / 2);
  const Rule1D phi_rest = trapezoid(opts.phase, 0.0, 2 * kPi);
  std::vector<const Rule1D*> thetas(n - 1, &theta_rest), phis(n, &phi_rest);
  thetas[0] = &theta1;
  phis[0] = &phi1;
  const CMat frame = unitary_frame(t);
  return build_directions(n, thetas, phis, &frame);
}

Rule1D adapted_radial(const AdaptedOptions& opts) {
  GradedSpec s;
  s.r0 = 0.5;
  s.ratio = opts.ratio;
  s.levels = opts.levels;
  s.order = opts.order;
  s.interior = opts.interior;
  s.endpoint_exponent = opts.radial_exponent;
  return graded_toward_end(0.0, 1.0, s);
}

double QuadratureRule::total_weight() const { return pairwise_sum(weights); }

VolumeOptions VolumeOptions::halved() const {
  VolumeOptions o = *this;
  o.angular = std::max(4, angular / 2);
  o.polar = std::max(2, polar / 2);
  o.radial = std::max(2, radial / 2);
  o.interior = std::max(2, interior / 2);
  o.companion = false;
  return o;
}

VolumeOptions VolumeOptions::doubled() const {
  VolumeOptions o = *this;
  o.angular = angular * 2;
  o.polar = polar * 2;
  o.radial = radial * 2;
  o.interior = interior * 2;
  return o;
}

VolumeOptions VolumeOptions::for_dim(int n) {
  VolumeOptions o;
  if (n == 2) {
    o.angular = 24;
    o.polar = 8;
    o.radial = 4;
    o.interior = 8;
    o.shells = 8;
  } else if (n >= 3) {
    o.angular = 12;
    o.polar = 6;
    o.radial = 3;
    o.interior = 6;
    o.shells = 6;
  }
  return o;
}

namespace {

QuadratureRule materialize(const DomainSpec& domain, const DirectionSet& dirs, const Rule1D& radial, std::string scheme) {
  const int n = domain.dim;
  QuadratureRule rule;
  rule.dim = n;
  rule.kind = RuleKind::Volume;
  rule.meta.scheme = std::move(scheme);
  rule.nodes.reserve(dirs.size() * radial.size());
  rule.weights.reserve(dirs.size() * radial.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const double r = domain.radial_extent(dirs.u[i]);
    const double scale = dirs.w[i] * std::pow(r, 2 * n);
    for (std::size_t k = 0; k < radial.size(); ++k) {
      const double s = radial.x[k];
      rule.nodes.emplace_back((s * r) * dirs.u[i]);
      rule.weights.push_back(scale * radial.w[k] * std::pow(s, 2 * n - 1));
    }
  }
  return rule;
}

void require_star(const DomainSpec& domain) {
  if (!domain.radial_extent) throw UnsupportedDomain(domain.name + " has no radial parametrization");
}

}  // namespace

QuadratureRule volume_rule(const DomainSpec& domain) { return volume_rule(domain, VolumeOptions::for_dim(domain.dim)); }

QuadratureRule volume_rule(const DomainSpec& domain, const VolumeOptions& opts) {
  require_star(domain);
  const int n = domain.dim;
  const int bump = opts.stagger ? 1 : 0;
  const DirectionSet dirs = sphere_tensor(n, opts.polar + bump, opts.angular, opts.stagger ? 0.5 : 0.0);
  GradedSpec spec;
  spec.r0 = opts.r0;
  spec.ratio = opts.ratio;
  spec.levels = opts.shells;
  spec.order = opts.radial + bump;
  spec.interior = opts.interior + bump;
  spec.endpoint_exponent = opts.endpoint_exponent;
  const Rule1D radial = graded_toward_end(0.0, 1.0, spec);
  QuadratureRule rule = materialize(domain, dirs, radial, "tensor-graded");
  rule.meta.order = spec.order;
  rule.meta.seed = opts.seed;
  double d = opts.r0;
  rule.meta.strata.push_back(1.0 - d);
  for (int k = 0; k < opts.shells; ++k) {
    d *= opts.ratio;
    rule.meta.strata.push_back(1.0 - d);
  }
  if (opts.companion) rule.coarse = std::make_shared<QuadratureRule>(volume_rule(domain, opts.halved()));
  return rule;
}

QuadratureRule stratified_rule(const DomainSpec& domain, long nodes, std::uint64_t seed) {
  require_star(domain);
  const int n = domain.dim;
  const int dims = 2 * n;
  const int m = std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(nodes), 1.0 / dims))));
  long cells = 1;
  for (int k = 0; k < dims; ++k) cells *= m;
  // coordinate 0: c = s^{2n} in [0, 1]; then n - 1 polar angles in [0, pi/2]; then n phases
  std::vector<double> lo(dims, 0.0), width(dims);
  width[0] = 1.0;
  for (int i = 1; i < n; ++i) width[i] = kPi / 2;
  for (int j = 0; j < n; ++j) width[n + j] = 2 * kPi;
  double cellvol = 1.0;
  for (int k = 0; k < dims; ++k) cellvol *= width[k] / m;

  QuadratureRule rule;
  rule.dim = n;
  rule.kind = RuleKind::Volume;
  rule.meta.scheme = "stratified-mc";
  rule.meta.seed = seed;
  rule.nodes.reserve(cells);
  rule.weights.reserve(cells);
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> c(dims), theta(n - 1), r;
  for (long cell = 0; cell < cells; ++cell) {
    long rem = cell;
    for (int k = 0; k < dims; ++k) {
      const long i = rem % m;
      rem /= m;
      c[k] = lo[k] + width[k] * (static_cast<double>(i) + unif(rng)) / m;
    }
    for (int i = 0; i < n - 1; ++i) theta[i] = c[1 + i];
    double jac = 1.0;
    orthant_point(theta, n, r, jac);
    CVec u(n);
    double rp = 1.0;
    for (int j = 0; j < n; ++j) {
      u(j) = std::polar(r[j], c[n + j]);
      rp *= r[j];
    }
    const double rad = domain.radial_extent(u);
    const double s = std::pow(c[0], 1.0 / dims);
    rule.nodes.emplace_back((s * rad) * u);
    rule.weights.push_back(cellvol * std::pow(rad, dims) / dims * rp * jac);
  }
  return rule;
}

QuadratureRule layer_rule(const DomainSpec& domain, double thickness, double spacing) {
  require_star(domain);
  if (!(thickness > 0.0 && thickness <= 1.0 && spacing > 0.0)) throw std::invalid_argument("bad layer rule parameters");
  const int n = domain.dim;
  const int angular = std::max(8, static_cast<int>(std::ceil(2 * kPi / spacing)));
  const int polar = std::max(2, static_cast<int>(std::ceil(kPi / 2 / spacing)));
  const DirectionSet dirs = sphere_tensor(n, polar, angular);
  const int depth = std::max(1, static_cast<int>(std::ceil(thickness / spacing)));
  Rule1D radial;
  const double h = thickness / depth;
  for (int k = 0; k < depth; ++k) {
    radial.x.push_back(1.0 - thickness + (k + 0.5) * h);
    radial.w.push_back(h);
  }
  QuadratureRule rule = materialize(domain, dirs, radial, "layer-midpoint");
  rule.meta.strata = {1.0 - thickness, 1.0};
  return rule;
}

SurfaceOptions SurfaceOptions::for_dim(int n) {
  SurfaceOptions o;
  if (n == 1) o.polar = 1;
  if (n == 2) {
    o.angular = 64;
    o.polar = 24;
  } else if (n >= 3) {
    o.angular = 16;
    o.polar = 8;
  }
  return o;
}

QuadratureRule surface_rule(const DomainSpec& domain) { return surface_rule(domain, SurfaceOptions::for_dim(domain.dim)); }

QuadratureRule surface_rule(const DomainSpec& domain, const SurfaceOptions& opts) {
  require_star(domain);
  const int n = domain.dim;
  const DirectionSet dirs = sphere_tensor(n, opts.polar, opts.angular, opts.phase_offset);
  QuadratureRule rule;
  rule.dim = n;
  rule.kind = RuleKind::Surface;
  rule.meta.scheme = "tensor-surface";
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const CVec& u = dirs.u[i];
    const double r = domain.radial_extent(u);
    const CVec p = r * u;
    const CVec d = domain.d_rho(p);
    const double u_dot_grad = 2.0 * pair(u, d).real();
    const double cos_angle = u_dot_grad / (2.0 * d.norm());
    rule.nodes.push_back(p);
    rule.weights.push_back(dirs.w[i] * std::pow(r, 2 * n - 1) / cos_angle);
  }
  return rule;
}

QuadratureRule adapted_rule(const DomainSpec& domain, const CVec& target, const AdaptedOptions& opts) {
  require_star(domain);
  const double tn = target.norm();
  CVec dir = CVec::Zero(domain.dim);
  if (tn > 0.0) {
    dir = target / tn;
  } else {
    dir(0) = 1.0;
  }
  QuadratureRule rule = materialize(domain, adapted_directions(domain.dim, dir, opts), adapted_radial(opts), "adapted");
  rule.meta.order = opts.order;
  return rule;
}

std::string rule_csv(const QuadratureRule& rule) {
  std::ostringstream os;
  os.precision(17);
  for (int j = 0; j < rule.dim; ++j) os << "re" << j + 1 << ",im" << j + 1 << ",";
  os << "weight\n";
  for (std::size_t i = 0; i < rule.size(); ++i) {
    for (int j = 0; j < rule.dim; ++j) os << rule.nodes[i](j).real() << "," << rule.nodes[i](j).imag() << ",";
    os << rule.weights[i] << "\n";
  }
  return os.str();
}

}  // namespace bergman
