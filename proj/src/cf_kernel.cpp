#include "bergman/cf_kernel.hpp"

#include "bergman/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace bergman {

namespace {

std::string describe(const CVec& w, const CVec& z) {
  std::string s = "w=(";
  for (Eigen::Index j = 0; j < w.size(); ++j) s += std::to_string(w(j).real()) + "+" + std::to_string(w(j).imag()) + "i ";
  s += ") z=(";
  for (Eigen::Index j = 0; j < z.size(); ++j) s += std::to_string(z(j).real()) + "+" + std::to_string(z(j).imag()) + "i ";
  return s + ")";
}

/// g det J - dbar_g^T adj(J) eta
cplx numerator(const KernelJet& jet, int n) {
  if (n == 1) return jet.g * jet.jac(0, 0) - jet.dbar_g(0) * jet.eta(0);
  const CMat adj = adjugate(jet.jac);
  cplx c = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) c += jet.dbar_g(k) * adj(k, j) * jet.eta(j);
  }
  return jet.g * small_determinant(jet.jac) - c;
}

}  // namespace

KernelJet kernel_jet(const KernelContext& ctx, const BasePoint& b, const CVec& z) {
  const int n = ctx.dim();
  std::array<cplx, kMaxDim> v, q, y;
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    v[j] = b.w(j) - z(j);   // w - z
    y[j] = std::conj(v[j]);
    s += std::norm(v[j]);
  }
  const double x = ctx.chi(s);
  const double xp = ctx.chi_prime(s);
  const bool has_dtau = b.dtau[0].size() > 0;

  KernelJet jet;
  jet.eta.resize(n);
  jet.g = -b.rho;
  for (int j = 0; j < n; ++j) {
    cplx tv = 0.0;
    for (int l = 0; l < n; ++l) tv += b.tau(j, l) * v[l];
    q[j] = b.d_rho(j) - 0.5 * tv;
    jet.eta(j) = x * q[j] + (1.0 - x) * y[j];
    jet.g += jet.eta(j) * v[j];
  }

  jet.jac.resize(n, n);
  jet.dbar_g.resize(n);
  for (int k = 0; k < n; ++k) {
    cplx dg = -std::conj(b.d_rho(k));
    for (int j = 0; j < n; ++j) {
      cplx dq = b.levi(j, k);
      if (has_dtau) {
        cplx tv = 0.0;
        for (int l = 0; l < n; ++l) tv += b.dtau[k](j, l) * v[l];
        dq -= 0.5 * tv;
      }
      cplx e = x * dq + xp * v[k] * (q[j] - y[j]);
      if (j == k) e += 1.0 - x;
      jet.jac(j, k) = e;
      dg += e * v[j];
    }
    jet.dbar_g(k) = dg;
  }
  return jet;
}

CFForm eta_eps(const KernelContext& ctx, const CVec& w, const CVec& z) {
  const BasePoint b = base_point(ctx, w);
  return {kernel_jet(ctx, b, z).eta, w, z};
}

CMat generating_jacobian(const KernelContext& ctx, const CVec& w, const CVec& z) {
  const KernelJet jet = kernel_jet(ctx, base_point(ctx, w), z);
  return jet.jac / jet.g - jet.eta * jet.dbar_g.transpose() / (jet.g * jet.g);
}

KernelValue kernel_b1(const KernelContext& ctx, const BasePoint& b, const CVec& z) {
  const KernelJet jet = kernel_jet(ctx, b, z);
  if (std::abs(jet.g) < kSingularGuard) throw SingularKernel("g_eps vanishes at " + describe(b.w, z));
  const int n = ctx.dim();
  // det(J/g - eta dbar_g^T / g^2) = g^{-(n+1)} (g det J - dbar_g^T adj(J) eta)
  const cplx num = numerator(jet, n);
  const cplx den = int_pow(jet.g, n + 1);
  return {bergman_constant(n) * num / den, num, den};
}

KernelValue kernel_b1(const KernelContext& ctx, const CVec& w, const CVec& z) {
  return kernel_b1(ctx, base_point(ctx, w), z);
}

double leading_term(const KernelContext& ctx, const CVec& w) {
  const CVec u = ctx.domain.d_rho(w);
  const CMat l = ctx.domain.hess_mixed(w);
  return bergman_constant(ctx.dim()) * (u.adjoint() * adjugate(l) * u)(0, 0).real();
}

KernelParts kernel_parts(const KernelContext& ctx, const CVec& w, const CVec& z) {
  KernelParts p;
  p.k0 = leading_term(ctx, w);
  const BasePoint b = base_point(ctx, w);
  const KernelJet jet = kernel_jet(ctx, b, z);
  const cplx num = numerator(jet, ctx.dim());
  p.scaled = bergman_constant(ctx.dim()) * num;
  p.remainder = std::abs(p.scaled - p.k0);
  return p;
}

BoundaryDensity kernel_b1_hat(const KernelContext& ctx, const CVec& w, const CVec& z) {
  const BasePoint b = base_point(ctx, w);
  if (std::abs(b.rho) > 1e-10) throw std::invalid_argument("kernel_b1_hat needs w on bD, rho(w)=" + std::to_string(b.rho));
  const int n = ctx.dim();
  const KernelJet jet = kernel_jet(ctx, b, z);
  const CVec v = w - z;
  const cplx h = pair(jet.eta, v);
  if (std::abs(h) < kSingularGuard) throw DegenerateGeneratingForm("<eta, w - z> vanishes at " + describe(w, z));
  const CVec dh = jet.jac.transpose() * v;
  const CMat a = jet.jac / h - jet.eta * dh.transpose() / (h * h);
  BoundaryDensity out;
  out.generating = jet.eta / h;
  out.pairing = pair(out.generating, v);
  // sum_{j,k} G_j cof(A)_{jk} nu_k with nu_k = (d rho / d wbar_k) / |grad rho|
  const CVec nu = b.d_rho.conjugate() / (2.0 * b.d_rho.norm());
  const cplx contraction = (nu.transpose() * adjugate(a) * out.generating)(0, 0);
  out.density = std::tgamma(static_cast<double>(n)) / std::pow(kPi, n) * contraction;
  return out;
}

}  // namespace bergman
