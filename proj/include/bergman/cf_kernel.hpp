#pragma once

#include "bergman/levi_engine.hpp"

namespace bergman {

/// Coefficients of a (1,0)-form sum_j a_j dw_j at base point w with parameter z.
struct CFForm {
  CVec coeffs;
  CVec base;
  CVec parameter;
};

/// b1(w, z) = (n!/pi^n) numerator / g^{n+1}
struct KernelValue {
  cplx value;
  cplx numerator;
  cplx denominator;
};

struct KernelParts {
  double k0 = 0.0;          // (n!/pi^n) u* adj(L_w) u with u = d rho(w)
  double remainder = 0.0;   // |b1 g^{n+1} - k0|
  cplx scaled = 0.0;        // b1 g^{n+1}
};

struct BoundaryDensity {
  CVec generating;   // eta / <eta, w - z>
  cplx density;      // Cauchy-Fantappie density against surface measure
  cplx pairing;      // <generating, w - z>, equal to 1
};

/// eta, g and their wbar-derivatives at (w, z).
struct KernelJet {
  cplx g;
  CVec eta;
  CMat jac;      // jac(j, k) = d eta_j / d wbar_k
  CVec dbar_g;   // d g / d wbar_k
};

inline constexpr double kSingularGuard = 1e-14;

CFForm eta_eps(const KernelContext& ctx, const CVec& w, const CVec& z);
KernelJet kernel_jet(const KernelContext& ctx, const BasePoint& b, const CVec& z);

/// A(j, k) = d/d wbar_k [eta_j / g_eps]
CMat generating_jacobian(const KernelContext& ctx, const CVec& w, const CVec& z);

KernelValue kernel_b1(const KernelContext& ctx, const BasePoint& b, const CVec& z);
KernelValue kernel_b1(const KernelContext& ctx, const CVec& w, const CVec& z);

/// Leading coefficient of the numerator at w.
double leading_term(const KernelContext& ctx, const CVec& w);
KernelParts kernel_parts(const KernelContext& ctx, const CVec& w, const CVec& z);

BoundaryDensity kernel_b1_hat(const KernelContext& ctx, const CVec& w, const CVec& z);

}  // namespace bergman
