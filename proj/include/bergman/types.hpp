#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <numbers>

namespace bergman {

using cplx = std::complex<double>;

/// Largest complex dimension the fixed-capacity point types hold.
inline constexpr int kMaxDim = 4;

using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using CMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxDim, 1>;

/// dtau[k](j, l) = d tau_{jl} / d wbar_k
using DbarTensor = std::array<CMat, kMaxDim>;

inline constexpr double kPi = std::numbers::pi;

/// Bilinear pairing sum_j a_j b_j (no conjugation).
inline cplx pair(const CVec& a, const CVec& b) { return (a.array() * b.array()).sum(); }

/// Real coordinates (Re w_1, Im w_1, ..., Re w_n, Im w_n).
inline RVec to_real(const CVec& w) {
  RVec x(2 * w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    x(2 * j) = w(j).real();
    x(2 * j + 1) = w(j).imag();
  }
  return x;
}

inline CVec from_real(const RVec& x) {
  CVec w(x.size() / 2);
  for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = cplx(x(2 * j), x(2 * j + 1));
  return w;
}

/// n! / pi^n
double bergman_constant(int n);

/// Determinant with closed forms up to 3x3.
cplx small_determinant(const CMat& m);

/// z^k for a nonnegative integer k by repeated multiplication.
inline cplx int_pow(cplx z, int k) {
  cplx r = 1.0;
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

/// Classical adjugate, adj(M) M = det(M) I. Sizes up to kMaxDim.
CMat adjugate(const CMat& m);

}  // namespace bergman
