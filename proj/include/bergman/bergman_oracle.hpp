#pragma once

#include "bergman/quadrature.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace bergman {

/// (n!/pi^n) (1 - <z, wbar>)^{-(n+1)}
cplx ball_kernel(int n, const CVec& w, const CVec& z);

using Weight = std::function<double(const CVec&)>;

/// Holomorphic monomials up to total degree `degree_cap`, orthonormalized in L^2(D, sigma dV):
/// phi_k(z) = sum_a z^a gram_factor(a, k).
struct OrthonormalBasis {
  int dim = 1;
  int degree_cap = 0;
  std::vector<std::vector<int>> multi_indices;
  Eigen::MatrixXcd gram_factor;
  std::vector<int> pivot_order;   // pivot sequence of the factorization
  Weight sigma;
  std::string sigma_label = "1";
  double condition_number = 0.0;

  std::size_t size() const { return multi_indices.size(); }
  Eigen::VectorXcd monomials(const CVec& z) const;
  Eigen::VectorXcd evaluate(const CVec& z) const;
};

inline constexpr double kGramConditionLimit = 1e10;

/// Multi-indices of total degree <= cap in graded lexicographic order.
std::vector<std::vector<int>> multi_indices(int n, int cap);

OrthonormalBasis build_basis(const DomainSpec& domain, const QuadratureRule& rule, int degree_cap,
                             const Weight& sigma = {}, const std::string& sigma_label = "1");

cplx kernel_from_basis(const OrthonormalBasis& basis, const CVec& w, const CVec& z);
/// <f, phi_k>_sigma from samples of f at the rule nodes.
Eigen::VectorXcd project(const OrthonormalBasis& basis, const QuadratureRule& rule, const std::vector<cplx>& f_samples);
cplx evaluate_expansion(const OrthonormalBasis& basis, const Eigen::VectorXcd& coeffs, const CVec& z);
/// B^sigma f sampled back at the rule nodes.
std::vector<cplx> apply_projection(const OrthonormalBasis& basis, const QuadratureRule& rule,
                                   const std::vector<cplx>& f_samples);
/// Discrete Gram matrix of the basis on a rule (identity when orthonormal).
Eigen::MatrixXcd basis_gram(const OrthonormalBasis& basis, const QuadratureRule& rule);

nlohmann::json basis_to_json(const OrthonormalBasis& basis);
/// sigma is not serialized; pass the evaluator matching the exported label.
OrthonormalBasis basis_from_json(const nlohmann::json& j, const Weight& sigma = {});

/// Gauss rule exact for |monomial|^2 up to the cap on circular domains.
VolumeOptions gram_rule_options(int dim, int degree_cap);

}  // namespace bergman
