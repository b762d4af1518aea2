#include "bergman/bergman_oracle.hpp"

#include "bergman/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace bergman {

cplx ball_kernel(int n, const CVec& w, const CVec& z) {
  const cplx q = 1.0 - (z.array() * w.array().conjugate()).sum();
  return bergman_constant(n) * std::pow(q, -(n + 1));
}

std::vector<std::vector<int>> multi_indices(int n, int cap) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(n, 0);
  for (int d = 0; d <= cap; ++d) {
    // lexicographic in (a_1 descending) among |a| = d
    std::function<void(int, int)> rec = [&](int j, int left) {
      if (j == n - 1) {
        a[j] = left;
        out.push_back(a);
        return;
      }
      for (int v = left; v >= 0; --v) {
        a[j] = v;
        rec(j + 1, left - v);
      }
    };
    rec(0, d);
  }
  return out;
}

Eigen::VectorXcd OrthonormalBasis::monomials(const CVec& z) const {
  Eigen::VectorXcd m(multi_indices.size());
  for (std::size_t k = 0; k < multi_indices.size(); ++k) {
    cplx v = 1.0;
    for (int j = 0; j < dim; ++j) {
      for (int e = 0; e < multi_indices[k][j]; ++e) v *= z(j);
    }
    m(k) = v;
  }
  return m;
}

Eigen::VectorXcd OrthonormalBasis::evaluate(const CVec& z) const { return gram_factor.transpose() * monomials(z); }

namespace {

double sigma_at(const Weight& sigma, const CVec& z) { return sigma ? sigma(z) : 1.0; }

/// Rows: nodes, columns: basis functions (or monomials when `raw`).
Eigen::MatrixXcd design(const OrthonormalBasis& basis, const QuadratureRule& rule, bool raw) {
  const long nn = static_cast<long>(rule.size());
  Eigen::MatrixXcd phi(nn, static_cast<long>(basis.size()));
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nn; ++i) {
    phi.row(i) = raw ? basis.monomials(rule.nodes[i]).transpose() : basis.evaluate(rule.nodes[i]).transpose();
  }
  return phi;
}

/// sum_i mu_i conj(row_i)^T row_i, accumulated in blocks to bound memory.
Eigen::MatrixXcd weighted_gram(const OrthonormalBasis& basis, const QuadratureRule& rule, const Eigen::VectorXd& mu,
                               bool raw) {
  const long nn = static_cast<long>(rule.size());
  const long k = static_cast<long>(basis.size());
  const long block = 8192;
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(k, k);
  Eigen::MatrixXcd rows(block, k);
  for (long start = 0; start < nn; start += block) {
    const long len = std::min(block, nn - start);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < len; ++i) {
      const CVec& z = rule.nodes[start + i];
      rows.row(i) = (raw ? basis.monomials(z) : basis.evaluate(z)).transpose();
    }
    const auto r = rows.topRows(len);
    gram.noalias() += r.adjoint() * mu.segment(start, len).asDiagonal() * r;
  }
  return gram;
}

Eigen::VectorXd measure(const OrthonormalBasis& basis, const QuadratureRule& rule) {
  Eigen::VectorXd m(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double s = sigma_at(basis.sigma, rule.nodes[i]);
    if (!(s > 0.0)) throw std::invalid_argument("weight sigma must be strictly positive");
    m(i) = rule.weights[i] * s;
  }
  return m;
}

}  // namespace

OrthonormalBasis build_basis(const DomainSpec& domain, const QuadratureRule& rule, int degree_cap, const Weight& sigma,
                             const std::string& sigma_label) {
  if (degree_cap < 0) throw std::invalid_argument("degree cap must be nonnegative");
  if (rule.kind != RuleKind::Volume) throw std::invalid_argument("Gram matrices need a volume rule");
  OrthonormalBasis b;
  b.dim = domain.dim;
  b.degree_cap = degree_cap;
  b.multi_indices = multi_indices(domain.dim, degree_cap);
  b.sigma = sigma;
  b.sigma_label = sigma_label;

  Eigen::MatrixXcd gram = weighted_gram(b, rule, measure(b, rule), true);
  gram = 0.5 * (gram + gram.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  b.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(b.condition_number <= kGramConditionLimit)) {
    throw IllConditionedGram("Gram condition number " + std::to_string(b.condition_number) + " exceeds 1e10");
  }

  // gram = P^T L D L^* P, so C = P^T L^{-*} D^{-1/2} gives C^* gram C = I
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw IllConditionedGram("pivoted LDL^T factorization failed");
  const long k = gram.rows();
  Eigen::MatrixXcd u = ldlt.matrixU();
  Eigen::MatrixXcd c = u.triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(k, k));
  const Eigen::VectorXd d = ldlt.vectorD().real();
  for (long j = 0; j < k; ++j) {
    if (!(d(j) > 0.0)) throw IllConditionedGram("nonpositive pivot in Gram factorization");
    c.col(j) /= std::sqrt(d(j));
  }
  b.gram_factor = ldlt.transpositionsP().transpose() * c;

  Eigen::VectorXi perm = Eigen::VectorXi::LinSpaced(k, 0, static_cast<int>(k) - 1);
  perm = ldlt.transpositionsP() * perm;
  b.pivot_order.assign(perm.data(), perm.data() + k);
  return b;
}

cplx kernel_from_basis(const OrthonormalBasis& basis, const CVec& w, const CVec& z) {
  return (basis.evaluate(z).array() * basis.evaluate(w).array().conjugate()).sum();
}

Eigen::VectorXcd project(const OrthonormalBasis& basis, const QuadratureRule& rule, const std::vector<cplx>& f_samples) {
  if (f_samples.size() != rule.size()) throw std::invalid_argument("sample count does not match the rule");
  const Eigen::MatrixXcd phi = design(basis, rule, false);
  const Eigen::VectorXd mu = measure(basis, rule);
  const Eigen::Map<const Eigen::VectorXcd> f(f_samples.data(), static_cast<long>(f_samples.size()));
  return phi.adjoint() * (mu.cast<cplx>().cwiseProduct(f));
}

cplx evaluate_expansion(const OrthonormalBasis& basis, const Eigen::VectorXcd& coeffs, const CVec& z) {
  return (basis.evaluate(z).array() * coeffs.array()).sum();
}

std::vector<cplx> apply_projection(const OrthonormalBasis& basis, const QuadratureRule& rule,
                                   const std::vector<cplx>& f_samples) {
  const Eigen::VectorXcd c = project(basis, rule, f_samples);
  const Eigen::MatrixXcd phi = design(basis, rule, false);
  const Eigen::VectorXcd out = phi * c;
  return {out.data(), out.data() + out.size()};
}

Eigen::MatrixXcd basis_gram(const OrthonormalBasis& basis, const QuadratureRule& rule) {
  return weighted_gram(basis, rule, measure(basis, rule), false);
}

nlohmann::json basis_to_json(const OrthonormalBasis& basis) {
  nlohmann::json j;
  j["dim"] = basis.dim;
  j["degree_cap"] = basis.degree_cap;
  j["multi_indices"] = basis.multi_indices;
  j["pivot_order"] = basis.pivot_order;
  j["sigma"] = basis.sigma_label;
  j["condition_number"] = basis.condition_number;
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (long r = 0; r < basis.gram_factor.rows(); ++r) {
    std::vector<double> rr, ii;
    for (long c = 0; c < basis.gram_factor.cols(); ++c) {
      rr.push_back(basis.gram_factor(r, c).real());
      ii.push_back(basis.gram_factor(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  j["gram_factor_re"] = re;
  j["gram_factor_im"] = im;
  return j;
}

OrthonormalBasis basis_from_json(const nlohmann::json& j, const Weight& sigma) {
  OrthonormalBasis b;
  b.dim = j.at("dim").get<int>();
  b.degree_cap = j.at("degree_cap").get<int>();
  b.multi_indices = j.at("multi_indices").get<std::vector<std::vector<int>>>();
  b.pivot_order = j.at("pivot_order").get<std::vector<int>>();
  b.sigma_label = j.at("sigma").get<std::string>();
  b.condition_number = j.at("condition_number").get<double>();
  b.sigma = sigma;
  const auto re = j.at("gram_factor_re").get<std::vector<std::vector<double>>>();
  const auto im = j.at("gram_factor_im").get<std::vector<std::vector<double>>>();
  const long k = static_cast<long>(re.size());
  b.gram_factor.resize(k, k);
  for (long r = 0; r < k; ++r) {
    if (static_cast<long>(re[r].size()) != k || static_cast<long>(im[r].size()) != k) {
      throw std::invalid_argument("gram factor must be square");
    }
    for (long c = 0; c < k; ++c) b.gram_factor(r, c) = cplx(re[r][c], im[r][c]);
  }
  if (static_cast<long>(b.multi_indices.size()) != k) throw std::invalid_argument("factor size does not match indices");
  return b;
}

VolumeOptions gram_rule_options(int dim, int degree_cap) {
  VolumeOptions o;
  o.shells = 0;
  o.r0 = 1.0;
  if (dim == 1) {
    o.angular = std::max(16, 2 * degree_cap + 16);
    o.polar = 1;
    o.radial = degree_cap + 8;
  } else {
    o.angular = 2 * degree_cap + 4;
    o.polar = degree_cap + 4;
    o.radial = degree_cap + dim + 1;
  }
  o.interior = o.radial;
  return o;
}

}  // namespace bergman
