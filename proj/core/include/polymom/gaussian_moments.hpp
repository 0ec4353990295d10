#pragma once

#include <Eigen/Dense>
#include <unordered_map>

#include "polymom/multi_index.hpp"

namespace polymom {

/// Raw moments of a multivariate Gaussian via the recurrence
///   E[x_j x^a] = mu_j E[x^a] + sum_t cov_{jt} a_t E[x^{a - e_t}],
/// memoized over sub-indices. Moments stay exact polynomials in (mu, cov);
/// no diagonalization is involved. One table serves many indices of the same
/// distribution; tables are not shared across threads.
class GaussianMomentTable {
 public:
  /// Validates cov (symmetric within 1e-12 Frobenius, eigenvalues >= -1e-10)
  /// and the mean/cov shape. Throws std::domain_error / std::invalid_argument.
  GaussianMomentTable(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  /// E[prod_t x_t^{idx_t}]; idx length must equal the dimension.
  double moment(const MultiIndex& idx);

  int dimension() const { return static_cast<int>(mean_.size()); }

 private:
  struct IndexHash {
    std::size_t operator()(const MultiIndex& idx) const;
  };

  double compute(MultiIndex& idx);

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  std::unordered_map<MultiIndex, double, IndexHash> memo_;
};

/// One-shot variant of GaussianMomentTable::moment.
double gaussian_mv_moment(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                          const MultiIndex& idx);

}  // namespace polymom
