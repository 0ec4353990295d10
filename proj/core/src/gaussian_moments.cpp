#include "polymom/gaussian_moments.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace polymom {

namespace {
constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = -1e-10;
}  // namespace

GaussianMomentTable::GaussianMomentTable(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() == 0 || cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw std::invalid_argument("gaussian moments: mean/cov dimension mismatch");
  }
  if ((cov_ - cov_.transpose()).norm() > kSymmetryTol) {
    throw std::domain_error("gaussian moments: covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kPsdTol) {
    throw std::domain_error("gaussian moments: covariance is not positive semi-definite");
  }
}

std::size_t GaussianMomentTable::IndexHash::operator()(const MultiIndex& idx) const {
  std::size_t h = 0x9e3779b97f4a7c15ull;
  for (int e : idx) {
    h ^= static_cast<std::size_t>(e) + 0x9e3779b9ull + (h << 6) + (h >> 2);
  }
  return h;
}

double GaussianMomentTable::moment(const MultiIndex& idx) {
  if (static_cast<int>(idx.size()) != dimension()) {
    throw std::invalid_argument("gaussian moments: index dimension mismatch");
  }
  for (int e : idx) {
    if (e < 0) throw std::invalid_argument("gaussian moments: negative exponent");
  }
  MultiIndex scratch = idx;
  return compute(scratch);
}

double GaussianMomentTable::compute(MultiIndex& idx) {
  int j = -1;
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] > 0) {
      j = static_cast<int>(t);
      break;
    }
  }
  if (j < 0) return 1.0;

  auto hit = memo_.find(idx);
  if (hit != memo_.end()) return hit->second;

  const MultiIndex key = idx;
  idx[j] -= 1;  // idx now holds a = key - e_j
  double value = mean_[j] * compute(idx);
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] == 0) continue;
    double a_t = idx[t];
    idx[t] -= 1;
    value += cov_(j, t) * a_t * compute(idx);
    idx[t] += 1;
  }
  idx[j] += 1;
  memo_.emplace(key, value);
  return value;
}

double gaussian_mv_moment(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                          const MultiIndex& idx) {
  GaussianMomentTable table(mean, cov);
  return table.moment(idx);
}

}  // namespace polymom
