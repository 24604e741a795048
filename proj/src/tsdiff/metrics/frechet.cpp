#include "tsdiff/metrics/frechet.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "tsdiff/common/errors.hpp"

namespace tsdiff {

GaussianStats gaussian_stats(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw NumericError("gaussian_stats: need at least 2 rows");
  if (!rows.allFinite()) throw NumericError("gaussian_stats: non-finite embedding");
  GaussianStats s;
  s.mu = rows.colwise().mean();
  Eigen::MatrixXd centered = rows.rowwise() - s.mu.transpose();
  s.sigma = centered.transpose() * centered / static_cast<double>(n - 1);
  s.sigma = ((s.sigma + s.sigma.transpose()) / 2.0).eval();
  return s;
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw NumericError("matrix_sqrt_psd: matrix must be square");
  Eigen::MatrixXd sym = (a + a.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericError("matrix_sqrt_psd: eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -1e-8)
      throw NumericError("matrix_sqrt_psd: matrix is not PSD (eigenvalue " +
                         std::to_string(lam(i)) + ")");
    if (lam(i) < 0.0) lam(i) = 0.0;
  }
  Eigen::MatrixXd root = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                         es.eigenvectors().transpose();
  return ((root + root.transpose()) / 2.0).eval();
}

namespace {

double smallest_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

double frechet_distance(const GaussianStats& s1, const GaussianStats& s2) {
  if (s1.dim() != s2.dim())
    throw NumericError("frechet_distance: dimension mismatch (" +
                       std::to_string(s1.dim()) + " vs " + std::to_string(s2.dim()) + ")");
  Eigen::MatrixXd a = s1.sigma;
  Eigen::MatrixXd b = s2.sigma;
  if (std::min(smallest_eigenvalue(a), smallest_eigenvalue(b)) < 1e-10) {
    Eigen::MatrixXd reg = 1e-6 * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    a += reg;
    b += reg;
  }
  Eigen::MatrixXd root_a = matrix_sqrt_psd(a);
  Eigen::MatrixXd cross = matrix_sqrt_psd(root_a * b * root_a);
  double fd = (s1.mu - s2.mu).squaredNorm() + a.trace() + b.trace() - 2.0 * cross.trace();
  if (fd < -1e-6)
    throw NumericError("frechet_distance: value " + std::to_string(fd) +
                       " below the numerical tolerance");
  return std::max(fd, 0.0);
}

}  // namespace tsdiff
