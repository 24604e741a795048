#pragma once

#include <Eigen/Core>

namespace tsdiff {

// Gaussian summary of an embedding set: sample mean and unbiased (n-1)
// covariance, symmetrized.
struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;

  Eigen::Index dim() const { return mu.size(); }
};

// rows: n x d embedding matrix, n >= 2.
GaussianStats gaussian_stats(const Eigen::MatrixXd& rows);

// Symmetric PSD square root via eigendecomposition. The input is
// symmetrized first; eigenvalues in [-1e-8, 0) are clamped to zero and
// anything below -1e-8 is rejected.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& a);

// Gaussian Frechet distance
//   |mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2})
// computed through the symmetrized product S1^{1/2} S2 S1^{1/2}, whose
// square-root trace equals Tr((S1 S2)^{1/2}). Rank-deficient covariances
// (smallest eigenvalue < 1e-10) get 1e-6 I added to both sides before the
// root. Small negative results (>= -1e-6) clamp to zero.
double frechet_distance(const GaussianStats& s1, const GaussianStats& s2);

}  // namespace tsdiff
