#pragma once

#include <Eigen/Core>

namespace tsdiff {

// Forward-process noise schedule. alphas[t-1] = 1 - betas[t-1];
// alpha_bars[t-1] = prod_{s<=t} alphas[s-1]. Index 0 holds step t=1.
struct NoiseSchedule {
  Eigen::VectorXd betas;
  Eigen::VectorXd alphas;
  Eigen::VectorXd alpha_bars;

  int steps() const { return static_cast<int>(betas.size()); }
  double beta(int t) const { return betas(t - 1); }
  double alpha(int t) const { return alphas(t - 1); }
  double alpha_bar(int t) const { return alpha_bars(t - 1); }
};

// Linear interpolation of beta between beta1 and betaT over T steps.
// Requires 0 < beta1 <= betaT < 1 and T >= 2.
NoiseSchedule linear_schedule(double beta1, double betaT, int T);

}  // namespace tsdiff
