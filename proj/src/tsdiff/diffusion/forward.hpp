#pragma once

#include "tsdiff/data/types.hpp"
#include "tsdiff/diffusion/schedule.hpp"

namespace tsdiff {

// One Markov corruption step: sqrt(1-beta_t) * x_prev + sqrt(beta_t) * eps.
Eigen::MatrixXd forward_step(const Eigen::MatrixXd& x_prev, int t,
                             const NoiseSchedule& schedule, const Eigen::MatrixXd& eps);

// Single-shot corruption to step t:
// sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps. t = 0 returns x0.
Eigen::MatrixXd closed_form_forward(const Eigen::MatrixXd& x0, int t,
                                    const NoiseSchedule& schedule,
                                    const Eigen::MatrixXd& eps);

// DDPM ancestral update with sigma_t^2 = beta_t:
// x_{t-1} = (x_t - beta_t/sqrt(1-alpha_bar_t) * eps_hat)/sqrt(alpha_t)
//           + sqrt(beta_t) * noise.
// noise must be zero at t = 1 (callers pass a zero matrix).
Eigen::MatrixXd reverse_step(const Eigen::MatrixXd& x_t, int t,
                             const Eigen::MatrixXd& eps_hat,
                             const NoiseSchedule& schedule,
                             const Eigen::MatrixXd& noise);

}  // namespace tsdiff
