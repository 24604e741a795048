#include "tsdiff/diffusion/forward.hpp"

#include <cmath>

#include "tsdiff/common/errors.hpp"

namespace tsdiff {

namespace {
void check_step(int t, const NoiseSchedule& s) {
  if (t < 1 || t > s.steps())
    throw NumericError("diffusion step t=" + std::to_string(t) + " outside [1, " +
                       std::to_string(s.steps()) + "]");
}
void check_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw NumericError(std::string(what) + ": shape mismatch");
}
}  // namespace

Eigen::MatrixXd forward_step(const Eigen::MatrixXd& x_prev, int t,
                             const NoiseSchedule& schedule, const Eigen::MatrixXd& eps) {
  check_step(t, schedule);
  check_shape(x_prev, eps, "forward_step");
  double b = schedule.beta(t);
  return std::sqrt(1.0 - b) * x_prev + std::sqrt(b) * eps;
}

Eigen::MatrixXd closed_form_forward(const Eigen::MatrixXd& x0, int t,
                                    const NoiseSchedule& schedule,
                                    const Eigen::MatrixXd& eps) {
  if (t == 0) return x0;  // alpha_bar_0 = 1 by convention
  check_step(t, schedule);
  check_shape(x0, eps, "closed_form_forward");
  double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Eigen::MatrixXd reverse_step(const Eigen::MatrixXd& x_t, int t,
                             const Eigen::MatrixXd& eps_hat,
                             const NoiseSchedule& schedule,
                             const Eigen::MatrixXd& noise) {
  check_step(t, schedule);
  check_shape(x_t, eps_hat, "reverse_step");
  check_shape(x_t, noise, "reverse_step noise");
  double beta = schedule.beta(t);
  double alpha = schedule.alpha(t);
  double ab = schedule.alpha_bar(t);
  Eigen::MatrixXd mean =
      (x_t - (beta / std::sqrt(1.0 - ab)) * eps_hat) / std::sqrt(alpha);
  return mean + std::sqrt(beta) * noise;
}

}  // namespace tsdiff
