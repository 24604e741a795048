#include <doctest.h>

#include <cmath>

#include "tsdiff/common/errors.hpp"
#include "tsdiff/common/rng.hpp"
#include "tsdiff/diffusion/forward.hpp"
#include "tsdiff/diffusion/schedule.hpp"

using namespace tsdiff;

TEST_CASE("linear schedule hits the requested endpoints") {
  auto s = linear_schedule(1e-4, 0.1, 200);
  CHECK(s.beta(1) == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(s.beta(200) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.steps() == 200);
}

TEST_CASE("constant schedule gives alpha_bar = (1-b)^t") {
  auto s = linear_schedule(0.02, 0.02, 10);
  for (int t = 1; t <= 10; ++t)
    CHECK(s.alpha_bar(t) == doctest::Approx(std::pow(0.98, t)).epsilon(1e-12));
}

TEST_CASE("alpha_bar matches an extended-precision cumulative product") {
  auto s = linear_schedule(1e-4, 0.1, 200);
  long double bar = 1.0L;
  for (int t = 1; t <= 200; ++t) {
    long double beta =
        1e-4L + (0.1L - 1e-4L) * static_cast<long double>(t - 1) / 199.0L;
    bar *= (1.0L - beta);
    CHECK(std::abs(static_cast<double>(bar) - s.alpha_bar(t)) < 1e-12);
  }
}

TEST_CASE("schedule invariants: beta monotone, alpha_bar strictly decreasing") {
  auto s = linear_schedule(1e-4, 0.1, 200);
  for (int t = 2; t <= 200; ++t) {
    CHECK(s.beta(t) >= s.beta(t - 1));
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }
  // default schedule ends nearly fully noised
  CHECK(1.0 - s.alpha_bar(200) > 0.99);
}

TEST_CASE("schedule rejects out-of-range parameters") {
  CHECK_THROWS_AS(linear_schedule(0.0, 0.1, 10), NumericError);
  CHECK_THROWS_AS(linear_schedule(0.2, 0.1, 10), NumericError);
  CHECK_THROWS_AS(linear_schedule(1e-4, 1.0, 10), NumericError);
  CHECK_THROWS_AS(linear_schedule(1e-4, 0.1, 1), NumericError);
}

TEST_CASE("forward_step analytic cases") {
  auto s = linear_schedule(0.5, 0.5, 4);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
  Eigen::MatrixXd e = Eigen::MatrixXd::Constant(3, 2, 1.0);
  auto y = forward_step(x, 2, s, e);
  CHECK((y.array() - std::sqrt(0.5)).abs().maxCoeff() < 1e-15);

  // nearly-zero beta leaves x essentially unchanged
  auto tiny = linear_schedule(1e-300, 1e-300, 2);
  Eigen::MatrixXd x2 = Eigen::MatrixXd::Random(3, 2);
  auto y2 = forward_step(x2, 1, tiny, Eigen::MatrixXd::Zero(3, 2));
  CHECK((y2 - x2).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(forward_step(x, 9, s, e), NumericError);
  CHECK_THROWS_AS(forward_step(x, 1, s, Eigen::MatrixXd::Zero(2, 2)), NumericError);
}

TEST_CASE("closed form forward: identity at t=0 and pure noise from zero") {
  auto s = linear_schedule(1e-4, 0.1, 50);
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(4, 3);
  Eigen::MatrixXd e = Eigen::MatrixXd::Random(4, 3);
  CHECK((closed_form_forward(x0, 0, s, e) - x0).cwiseAbs().maxCoeff() == 0.0);
  auto y = closed_form_forward(Eigen::MatrixXd::Zero(4, 3), 30, s, e);
  CHECK((y - std::sqrt(1.0 - s.alpha_bar(30)) * e).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("iterated forward steps match the closed form in distribution") {
  // Monte-Carlo moment check on a scalar chain; the acceptance suite runs
  // the full 1e5-trial version at t in {50, 200}.
  auto s = linear_schedule(1e-4, 0.1, 200);
  const int trials = 20000;
  const int t_check = 50;
  const double x0 = 1.0;
  Rng rng(1234);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < trials; ++i) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 1, x0);
    for (int t = 1; t <= t_check; ++t) {
      Eigen::MatrixXd e(1, 1);
      e(0, 0) = rng.normal();
      x = forward_step(x, t, s, e);
    }
    sum += x(0, 0);
    sumsq += x(0, 0) * x(0, 0);
  }
  double mean = sum / trials;
  double var = sumsq / trials - mean * mean;
  double want_mean = std::sqrt(s.alpha_bar(t_check)) * x0;
  double want_var = 1.0 - s.alpha_bar(t_check);
  // 3-sigma Monte-Carlo bounds
  double mean_se = std::sqrt(want_var / trials);
  double var_se = want_var * std::sqrt(2.0 / (trials - 1));
  CHECK(std::abs(mean - want_mean) < 3.0 * mean_se);
  CHECK(std::abs(var - want_var) < 3.0 * var_se);
}

TEST_CASE("reverse step recovers the posterior mean with an oracle noise estimate") {
  auto s = linear_schedule(1e-4, 0.1, 200);
  Rng rng(55);
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(5, 1);
  for (int t : {1, 10, 100, 200}) {
    Eigen::MatrixXd eps(5, 1);
    for (int i = 0; i < 5; ++i) eps(i, 0) = rng.normal();
    auto x_t = closed_form_forward(x0, t, s, eps);
    auto x_prev = reverse_step(x_t, t, eps, s, Eigen::MatrixXd::Zero(5, 1));
    // analytic posterior mean given the exact eps
    double beta = s.beta(t), alpha = s.alpha(t), ab = s.alpha_bar(t);
    Eigen::MatrixXd want =
        (x_t - (beta / std::sqrt(1.0 - ab)) * eps) / std::sqrt(alpha);
    CHECK((x_prev - want).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("reverse step degenerates to identity as beta approaches zero") {
  auto s = linear_schedule(1e-14, 1e-14, 2);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 2);
  Eigen::MatrixXd eps_hat = Eigen::MatrixXd::Random(4, 2);
  auto y = reverse_step(x, 1, eps_hat, s, Eigen::MatrixXd::Zero(4, 2));
  CHECK((y - x).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("reverse step rejects t out of range") {
  auto s = linear_schedule(1e-4, 0.1, 10);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(reverse_step(x, 0, x, s, x), NumericError);
  CHECK_THROWS_AS(reverse_step(x, 11, x, s, x), NumericError);
}
