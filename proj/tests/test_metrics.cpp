#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "tsdiff/common/errors.hpp"
#include "tsdiff/common/rng.hpp"
#include "tsdiff/metrics/frechet.hpp"

using namespace tsdiff;

namespace {

Eigen::MatrixXd random_rows(Eigen::Index n, Eigen::Index d, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST_CASE("gaussian stats: two symmetric points") {
  Eigen::MatrixXd rows(2, 3);
  rows << 1.0, -2.0, 0.5, -1.0, 2.0, -0.5;
  auto s = gaussian_stats(rows);
  CHECK(s.mu.cwiseAbs().maxCoeff() == 0.0);
  Eigen::Vector3d v(1.0, -2.0, 0.5);
  Eigen::MatrixXd want = 2.0 * v * v.transpose();
  CHECK((s.sigma - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gaussian stats: identical points give a zero covariance") {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Ones(5, 4) * 3.25;
  auto s = gaussian_stats(rows);
  CHECK(s.sigma.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.mu(2) == doctest::Approx(3.25));
}

TEST_CASE("gaussian stats match an extended-precision two-pass oracle") {
  Rng rng(101);
  auto rows = random_rows(64, 6, rng, 2.0);
  auto s = gaussian_stats(rows);

  // two-pass at long double
  const Eigen::Index n = rows.rows(), d = rows.cols();
  std::vector<long double> mu(static_cast<std::size_t>(d), 0.0L);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) mu[static_cast<std::size_t>(j)] += rows(i, j);
    mu[static_cast<std::size_t>(j)] /= n;
  }
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      long double acc = 0.0L;
      for (Eigen::Index i = 0; i < n; ++i)
        acc += (rows(i, a) - mu[static_cast<std::size_t>(a)]) *
               (rows(i, b) - mu[static_cast<std::size_t>(b)]);
      acc /= (n - 1);
      CHECK(std::abs(static_cast<double>(acc) - s.sigma(a, b)) < 1e-10);
    }
  CHECK_THROWS_AS(gaussian_stats(rows.topRows(1)), NumericError);
}

TEST_CASE("matrix sqrt: identity and diagonal cases") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  CHECK((matrix_sqrt_psd(id) - id).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd d2 = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  Eigen::MatrixXd want = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  CHECK((matrix_sqrt_psd(d2) - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matrix sqrt: random PSD residuals below 1e-6 relative") {
  Rng rng(102);
  for (int rep = 0; rep < 20; ++rep) {
    auto b = random_rows(6, 6, rng);
    Eigen::MatrixXd a = b.transpose() * b;
    auto s = matrix_sqrt_psd(a);
    double rel = (s * s - a).norm() / a.norm();
    CHECK(rel < 1e-6);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("matrix sqrt rejects clearly non-PSD input, clamps tiny negatives") {
  Eigen::MatrixXd neg = Eigen::Vector2d(1.0, -0.5).asDiagonal();
  CHECK_THROWS_AS(matrix_sqrt_psd(neg), NumericError);
  Eigen::MatrixXd tiny = Eigen::Vector2d(1.0, -5e-9).asDiagonal();
  auto s = matrix_sqrt_psd(tiny);
  CHECK(s(1, 1) == 0.0);
}

TEST_CASE("frechet distance of a distribution with itself is zero") {
  Rng rng(103);
  auto stats = gaussian_stats(random_rows(40, 5, rng));
  CHECK(frechet_distance(stats, stats) < 1e-7);
}

TEST_CASE("frechet distance matches the 1-D closed form") {
  // (mu, sigma^2) = (0, 1) vs (3, 4): (0-3)^2 + (1-2)^2 = 10
  GaussianStats a{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
  GaussianStats b{Eigen::VectorXd::Constant(1, 3.0),
                  Eigen::MatrixXd::Identity(1, 1) * 4.0};
  CHECK(frechet_distance(a, b) == doctest::Approx(10.0).epsilon(1e-9));

  Rng rng(104);
  for (int rep = 0; rep < 200; ++rep) {
    double m1 = rng.uniform(-3, 3), m2 = rng.uniform(-3, 3);
    double s1 = rng.uniform(0.1, 2.0), s2 = rng.uniform(0.1, 2.0);
    GaussianStats g1{Eigen::VectorXd::Constant(1, m1),
                     Eigen::MatrixXd::Identity(1, 1) * s1 * s1};
    GaussianStats g2{Eigen::VectorXd::Constant(1, m2),
                     Eigen::MatrixXd::Identity(1, 1) * s2 * s2};
    double want = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
    CHECK(frechet_distance(g1, g2) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("frechet distance on commuting (diagonal) covariances matches the "
          "per-dimension scalar formula") {
  Rng rng(105);
  for (int rep = 0; rep < 25; ++rep) {
    Eigen::VectorXd m1(3), m2(3), v1(3), v2(3);
    for (int i = 0; i < 3; ++i) {
      m1(i) = rng.uniform(-2, 2);
      m2(i) = rng.uniform(-2, 2);
      v1(i) = rng.uniform(0.1, 3.0);
      v2(i) = rng.uniform(0.1, 3.0);
    }
    GaussianStats g1{m1, v1.asDiagonal()};
    GaussianStats g2{m2, v2.asDiagonal()};
    double want = 0.0;
    for (int i = 0; i < 3; ++i)
      want += (m1(i) - m2(i)) * (m1(i) - m2(i)) +
              (std::sqrt(v1(i)) - std::sqrt(v2(i))) * (std::sqrt(v1(i)) - std::sqrt(v2(i)));
    CHECK(frechet_distance(g1, g2) == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("frechet distance is symmetric and rejects dimension mismatches") {
  Rng rng(106);
  auto a = gaussian_stats(random_rows(50, 4, rng));
  auto b = gaussian_stats(random_rows(50, 4, rng, 2.0));
  CHECK(std::abs(frechet_distance(a, b) - frechet_distance(b, a)) < 1e-8);
  auto c = gaussian_stats(random_rows(50, 3, rng));
  CHECK_THROWS_AS(frechet_distance(a, c), NumericError);
}

TEST_CASE("frechet distance handles rank-deficient covariances via regularization") {
  Rng rng(107);
  // 5 points in 8 dims: covariance is rank deficient
  auto a = gaussian_stats(random_rows(5, 8, rng));
  auto b = gaussian_stats(random_rows(5, 8, rng));
  double fd = frechet_distance(a, b);
  CHECK(std::isfinite(fd));
  CHECK(fd >= 0.0);
  CHECK(frechet_distance(a, a) < 1e-7);
}
