#pragma once

#include <functional>
#include <vector>

#include "tsdiff/autodiff/graph.hpp"
#include "tsdiff/common/rng.hpp"

// Central finite-difference gradient checking at 64-bit precision.
// `loss_fn` must run a fresh forward pass with the current parameter
// values and return the scalar loss; analytic gradients are produced by
// `grad_fn`, which runs forward + backward and leaves gradients in the
// store. The largest relative error over all parameter entries is
// returned; entries where both gradients are ~0 are skipped.

namespace tsdiff::testing {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
};

inline GradCheckReport gradcheck(ParamStore<double>& ps,
                                 const std::function<double()>& loss_fn,
                                 const std::function<void()>& grad_fn,
                                 double h = 1e-5) {
  ps.zero_grads();
  grad_fn();
  std::vector<Mat<double>> analytic;
  analytic.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) analytic.push_back(ps[i].grad);

  GradCheckReport rep;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = ps[i];
    for (Eigen::Index c = 0; c < p.value.cols(); ++c)
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        double saved = p.value(r, c);
        p.value(r, c) = saved + h;
        double lp = loss_fn();
        p.value(r, c) = saved - h;
        double lm = loss_fn();
        p.value(r, c) = saved;
        double fd = (lp - lm) / (2.0 * h);
        double an = analytic[i](r, c);
        // agreement below the central-difference noise floor counts as exact
        if (std::abs(fd - an) < 1e-8) continue;
        double denom = std::max(std::abs(fd), std::abs(an));
        double rel = std::abs(fd - an) / denom;
        if (rel > rep.max_rel_err) {
          rep.max_rel_err = rel;
          rep.worst_param = p.name;
        }
      }
  }
  return rep;
}

inline void fill_random(Param<double>& p, tsdiff::Rng& rng, double scale = 0.5) {
  for (Eigen::Index c = 0; c < p.value.cols(); ++c)
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      p.value(r, c) = rng.uniform(-scale, scale);
}

inline Mat<double> random_mat(Eigen::Index rows, Eigen::Index cols, tsdiff::Rng& rng,
                              double scale = 1.0) {
  Mat<double> m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-scale, scale);
  return m;
}

}  // namespace tsdiff::testing
