#include "tsdiff/diffusion/schedule.hpp"

#include "tsdiff/common/errors.hpp"

namespace tsdiff {

NoiseSchedule linear_schedule(double beta1, double betaT, int T) {
  if (!(beta1 > 0.0) || !(beta1 <= betaT) || !(betaT < 1.0))
    throw NumericError("linear_schedule: need 0 < beta1 <= betaT < 1");
  if (T < 2) throw NumericError("linear_schedule: need T >= 2");

  NoiseSchedule s;
  s.betas.resize(T);
  s.alphas.resize(T);
  s.alpha_bars.resize(T);
  double bar = 1.0;
  for (int t = 0; t < T; ++t) {
    double frac = static_cast<double>(t) / static_cast<double>(T - 1);
    double beta = beta1 + (betaT - beta1) * frac;
    s.betas(t) = beta;
    s.alphas(t) = 1.0 - beta;
    bar *= s.alphas(t);
    s.alpha_bars(t) = bar;
  }
  return s;
}

}  // namespace tsdiff
