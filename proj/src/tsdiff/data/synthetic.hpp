#pragma once

#include <cstdint>

#include "tsdiff/data/types.hpp"

namespace tsdiff {

// Per-timestep waveform-family label policies.
//   constant:   one family for the whole sample,
//   half_split: triangle (label 1) for the first half, sine (label 0) after,
//   segments:   random-length segments (each >= min_segment), families
//               alternating from a random initial family.
enum class SwitchPolicy { constant, half_split, segments };

SwitchPolicy switch_policy_from_string(const std::string& s);
std::string to_string(SwitchPolicy p);

struct SyntheticConfig {
  std::size_t n_samples = 0;
  Eigen::Index horizon = 96;
  std::uint64_t seed = 0;
  double freq_min = 1.0;  // cycles per horizon
  double freq_max = 4.0;
  double amp_min = 0.5;
  double amp_max = 1.0;
  double noise_std = 0.0;
  SwitchPolicy switch_policy = SwitchPolicy::half_split;
  Eigen::Index min_segment = 8;
};

// Waveforms share the sine parameterization: both have period L/f and peak
// at the quarter period. theta = 2*pi*f*t/L + phase.
double sine_wave(double amplitude, double theta);
double triangle_wave(double amplitude, double theta);

// Generates n_samples univariate series with paired metadata:
//   categorical feature 0 = per-timestep family label (0 sine, 1 triangle),
//   continuous feature 0  = frequency used (cycles per horizon),
//   continuous feature 1  = amplitude used.
// Frequency, amplitude, and phase are drawn once per sample; phase is
// uniform on [0, 2*pi) and is not recorded in the metadata.
// Deterministic given config.seed.
PairedDataset generate_synthetic(const SyntheticConfig& config);

}  // namespace tsdiff
