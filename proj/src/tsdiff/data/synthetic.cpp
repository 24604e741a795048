#include "tsdiff/data/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "tsdiff/common/errors.hpp"
#include "tsdiff/common/rng.hpp"

namespace tsdiff {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_config(const SyntheticConfig& c) {
  if (c.n_samples == 0) throw DataError("synthetic config: n_samples must be positive");
  if (c.horizon < 2) throw DataError("synthetic config: horizon must be >= 2");
  if (!(c.freq_min > 0.0)) throw DataError("synthetic config: freq_min must be > 0");
  if (c.freq_max < c.freq_min) throw DataError("synthetic config: freq_max < freq_min");
  if (c.amp_max < c.amp_min || c.amp_min < 0.0)
    throw DataError("synthetic config: invalid amplitude range");
  if (c.noise_std < 0.0) throw DataError("synthetic config: noise_std must be >= 0");
  if (c.min_segment < 8) throw DataError("synthetic config: min_segment must be >= 8");
  if (c.switch_policy != SwitchPolicy::constant && c.horizon < 2 * c.min_segment)
    throw DataError("synthetic config: horizon must be >= 2*min_segment for segmented policies");
}

std::vector<int> family_labels(const SyntheticConfig& c, Rng& rng) {
  const auto L = c.horizon;
  std::vector<int> labels(static_cast<std::size_t>(L), 0);
  switch (c.switch_policy) {
    case SwitchPolicy::constant: {
      int fam = static_cast<int>(rng.below(2));
      for (auto& l : labels) l = fam;
      break;
    }
    case SwitchPolicy::half_split: {
      // First half triangle (1), second half sine (0).
      for (Eigen::Index t = 0; t < L; ++t)
        labels[static_cast<std::size_t>(t)] = t < L / 2 ? 1 : 0;
      break;
    }
    case SwitchPolicy::segments: {
      int fam = static_cast<int>(rng.below(2));
      Eigen::Index pos = 0;
      while (pos < L) {
        Eigen::Index remaining = L - pos;
        Eigen::Index len;
        if (remaining < 2 * c.min_segment) {
          len = remaining;  // final segment absorbs the tail, still >= min_segment
        } else {
          len = c.min_segment +
                static_cast<Eigen::Index>(rng.below(
                    static_cast<std::uint64_t>(remaining - 2 * c.min_segment + 1)));
        }
        for (Eigen::Index t = pos; t < pos + len; ++t)
          labels[static_cast<std::size_t>(t)] = fam;
        fam = 1 - fam;
        pos += len;
      }
      break;
    }
  }
  return labels;
}

}  // namespace

SwitchPolicy switch_policy_from_string(const std::string& s) {
  if (s == "constant") return SwitchPolicy::constant;
  if (s == "half_split") return SwitchPolicy::half_split;
  if (s == "segments") return SwitchPolicy::segments;
  throw ConfigError("unknown switch policy: " + s);
}

std::string to_string(SwitchPolicy p) {
  switch (p) {
    case SwitchPolicy::constant: return "constant";
    case SwitchPolicy::half_split: return "half_split";
    case SwitchPolicy::segments: return "segments";
  }
  return "constant";
}

double sine_wave(double amplitude, double theta) {
  return amplitude * std::sin(theta);
}

double triangle_wave(double amplitude, double theta) {
  // Triangle with the same zero crossings and peak locations as the sine.
  return amplitude * (2.0 / std::numbers::pi) * std::asin(std::sin(theta));
}

PairedDataset generate_synthetic(const SyntheticConfig& config) {
  check_config(config);
  Rng rng(config.seed);
  const auto L = config.horizon;

  PairedDataset ds;
  ds.samples.reserve(config.n_samples);
  for (std::size_t i = 0; i < config.n_samples; ++i) {
    auto labels = family_labels(config, rng);
    double freq = rng.uniform(config.freq_min, config.freq_max);
    double amp = rng.uniform(config.amp_min, config.amp_max);
    double phase = rng.uniform(0.0, kTwoPi);

    Sample s;
    s.series.values.resize(L, 1);
    s.meta.categorical.resize(L, 1);
    s.meta.continuous.resize(L, 2);
    s.meta.cardinalities = {2};
    for (Eigen::Index t = 0; t < L; ++t) {
      int fam = labels[static_cast<std::size_t>(t)];
      double theta = kTwoPi * freq * static_cast<double>(t) / static_cast<double>(L) + phase;
      double clean = fam == 0 ? sine_wave(amp, theta) : triangle_wave(amp, theta);
      double noise = config.noise_std > 0.0 ? rng.normal(0.0, config.noise_std) : 0.0;
      s.series.values(t, 0) = clean + noise;
      s.meta.categorical(t, 0) = fam;
      s.meta.continuous(t, 0) = freq;
      s.meta.continuous(t, 1) = amp;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace tsdiff
