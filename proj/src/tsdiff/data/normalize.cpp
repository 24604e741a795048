#include "tsdiff/data/normalize.hpp"

#include <cmath>
#include <limits>

#include "tsdiff/common/errors.hpp"

namespace tsdiff {

NormMode norm_mode_from_string(const std::string& s) {
  if (s == "minmax") return NormMode::minmax;
  if (s == "zscore") return NormMode::zscore;
  throw ConfigError("unknown normalization mode: " + s);
}

std::string to_string(NormMode m) {
  return m == NormMode::minmax ? "minmax" : "zscore";
}

namespace {

AffineStats zscore_stats(double mean, double var, bool error_on_constant,
                         const std::string& what) {
  double sd = std::sqrt(var);
  if (sd < 1e-12) {
    if (error_on_constant)
      throw DataError("zscore normalization: zero-variance " + what);
    return {mean, 1.0};
  }
  return {mean, sd};
}

}  // namespace

NormStats compute_norm_stats(const PairedDataset& train, NormMode mode) {
  if (train.empty()) throw DataError("normalization requires a non-empty train split");
  const auto F = train.channels();
  const auto K = train.n_continuous();
  const double n_rows = static_cast<double>(train.size()) * static_cast<double>(train.horizon());

  NormStats stats;
  stats.mode = mode;
  stats.channels.resize(static_cast<std::size_t>(F));
  stats.continuous.resize(static_cast<std::size_t>(K));

  for (Eigen::Index f = 0; f < F; ++f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0, sumsq = 0.0;
    for (const auto& s : train.samples) {
      const auto col = s.series.values.col(f);
      lo = std::min(lo, col.minCoeff());
      hi = std::max(hi, col.maxCoeff());
      sum += col.sum();
      sumsq += col.squaredNorm();
    }
    auto& cs = stats.channels[static_cast<std::size_t>(f)];
    if (mode == NormMode::minmax) {
      double half = (hi - lo) / 2.0;
      // Constant channel: center on the constant so values map to 0.
      cs = half < 1e-300 ? AffineStats{lo, 1.0} : AffineStats{(lo + hi) / 2.0, half};
    } else {
      double mean = sum / n_rows;
      double var = sumsq / n_rows - mean * mean;
      cs = zscore_stats(mean, std::max(var, 0.0), true,
                        "series channel " + std::to_string(f));
    }
  }

  for (Eigen::Index k = 0; k < K; ++k) {
    double sum = 0.0, sumsq = 0.0;
    for (const auto& s : train.samples) {
      const auto col = s.meta.continuous.col(k);
      sum += col.sum();
      sumsq += col.squaredNorm();
    }
    double mean = sum / n_rows;
    double var = std::max(sumsq / n_rows - mean * mean, 0.0);
    stats.continuous[static_cast<std::size_t>(k)] =
        zscore_stats(mean, var, false, "continuous feature " + std::to_string(k));
  }
  return stats;
}

namespace {

PairedDataset transform(const PairedDataset& ds, const NormStats& stats, bool inverse) {
  if (!ds.empty()) {
    if (static_cast<std::size_t>(ds.channels()) != stats.channels.size())
      throw DataError("normalization stats channel count mismatch");
    if (static_cast<std::size_t>(ds.n_continuous()) != stats.continuous.size())
      throw DataError("normalization stats continuous-feature count mismatch");
  }
  PairedDataset out = ds;
  for (auto& s : out.samples) {
    for (Eigen::Index f = 0; f < s.series.channels(); ++f) {
      const auto& cs = stats.channels[static_cast<std::size_t>(f)];
      if (inverse)
        s.series.values.col(f) = s.series.values.col(f) * cs.scale + Eigen::VectorXd::Constant(s.series.horizon(), cs.center);
      else
        s.series.values.col(f) = (s.series.values.col(f).array() - cs.center) / cs.scale;
    }
    for (Eigen::Index k = 0; k < s.meta.n_continuous(); ++k) {
      const auto& cs = stats.continuous[static_cast<std::size_t>(k)];
      if (inverse)
        s.meta.continuous.col(k) = s.meta.continuous.col(k).array() * cs.scale + cs.center;
      else
        s.meta.continuous.col(k) = (s.meta.continuous.col(k).array() - cs.center) / cs.scale;
    }
  }
  return out;
}

}  // namespace

PairedDataset apply_normalization(const PairedDataset& ds, const NormStats& stats) {
  return transform(ds, stats, false);
}

PairedDataset denormalize(const PairedDataset& ds, const NormStats& stats) {
  return transform(ds, stats, true);
}

std::pair<PairedDataset, NormStats> normalize(const PairedDataset& ds, NormMode mode) {
  NormStats stats = compute_norm_stats(ds, mode);
  return {apply_normalization(ds, stats), stats};
}

std::pair<DatasetSplits, NormStats> normalize_splits(const DatasetSplits& splits, NormMode mode) {
  NormStats stats = compute_norm_stats(splits.train, mode);
  DatasetSplits out;
  out.train = apply_normalization(splits.train, stats);
  out.val = apply_normalization(splits.val, stats);
  out.test = apply_normalization(splits.test, stats);
  return {out, stats};
}

}  // namespace tsdiff
