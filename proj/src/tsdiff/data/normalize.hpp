#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tsdiff/data/types.hpp"

namespace tsdiff {

enum class NormMode { minmax, zscore };

NormMode norm_mode_from_string(const std::string& s);
std::string to_string(NormMode m);

// Per-channel affine transform x' = (x - center) / scale.
struct AffineStats {
  double center = 0.0;
  double scale = 1.0;
};

// Invertible normalization statistics. Series channels use the declared
// mode (minmax maps the train range onto [-1, 1]; zscore maps to zero
// mean / unit variance). Continuous metadata features are always z-scored.
struct NormStats {
  NormMode mode = NormMode::minmax;
  std::vector<AffineStats> channels;    // F entries
  std::vector<AffineStats> continuous;  // K_cont entries
};

// Statistics over the given dataset, which callers must ensure is the
// train split. A zero-variance series channel under zscore is an error
// naming the channel; a constant channel under minmax maps to 0. A
// constant continuous metadata feature maps to 0.
NormStats compute_norm_stats(const PairedDataset& train, NormMode mode);

// Applies / inverts the transform on series channels and continuous
// metadata. Categorical metadata passes through untouched.
PairedDataset apply_normalization(const PairedDataset& ds, const NormStats& stats);
PairedDataset denormalize(const PairedDataset& ds, const NormStats& stats);

// Convenience: stats from `ds` itself (the train split), then applied.
std::pair<PairedDataset, NormStats> normalize(const PairedDataset& ds, NormMode mode);

// Stats from splits.train, applied to all three splits.
std::pair<DatasetSplits, NormStats> normalize_splits(const DatasetSplits& splits, NormMode mode);

}  // namespace tsdiff
