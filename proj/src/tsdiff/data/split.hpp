#pragma once

#include <array>
#include <cstdint>

#include "tsdiff/data/types.hpp"

namespace tsdiff {

// Random disjoint partition into train/val/test. Ratios must be positive
// and sum to 1 within 1e-9; the dataset must have at least 3 samples.
// Split sizes follow the largest-remainder rule, so each differs from the
// exact ratio by less than one sample. Deterministic given seed.
DatasetSplits split(const PairedDataset& ds, std::array<double, 3> ratios, std::uint64_t seed);

}  // namespace tsdiff
