#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "tsdiff/data/types.hpp"

namespace tsdiff {

// CSV schema (one file per dataset):
//   header  sample_id,t,x_0..x_{F-1},cat_0..cat_{K_cat-1},cont_0..cont_{K_cont-1}
//   rows sorted by (sample_id, t); t runs 0..L-1 within each sample;
//   decimals with 17 significant digits; UTF-8; LF line endings.
void write_csv(const PairedDataset& ds, const std::filesystem::path& path);

// Reads a dataset. Without declared cardinalities they are inferred as
// (max observed label + 1); the reserved token "NA" maps to an extra
// "unknown" label appended to that feature's cardinality. With declared
// cardinalities every label must lie strictly below its bound and "NA" is
// rejected; violations are reported with the offending row number.
PairedDataset read_csv(const std::filesystem::path& path,
                       const std::optional<std::vector<int>>& declared_cardinalities = std::nullopt);

}  // namespace tsdiff
