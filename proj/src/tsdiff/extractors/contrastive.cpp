#include "tsdiff/extractors/contrastive.hpp"

#include <algorithm>

namespace tsdiff {

PatchBatch sample_patches(const PairedDataset& ds,
                          const std::vector<std::size_t>& sample_indices, int n_patch,
                          Eigen::Index patch_len, Rng& rng) {
  if (n_patch < 1) throw DataError("sample_patches: n_patch must be >= 1");
  const Eigen::Index L = ds.horizon();
  if (patch_len > L) throw DataError("sample_patches: patch_len exceeds horizon");
  const Eigen::Index n_offsets = L - patch_len + 1;

  PatchBatch out;
  out.x.reserve(sample_indices.size() * static_cast<std::size_t>(n_patch));
  for (std::size_t si : sample_indices) {
    if (si >= ds.size()) throw DataError("sample_patches: sample index out of range");
    const Sample& s = ds.samples[si];

    std::vector<Eigen::Index> offsets;
    if (n_offsets >= n_patch) {
      // without replacement: partial Fisher-Yates over the offset range
      std::vector<Eigen::Index> pool(static_cast<std::size_t>(n_offsets));
      for (Eigen::Index i = 0; i < n_offsets; ++i) pool[static_cast<std::size_t>(i)] = i;
      for (int k = 0; k < n_patch; ++k) {
        auto j = static_cast<std::size_t>(k) +
                 static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n_offsets - k)));
        std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
        offsets.push_back(pool[static_cast<std::size_t>(k)]);
      }
    } else {
      for (int k = 0; k < n_patch; ++k)
        offsets.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n_offsets))));
    }

    for (Eigen::Index off : offsets) {
      out.x.push_back(s.series.values.middleRows(off, patch_len));
      Metadata m;
      m.cardinalities = s.meta.cardinalities;
      m.categorical = s.meta.n_categorical() > 0
                          ? Eigen::MatrixXi(s.meta.categorical.middleRows(off, patch_len))
                          : Eigen::MatrixXi(patch_len, 0);
      m.continuous = s.meta.n_continuous() > 0
                         ? Eigen::MatrixXd(s.meta.continuous.middleRows(off, patch_len))
                         : Eigen::MatrixXd(patch_len, 0);
      out.c.push_back(std::move(m));
      out.spans.emplace_back(si, off);
    }
  }
  return out;
}

std::vector<Eigen::Index> metric_patch_grid(Eigen::Index horizon, Eigen::Index patch_len,
                                            Rng& rng) {
  if (patch_len > horizon) throw DataError("metric_patch_grid: patch_len exceeds horizon");
  Eigen::Index n = horizon / patch_len;
  Eigen::Index slack = horizon - n * patch_len;
  Eigen::Index start =
      slack > 0 ? static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(slack + 1)))
                : 0;
  std::vector<Eigen::Index> offsets;
  for (Eigen::Index k = 0; k < n; ++k) offsets.push_back(start + k * patch_len);
  return offsets;
}

}  // namespace tsdiff
