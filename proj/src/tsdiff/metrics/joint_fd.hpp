#pragma once

#include <string>

#include "tsdiff/extractors/contrastive.hpp"
#include "tsdiff/metrics/frechet.hpp"

namespace tsdiff {

struct FdReport {
  std::string metric_name;
  double value = 0.0;
  std::size_t n_real = 0;
  std::size_t n_gen = 0;
  int d_emb = 0;
  int l_patch = 0;
  std::uint64_t extractor_checksum = 0;
  bool low_sample_warning = false;  // n below 2 * joint width + 1
};

std::string format_report(const FdReport& r);

// One embedding row per sample: patch embeddings over the metric grid
// (shared across the whole evaluation) averaged per sample. joint = time
// embedding concatenated with metadata embedding.
template <typename S>
Eigen::MatrixXd embed_dataset(FeatureExtractors<S>& fx, const PairedDataset& ds,
                              std::uint64_t patch_seed, bool with_meta,
                              const std::vector<Eigen::Index>* grid_override = nullptr) {
  if (ds.empty()) throw DataError("embed_dataset: empty dataset");
  check_schema(fx.schema(), ds);
  const auto& cfg = fx.config();
  Rng grid_rng(subseed(patch_seed, "metric-grid"));
  std::vector<Eigen::Index> grid = grid_override
                                       ? *grid_override
                                       : metric_patch_grid(ds.horizon(), cfg.patch_len, grid_rng);
  const auto g = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index width = with_meta ? 2 * cfg.d_emb : cfg.d_emb;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ds.size()), width);

  const std::size_t chunk = 64;
  for (std::size_t from = 0; from < ds.size(); from += chunk) {
    std::size_t to = std::min(ds.size(), from + chunk);
    std::vector<Eigen::MatrixXd> xp;
    std::vector<Metadata> cp;
    for (std::size_t i = from; i < to; ++i) {
      const Sample& s = ds.samples[i];
      for (Eigen::Index off : grid) {
        xp.push_back(s.series.values.middleRows(off, cfg.patch_len));
        if (with_meta) {
          Metadata m;
          m.cardinalities = s.meta.cardinalities;
          m.categorical = s.meta.n_categorical() > 0
                              ? Eigen::MatrixXi(s.meta.categorical.middleRows(off, cfg.patch_len))
                              : Eigen::MatrixXi(cfg.patch_len, 0);
          m.continuous = s.meta.n_continuous() > 0
                             ? Eigen::MatrixXd(s.meta.continuous.middleRows(off, cfg.patch_len))
                             : Eigen::MatrixXd(cfg.patch_len, 0);
          cp.push_back(std::move(m));
        }
      }
    }
    Eigen::MatrixXd t_emb = fx.embed_time_values(xp);
    Eigen::MatrixXd m_emb;
    if (with_meta) m_emb = fx.embed_meta_values(cp);
    for (std::size_t i = from; i < to; ++i) {
      Eigen::Index r0 = static_cast<Eigen::Index>(i - from) * g;
      out.block(static_cast<Eigen::Index>(i), 0, 1, cfg.d_emb) =
          t_emb.middleRows(r0, g).colwise().mean();
      if (with_meta)
        out.block(static_cast<Eigen::Index>(i), cfg.d_emb, 1, cfg.d_emb) =
            m_emb.middleRows(r0, g).colwise().mean();
    }
  }
  return out;
}

// Frechet distance over joint (time series + metadata) embeddings of the
// real and generated datasets, both embedded with the same frozen
// extractors and patch grid.
template <typename S>
FdReport joint_fd(FeatureExtractors<S>& fx, const PairedDataset& real,
                  const PairedDataset& gen, std::uint64_t patch_seed) {
  Eigen::MatrixXd er = embed_dataset(fx, real, patch_seed, true);
  Eigen::MatrixXd eg = embed_dataset(fx, gen, patch_seed, true);
  FdReport rep;
  rep.metric_name = "fd_joint";
  rep.value = frechet_distance(gaussian_stats(er), gaussian_stats(eg));
  rep.n_real = real.size();
  rep.n_gen = gen.size();
  rep.d_emb = fx.config().d_emb;
  rep.l_patch = fx.config().patch_len;
  rep.low_sample_warning =
      static_cast<Eigen::Index>(std::min(real.size(), gen.size())) < 2 * er.cols() + 1;
  return rep;
}

// Time-only ablation: identical pipeline with metadata embeddings dropped.
template <typename S>
FdReport time_fd(FeatureExtractors<S>& fx, const PairedDataset& real,
                 const PairedDataset& gen, std::uint64_t patch_seed) {
  Eigen::MatrixXd er = embed_dataset(fx, real, patch_seed, false);
  Eigen::MatrixXd eg = embed_dataset(fx, gen, patch_seed, false);
  FdReport rep;
  rep.metric_name = "fd_time";
  rep.value = frechet_distance(gaussian_stats(er), gaussian_stats(eg));
  rep.n_real = real.size();
  rep.n_gen = gen.size();
  rep.d_emb = fx.config().d_emb;
  rep.l_patch = fx.config().patch_len;
  rep.low_sample_warning =
      static_cast<Eigen::Index>(std::min(real.size(), gen.size())) < 2 * er.cols() + 1;
  return rep;
}

}  // namespace tsdiff
