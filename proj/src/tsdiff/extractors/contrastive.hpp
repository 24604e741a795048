#pragma once

#include <functional>

#include "tsdiff/extractors/extractor.hpp"

namespace tsdiff {

// Aligned spans of series and metadata cut at identical offsets.
struct PatchBatch {
  std::vector<Eigen::MatrixXd> x;  // patch_len x F, raw values
  std::vector<Metadata> c;         // aligned metadata spans
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;  // (sample, offset)

  std::size_t size() const { return x.size(); }
};

// Cuts n_patch aligned patches from each listed sample. Offsets are
// uniform over [0, L - patch_len], drawn without replacement within a
// sample when enough distinct offsets exist, with replacement otherwise.
PatchBatch sample_patches(const PairedDataset& ds,
                          const std::vector<std::size_t>& sample_indices, int n_patch,
                          Eigen::Index patch_len, Rng& rng);

// Deterministic per-sample patch grid used by the distribution metrics:
// floor(L / patch_len) non-overlapping patches whose common start offset is
// drawn once from the slack L - n*patch_len.
std::vector<Eigen::Index> metric_patch_grid(Eigen::Index horizon, Eigen::Index patch_len,
                                            Rng& rng);

struct ContrastiveResult {
  double loss = 0.0;
  double top1_accuracy = 0.0;  // in-batch retrieval, time -> metadata
};

// One symmetric contrastive evaluation over aligned patch pairs: logits are
// the scaled time/metadata embedding dot products, labels the diagonal, and
// the loss the mean of the row-wise and column-wise cross-entropies.
// Gradients for both extractors (and the logit scale) accumulate when
// with_grad is set. Batches of fewer than 2 pairs are rejected.
template <typename S>
ContrastiveResult contrastive_step(FeatureExtractors<S>& fx, const PatchBatch& batch,
                                   bool with_grad, Rng* drop_rng) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n < 2) throw DataError("contrastive_step: need at least 2 patch pairs");

  Graph<S> g(with_grad);
  Var<S> t_emb = fx.embed_time(g, batch.x, drop_rng);
  Var<S> m_emb = fx.embed_meta(g, batch.c, drop_rng);
  Var<S> logits = scale_by(matmul_nt(t_emb, m_emb), exp_op(g.param(fx.log_scale())));

  ContrastiveResult res;
  const Mat<S>& lv = logits.value();
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best;
    lv.row(i).maxCoeff(&best);
    if (best == i) ++hits;
  }
  res.top1_accuracy = static_cast<double>(hits) / static_cast<double>(n);

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i);
  Var<S> l_time = softmax_xent_rows(logits, labels);
  Var<S> l_meta = softmax_xent_rows(transpose(logits), labels);
  Var<S> total = scale(add(l_time, l_meta), S(0.5));
  res.loss = static_cast<double>(total.value()(0, 0));
  if (!std::isfinite(res.loss)) throw NumericError("contrastive loss is non-finite");
  if (with_grad) g.backward(total);
  return res;
}

struct ExtractorTrainOptions {
  int batch_samples = 16;  // N_batch; pairs per step = N_batch * n_patch
  int steps = 1000;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  bool train_split_only = false;  // paper default trains on the entire dataset
  int log_every = 50;
};

struct ExtractorTrainLog {
  std::vector<std::pair<int, double>> loss_curve;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
};

// Joint contrastive training (both encoders updated from the symmetric
// loss). `dataset` is the raw data the extractors should be fit on; the
// caller applies the train_split_only policy by passing the right split.
template <typename S>
ExtractorTrainLog train_extractors(FeatureExtractors<S>& fx, const PairedDataset& dataset,
                                   const ExtractorTrainOptions& opt,
                                   const std::function<void(int, double)>& on_log = nullptr) {
  if (dataset.empty()) throw DataError("train_extractors: empty dataset");
  check_schema(fx.schema(), dataset);
  const auto& cfg = fx.config();
  Adam<S> optimizer(opt.lr);
  Rng pick_rng(subseed(opt.seed, "extractor-batches"));
  Rng drop_rng(subseed(opt.seed, "extractor-dropout"));
  const S max_log_scale = static_cast<S>(std::log(100.0));

  ExtractorTrainLog log;
  for (int step = 0; step < opt.steps; ++step) {
    // distinct samples within a step when the dataset allows it
    std::vector<std::size_t> idx;
    if (static_cast<std::size_t>(opt.batch_samples) <= dataset.size()) {
      auto perm = pick_rng.permutation(dataset.size());
      idx.assign(perm.begin(), perm.begin() + opt.batch_samples);
    } else {
      for (int i = 0; i < opt.batch_samples; ++i)
        idx.push_back(static_cast<std::size_t>(pick_rng.below(dataset.size())));
    }
    PatchBatch batch = sample_patches(dataset, idx, cfg.n_patch, cfg.patch_len, pick_rng);
    ContrastiveResult res;
    try {
      res = contrastive_step(fx, batch, true, cfg.dropout > 0 ? &drop_rng : nullptr);
    } catch (const NumericError& e) {
      throw NumericError("extractor training diverged at step " + std::to_string(step) +
                         ": " + e.what());
    }
    optimizer.step(fx.params());
    auto& ls = fx.log_scale().value(0, 0);
    if (ls > max_log_scale) ls = max_log_scale;

    log.final_loss = res.loss;
    log.final_accuracy = res.top1_accuracy;
    if ((step + 1) % opt.log_every == 0) {
      log.loss_curve.emplace_back(step + 1, res.loss);
      if (on_log) on_log(step + 1, res.loss);
    }
  }
  return log;
}

// In-batch top-1 retrieval accuracy on freshly drawn (dropout-free) batches.
template <typename S>
double retrieval_top1(FeatureExtractors<S>& fx, const PairedDataset& heldout,
                      int pairs_per_batch, int n_batches, std::uint64_t seed) {
  const auto& cfg = fx.config();
  int samples_per_batch = (pairs_per_batch + cfg.n_patch - 1) / cfg.n_patch;
  Rng rng(subseed(seed, "retrieval"));
  double acc = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    std::vector<std::size_t> idx;
    for (int i = 0; i < samples_per_batch; ++i)
      idx.push_back(static_cast<std::size_t>(rng.below(heldout.size())));
    PatchBatch batch = sample_patches(heldout, idx, cfg.n_patch, cfg.patch_len, rng);
    while (batch.size() > static_cast<std::size_t>(pairs_per_batch)) {
      batch.x.pop_back();
      batch.c.pop_back();
      batch.spans.pop_back();
    }
    acc += contrastive_step(fx, batch, false, nullptr).top1_accuracy;
  }
  return acc / n_batches;
}

}  // namespace tsdiff
