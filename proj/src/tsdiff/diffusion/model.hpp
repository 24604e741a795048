#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <atomic>
#include <thread>

#include "tsdiff/data/normalize.hpp"
#include "tsdiff/denoiser/denoiser.hpp"
#include "tsdiff/diffusion/forward.hpp"
#include "tsdiff/diffusion/schedule.hpp"
#include "tsdiff/encoder/metadata_encoder.hpp"
#include "tsdiff/io/checkpoint.hpp"
#include "tsdiff/io/json_conv.hpp"

namespace tsdiff {

struct DiffusionModelConfig {
  MetadataEncoderConfig encoder;
  DenoiserConfig denoiser;
  double beta1 = 1e-4;
  double betaT = 0.1;
  int steps = 200;
};

struct TrainOptions {
  int batch = 32;
  int epochs = 100;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  int log_every = 20;
};

struct LossPoint {
  int step;
  double train_loss;
};

struct EpochPoint {
  int epoch;
  double val_loss;
};

struct TrainResult {
  std::vector<LossPoint> curve;
  std::vector<EpochPoint> val_curve;
  double final_train_loss = 0.0;
};

// Conditional time-series diffusion model: metadata encoder + denoiser
// trained jointly on the noise-prediction objective, plus ancestral
// sampling. Series and continuous metadata are normalized internally with
// the statistics the model was constructed with; sample_dataset accepts and
// returns raw-space data.
template <typename S>
class DiffusionModel {
 public:
  DiffusionModel(const DiffusionModelConfig& cfg, const DataSchema& schema,
                 const NormStats& norm, std::uint64_t init_seed)
      : cfg_(cfg),
        schema_(schema),
        norm_(norm),
        init_seed_(init_seed),
        schedule_(linear_schedule(cfg.beta1, cfg.betaT, cfg.steps)) {
    if (cfg.encoder.d_meta != cfg.denoiser.d)
      throw DataError("diffusion model: encoder d_meta must equal denoiser width");
    Rng rng(subseed(init_seed, "model-init"));
    encoder_ = std::make_unique<MetadataEncoder<S>>(cfg.encoder, params_, rng);
    denoiser_ = std::make_unique<Denoiser<S>>(cfg.denoiser, params_, rng);
  }

  const DiffusionModelConfig& config() const { return cfg_; }
  const DataSchema& schema() const { return schema_; }
  const NormStats& norm() const { return norm_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  ParamStore<S>& params() { return params_; }
  const MetadataEncoder<S>& encoder() const { return *encoder_; }
  const Denoiser<S>& denoiser() const { return *denoiser_; }

  static Eigen::Index analytic_param_count(const DiffusionModelConfig& cfg) {
    return MetadataEncoder<S>::analytic_param_count(cfg.encoder) +
           Denoiser<S>::analytic_param_count(cfg.denoiser);
  }

  // One optimization-ready loss evaluation over a normalized batch.
  // Gradients accumulate into the parameter store when with_grad is true.
  // Loss is the mean squared error between the drawn noise and the
  // prediction, averaged over every element of the batch.
  double training_loss(const std::vector<const Sample*>& batch, Rng& rng,
                       bool with_grad = true) {
    const auto B = static_cast<Eigen::Index>(batch.size());
    if (B == 0) throw DataError("training_loss: empty batch");
    const Eigen::Index L = batch[0]->series.horizon();
    const Eigen::Index F = batch[0]->series.channels();
    const int T = schedule_.steps();

    std::vector<Mat<S>> x_t(static_cast<std::size_t>(B));
    std::vector<int> t_batch(static_cast<std::size_t>(B));
    Mat<S> target(B * F * L, 1);
    std::vector<const Metadata*> metas(static_cast<std::size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b) {
      const Sample& s = *batch[static_cast<std::size_t>(b)];
      int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(T)));
      t_batch[static_cast<std::size_t>(b)] = t;
      Eigen::MatrixXd eps(L, F);
      for (Eigen::Index f = 0; f < F; ++f)
        for (Eigen::Index tt = 0; tt < L; ++tt) eps(tt, f) = rng.normal();
      x_t[static_cast<std::size_t>(b)] =
          closed_form_forward(s.series.values, t, schedule_, eps).cast<S>();
      for (Eigen::Index f = 0; f < F; ++f)
        target.block((b * F + f) * L, 0, L, 1) = eps.col(f).cast<S>();
      metas[static_cast<std::size_t>(b)] = &s.meta;
    }

    Graph<S> g(with_grad);
    Var<S> z = encoder_->encode(g, metas);
    Var<S> eps_hat = denoiser_->forward(g, x_t, t_batch, T, z);
    for (Eigen::Index b = 0; b < B; ++b)
      if (!eps_hat.value().block(b * F * L, 0, F * L, 1).allFinite())
        throw NumericError("training_loss: non-finite prediction for batch index " +
                           std::to_string(b));
    Var<S> diff = sub(eps_hat, g.input(target));
    Var<S> loss = mean_all(cmul(diff, diff));
    double lv = static_cast<double>(loss.value()(0, 0));
    if (!std::isfinite(lv)) throw NumericError("training_loss: non-finite loss");
    if (with_grad) g.backward(loss);
    return lv;
  }

  // Full training loop over raw splits (normalization applied internally).
  TrainResult fit(const DatasetSplits& raw_splits, const TrainOptions& opt,
                  const std::function<void(int, double)>& on_epoch = nullptr) {
    check_schema(schema_, raw_splits.train);
    PairedDataset train = apply_normalization(raw_splits.train, norm_);
    PairedDataset val = raw_splits.val.empty()
                            ? PairedDataset{}
                            : apply_normalization(raw_splits.val, norm_);

    Adam<S> optimizer(opt.lr);
    Rng order_rng(subseed(opt.seed, "train-order"));
    Rng noise_rng(subseed(opt.seed, "train-noise"));
    TrainResult result;
    int step = 0;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
      auto perm = order_rng.permutation(train.size());
      for (std::size_t i = 0; i < perm.size(); i += static_cast<std::size_t>(opt.batch)) {
        std::vector<const Sample*> batch;
        for (std::size_t j = i; j < std::min(perm.size(), i + static_cast<std::size_t>(opt.batch)); ++j)
          batch.push_back(&train.samples[perm[j]]);
        double loss;
        try {
          loss = training_loss(batch, noise_rng, true);
        } catch (const NumericError& e) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                             ": " + e.what());
        }
        optimizer.step(params_);
        ++step;
        result.final_train_loss = loss;
        if (step % opt.log_every == 0) result.curve.push_back({step, loss});
      }
      if (!val.empty()) {
        Rng val_rng(subseed(opt.seed, "val-noise"));  // fixed stream per epoch
        std::vector<const Sample*> vbatch;
        for (const auto& s : val.samples) vbatch.push_back(&s);
        double vloss = training_loss(vbatch, val_rng, false);
        result.val_curve.push_back({epoch, vloss});
        if (on_epoch) on_epoch(epoch, vloss);
      } else if (on_epoch) {
        on_epoch(epoch, result.final_train_loss);
      }
    }
    return result;
  }

  // Ancestral sampling in normalized space. Deterministic given seed:
  // every sample draws from its own substream, so results do not depend on
  // chunking or thread count. Runs exactly T reverse steps; metadata is
  // encoded once per sample and reused across steps.
  std::vector<Eigen::MatrixXd> sample_normalized(const std::vector<const Metadata*>& metas,
                                                 std::uint64_t seed, int chunk = 32,
                                                 int threads = 1) const {
    const std::size_t n = metas.size();
    std::vector<Eigen::MatrixXd> out(n);
    if (n == 0) return out;
    std::vector<std::pair<std::size_t, std::size_t>> chunks;
    for (std::size_t from = 0; from < n; from += static_cast<std::size_t>(chunk))
      chunks.emplace_back(from, std::min(n, from + static_cast<std::size_t>(chunk)));

    auto run_chunk = [&](std::size_t from, std::size_t to) {
      sample_chunk(metas, seed, from, to, out);
    };
    if (threads <= 1 || chunks.size() == 1) {
      for (auto [from, to] : chunks) run_chunk(from, to);
    } else {
      std::vector<std::thread> pool;
      std::atomic<std::size_t> next{0};
      int n_workers = std::min<int>(threads, static_cast<int>(chunks.size()));
      for (int w = 0; w < n_workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t c = next.fetch_add(1); c < chunks.size(); c = next.fetch_add(1))
            run_chunk(chunks[c].first, chunks[c].second);
        });
      for (auto& th : pool) th.join();
    }
    return out;
  }

  // Raw-space generation: takes the metadata of `conditions`, returns a
  // dataset pairing generated series with that same (raw) metadata.
  PairedDataset sample_dataset(const PairedDataset& conditions, std::uint64_t seed,
                               int chunk = 32, int threads = 1) const {
    check_schema(schema_, conditions);
    PairedDataset normed = apply_normalization(conditions, norm_);
    std::vector<const Metadata*> metas;
    metas.reserve(normed.size());
    for (const auto& s : normed.samples) metas.push_back(&s.meta);
    auto series = sample_normalized(metas, seed, chunk, threads);

    PairedDataset gen = conditions;  // keep raw metadata
    for (std::size_t i = 0; i < gen.size(); ++i)
      gen.samples[i].series.values = series[i];
    gen = denormalize_series_only(gen);
    gen.split_tag = conditions.split_tag;
    return gen;
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json manifest;
    manifest["kind"] = "diffusion";
    manifest["version"] = 1;
    manifest["dtype"] = sizeof(S) == 4 ? "f32" : "f64";
    manifest["seed"] = init_seed_;
    manifest["schedule"] = {{"beta1", cfg_.beta1}, {"betaT", cfg_.betaT}, {"steps", cfg_.steps}};
    manifest["encoder"] = cfg_.encoder;
    manifest["denoiser"] = cfg_.denoiser;
    manifest["schema"] = schema_;
    manifest["norm"] = norm_;
    manifest["param_count"] = params_.total_size();
    save_checkpoint(path, manifest, tensors_from_store(params_));
  }

  static std::unique_ptr<DiffusionModel> load(const std::filesystem::path& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.manifest.value("kind", "") != "diffusion")
      throw CheckpointError("checkpoint kind is not 'diffusion': " + path.string());
    DiffusionModelConfig cfg;
    cfg.encoder = ck.manifest.at("encoder").get<MetadataEncoderConfig>();
    cfg.denoiser = ck.manifest.at("denoiser").get<DenoiserConfig>();
    cfg.beta1 = ck.manifest.at("schedule").at("beta1").get<double>();
    cfg.betaT = ck.manifest.at("schedule").at("betaT").get<double>();
    cfg.steps = ck.manifest.at("schedule").at("steps").get<int>();
    auto schema = ck.manifest.at("schema").get<DataSchema>();
    auto norm = ck.manifest.at("norm").get<NormStats>();
    auto seed = ck.manifest.at("seed").get<std::uint64_t>();
    auto model = std::make_unique<DiffusionModel>(cfg, schema, norm, seed);
    if (ck.manifest.at("param_count").get<Eigen::Index>() != model->params_.total_size())
      throw CheckpointError("checkpoint param_count does not match model config");
    load_into_store(ck, model->params_);
    return model;
  }

 private:
  void sample_chunk(const std::vector<const Metadata*>& metas, std::uint64_t seed,
                    std::size_t from, std::size_t to,
                    std::vector<Eigen::MatrixXd>& out) const {
    const Eigen::Index B = static_cast<Eigen::Index>(to - from);
    const Eigen::Index L = schema_.horizon;
    const Eigen::Index F = schema_.channels;
    const int T = schedule_.steps();

    // Metadata encoded once per sample, reused across all reverse steps.
    Mat<S> z_all;
    {
      Graph<S> g(false);
      std::vector<const Metadata*> chunk(metas.begin() + static_cast<std::ptrdiff_t>(from),
                                         metas.begin() + static_cast<std::ptrdiff_t>(to));
      z_all = encoder_->encode(g, chunk).value();
    }

    std::vector<Rng> rngs;
    std::vector<Eigen::MatrixXd> x(static_cast<std::size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b) {
      rngs.emplace_back(subseed(seed, "sample/" + std::to_string(from + static_cast<std::size_t>(b))));
      auto& r = rngs.back();
      Eigen::MatrixXd x0(L, F);
      for (Eigen::Index f = 0; f < F; ++f)
        for (Eigen::Index t = 0; t < L; ++t) x0(t, f) = r.normal();
      x[static_cast<std::size_t>(b)] = std::move(x0);
    }

    std::vector<int> t_batch(static_cast<std::size_t>(B));
    for (int t = T; t >= 1; --t) {
      Graph<S> g(false);
      std::vector<Mat<S>> xs(static_cast<std::size_t>(B));
      for (Eigen::Index b = 0; b < B; ++b) {
        xs[static_cast<std::size_t>(b)] = x[static_cast<std::size_t>(b)].cast<S>();
        t_batch[static_cast<std::size_t>(b)] = t;
      }
      Var<S> z = g.input(z_all);
      Var<S> eps_var = denoiser_->forward(g, xs, t_batch, T, z);
      const Mat<S>& eps_all = eps_var.value();
      for (Eigen::Index b = 0; b < B; ++b) {
        Eigen::MatrixXd eps_hat(L, F);
        for (Eigen::Index f = 0; f < F; ++f)
          eps_hat.col(f) =
              eps_all.block((b * F + f) * L, 0, L, 1).template cast<double>();
        Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(L, F);
        if (t > 1) {
          auto& r = rngs[static_cast<std::size_t>(b)];
          for (Eigen::Index f = 0; f < F; ++f)
            for (Eigen::Index tt = 0; tt < L; ++tt) noise(tt, f) = r.normal();
        }
        x[static_cast<std::size_t>(b)] =
            reverse_step(x[static_cast<std::size_t>(b)], t, eps_hat, schedule_, noise);
      }
    }
    for (Eigen::Index b = 0; b < B; ++b)
      out[from + static_cast<std::size_t>(b)] = std::move(x[static_cast<std::size_t>(b)]);
  }

  PairedDataset denormalize_series_only(const PairedDataset& ds) const {
    PairedDataset out = ds;
    for (auto& s : out.samples)
      for (Eigen::Index f = 0; f < s.series.channels(); ++f) {
        const auto& cs = norm_.channels[static_cast<std::size_t>(f)];
        s.series.values.col(f) =
            (s.series.values.col(f).array() * cs.scale + cs.center).matrix();
      }
    return out;
  }

  DiffusionModelConfig cfg_;
  DataSchema schema_;
  NormStats norm_;
  std::uint64_t init_seed_;
  NoiseSchedule schedule_;
  ParamStore<S> params_;
  std::unique_ptr<MetadataEncoder<S>> encoder_;
  std::unique_ptr<Denoiser<S>> denoiser_;
};

}  // namespace tsdiff
