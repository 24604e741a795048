#pragma once

#include <string>
#include <vector>

#include "tsdiff/nn/layers.hpp"

namespace tsdiff {

struct DenoiserConfig {
  int residual_layers = 2;
  int d = 64;  // hidden width, shared with the metadata embedding width
  int heads = 4;
  int ffn_mult = 2;
};

// Conditional noise predictor eps_hat(x_t, t, z).
//
// State layout: one row per (sample, channel, timestep), sample-major then
// channel then timestep, with d hidden columns. The input series is
// projected scalar-wise to d channels and summed with the broadcast
// metadata embedding and diffusion-step embedding. Each residual layer
// applies temporal self-attention (across timesteps, per channel) and
// feature self-attention (across channels, per timestep), re-injects a
// projection of the metadata embedding, and feeds a gated tanh/sigmoid
// unit that emits residual and skip halves. Skips accumulate additively
// and are divided by sqrt(residual_layers); the output projection back to
// one channel starts zero-initialized so an untrained model predicts 0.
template <typename S>
class Denoiser {
 public:
  Denoiser(const DenoiserConfig& cfg, ParamStore<S>& ps, Rng& rng,
           const std::string& prefix = "denoiser")
      : cfg_(cfg) {
    if (cfg.residual_layers < 1) throw DataError("denoiser: residual_layers must be >= 1");
    if (cfg.d % cfg.heads != 0) throw DataError("denoiser: heads must divide d");
    const Eigen::Index d = cfg.d;
    const Eigen::Index dm = d * cfg.ffn_mult;
    input_proj_ = Linear<S>::create(ps, prefix + "/input_proj", 1, d, rng);
    step_proj_ = Linear<S>::create(ps, prefix + "/step_proj", 128, d, rng);
    for (int i = 0; i < cfg.residual_layers; ++i) {
      std::string base = prefix + "/res" + std::to_string(i);
      ResidualLayer rl;
      rl.temporal = TransformerLayer<S>::create(ps, base + "/temporal", d, dm,
                                                cfg.heads, 0.0, rng);
      rl.feature = TransformerLayer<S>::create(ps, base + "/feature", d, dm,
                                               cfg.heads, 0.0, rng);
      rl.mid = Linear<S>::create(ps, base + "/mid", d, 2 * d, rng);
      rl.meta = Linear<S>::create(ps, base + "/meta", d, 2 * d, rng);
      rl.out = Linear<S>::create(ps, base + "/out", d, 2 * d, rng);
      layers_.push_back(rl);
    }
    out1_ = Linear<S>::create(ps, prefix + "/out1", d, d, rng);
    out2_ = Linear<S>::create(ps, prefix + "/out2", d, 1, rng);
    out2_.w->value.setZero();  // residual-zero initialization
  }

  const DenoiserConfig& config() const { return cfg_; }

  // Diffusion-step embedding: 128 sinusoidal features projected to d.
  Var<S> embed_step(Graph<S>& g, int t, int T) const {
    if (t < 1 || t > T)
      throw NumericError("embed_step: t=" + std::to_string(t) + " outside [1, " +
                         std::to_string(T) + "]");
    return step_proj_(g.input(step_sinusoid_features<S>(t)));
  }

  // x_batch: B matrices of shape L x F. t_batch: per-sample steps, already
  // validated against the schedule. z: (B*L) x d stacked metadata
  // embeddings. Returns eps_hat as a (B*F*L) x 1 column, rows ordered
  // (sample, channel, timestep).
  Var<S> forward(Graph<S>& g, const std::vector<Mat<S>>& x_batch,
                 const std::vector<int>& t_batch, int T, Var<S> z) const {
    const auto B = static_cast<Eigen::Index>(x_batch.size());
    if (B == 0) throw DataError("denoiser: empty batch");
    const Eigen::Index L = x_batch[0].rows();
    const Eigen::Index F = x_batch[0].cols();
    const Eigen::Index d = cfg_.d;
    if (z.rows() != B * L || z.cols() != d)
      throw DataError("denoiser: metadata embedding shape mismatch");
    if (static_cast<Eigen::Index>(t_batch.size()) != B)
      throw DataError("denoiser: t batch size mismatch");

    // (b, f, t)-ordered scalar column.
    Mat<S> col(B * F * L, 1);
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& x = x_batch[static_cast<std::size_t>(b)];
      if (x.rows() != L || x.cols() != F) throw DataError("denoiser: ragged batch");
      for (Eigen::Index f = 0; f < F; ++f)
        col.block((b * F + f) * L, 0, L, 1) = x.col(f);
    }

    // Broadcast index maps.
    std::vector<Eigen::Index> idx_z(static_cast<std::size_t>(B * F * L));
    std::vector<Eigen::Index> idx_step(static_cast<std::size_t>(B * F * L));
    std::vector<Eigen::Index> to_feature(static_cast<std::size_t>(B * F * L));
    std::vector<Eigen::Index> to_temporal(static_cast<std::size_t>(B * F * L));
    for (Eigen::Index b = 0; b < B; ++b)
      for (Eigen::Index f = 0; f < F; ++f)
        for (Eigen::Index t = 0; t < L; ++t) {
          auto row_bft = (b * F + f) * L + t;
          auto row_btf = (b * L + t) * F + f;
          idx_z[static_cast<std::size_t>(row_bft)] = b * L + t;
          idx_step[static_cast<std::size_t>(row_bft)] = b;
          to_feature[static_cast<std::size_t>(row_btf)] = row_bft;
          to_temporal[static_cast<std::size_t>(row_bft)] = row_btf;
        }

    Mat<S> step_feats(B, 128);
    for (Eigen::Index b = 0; b < B; ++b) {
      int t = t_batch[static_cast<std::size_t>(b)];
      if (t < 1 || t > T)
        throw NumericError("denoiser: step t=" + std::to_string(t) + " outside [1, " +
                           std::to_string(T) + "]");
      step_feats.row(b) = step_sinusoid_features<S>(t);
    }
    Var<S> step_rows = gather_rows(step_proj_(g.input(step_feats)), idx_step);

    Var<S> y = add(add(input_proj_(g.input(col)), step_rows), gather_rows(z, idx_z));

    Var<S> skip_sum;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& rl = layers_[static_cast<std::size_t>(i)];
      Var<S> h = rl.temporal.forward(y, L, nullptr);
      h = gather_rows(rl.feature.forward(gather_rows(h, to_feature), F, nullptr),
                      to_temporal);
      Var<S> mid = add(rl.mid(h), gather_rows(rl.meta(z), idx_z));
      Var<S> act = cmul(tanh_op(slice_cols(mid, 0, d)), sigmoid(slice_cols(mid, d, d)));
      Var<S> split = rl.out(act);
      Var<S> res = slice_cols(split, 0, d);
      Var<S> skip = slice_cols(split, d, d);
      y = scale(add(y, res), S(1) / std::sqrt(S(2)));
      skip_sum = i == 0 ? skip : add(skip_sum, skip);
      if (!y.value().allFinite())
        throw NumericError("denoiser: non-finite activations in residual layer " +
                           std::to_string(i));
    }
    Var<S> pooled = scale(skip_sum, S(1) / std::sqrt(S(layers_.size())));
    return out2_(gelu(out1_(pooled)));
  }

  // Single-sample convenience returning an L x F matrix of predicted noise.
  Mat<S> denoise_one(const Mat<S>& x_t, int t, int T, const Mat<S>& z_value) const {
    Graph<S> g(false);
    std::vector<Mat<S>> xb{x_t};
    Var<S> z = g.input(z_value);
    Var<S> eps = forward(g, xb, {t}, T, z);
    Mat<S> out(x_t.rows(), x_t.cols());
    for (Eigen::Index f = 0; f < x_t.cols(); ++f)
      out.col(f) = eps.value().block(f * x_t.rows(), 0, x_t.rows(), 1);
    return out;
  }

  static Eigen::Index analytic_param_count(const DenoiserConfig& cfg) {
    const Eigen::Index d = cfg.d;
    const Eigen::Index dm = d * cfg.ffn_mult;
    Eigen::Index per_layer =
        2 * transformer_param_count(d, dm) + 3 * linear_param_count(d, 2 * d);
    return linear_param_count(1, d) + linear_param_count(128, d) +
           cfg.residual_layers * per_layer + linear_param_count(d, d) +
           linear_param_count(d, 1);
  }

 private:
  struct ResidualLayer {
    TransformerLayer<S> temporal, feature;
    Linear<S> mid, meta, out;
  };

  DenoiserConfig cfg_;
  Linear<S> input_proj_, step_proj_;
  std::vector<ResidualLayer> layers_;
  Linear<S> out1_, out2_;
};

}  // namespace tsdiff
