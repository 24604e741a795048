#pragma once

#include <string>
#include <vector>

#include "tsdiff/data/types.hpp"
#include "tsdiff/nn/layers.hpp"

namespace tsdiff {

// One-hot expansion of integer labels: output width is the sum of the
// cardinalities, one block per feature. Out-of-range labels report the
// feature index.
template <typename S>
Mat<S> one_hot(const Eigen::MatrixXi& labels, const std::vector<int>& cardinalities) {
  if (static_cast<std::size_t>(labels.cols()) != cardinalities.size())
    throw DataError("one_hot: label columns do not match cardinality count");
  Eigen::Index width = 0;
  for (int c : cardinalities) {
    if (c < 1) throw DataError("one_hot: cardinalities must be positive");
    width += c;
  }
  Mat<S> out = Mat<S>::Zero(labels.rows(), width);
  for (Eigen::Index t = 0; t < labels.rows(); ++t) {
    Eigen::Index offset = 0;
    for (Eigen::Index k = 0; k < labels.cols(); ++k) {
      int card = cardinalities[static_cast<std::size_t>(k)];
      int v = labels(t, k);
      if (v < 0 || v >= card)
        throw DataError("one_hot: label " + std::to_string(v) +
                        " out of range for feature " + std::to_string(k));
      out(t, offset + v) = S(1);
      offset += card;
    }
  }
  return out;
}

struct MetadataEncoderConfig {
  std::vector<int> cardinalities;  // empty means no categorical branch
  int k_cont = 0;
  int d_cat = 32;
  int d_cont = 32;
  int d_meta = 64;
  int fusion_layers = 2;
  int fusion_heads = 4;
  int ffn_mult = 2;
  int max_horizon = 512;  // positional-encoding table length

  bool has_cat() const { return !cardinalities.empty(); }
  bool has_cont() const { return k_cont > 0; }
  Eigen::Index onehot_width() const {
    Eigen::Index w = 0;
    for (int c : cardinalities) w += c;
    return w;
  }
};

// Heterogeneous metadata -> z in R^{L x d_meta}. Categorical labels are
// one-hot encoded and passed through a two-layer GELU tokenizer; continuous
// features go through a matching tokenizer; the branches are concatenated
// (or a single branch is widened by a learned affine map), given a
// sinusoidal positional encoding, and fused with self-attention layers.
// Tokenizers act per timestep; only the fusion attention mixes timesteps.
template <typename S>
class MetadataEncoder {
 public:
  MetadataEncoder(const MetadataEncoderConfig& cfg, ParamStore<S>& ps, Rng& rng,
                  const std::string& prefix = "encoder")
      : cfg_(cfg) {
    if (!cfg.has_cat() && !cfg.has_cont())
      throw DataError("metadata encoder requires at least one metadata branch");
    if (cfg.has_cat() && cfg.has_cont() && cfg.d_cat + cfg.d_cont != cfg.d_meta)
      throw DataError("metadata encoder: d_cat + d_cont must equal d_meta");
    if (cfg.d_meta % cfg.fusion_heads != 0)
      throw DataError("metadata encoder: heads must divide d_meta");

    if (cfg.has_cat()) {
      cat_fc1_ = Linear<S>::create(ps, prefix + "/tok_cat/fc1", cfg.onehot_width(),
                                   cfg.d_cat, rng);
      cat_fc2_ = Linear<S>::create(ps, prefix + "/tok_cat/fc2", cfg.d_cat, cfg.d_cat, rng);
    }
    if (cfg.has_cont()) {
      cont_fc1_ =
          Linear<S>::create(ps, prefix + "/tok_cont/fc1", cfg.k_cont, cfg.d_cont, rng);
      cont_fc2_ =
          Linear<S>::create(ps, prefix + "/tok_cont/fc2", cfg.d_cont, cfg.d_cont, rng);
    }
    if (!cfg.has_cat() || !cfg.has_cont()) {
      int in = cfg.has_cat() ? cfg.d_cat : cfg.d_cont;
      pad_ = Linear<S>::create(ps, prefix + "/pad", in, cfg.d_meta, rng);
    }
    for (int i = 0; i < cfg.fusion_layers; ++i)
      fusion_.push_back(TransformerLayer<S>::create(
          ps, prefix + "/fusion" + std::to_string(i), cfg.d_meta,
          cfg.d_meta * cfg.ffn_mult, cfg.fusion_heads, 0.0, rng));
    pe_ = sinusoidal_position_encoding<S>(cfg.max_horizon, cfg.d_meta);
  }

  const MetadataEncoderConfig& config() const { return cfg_; }

  // Per-timestep tokenizers; rows of the stacked input map 1:1 to rows of
  // the output (no cross-timestep mixing).
  Var<S> tokenize_categorical(Graph<S>& g, const Eigen::MatrixXi& c_cat) const {
    if (!cfg_.has_cat()) throw DataError("tokenize_categorical: no categorical branch");
    Var<S> oh = g.input(one_hot<S>(c_cat, cfg_.cardinalities));
    return cat_fc2_(gelu(cat_fc1_(oh)));
  }

  Var<S> tokenize_continuous(Graph<S>& g, const Mat<S>& c_cont) const {
    if (!cfg_.has_cont()) throw DataError("tokenize_continuous: no continuous branch");
    if (c_cont.cols() != cfg_.k_cont)
      throw DataError("tokenize_continuous: width mismatch");
    return cont_fc2_(gelu(cont_fc1_(g.input(c_cont))));
  }

  // Encodes a stacked batch: each sample occupies `horizon` consecutive
  // rows. Returns (batch * horizon) x d_meta.
  Var<S> encode(Graph<S>& g, const std::vector<const Metadata*>& batch) const {
    if (batch.empty()) throw DataError("encode: empty batch");
    const Eigen::Index L = batch[0]->horizon();
    if (L > pe_.rows())
      throw DataError("encode: horizon exceeds positional-encoding table");
    const Eigen::Index B = static_cast<Eigen::Index>(batch.size());

    Var<S> fused_in;
    if (cfg_.has_cat()) {
      Eigen::MatrixXi cat(B * L, batch[0]->n_categorical());
      for (Eigen::Index b = 0; b < B; ++b)
        cat.middleRows(b * L, L) = batch[static_cast<std::size_t>(b)]->categorical;
      Var<S> z_cat = tokenize_categorical(g, cat);
      if (cfg_.has_cont()) {
        Var<S> z_cont = tokenize_continuous(g, stack_continuous(batch, L));
        fused_in = concat_cols(z_cat, z_cont);
      } else {
        fused_in = pad_(z_cat);
      }
    } else {
      fused_in = pad_(tokenize_continuous(g, stack_continuous(batch, L)));
    }

    Var<S> pe = g.input(pe_.topRows(L));
    Var<S> z = add(fused_in, tile_pe(g, pe, B, L));
    for (const auto& layer : fusion_) z = layer.forward(z, L, nullptr);
    return z;
  }

  Var<S> encode_one(Graph<S>& g, const Metadata& c) const {
    std::vector<const Metadata*> batch{&c};
    return encode(g, batch);
  }

  static Eigen::Index analytic_param_count(const MetadataEncoderConfig& cfg) {
    Eigen::Index n = 0;
    if (cfg.has_cat())
      n += linear_param_count(cfg.onehot_width(), cfg.d_cat) +
           linear_param_count(cfg.d_cat, cfg.d_cat);
    if (cfg.has_cont())
      n += linear_param_count(cfg.k_cont, cfg.d_cont) +
           linear_param_count(cfg.d_cont, cfg.d_cont);
    if (!cfg.has_cat() || !cfg.has_cont())
      n += linear_param_count(cfg.has_cat() ? cfg.d_cat : cfg.d_cont, cfg.d_meta);
    n += cfg.fusion_layers *
         transformer_param_count(cfg.d_meta, cfg.d_meta * cfg.ffn_mult);
    return n;
  }

 private:
  Mat<S> stack_continuous(const std::vector<const Metadata*>& batch, Eigen::Index L) const {
    const Eigen::Index B = static_cast<Eigen::Index>(batch.size());
    Mat<S> cont(B * L, cfg_.k_cont);
    for (Eigen::Index b = 0; b < B; ++b)
      cont.middleRows(b * L, L) =
          batch[static_cast<std::size_t>(b)]->continuous.template cast<S>();
    return cont;
  }

  Var<S> tile_pe(Graph<S>& g, Var<S> pe, Eigen::Index B, Eigen::Index L) const {
    (void)L;
    return tile_rows(pe, B);
  }

  MetadataEncoderConfig cfg_;
  Linear<S> cat_fc1_, cat_fc2_, cont_fc1_, cont_fc2_, pad_;
  std::vector<TransformerLayer<S>> fusion_;
  Mat<S> pe_;
};

}  // namespace tsdiff
