#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tsdiff/data/normalize.hpp"
#include "tsdiff/data/types.hpp"
#include "tsdiff/encoder/metadata_encoder.hpp"
#include "tsdiff/io/checkpoint.hpp"
#include "tsdiff/io/json_conv.hpp"
#include "tsdiff/nn/layers.hpp"

namespace tsdiff {

// Informer-style patch encoder configuration shared by the time-series and
// metadata feature extractors. Defaults follow the paper-scale setup
// (8 attention layers, 8 heads, d_model 128, dropout 0.05, 2 patches per
// sample); desk-scale runs shrink d_model and the layer count.
struct ExtractorConfig {
  int d_model = 128;
  int d_emb = 48;
  int layers = 8;
  int heads = 8;
  double dropout = 0.05;
  int patch_len = 64;   // L_patch
  int n_patch = 2;      // patches drawn per sample during training
  int ffn_mult = 2;
  int conv_kernel = 3;  // input conv and post-attention convs
};

// Single patch encoder: input 1-D convolution, positional encoding, then
// `layers` self-attention layers each followed by a 1-D convolution (GELU),
// with stride 2 after every 3rd attention layer; the surviving rows are
// flattened and projected to d_emb, and rows are L2-normalized.
template <typename S>
class PatchEncoder {
 public:
  PatchEncoder() = default;

  PatchEncoder(const ExtractorConfig& cfg, Eigen::Index in_width, ParamStore<S>& ps,
               Rng& rng, const std::string& prefix)
      : cfg_(cfg), in_width_(in_width) {
    if (cfg.d_model % cfg.heads != 0)
      throw DataError("extractor: heads must divide d_model");
    conv_in_ = Conv1d<S>::create(ps, prefix + "/conv_in", in_width, cfg.d_model,
                                 cfg.conv_kernel, 1, rng);
    Eigen::Index len = cfg.patch_len;
    for (int j = 1; j <= cfg.layers; ++j) {
      attn_.push_back(TransformerLayer<S>::create(
          ps, prefix + "/attn" + std::to_string(j - 1), cfg.d_model,
          cfg.d_model * cfg.ffn_mult, cfg.heads, cfg.dropout, rng));
      Eigen::Index stride = (j % 3 == 0) ? 2 : 1;
      conv_post_.push_back(Conv1d<S>::create(ps, prefix + "/conv" + std::to_string(j - 1),
                                             cfg.d_model, cfg.d_model, cfg.conv_kernel,
                                             stride, rng));
      lens_.push_back(len);
      if (stride == 2) len = (len + 1) / 2;
    }
    final_len_ = len;
    project_ = Linear<S>::create(ps, prefix + "/project", final_len_ * cfg.d_model,
                                 cfg.d_emb, rng);
    pe_ = sinusoidal_position_encoding<S>(cfg.patch_len, cfg.d_model);
  }

  Eigen::Index in_width() const { return in_width_; }

  // stacked: (n_patches * patch_len) x in_width. Returns n_patches x d_emb
  // with unit-norm rows.
  Var<S> forward(Graph<S>& g, const Mat<S>& stacked, Eigen::Index n_patches,
                 Rng* drop_rng) const {
    if (stacked.cols() != in_width_ || stacked.rows() != n_patches * cfg_.patch_len)
      throw DataError("patch encoder: input shape mismatch");
    Var<S> x = conv_in_(g.input(stacked), cfg_.patch_len);
    x = add(x, tile_rows(g.input(pe_), n_patches));
    for (std::size_t j = 0; j < attn_.size(); ++j) {
      Eigen::Index len = lens_[j];
      x = attn_[j].forward(x, len, drop_rng);
      x = gelu(conv_post_[j](x, len));
    }
    Var<S> flat = flatten_grouped(x, final_len_);
    return l2_normalize_rows(project_(flat));
  }

  static Eigen::Index analytic_param_count(const ExtractorConfig& cfg,
                                           Eigen::Index in_width) {
    Eigen::Index n = linear_param_count(cfg.conv_kernel * in_width, cfg.d_model);
    Eigen::Index len = cfg.patch_len;
    for (int j = 1; j <= cfg.layers; ++j) {
      n += transformer_param_count(cfg.d_model, cfg.d_model * cfg.ffn_mult);
      n += linear_param_count(cfg.conv_kernel * cfg.d_model, cfg.d_model);
      if (j % 3 == 0) len = (len + 1) / 2;
    }
    n += linear_param_count(len * cfg.d_model, cfg.d_emb);
    return n;
  }

 private:
  ExtractorConfig cfg_;
  Eigen::Index in_width_ = 0;
  Conv1d<S> conv_in_;
  std::vector<TransformerLayer<S>> attn_;
  std::vector<Conv1d<S>> conv_post_;
  std::vector<Eigen::Index> lens_;
  Eigen::Index final_len_ = 0;
  Linear<S> project_;
  Mat<S> pe_;
};

// Jointly trained dual feature extractors over aligned (series, metadata)
// patches, plus the learnable inverse-temperature of the contrastive
// logits. Continuous metadata is z-scored and series channels normalized
// with the statistics stored at construction; callers pass raw patches.
template <typename S>
class FeatureExtractors {
 public:
  FeatureExtractors(const ExtractorConfig& cfg, const DataSchema& schema,
                    const NormStats& norm, std::uint64_t init_seed)
      : cfg_(cfg), schema_(schema), norm_(norm), init_seed_(init_seed) {
    if (cfg.patch_len > schema.horizon)
      throw DataError("extractor: patch_len exceeds the data horizon");
    if (cfg.d_emb >= schema.channels * cfg.patch_len)
      throw DataError("extractor: d_emb must be smaller than F * patch_len");
    Rng rng(subseed(init_seed, "extractor-init"));
    time_ = PatchEncoder<S>(cfg, schema.channels, params_, rng, "time");
    Eigen::Index meta_width = 0;
    for (int c : schema.cardinalities) meta_width += c;
    meta_width += schema.k_cont;
    if (meta_width == 0) throw DataError("extractor: schema has no metadata features");
    meta_ = PatchEncoder<S>(cfg, meta_width, params_, rng, "meta");
    log_scale_ = &params_.add("logit_scale", 1, 1);
    log_scale_->value(0, 0) = static_cast<S>(std::log(1.0 / 0.07));
  }

  const ExtractorConfig& config() const { return cfg_; }
  const DataSchema& schema() const { return schema_; }
  const NormStats& norm() const { return norm_; }
  ParamStore<S>& params() { return params_; }
  Param<S>& log_scale() { return *log_scale_; }

  // Raw series patches -> stacked normalized matrix.
  Mat<S> stack_time_patches(const std::vector<Eigen::MatrixXd>& patches) const {
    const Eigen::Index P = cfg_.patch_len;
    Mat<S> out(static_cast<Eigen::Index>(patches.size()) * P, schema_.channels);
    for (std::size_t i = 0; i < patches.size(); ++i) {
      if (patches[i].rows() != P || patches[i].cols() != schema_.channels)
        throw DataError("time patch shape mismatch with extractor config");
      for (Eigen::Index f = 0; f < schema_.channels; ++f) {
        const auto& cs = norm_.channels[static_cast<std::size_t>(f)];
        out.block(static_cast<Eigen::Index>(i) * P, f, P, 1) =
            ((patches[i].col(f).array() - cs.center) / cs.scale).template cast<S>();
      }
    }
    return out;
  }

  // Raw metadata patches -> stacked one-hot + z-scored continuous matrix.
  Mat<S> stack_meta_patches(const std::vector<Metadata>& patches) const {
    const Eigen::Index P = cfg_.patch_len;
    Eigen::Index cat_w = 0;
    for (int c : schema_.cardinalities) cat_w += c;
    Mat<S> out(static_cast<Eigen::Index>(patches.size()) * P, cat_w + schema_.k_cont);
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const auto& m = patches[i];
      if (m.horizon() != P) throw DataError("metadata patch length mismatch");
      Eigen::Index r0 = static_cast<Eigen::Index>(i) * P;
      if (cat_w > 0)
        out.block(r0, 0, P, cat_w) = one_hot<S>(m.categorical, schema_.cardinalities);
      for (Eigen::Index k = 0; k < schema_.k_cont; ++k) {
        const auto& cs = norm_.continuous[static_cast<std::size_t>(k)];
        out.block(r0, cat_w + k, P, 1) =
            ((m.continuous.col(k).array() - cs.center) / cs.scale).template cast<S>();
      }
    }
    return out;
  }

  Var<S> embed_time(Graph<S>& g, const std::vector<Eigen::MatrixXd>& patches,
                    Rng* drop_rng = nullptr) const {
    return time_.forward(g, stack_time_patches(patches),
                         static_cast<Eigen::Index>(patches.size()), drop_rng);
  }

  Var<S> embed_meta(Graph<S>& g, const std::vector<Metadata>& patches,
                    Rng* drop_rng = nullptr) const {
    return meta_.forward(g, stack_meta_patches(patches),
                         static_cast<Eigen::Index>(patches.size()), drop_rng);
  }

  // Inference conveniences returning plain double matrices (rows = patches).
  Eigen::MatrixXd embed_time_values(const std::vector<Eigen::MatrixXd>& patches) const {
    Graph<S> g(false);
    return embed_time(g, patches).value().template cast<double>();
  }
  Eigen::MatrixXd embed_meta_values(const std::vector<Metadata>& patches) const {
    Graph<S> g(false);
    return embed_meta(g, patches).value().template cast<double>();
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json manifest;
    manifest["kind"] = "extractor";
    manifest["version"] = 1;
    manifest["dtype"] = sizeof(S) == 4 ? "f32" : "f64";
    manifest["seed"] = init_seed_;
    manifest["config"] = {{"d_model", cfg_.d_model}, {"d_emb", cfg_.d_emb},
                          {"layers", cfg_.layers},   {"heads", cfg_.heads},
                          {"dropout", cfg_.dropout}, {"patch_len", cfg_.patch_len},
                          {"n_patch", cfg_.n_patch}, {"ffn_mult", cfg_.ffn_mult},
                          {"conv_kernel", cfg_.conv_kernel}};
    manifest["schema"] = schema_;
    manifest["norm"] = norm_;
    manifest["param_count"] = params_.total_size();
    save_checkpoint(path, manifest, tensors_from_store(params_));
  }

  static std::unique_ptr<FeatureExtractors> load(const std::filesystem::path& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.manifest.value("kind", "") != "extractor")
      throw CheckpointError("checkpoint kind is not 'extractor': " + path.string());
    ExtractorConfig cfg;
    const auto& jc = ck.manifest.at("config");
    jc.at("d_model").get_to(cfg.d_model);
    jc.at("d_emb").get_to(cfg.d_emb);
    jc.at("layers").get_to(cfg.layers);
    jc.at("heads").get_to(cfg.heads);
    jc.at("dropout").get_to(cfg.dropout);
    jc.at("patch_len").get_to(cfg.patch_len);
    jc.at("n_patch").get_to(cfg.n_patch);
    jc.at("ffn_mult").get_to(cfg.ffn_mult);
    jc.at("conv_kernel").get_to(cfg.conv_kernel);
    auto schema = ck.manifest.at("schema").get<DataSchema>();
    auto norm = ck.manifest.at("norm").get<NormStats>();
    auto seed = ck.manifest.at("seed").get<std::uint64_t>();
    auto fx = std::make_unique<FeatureExtractors>(cfg, schema, norm, seed);
    if (ck.manifest.at("param_count").get<Eigen::Index>() != fx->params_.total_size())
      throw CheckpointError("extractor checkpoint param_count mismatch");
    load_into_store(ck, fx->params_);
    return fx;
  }

  static Eigen::Index analytic_param_count(const ExtractorConfig& cfg,
                                           const DataSchema& schema) {
    Eigen::Index meta_width = schema.k_cont;
    for (int c : schema.cardinalities) meta_width += c;
    return PatchEncoder<S>::analytic_param_count(cfg, schema.channels) +
           PatchEncoder<S>::analytic_param_count(cfg, meta_width) + 1;
  }

 private:
  ExtractorConfig cfg_;
  DataSchema schema_;
  NormStats norm_;
  std::uint64_t init_seed_;
  ParamStore<S> params_;
  PatchEncoder<S> time_, meta_;
  Param<S>* log_scale_ = nullptr;
};

}  // namespace tsdiff
