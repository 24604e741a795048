#pragma once

#include <json.hpp>

#include "tsdiff/data/normalize.hpp"
#include "tsdiff/data/types.hpp"
#include "tsdiff/denoiser/denoiser.hpp"
#include "tsdiff/encoder/metadata_encoder.hpp"

// JSON conversions for the structs embedded in checkpoint manifests.

namespace tsdiff {

inline void to_json(nlohmann::json& j, const AffineStats& s) {
  j = {{"center", s.center}, {"scale", s.scale}};
}
inline void from_json(const nlohmann::json& j, AffineStats& s) {
  j.at("center").get_to(s.center);
  j.at("scale").get_to(s.scale);
}

inline void to_json(nlohmann::json& j, const NormStats& s) {
  j = {{"mode", to_string(s.mode)}, {"channels", s.channels}, {"continuous", s.continuous}};
}
inline void from_json(const nlohmann::json& j, NormStats& s) {
  s.mode = norm_mode_from_string(j.at("mode").get<std::string>());
  j.at("channels").get_to(s.channels);
  j.at("continuous").get_to(s.continuous);
}

inline void to_json(nlohmann::json& j, const DataSchema& s) {
  j = {{"horizon", s.horizon},
       {"channels", s.channels},
       {"cardinalities", s.cardinalities},
       {"k_cont", s.k_cont}};
}
inline void from_json(const nlohmann::json& j, DataSchema& s) {
  j.at("horizon").get_to(s.horizon);
  j.at("channels").get_to(s.channels);
  j.at("cardinalities").get_to(s.cardinalities);
  j.at("k_cont").get_to(s.k_cont);
}

inline void to_json(nlohmann::json& j, const MetadataEncoderConfig& c) {
  j = {{"cardinalities", c.cardinalities},
       {"k_cont", c.k_cont},
       {"d_cat", c.d_cat},
       {"d_cont", c.d_cont},
       {"d_meta", c.d_meta},
       {"fusion_layers", c.fusion_layers},
       {"fusion_heads", c.fusion_heads},
       {"ffn_mult", c.ffn_mult},
       {"max_horizon", c.max_horizon}};
}
inline void from_json(const nlohmann::json& j, MetadataEncoderConfig& c) {
  j.at("cardinalities").get_to(c.cardinalities);
  j.at("k_cont").get_to(c.k_cont);
  j.at("d_cat").get_to(c.d_cat);
  j.at("d_cont").get_to(c.d_cont);
  j.at("d_meta").get_to(c.d_meta);
  j.at("fusion_layers").get_to(c.fusion_layers);
  j.at("fusion_heads").get_to(c.fusion_heads);
  j.at("ffn_mult").get_to(c.ffn_mult);
  j.at("max_horizon").get_to(c.max_horizon);
}

inline void to_json(nlohmann::json& j, const DenoiserConfig& c) {
  j = {{"residual_layers", c.residual_layers},
       {"d", c.d},
       {"heads", c.heads},
       {"ffn_mult", c.ffn_mult}};
}
inline void from_json(const nlohmann::json& j, DenoiserConfig& c) {
  j.at("residual_layers").get_to(c.residual_layers);
  j.at("d").get_to(c.d);
  j.at("heads").get_to(c.heads);
  j.at("ffn_mult").get_to(c.ffn_mult);
}

}  // namespace tsdiff
