#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "tsdiff/autodiff/graph.hpp"

namespace tsdiff {

// Versioned binary container holding a JSON manifest followed by named
// parameter tensors; byte layout is documented in docs/checkpoint-format.md
// and guarded by a trailing FNV-1a checksum. Writes are atomic
// (tmp file + rename).

enum class TensorDType : std::uint8_t { f32 = 1, f64 = 2 };

struct NamedTensor {
  std::string name;
  TensorDType dtype = TensorDType::f32;
  Eigen::MatrixXd data;  // in-memory master copy; serialized at `dtype`
};

struct Checkpoint {
  nlohmann::json manifest;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& manifest,
                     const std::vector<NamedTensor>& tensors);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a 64 over the whole file; used as the extractor checksum in metric
// reports and for input checksums in run manifests.
std::uint64_t file_checksum(const std::filesystem::path& path);

template <typename S>
std::vector<NamedTensor> tensors_from_store(const ParamStore<S>& ps) {
  std::vector<NamedTensor> out;
  out.reserve(ps.size());
  for (const auto& p : ps) {
    NamedTensor t;
    t.name = p->name;
    t.dtype = sizeof(S) == 4 ? TensorDType::f32 : TensorDType::f64;
    t.data = p->value.template cast<double>();
    out.push_back(std::move(t));
  }
  return out;
}

// Every store parameter must be present with matching shape; extra tensors
// in the checkpoint are an error too (guards silent shape drift).
template <typename S>
void load_into_store(const Checkpoint& ck, ParamStore<S>& ps) {
  if (ck.tensors.size() != ps.size())
    throw CheckpointError("checkpoint tensor count " + std::to_string(ck.tensors.size()) +
                          " does not match model parameter count " +
                          std::to_string(ps.size()));
  for (auto& p : ps) {
    const NamedTensor* t = ck.find(p->name);
    if (!t) throw CheckpointError("checkpoint missing tensor: " + p->name);
    if (t->data.rows() != p->value.rows() || t->data.cols() != p->value.cols())
      throw CheckpointError("checkpoint tensor shape mismatch: " + p->name);
    p->value = t->data.template cast<S>();
    p->zero_grad();
  }
}

}  // namespace tsdiff
