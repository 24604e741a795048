#include "tsdiff/io/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "tsdiff/common/rng.hpp"

namespace tsdiff {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'C', 'K', 'P', 'T', '0', '1'};

void put_bytes(std::string& buf, const void* p, std::size_t n) {
  buf.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_le(std::string& buf, T v) {
  // little-endian host assumed (static_assert below keeps this honest)
  static_assert(std::endian::native == std::endian::little);
  put_bytes(buf, &v, sizeof(T));
}

template <typename T>
T get_le(const std::string& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size()) throw CheckpointError("checkpoint truncated");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& manifest,
                     const std::vector<NamedTensor>& tensors) {
  std::string buf;
  put_bytes(buf, kMagic, sizeof(kMagic));
  std::string m = manifest.dump();
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(m.size()));
  buf += m;
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(t.name.size()));
    buf += t.name;
    put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(t.dtype));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(t.data.rows()));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(t.data.cols()));
    if (t.dtype == TensorDType::f32) {
      Eigen::MatrixXf f = t.data.cast<float>();
      put_bytes(buf, f.data(), sizeof(float) * static_cast<std::size_t>(f.size()));
    } else {
      put_bytes(buf, t.data.data(), sizeof(double) * static_cast<std::size_t>(t.data.size()));
    }
  }
  put_le<std::uint64_t>(buf, fnv1a64(buf.data(), buf.size(), 0xcbf29ce484222325ULL));

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open for writing: " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + sizeof(std::uint64_t))
    throw CheckpointError("checkpoint too small: " + path.string());
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("bad checkpoint magic: " + path.string());

  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof(stored), sizeof(stored));
  std::uint64_t computed =
      fnv1a64(buf.data(), buf.size() - sizeof(stored), 0xcbf29ce484222325ULL);
  if (stored != computed) throw CheckpointError("checkpoint checksum mismatch: " + path.string());

  std::size_t off = sizeof(kMagic);
  auto mlen = get_le<std::uint32_t>(buf, off);
  if (off + mlen > buf.size()) throw CheckpointError("checkpoint truncated manifest");
  Checkpoint ck;
  try {
    ck.manifest = nlohmann::json::parse(buf.substr(off, mlen));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint manifest: ") + e.what());
  }
  off += mlen;
  auto count = get_le<std::uint32_t>(buf, off);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    auto nlen = get_le<std::uint16_t>(buf, off);
    if (off + nlen > buf.size()) throw CheckpointError("checkpoint truncated name");
    t.name = buf.substr(off, nlen);
    off += nlen;
    auto dt = get_le<std::uint8_t>(buf, off);
    if (dt != 1 && dt != 2) throw CheckpointError("unknown tensor dtype");
    t.dtype = static_cast<TensorDType>(dt);
    auto rows = get_le<std::uint32_t>(buf, off);
    auto cols = get_le<std::uint32_t>(buf, off);
    std::size_t n = static_cast<std::size_t>(rows) * cols;
    t.data.resize(rows, cols);
    if (t.dtype == TensorDType::f32) {
      if (off + n * sizeof(float) > buf.size())
        throw CheckpointError("checkpoint truncated tensor data");
      Eigen::MatrixXf f(rows, cols);
      std::memcpy(f.data(), buf.data() + off, n * sizeof(float));
      off += n * sizeof(float);
      t.data = f.cast<double>();
    } else {
      if (off + n * sizeof(double) > buf.size())
        throw CheckpointError("checkpoint truncated tensor data");
      std::memcpy(t.data.data(), buf.data() + off, n * sizeof(double));
      off += n * sizeof(double);
    }
    ck.tensors.push_back(std::move(t));
  }
  if (off != buf.size() - sizeof(std::uint64_t))
    throw CheckpointError("checkpoint has trailing bytes");
  return ck;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for checksum: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(buf.data(), buf.size(), 0xcbf29ce484222325ULL);
}

}  // namespace tsdiff
