#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/manifest.hpp"  // fnv1a64
#include "veinorigin/network.hpp"

namespace veinorigin {

inline constexpr char kCheckpointMagic[8] = {'V', 'O', 'C', 'K', 'P', 'T', '0', '1'};

namespace detail {

template <typename V>
void append_raw(std::string& buf, const V& v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(V));
}

inline void append_str(std::string& buf, const std::string& s) {
  const std::uint32_t len = static_cast<std::uint32_t>(s.size());
  append_raw(buf, len);
  buf.append(s);
}

struct Reader {
  const char* p;
  const char* end;

  template <typename V>
  V read_raw() {
    if (p + sizeof(V) > end) raise(errc::checksum_mismatch, "checkpoint truncated");
    V v;
    std::memcpy(&v, p, sizeof(V));
    p += sizeof(V);
    return v;
  }

  std::string read_str() {
    const std::uint32_t len = read_raw<std::uint32_t>();
    if (p + len > end) raise(errc::checksum_mismatch, "checkpoint truncated");
    std::string s(p, len);
    p += len;
    return s;
  }
};

}  // namespace detail

/// Serializes all parameter blobs (weights and running statistics) with a
/// trailing digest; loading verifies the digest and blob identities, so the
/// round trip reproduces forward outputs bit for bit.
template <typename T>
void save_checkpoint(const Network<T>& net, const std::filesystem::path& path) {
  std::string payload;
  detail::append_str(payload, net.arch().name);
  detail::append_raw(payload, static_cast<std::uint32_t>(sizeof(T)));
  const auto& blobs = net.all_params();
  detail::append_raw(payload, static_cast<std::uint32_t>(blobs.size()));
  for (const auto& b : blobs) {
    detail::append_str(payload, b.name);
    detail::append_raw(payload, static_cast<std::uint32_t>(b.shape.size()));
    for (int d : b.shape) detail::append_raw(payload, static_cast<std::int32_t>(d));
    detail::append_raw(payload, static_cast<std::uint64_t>(b.value.size()));
    payload.append(reinterpret_cast<const char*>(b.value.data()), b.value.size() * sizeof(T));
  }
  const std::uint64_t digest = fnv1a64(payload);

  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::write_error, "cannot write checkpoint: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(&digest), sizeof(digest));
  if (!out) raise(errc::write_error, "short write: " + path.string());
}

/// Reads the architecture name stored in a checkpoint without loading weights.
inline std::string checkpoint_arch_name(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot read checkpoint: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    raise(errc::checksum_mismatch, "bad checkpoint magic: " + path.string());
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string name(len, '\0');
  in.read(name.data(), len);
  if (!in) raise(errc::checksum_mismatch, "checkpoint truncated: " + path.string());
  return name;
}

template <typename T>
void load_checkpoint(Network<T>& net, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot read checkpoint: " + path.string());
  std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (file.size() < sizeof(kCheckpointMagic) + sizeof(std::uint64_t))
    raise(errc::checksum_mismatch, "checkpoint truncated: " + path.string());
  if (std::memcmp(file.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    raise(errc::checksum_mismatch, "bad checkpoint magic: " + path.string());

  const std::size_t payload_size =
      file.size() - sizeof(kCheckpointMagic) - sizeof(std::uint64_t);
  const char* payload = file.data() + sizeof(kCheckpointMagic);
  std::uint64_t stored = 0;
  std::memcpy(&stored, file.data() + file.size() - sizeof(stored), sizeof(stored));
  if (fnv1a64(std::string_view(payload, payload_size)) != stored)
    raise(errc::checksum_mismatch, "checkpoint digest mismatch: " + path.string());

  detail::Reader r{payload, payload + payload_size};
  const std::string arch_name = r.read_str();
  if (arch_name != net.arch().name)
    raise(errc::invalid_argument, "checkpoint is for architecture '" + arch_name +
                                      "', network is '" + net.arch().name + "'");
  const std::uint32_t scalar = r.read_raw<std::uint32_t>();
  if (scalar != sizeof(T))
    raise(errc::invalid_argument, "checkpoint scalar width mismatch");
  const std::uint32_t n_blobs = r.read_raw<std::uint32_t>();
  auto& blobs = net.all_params();
  if (n_blobs != blobs.size())
    raise(errc::invalid_argument, "checkpoint blob count mismatch");
  for (auto& b : blobs) {
    const std::string name = r.read_str();
    if (name != b.name) raise(errc::invalid_argument, "checkpoint blob order mismatch at " + name);
    const std::uint32_t ndims = r.read_raw<std::uint32_t>();
    std::vector<int> shape(ndims);
    for (auto& d : shape) d = r.read_raw<std::int32_t>();
    if (shape != b.shape) raise(errc::invalid_argument, "checkpoint blob shape mismatch at " + name);
    const std::uint64_t count = r.read_raw<std::uint64_t>();
    if (count != b.value.size())
      raise(errc::invalid_argument, "checkpoint blob size mismatch at " + name);
    if (r.p + count * sizeof(T) > r.end)
      raise(errc::checksum_mismatch, "checkpoint truncated");
    std::memcpy(b.value.data(), r.p, count * sizeof(T));
    r.p += count * sizeof(T);
  }
}

}  // namespace veinorigin
