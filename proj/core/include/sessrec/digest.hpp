#pragma once

#include <cstdint>
#include <string>

namespace sessrec {

// 64-bit FNV-1a. Used for content digests of artifacts (checkpoints,
// prediction files, reports) so reruns can be compared cheaply.
class Fnv1a {
 public:
  void update(const void* data, std::size_t len);
  void update(const std::string& s) { update(s.data(), s.size()); }
  void update_u64(std::uint64_t v);
  std::uint64_t value() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t digest_bytes(const void* data, std::size_t len);
std::string digest_hex(const void* data, std::size_t len);
std::string digest_string(const std::string& s);

// Digest of a file's raw bytes. Throws Error("digest", ...) if unreadable.
std::string digest_file(const std::string& path);

}  // namespace sessrec
