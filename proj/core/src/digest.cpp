#include "sessrec/digest.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "sessrec/error.hpp"

namespace sessrec {

void Fnv1a::update(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update_u64(std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  update(buf, 8);
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
  return std::string(buf);
}

std::uint64_t digest_bytes(const void* data, std::size_t len) {
  Fnv1a h;
  h.update(data, len);
  return h.value();
}

std::string digest_hex(const void* data, std::size_t len) {
  Fnv1a h;
  h.update(data, len);
  return h.hex();
}

std::string digest_string(const std::string& s) { return digest_hex(s.data(), s.size()); }

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("digest", "cannot open file: " + path);
  Fnv1a h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

}  // namespace sessrec
