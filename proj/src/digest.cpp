#include "evac/digest.hpp"

#include <openssl/sha.h>

namespace evac {

Digest params_digest(const ModelParams& params) {
  nlohmann::json j = params_to_json(params);
  j.erase("pomcp");
  j.erase("threshold_t");
  j.erase("threshold_inclusive");
  j.erase("dirichlet_scale");
  // nlohmann objects are key-sorted and doubles print round-trip exact.
  const std::string canonical = j.dump();
  Digest out{};
  SHA256(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(), out.data());
  return out;
}

std::string to_hex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(digest.size() * 2);
  for (std::uint8_t b : digest) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

}  // namespace evac
