#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace popsynth {

/// 64-bit FNV-1a, used to fingerprint schemas, constraint sets and input files.
class Digest {
 public:
  Digest& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  Digest& update_field(std::string_view bytes) {
    update(bytes);
    return update(std::string_view("\x1f", 1));
  }

  std::uint64_t value() const noexcept { return state_; }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(state_));
    return buf;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string digest_hex(std::string_view bytes) {
  return Digest{}.update(bytes).hex();
}

}  // namespace popsynth
