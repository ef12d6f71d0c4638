#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tracelens {

// 64-bit FNV-1a. Stable across platforms and runs, which element ids and
// dataset fingerprints depend on.
class Fnv1a {
 public:
  void Update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }

  // Length-prefixed so ("ab","c") and ("a","bc") hash differently.
  void UpdateField(std::string_view field) {
    Update(std::to_string(field.size()));
    Update(":");
    Update(field);
  }

  uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace tracelens
