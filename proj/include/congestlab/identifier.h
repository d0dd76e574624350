// Copyright 2026 The congestlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONGESTLAB_IDENTIFIER_H_
#define CONGESTLAB_IDENTIFIER_H_

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "congestlab/bits.h"

namespace congestlab {

inline constexpr int kMaxIdBits = 256;

// An unsigned identifier of up to 256 bits. Node and cluster identifiers may
// come from an exponentially large space, so they are not plain ints.
class Identifier {
 public:
  constexpr Identifier() = default;
  constexpr explicit Identifier(uint64_t v) : words_{v, 0, 0, 0} {}

  static Identifier parse(std::string_view text);  // decimal or 0x-hex

  // Number of significant bits; 0 for the zero identifier.
  int bit_length() const;
  bool fits(int bits) const { return bit_length() <= bits; }
  uint64_t low64() const { return words_[0]; }
  uint64_t word(int i) const { return words_[i]; }

  // Divides in place by a small divisor and returns the remainder.
  uint64_t divmod_small(uint64_t divisor);

  std::string to_string() const;  // decimal

  void write(BitString& out, int bits) const;
  static Identifier read(BitReader& in, int bits);

  friend constexpr auto operator<=>(const Identifier& a, const Identifier& b) {
    for (int i = 3; i >= 0; --i) {
      if (a.words_[i] != b.words_[i]) return a.words_[i] <=> b.words_[i];
    }
    return std::strong_ordering::equal;
  }
  friend constexpr bool operator==(const Identifier& a,
                                   const Identifier& b) = default;

 private:
  std::array<uint64_t, 4> words_{};
};

}  // namespace congestlab

#endif  // CONGESTLAB_IDENTIFIER_H_
