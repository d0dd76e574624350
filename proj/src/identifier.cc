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

#include "congestlab/identifier.h"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace congestlab {

namespace {

// words = words * mul + add; throws on overflow past 256 bits.
void mul_add(std::array<uint64_t, 4>& words, uint64_t mul, uint64_t add) {
  unsigned __int128 carry = add;
  for (auto& w : words) {
    unsigned __int128 cur = static_cast<unsigned __int128>(w) * mul + carry;
    w = static_cast<uint64_t>(cur);
    carry = cur >> 64;
  }
  if (carry != 0) throw std::out_of_range("identifier exceeds 256 bits");
}

}  // namespace

Identifier Identifier::parse(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty identifier");
  Identifier id;
  uint64_t base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    text.remove_prefix(2);
  }
  for (char c : text) {
    uint64_t digit;
    if (c >= '0' && c <= '9') {
      digit = c - '0';
    } else if (base == 16 && c >= 'a' && c <= 'f') {
      digit = 10 + (c - 'a');
    } else if (base == 16 && c >= 'A' && c <= 'F') {
      digit = 10 + (c - 'A');
    } else {
      throw std::invalid_argument("bad identifier digit '" + std::string(1, c) +
                                  "'");
    }
    if (digit >= base) throw std::invalid_argument("bad identifier digit");
    mul_add(id.words_, base, digit);
  }
  return id;
}

int Identifier::bit_length() const {
  for (int i = 3; i >= 0; --i) {
    if (words_[i] != 0) return 64 * i + (64 - std::countl_zero(words_[i]));
  }
  return 0;
}

uint64_t Identifier::divmod_small(uint64_t divisor) {
  unsigned __int128 rem = 0;
  for (int i = 3; i >= 0; --i) {
    unsigned __int128 cur = (rem << 64) | words_[i];
    words_[i] = static_cast<uint64_t>(cur / divisor);
    rem = cur % divisor;
  }
  return static_cast<uint64_t>(rem);
}

std::string Identifier::to_string() const {
  Identifier tmp = *this;
  if (tmp.bit_length() == 0) return "0";
  std::string digits;
  while (tmp.bit_length() != 0) {
    digits.push_back(static_cast<char>('0' + tmp.divmod_small(10)));
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

void Identifier::write(BitString& out, int bits) const {
  if (!fits(bits)) {
    throw std::invalid_argument("identifier " + to_string() +
                                " does not fit in " + std::to_string(bits) +
                                " bits");
  }
  int left = bits;
  for (int i = 0; left > 0; ++i) {
    const int w = std::min(left, 64);
    out.push(w == 64 ? words_[i] : (words_[i] & ((uint64_t{1} << w) - 1)), w);
    left -= w;
  }
}

Identifier Identifier::read(BitReader& in, int bits) {
  Identifier id;
  int left = bits;
  for (int i = 0; left > 0; ++i) {
    const int w = std::min(left, 64);
    id.words_[i] = in.take(w);
    left -= w;
  }
  return id;
}

}  // namespace congestlab
