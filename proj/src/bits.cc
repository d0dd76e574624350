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

#include "congestlab/bits.h"

#include <bit>

namespace congestlab {

int bits_for(uint64_t count) {
  if (count <= 1) return 0;
  return 64 - std::countl_zero(count - 1);
}

int log2_ceil(uint64_t n) { return bits_for(n < 2 ? 2 : n); }

namespace {
inline uint64_t low_mask(int width) {
  return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
}
}  // namespace

void BitString::push(uint64_t value, int width) {
  if (width < 0 || width > 64) throw std::invalid_argument("BitString: width");
  if (width == 0) return;
  if (width < 64 && (value >> width) != 0) {
    throw std::invalid_argument("BitString: value " + std::to_string(value) +
                                " does not fit in " + std::to_string(width) +
                                " bits");
  }
  const size_t offset = size_ & 63;
  if (offset == 0) {
    words_.push_back(value);
  } else {
    words_.back() |= value << offset;
    if (offset + width > 64) words_.push_back(value >> (64 - offset));
  }
  size_ += width;
}

void BitString::append(const BitString& other) {
  append_range(other, 0, other.size());
}

void BitString::append_range(const BitString& other, size_t from,
                             size_t count) {
  size_t pos = from;
  size_t left = count;
  while (left > 0) {
    const int w = left >= 64 ? 64 : static_cast<int>(left);
    push(other.read(pos, w), w);
    pos += w;
    left -= w;
  }
}

uint64_t BitString::read(size_t pos, int width) const {
  if (width == 0) return 0;
  const size_t word = pos >> 6;
  const size_t offset = pos & 63;
  uint64_t v = words_[word] >> offset;
  if (offset + width > 64) v |= words_[word + 1] << (64 - offset);
  return v & low_mask(width);
}

void BitString::consume_front(size_t count) {
  if (count >= size_) {
    clear();
    return;
  }
  BitString rest;
  rest.append_range(*this, count, size_ - count);
  *this = std::move(rest);
}

std::string BitString::to_string() const {
  std::string s;
  s.reserve(size_);
  for (size_t i = 0; i < size_; ++i) s.push_back(bit(i) ? '1' : '0');
  return s;
}

bool operator==(const BitString& a, const BitString& b) {
  if (a.size_ != b.size_) return false;
  for (size_t i = 0; i < a.size_; i += 64) {
    const int w = a.size_ - i >= 64 ? 64 : static_cast<int>(a.size_ - i);
    if (a.read(i, w) != b.read(i, w)) return false;
  }
  return true;
}

}  // namespace congestlab
