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

#ifndef CONGESTLAB_BITS_H_
#define CONGESTLAB_BITS_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace congestlab {

// Number of bits needed to write any value in [0, count). bits_for(0) and
// bits_for(1) are 0.
int bits_for(uint64_t count);

// ceil(log2(max(n, 2))). This is the "log n" used by every parameter formula.
int log2_ceil(uint64_t n);

// A packed, growable bit string. Bits are appended LSB-first into 64-bit
// words; read(pos, w) returns the w bits starting at pos as an integer.
class BitString {
 public:
  BitString() = default;

  void push(uint64_t value, int width);
  void push_bool(bool b) { push(b ? 1 : 0, 1); }
  void append(const BitString& other);
  // Appends bits [from, from+count) of `other`.
  void append_range(const BitString& other, size_t from, size_t count);

  uint64_t read(size_t pos, int width) const;
  bool bit(size_t pos) const { return (words_[pos >> 6] >> (pos & 63)) & 1; }

  size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  void clear() {
    words_.clear();
    size_ = 0;
  }
  // Drops the first `count` bits.
  void consume_front(size_t count);

  std::string to_string() const;  // '0'/'1' characters, bit 0 first

  friend bool operator==(const BitString& a, const BitString& b);

 private:
  std::vector<uint64_t> words_;
  size_t size_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const BitString& s, size_t pos = 0) : s_(&s), pos_(pos) {}

  uint64_t take(int width) {
    if (pos_ + static_cast<size_t>(width) > s_->size()) {
      throw std::out_of_range("BitReader: read past end of bit string");
    }
    uint64_t v = s_->read(pos_, width);
    pos_ += width;
    return v;
  }
  bool take_bool() { return take(1) != 0; }
  size_t position() const { return pos_; }
  size_t remaining() const { return s_->size() - pos_; }

 private:
  const BitString* s_;
  size_t pos_;
};

}  // namespace congestlab

#endif  // CONGESTLAB_BITS_H_
