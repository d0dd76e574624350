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

#ifndef CONGESTLAB_LINKS_H_
#define CONGESTLAB_LINKS_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "congestlab/bits.h"
#include "congestlab/engine.h"

namespace congestlab {

// How a receiver finds frame boundaries: every frame has the same fixed
// width, or starts with an unsigned length field of `prefix` bits.
struct FrameFormat {
  int fixed = 0;
  int prefix = 0;
  static FrameFormat fixed_width(int w) { return {w, 0}; }
  static FrameFormat length_prefixed(int bits) { return {0, bits}; }
};

// Multiplexes several logical frame streams over each port of one node.
//
// Each round, a port's message is a sequence of segments. A segment is the
// stream tag (bits_for(stream count) bits, so zero when the port carries one
// stream) followed by bits of that stream's current frame, up to the frame's
// end or the end of the message. Streams are served round-robin, the start
// position rotating every round. Frames larger than the budget are split
// across rounds.
class LinkLayer {
 public:
  LinkLayer() = default;
  LinkLayer(std::vector<int> streams_per_port, FrameFormat format);

  // For length-prefixed formats the caller passes the payload only.
  void enqueue(int port, int stream, const BitString& frame);
  bool idle() const { return queued_bits_ == 0; }
  void flush(Outbox& out, int64_t budget);

  using FrameHandler = std::function<void(int port, int stream, BitString&)>;
  // Parses every arriving message; calls `handler` once per completed frame
  // (payload only for length-prefixed formats).
  void receive(const Inbox& in, const FrameHandler& handler);

 private:
  struct OutStream {
    std::deque<BitString> frames;
    size_t offset = 0;  // bits of frames.front() already sent
  };
  struct InStream {
    BitString partial;
    int64_t total = -1;  // frame width once known
  };
  struct Port {
    int tag_bits = 0;
    int next = 0;  // round-robin start
    std::vector<OutStream> out;
    std::vector<InStream> in;
  };

  std::vector<Port> ports_;
  FrameFormat format_;
  int64_t queued_bits_ = 0;
};

}  // namespace congestlab

#endif  // CONGESTLAB_LINKS_H_
