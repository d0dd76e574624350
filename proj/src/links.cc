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

#include "congestlab/links.h"

#include <algorithm>
#include <stdexcept>

namespace congestlab {

LinkLayer::LinkLayer(std::vector<int> streams_per_port, FrameFormat format)
    : format_(format) {
  if ((format.fixed > 0) == (format.prefix > 0) || format.prefix > 64) {
    throw std::invalid_argument("LinkLayer: need exactly one frame format");
  }
  ports_.resize(streams_per_port.size());
  for (size_t p = 0; p < streams_per_port.size(); ++p) {
    const int m = streams_per_port[p];
    ports_[p].tag_bits = bits_for(m);
    ports_[p].out.resize(m);
    ports_[p].in.resize(m);
  }
}

void LinkLayer::enqueue(int port, int stream, const BitString& frame) {
  OutStream& s = ports_.at(port).out.at(stream);
  if (format_.fixed > 0) {
    if (static_cast<int64_t>(frame.size()) != format_.fixed) {
      throw std::invalid_argument("LinkLayer: frame width " +
                                  std::to_string(frame.size()) + " != " +
                                  std::to_string(format_.fixed));
    }
    s.frames.push_back(frame);
  } else {
    BitString f;
    f.push(frame.size(), format_.prefix);
    f.append(frame);
    s.frames.push_back(std::move(f));
  }
  queued_bits_ += static_cast<int64_t>(s.frames.back().size());
}

void LinkLayer::flush(Outbox& out, int64_t budget) {
  for (size_t p = 0; p < ports_.size(); ++p) {
    Port& port = ports_[p];
    const int m = static_cast<int>(port.out.size());
    if (m == 0) continue;
    bool any = false;
    for (const auto& s : port.out) any = any || !s.frames.empty();
    if (!any) continue;
    BitString* msg = nullptr;
    int64_t space = budget;
    const int start = port.next;
    port.next = (port.next + 1) % m;
    bool progress = true;
    while (progress && space > port.tag_bits) {
      progress = false;
      for (int i = 0; i < m && space > port.tag_bits; ++i) {
        OutStream& s = port.out[(start + i) % m];
        if (s.frames.empty()) continue;
        if (msg == nullptr) msg = &out.send(static_cast<int>(p));
        msg->push((start + i) % m, port.tag_bits);
        space -= port.tag_bits;
        const BitString& f = s.frames.front();
        const int64_t left = static_cast<int64_t>(f.size() - s.offset);
        const int64_t take = std::min(left, space);
        msg->append_range(f, s.offset, static_cast<size_t>(take));
        space -= take;
        queued_bits_ -= take;
        s.offset += static_cast<size_t>(take);
        if (s.offset == f.size()) {
          s.frames.pop_front();
          s.offset = 0;
        }
        progress = true;
      }
    }
  }
}

void LinkLayer::receive(const Inbox& in, const FrameHandler& handler) {
  for (int p = 0; p < in.degree() && p < static_cast<int>(ports_.size()); ++p) {
    if (!in.has(p)) continue;
    Port& port = ports_[p];
    const BitString& msg = in.from(p);
    BitReader r(msg);
    while (r.remaining() > 0) {
      if (r.remaining() <= static_cast<size_t>(port.tag_bits)) {
        throw EngineError("LinkLayer: truncated segment");
      }
      const int stream = static_cast<int>(r.take(port.tag_bits));
      if (stream >= static_cast<int>(port.in.size())) {
        throw EngineError("LinkLayer: bad stream tag");
      }
      InStream& s = port.in[stream];
      // Consume bits until the current frame completes or the message ends.
      while (r.remaining() > 0) {
        int64_t need;
        if (format_.fixed > 0) {
          need = format_.fixed - static_cast<int64_t>(s.partial.size());
        } else if (s.total < 0) {
          need = format_.prefix - static_cast<int64_t>(s.partial.size());
        } else {
          need = s.total - static_cast<int64_t>(s.partial.size());
        }
        const int64_t take =
            std::min<int64_t>(need, static_cast<int64_t>(r.remaining()));
        s.partial.append_range(msg, r.position(), static_cast<size_t>(take));
        r = BitReader(msg, r.position() + static_cast<size_t>(take));
        if (format_.prefix > 0 && s.total < 0 &&
            static_cast<int64_t>(s.partial.size()) == format_.prefix) {
          s.total = format_.prefix +
                    static_cast<int64_t>(s.partial.read(0, format_.prefix));
        }
        const int64_t target = format_.fixed > 0 ? format_.fixed : s.total;
        if (target >= 0 && static_cast<int64_t>(s.partial.size()) == target) {
          BitString frame;
          if (format_.fixed > 0) {
            frame = std::move(s.partial);
          } else {
            frame.append_range(s.partial, format_.prefix,
                               s.partial.size() - format_.prefix);
          }
          s.partial.clear();
          s.total = -1;
          handler(p, stream, frame);
          break;  // segment ends at a frame boundary
        }
      }
    }
  }
}

}  // namespace congestlab
