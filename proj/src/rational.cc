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


#include "congestlab/rational.h"

#include <stdexcept>

namespace congestlab {

std::string to_string(const Rational& q) {
  Rational c = q;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

Rational rational_from_string(const std::string& s) {
  Rational q;
  if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
  if (q.get_den() == 0) throw std::invalid_argument("bad rational: " + s);
  q.canonicalize();
  return q;
}

Verdict compare_e_power(const Rational& x, int power) {
  static const Rational kScale("1000000000000000");
  static const Rational kLow = Rational("2718281828459045") / kScale;
  static const Rational kHigh = Rational("2718281828459046") / kScale;
  Rational lo = x, hi = x;
  for (int i = 0; i < power; ++i) {
    lo *= kLow;
    hi *= kHigh;
  }
  if (hi < 1) return Verdict::kBelow;
  if (lo >= 1) return Verdict::kAbove;
  return Verdict::kUndecided;
}

double to_double(const Rational& q) { return q.get_d(); }

}  // namespace congestlab
