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


#ifndef CONGESTLAB_RATIONAL_H_
#define CONGESTLAB_RATIONAL_H_

#include <gmpxx.h>

#include <string>

namespace congestlab {

using Rational = mpq_class;

// "num/den" in lowest terms ("num" when den == 1).
std::string to_string(const Rational& q);
Rational rational_from_string(const std::string& s);

// q >= sqrt(p) for non-negative q and p, decided exactly.
inline bool at_least_sqrt(const Rational& q, const Rational& p) {
  return q * q >= p;
}

// Tri-state comparison of x * e^power against 1: e is irrational, so the
// test brackets it between two 16-digit rationals.
enum class Verdict { kBelow, kAbove, kUndecided };
Verdict compare_e_power(const Rational& x, int power);

double to_double(const Rational& q);

}  // namespace congestlab

#endif  // CONGESTLAB_RATIONAL_H_
