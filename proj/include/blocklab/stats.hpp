// Copyright 2026 The blocklab Authors.
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

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace blocklab {

/// Pairwise (cascade) summation. Order-deterministic: the reduction tree
/// depends only on the element count, so results are identical however the
/// values were produced.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Sample mean and standard error (sample std / sqrt(n)).
struct Summary {
  double mean = 0.0;
  double stderror = 0.0;
  std::size_t count = 0;
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) return s;
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double d = xs[i] - s.mean;
    sq[i] = d * d;
  }
  double var = pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
  s.stderror = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

/// Summary that skips NaN entries (trials that produced no estimate).
inline Summary summarize_finite(std::span<const double> xs) {
  std::vector<double> kept;
  kept.reserve(xs.size());
  for (double x : xs)
    if (!std::isnan(x)) kept.push_back(x);
  return summarize(kept);
}

}  // namespace blocklab
