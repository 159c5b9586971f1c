//------------------------------------------------------------------------------
//
//   Copyright 2026 The rulkit Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rulkit {

// Partition of [0, r_u] into K intervals of width c; an RUL value r falls in
// interval k = ceil(r/c), with r first clipped to r_u and k clamped to >= 1.
struct IntervalScheme {
  int num_intervals = 10;     // K
  double interval_len = 13.0; // c, in cycles

  double upper_bound() const { return num_intervals * interval_len; }  // r_u

  static IntervalScheme make(int k, double c) {
    if (k < 1) throw std::invalid_argument("IntervalScheme: K must be >= 1");
    if (c < 1.0) throw std::invalid_argument("IntervalScheme: c must be >= 1");
    return IntervalScheme{k, c};
  }

  int interval_of(double r) const {
    const double clipped = r < upper_bound() ? r : upper_bound();
    int k = static_cast<int>(std::ceil(clipped / interval_len));
    if (k < 1) k = 1;
    if (k > num_intervals) k = num_intervals;
    return k;
  }

  bool operator==(const IntervalScheme&) const = default;
};

// K binary labels plus a per-position mask; known_count (K') is the number of
// unmasked positions, which always form a prefix. A censored sample whose
// lower bound gives no usable label has known_count == 0 and must be excluded
// from training.
struct OrdinalTarget {
  std::vector<std::uint8_t> labels;  // masked positions are stored as 0
  std::vector<std::uint8_t> mask;    // 1 = label known
  int known_count = 0;               // K'

  int size() const { return static_cast<int>(labels.size()); }
  bool excluded() const { return known_count == 0; }
};

// Exact RUL r -> full target: zeros below interval k, ones from k upward.
inline OrdinalTarget encode_failed(double r, const IntervalScheme& scheme) {
  if (r < 0.0 || !std::isfinite(r))
    throw std::invalid_argument("encode_failed: RUL must be finite and >= 0, got " +
                                std::to_string(r));
  const int k = scheme.interval_of(r);
  OrdinalTarget t;
  t.labels.assign(static_cast<std::size_t>(scheme.num_intervals), 0);
  t.mask.assign(static_cast<std::size_t>(scheme.num_intervals), 1);
  for (int j = k; j <= scheme.num_intervals; ++j) t.labels[j - 1] = 1;
  t.known_count = scheme.num_intervals;
  return t;
}

// Lower bound T - t0 on an unknown RUL -> partially known target: positions
// below k' = ceil(lower_bound/c) are known zeros, the rest are masked.
inline OrdinalTarget encode_censored(double lower_bound,
                                     const IntervalScheme& scheme) {
  if (lower_bound < 0.0 || !std::isfinite(lower_bound))
    throw std::invalid_argument(
        "encode_censored: lower bound must be finite and >= 0, got " +
        std::to_string(lower_bound));
  const double r_u = scheme.upper_bound();
  const double clipped = lower_bound < r_u ? lower_bound : r_u;
  const int k_prime = static_cast<int>(std::ceil(clipped / scheme.interval_len));
  OrdinalTarget t;
  t.labels.assign(static_cast<std::size_t>(scheme.num_intervals), 0);
  t.mask.assign(static_cast<std::size_t>(scheme.num_intervals), 0);
  const int known = k_prime - 1;
  t.known_count = known > 0 ? known : 0;
  for (int j = 1; j <= t.known_count; ++j) t.mask[j - 1] = 1;
  return t;
}

// Point estimate from the K classifier outputs: r_hat = r_u (1 - mean(y)).
inline double decode_rul(std::span<const double> prediction,
                         const IntervalScheme& scheme) {
  if (static_cast<int>(prediction.size()) != scheme.num_intervals)
    throw std::invalid_argument("decode_rul: prediction length " +
                                std::to_string(prediction.size()) +
                                " != K = " + std::to_string(scheme.num_intervals));
  double s = 0.0;
  for (double y : prediction) {
    if (!(y >= 0.0 && y <= 1.0))
      throw std::invalid_argument("decode_rul: component outside [0,1]");
    s += y;
  }
  return scheme.upper_bound() * (1.0 - s / scheme.num_intervals);
}

}  // namespace rulkit
