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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rulkit {

// Every random decision in the toolkit is drawn from a named sub-stream of a
// single master seed, so a whole run is reproducible from (seed, stream name).
// Stream names in use: "split", "censor", "windows:<unit>", "init:<i>",
// "shuffle:<i>", "dropout:<i>", "synth:<unit>".

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t substream_seed(std::uint64_t master,
                                              std::string_view name) {
  return splitmix64(master ^ fnv1a64(name));
}

// mt19937_64 is fully specified by the standard; the distributions are not,
// so all sampling below is implemented directly on the raw engine output.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}
  RngStream(std::uint64_t master, std::string_view name)
      : eng_(substream_seed(master, name)) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::below: n must be > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // Inclusive integer range.
  long long uniform_int(long long lo, long long hi) {
    if (lo > hi) throw std::invalid_argument("RngStream::uniform_int: lo > hi");
    return lo + static_cast<long long>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // n distinct integers from [lo, hi], ascending; all of them if the range
  // holds fewer than n.
  std::vector<long long> sample_distinct(long long lo, long long hi, int n) {
    if (lo > hi) return {};
    const long long range = hi - lo + 1;
    std::vector<long long> pool(static_cast<std::size_t>(range));
    for (long long i = 0; i < range; ++i) pool[static_cast<std::size_t>(i)] = lo + i;
    const int take = n < range ? n : static_cast<int>(range);
    for (int i = 0; i < take; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) +
          static_cast<std::size_t>(below(static_cast<std::uint64_t>(range - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(take));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rulkit
