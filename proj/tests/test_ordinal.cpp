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

#include <catch2/catch_amalgamated.hpp>

#include "rulkit/ordinal.hpp"

using namespace rulkit;

namespace {

std::vector<std::uint8_t> bits(std::initializer_list<int> v) {
  return std::vector<std::uint8_t>(v.begin(), v.end());
}

const IntervalScheme kPaperScheme = IntervalScheme::make(10, 13.0);  // r_u = 130

}  // namespace

TEST_CASE("scheme validation and interval mapping") {
  CHECK(kPaperScheme.upper_bound() == 130.0);
  CHECK_THROWS_AS(IntervalScheme::make(0, 13.0), std::invalid_argument);
  CHECK_THROWS_AS(IntervalScheme::make(10, 0.5), std::invalid_argument);
  CHECK(kPaperScheme.interval_of(0.0) == 1);   // r = 0 clamps to the first interval
  CHECK(kPaperScheme.interval_of(13.0) == 1);
  CHECK(kPaperScheme.interval_of(13.5) == 2);
  CHECK(kPaperScheme.interval_of(30.0) == 3);
  CHECK(kPaperScheme.interval_of(129.0) == 10);
  CHECK(kPaperScheme.interval_of(500.0) == 10);  // clipped to r_u
}

TEST_CASE("encode_failed produces the worked 5-interval example") {
  // interval 3 of 5 -> [0,0,1,1,1]
  const IntervalScheme scheme = IntervalScheme::make(5, 13.0);
  const OrdinalTarget t = encode_failed(30.0, scheme);  // ceil(30/13) = 3
  CHECK(t.labels == bits({0, 0, 1, 1, 1}));
  CHECK(t.mask == bits({1, 1, 1, 1, 1}));
  CHECK(t.known_count == 5);
}

TEST_CASE("encode_failed with the 10-interval scheme") {
  const OrdinalTarget t = encode_failed(30.0, kPaperScheme);  // k = 3
  CHECK(t.labels == bits({0, 0, 1, 1, 1, 1, 1, 1, 1, 1}));
  CHECK(t.known_count == 10);

  // r beyond the bound is clipped to r_u first -> k = K
  const OrdinalTarget clipped = encode_failed(200.0, kPaperScheme);
  CHECK(clipped.labels == bits({0, 0, 0, 0, 0, 0, 0, 0, 0, 1}));

  CHECK_THROWS_AS(encode_failed(-1.0, kPaperScheme), std::invalid_argument);
}

TEST_CASE("encode_censored masks everything from k' upward") {
  // lower bound 40, c = 13 -> k' = 4, labels known at positions 1..3
  const OrdinalTarget t = encode_censored(40.0, kPaperScheme);
  CHECK(t.known_count == 3);
  CHECK(t.mask == bits({1, 1, 1, 0, 0, 0, 0, 0, 0, 0}));
  for (int j = 0; j < 3; ++j) CHECK(t.labels[static_cast<std::size_t>(j)] == 0);

  // degenerate lower bound: nothing usable
  CHECK(encode_censored(0.0, kPaperScheme).excluded());
  CHECK(encode_censored(1.0, kPaperScheme).excluded());  // k' = 1 -> K' = 0

  // lower bound at or past r_u: only the last position stays masked
  const OrdinalTarget top = encode_censored(130.0, kPaperScheme);
  CHECK(top.known_count == 9);
  CHECK(top.mask == bits({1, 1, 1, 1, 1, 1, 1, 1, 1, 0}));
  const OrdinalTarget above = encode_censored(400.0, kPaperScheme);
  CHECK(above.known_count == 9);

  CHECK_THROWS_AS(encode_censored(-5.0, kPaperScheme), std::invalid_argument);
}

TEST_CASE("decode_rul extremes and arithmetic") {
  const IntervalScheme scheme5 = IntervalScheme::make(5, 26.0);  // r_u = 130
  CHECK(decode_rul(std::vector<double>{1, 1, 1, 1, 1}, scheme5) == 0.0);
  CHECK(decode_rul(std::vector<double>{0, 0, 0, 0, 0}, scheme5) == 130.0);
  CHECK(decode_rul(std::vector<double>{0, 0, 1, 1, 1}, scheme5) ==
        Catch::Approx(52.0));
  CHECK_THROWS_AS(decode_rul(std::vector<double>{0.5}, scheme5),
                  std::invalid_argument);
  CHECK_THROWS_AS(decode_rul(std::vector<double>{0, 0, 0, 0, 1.5}, scheme5),
                  std::invalid_argument);
}

TEST_CASE("exhaustive invariants over r = 0..130") {
  const double r_u = kPaperScheme.upper_bound();
  const double bound = r_u / kPaperScheme.num_intervals + kPaperScheme.interval_len;
  for (int r = 0; r <= 130; ++r) {
    const OrdinalTarget t = encode_failed(static_cast<double>(r), kPaperScheme);

    // monotone: never 1 -> 0 left to right
    for (int j = 1; j < t.size(); ++j)
      REQUIRE(t.labels[static_cast<std::size_t>(j)] >= t.labels[static_cast<std::size_t>(j - 1)]);

    // round trip within the coarse-coding bound
    std::vector<double> pred(t.labels.begin(), t.labels.end());
    const double back = decode_rul(pred, kPaperScheme);
    REQUIRE(std::abs(back - r) <= bound);

    // censored encoding of the same value agrees on every unmasked label
    const OrdinalTarget c = encode_censored(static_cast<double>(r), kPaperScheme);
    for (int j = 0; j < c.size(); ++j)
      if (c.mask[static_cast<std::size_t>(j)])
        REQUIRE(c.labels[static_cast<std::size_t>(j)] == t.labels[static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("decode_rul is monotone non-increasing in every component") {
  std::vector<double> base{0.2, 0.4, 0.6, 0.1, 0.9, 0.3, 0.5, 0.7, 0.8, 0.0};
  const double r0 = decode_rul(base, kPaperScheme);
  for (std::size_t j = 0; j < base.size(); ++j) {
    auto bumped = base;
    bumped[j] = std::min(1.0, bumped[j] + 0.05);
    REQUIRE(decode_rul(bumped, kPaperScheme) <= r0);
  }
}
