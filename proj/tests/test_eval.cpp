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

#include <cmath>

#include "rulkit/eval.hpp"
#include "rulkit/rng.hpp"

using namespace rulkit;

namespace {

constexpr double kRu = 130.0;

std::vector<EvalRecord> random_records(RngStream& rng, int n) {
  std::vector<EvalRecord> out;
  for (int i = 0; i < n; ++i) {
    EvalRecord r;
    r.unit_id = i + 1;
    r.true_rul = rng.uniform(0.0, 180.0);
    r.estimate = rng.uniform(0.0, 130.0);
    r.u_esd = rng.uniform(0.0, 1.4);
    r.u_ent = rng.uniform(0.0, 1.4);
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("rmse basics and oracle") {
  CHECK(rmse(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  CHECK_THAT(rmse(std::vector<double>{3.0, -4.0}),
             Catch::Matchers::WithinAbs(std::sqrt(12.5), 1e-12));
  CHECK_THROWS_AS(rmse(std::vector<double>{}), std::invalid_argument);

  RngStream rng(9);
  std::vector<double> errs;
  for (int i = 0; i < 1000; ++i) errs.push_back(rng.uniform(-40.0, 40.0));
  double sq = 0.0;
  for (double e : errs) sq += e * e;
  CHECK_THAT(rmse(errs),
             Catch::Matchers::WithinAbs(std::sqrt(sq / 1000.0), 1e-12));

  // invariant under a sign flip of every error
  std::vector<double> flipped;
  for (double e : errs) flipped.push_back(-e);
  CHECK(rmse(errs) == rmse(flipped));
}

TEST_CASE("timeliness score uses the asymmetric constants") {
  CHECK(timeliness_score(std::vector<double>{0.0}) == 0.0);
  CHECK_THAT(timeliness_score(std::vector<double>{10.0}),
             Catch::Matchers::WithinAbs(std::exp(1.0) - 1.0, 1e-12));
  CHECK_THAT(timeliness_score(std::vector<double>{-13.0}),
             Catch::Matchers::WithinAbs(std::exp(1.0) - 1.0, 1e-12));
  // late by 13 is penalized more than early by 13
  CHECK_THAT(timeliness_score(std::vector<double>{13.0}),
             Catch::Matchers::WithinAbs(std::exp(1.3) - 1.0, 1e-12));
  CHECK(timeliness_score(std::vector<double>{13.0}) >
        timeliness_score(std::vector<double>{-13.0}));

  // additive over disjoint record sets
  std::vector<double> a{3.0, -7.0}, b{12.0, 0.5, -2.0}, both{3.0, -7.0, 12.0, 0.5, -2.0};
  CHECK_THAT(timeliness_score(both),
             Catch::Matchers::WithinAbs(timeliness_score(a) + timeliness_score(b), 1e-12));
}

TEST_CASE("precision/recall/F1 hand example") {
  std::vector<EvalRecord> recs(4);
  const double us[] = {0.2, 0.4, 0.6, 0.1};
  const double errs[] = {5.0, 20.0, 3.0, 8.0};
  for (int i = 0; i < 4; ++i) {
    recs[static_cast<std::size_t>(i)].true_rul = 50.0;
    recs[static_cast<std::size_t>(i)].estimate = 50.0 + errs[i];
    recs[static_cast<std::size_t>(i)].u_esd = us[i];
  }
  const Prf prf = uncertainty_prf(recs, UncertaintyKind::esd, 0.5, 10.0, kRu);
  REQUIRE(prf.precision.has_value());
  REQUIRE(prf.recall.has_value());
  REQUIRE(prf.f1.has_value());
  CHECK_THAT(*prf.precision, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  CHECK_THAT(*prf.recall, Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK_THAT(*prf.f1, Catch::Matchers::WithinAbs(4.0 / 7.0, 1e-12));
}

TEST_CASE("all certain and correct gives P = R = F1 = 1") {
  std::vector<EvalRecord> recs(3);
  for (auto& r : recs) {
    r.true_rul = 30.0;
    r.estimate = 32.0;
    r.u_esd = 0.05;
  }
  const Prf prf = uncertainty_prf(recs, UncertaintyKind::esd, 0.2, 10.0, kRu);
  CHECK(*prf.precision == 1.0);
  CHECK(*prf.recall == 1.0);
  CHECK(*prf.f1 == 1.0);
}

TEST_CASE("precision is absent when nothing is certain") {
  std::vector<EvalRecord> recs(2);
  for (auto& r : recs) {
    r.true_rul = 30.0;
    r.estimate = 31.0;
    r.u_esd = 0.9;
  }
  const Prf prf = uncertainty_prf(recs, UncertaintyKind::esd, 0.2, 10.0, kRu);
  CHECK_FALSE(prf.precision.has_value());
  CHECK(prf.recall.has_value());  // recall is 0/N = 0, still defined
  CHECK(*prf.recall == 0.0);
  CHECK_FALSE(prf.f1.has_value());
}

TEST_CASE("huge uncertainty threshold turns recall into plain accuracy") {
  RngStream rng(12);
  const auto recs = random_records(rng, 200);
  const Prf prf = uncertainty_prf(recs, UncertaintyKind::esd, 1e9, 10.0, kRu);
  int correct = 0;
  for (const auto& r : recs)
    if (std::abs(clipped_error(r, kRu)) <= 10.0) ++correct;
  CHECK_THAT(*prf.recall,
             Catch::Matchers::WithinAbs(static_cast<double>(correct) / 200.0, 1e-15));
  CHECK(*prf.precision == *prf.recall);
}

TEST_CASE("metrics against brute-force oracles on random record sets") {
  RngStream rng(31);
  for (int rep = 0; rep < 150; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(40));
    const auto recs = random_records(rng, n);
    const double tau_u = rng.uniform(0.05, 1.5);
    const double tau_e = rng.uniform(1.0, 60.0);
    const double tau_r = rng.uniform(5.0, 130.0);
    const UncertaintyKind kind =
        rep % 2 == 0 ? UncertaintyKind::esd : UncertaintyKind::ent;

    // literal set definitions
    int certain = 0, correct = 0, both = 0, low_certain = 0, low_all = 0;
    for (const auto& r : recs) {
      const double truth = std::min(r.true_rul, kRu);
      const double err = std::abs(r.estimate - truth);
      const double u = kind == UncertaintyKind::esd ? r.u_esd : r.u_ent;
      const bool is_certain = u <= tau_u;
      const bool is_correct = err <= tau_e;
      if (is_certain) ++certain;
      if (is_correct) ++correct;
      if (is_certain && is_correct) ++both;
      if (truth <= tau_r && is_certain) {
        ++low_certain;
        if (is_correct) ++low_all;
      }
    }

    const Prf prf = uncertainty_prf(recs, kind, tau_u, tau_e, kRu);
    CHECK(prf.certain_count == certain);
    CHECK(prf.correct_and_certain == both);
    if (certain > 0)
      CHECK_THAT(*prf.precision,
                 Catch::Matchers::WithinAbs(static_cast<double>(both) / certain, 1e-12));
    CHECK_THAT(*prf.recall,
               Catch::Matchers::WithinAbs(static_cast<double>(both) / n, 1e-12));
    // R = P * (certain fraction) identity
    if (certain > 0)
      CHECK_THAT(*prf.recall,
                 Catch::Matchers::WithinAbs(*prf.precision * certain / n, 1e-12));

    const auto pl = precision_low_rul(recs, kind, tau_r, tau_u, tau_e, kRu);
    if (low_certain == 0) {
      CHECK_FALSE(pl.has_value());
    } else {
      CHECK_THAT(*pl, Catch::Matchers::WithinAbs(
                          static_cast<double>(low_all) / low_certain, 1e-12));
    }

    const auto ce = coverage_ce(recs, kind, tau_e, tau_u, kRu);
    if (correct == 0) {
      CHECK_FALSE(ce.has_value());
    } else {
      CHECK_THAT(*ce, Catch::Matchers::WithinAbs(
                          static_cast<double>(both) / correct, 1e-12));
    }
  }
}

TEST_CASE("P_l and C_e hand examples") {
  {
    std::vector<EvalRecord> one(1);
    one[0].true_rul = 5.0;
    one[0].estimate = 7.0;
    one[0].u_esd = 0.1;
    CHECK(*precision_low_rul(one, UncertaintyKind::esd, 20.0, 0.2, 10.0, kRu) == 1.0);
  }
  {
    std::vector<EvalRecord> recs(3);
    const double errs[] = {5.0, 8.0, 50.0};
    const double us[] = {0.1, 0.9, 0.1};
    for (int i = 0; i < 3; ++i) {
      recs[static_cast<std::size_t>(i)].true_rul = 60.0;
      recs[static_cast<std::size_t>(i)].estimate = 60.0 + errs[i];
      recs[static_cast<std::size_t>(i)].u_esd = us[i];
    }
    CHECK_THAT(*coverage_ce(recs, UncertaintyKind::esd, 10.0, 0.2, kRu),
               Catch::Matchers::WithinAbs(0.5, 1e-15));
  }
}

TEST_CASE("threshold curves match a filter-and-mean oracle on 5 records") {
  std::vector<EvalRecord> recs(5);
  const double truth[] = {20.0, 45.0, 80.0, 120.0, 160.0};
  const double est[] = {25.0, 40.0, 95.0, 118.0, 129.0};
  const double us[] = {0.1, 0.3, 0.8, 0.2, 0.15};
  for (int i = 0; i < 5; ++i) {
    recs[static_cast<std::size_t>(i)].true_rul = truth[i];
    recs[static_cast<std::size_t>(i)].estimate = est[i];
    recs[static_cast<std::size_t>(i)].u_esd = us[i];
    recs[static_cast<std::size_t>(i)].u_ent = us[i] / 2.0;
  }
  const EvalThresholds th = EvalThresholds::defaults();
  const UncertaintyCurves curves =
      threshold_curves(recs, UncertaintyKind::esd, th, kRu);

  REQUIRE(curves.avg_error_vs_tau_u.size() == th.tau_u_sweep.size());
  for (std::size_t i = 0; i < th.tau_u_sweep.size(); ++i) {
    const double tau_u = th.tau_u_sweep[i];
    double sum = 0.0;
    int n = 0;
    for (const auto& r : recs)
      if (r.u_esd <= tau_u) {
        sum += std::abs(clipped_error(r, kRu));
        ++n;
      }
    const auto& pt = curves.avg_error_vs_tau_u[i];
    CHECK(pt.threshold == tau_u);
    CHECK(pt.count == n);
    if (n == 0)
      CHECK_FALSE(pt.value.has_value());
    else
      CHECK_THAT(*pt.value, Catch::Matchers::WithinAbs(sum / n, 1e-12));
  }

  // single record: every defined point equals that record's value
  std::vector<EvalRecord> solo(recs.begin(), recs.begin() + 1);
  const UncertaintyCurves sc = threshold_curves(solo, UncertaintyKind::esd, th, kRu);
  for (const auto& pt : sc.avg_error_vs_tau_u)
    if (pt.value) CHECK(*pt.value == 5.0);
}

TEST_CASE("evaluate_records assembles a full report") {
  RngStream rng(55);
  const auto recs = random_records(rng, 60);
  const EvalReport rep = evaluate_records(recs, EvalThresholds::defaults(), kRu);
  CHECK(rep.n == 60);
  CHECK(rep.rmse_value > 0.0);
  CHECK(rep.curves_esd.precision.size() == 15);
  CHECK(rep.curves_esd.precision_low_rul_vs_tau_r.size() == 13);
  CHECK(rep.curves_ent.coverage_vs_tau_e.size() == 13);
  CHECK_THROWS_AS(evaluate_records(std::vector<EvalRecord>{},
                                   EvalThresholds::defaults(), kRu),
                  std::invalid_argument);
}

TEST_CASE("nearest train instances by prediction-vector distance") {
  std::vector<std::pair<int, std::vector<double>>> train;
  train.emplace_back(11, std::vector<double>{0.0, 1.0});
  train.emplace_back(12, std::vector<double>{1.0, 1.0});
  train.emplace_back(13, std::vector<double>{0.0, 0.5});
  const std::vector<double> probe{0.0, 0.0};

  CHECK(nearest_train_instances(probe, train, 3) == std::vector<int>{13, 11, 12});
  CHECK(nearest_train_instances(probe, train, 1) == std::vector<int>{13});
  CHECK(nearest_train_instances(probe, train, 9).size() == 3);  // fewer than k

  // an exact duplicate ranks first with distance zero
  train.emplace_back(7, std::vector<double>{0.0, 0.0});
  CHECK(nearest_train_instances(probe, train, 2)[0] == 7);
}

TEST_CASE("pca first component recovers a single varying axis") {
  Matrix m(6, 3);
  for (int t = 0; t < 6; ++t) {
    m(t, 0) = 5.0;            // constant
    m(t, 1) = 2.0 * t - 3.0;  // the only varying axis
    m(t, 2) = -1.0;
  }
  const auto proj = pca_first_component(m);
  REQUIRE(proj.size() == 6);
  // centered values of the varying column, up to the fixed sign
  for (int t = 0; t < 6; ++t)
    CHECK_THAT(proj[static_cast<std::size_t>(t)],
               Catch::Matchers::WithinAbs(2.0 * t - 5.0, 1e-9));
}

TEST_CASE("pca projection variance equals the top covariance eigenvalue") {
  RngStream rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const int t_len = 8 + static_cast<int>(rng.below(20));
    const int p = 2 + static_cast<int>(rng.below(5));
    Matrix m(t_len, p);
    for (double& v : m.data) v = rng.uniform(-2.0, 2.0);
    const auto proj = pca_first_component(m);

    double mu = 0.0;
    for (double v : proj) mu += v;
    mu /= t_len;
    double var = 0.0;
    for (double v : proj) var += (v - mu) * (v - mu);
    var /= (t_len - 1);

    // independent oracle: power iteration on the covariance of centered data
    Matrix centered = m;
    for (int c = 0; c < p; ++c) {
      double cm = 0.0;
      for (int r = 0; r < t_len; ++r) cm += m(r, c);
      cm /= t_len;
      for (int r = 0; r < t_len; ++r) centered(r, c) -= cm;
    }
    Matrix cov(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        double s = 0.0;
        for (int r = 0; r < t_len; ++r) s += centered(r, i) * centered(r, j);
        cov(i, j) = s / (t_len - 1);
      }
    std::vector<double> v(static_cast<std::size_t>(p), 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 3000; ++it) {
      std::vector<double> w(static_cast<std::size_t>(p), 0.0);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          w[static_cast<std::size_t>(i)] += cov(i, j) * v[static_cast<std::size_t>(j)];
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      for (int i = 0; i < p; ++i) v[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / norm;
      lambda = norm;
    }
    CHECK_THAT(var, Catch::Matchers::WithinRel(lambda, 1e-6));
  }
}

TEST_CASE("pca is invariant under constant row shifts and handles rank zero") {
  RngStream rng(23);
  Matrix m(10, 4);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  const auto base = pca_first_component(m);
  Matrix shifted = m;
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 4; ++c) shifted(r, c) += 100.0 + 3.0 * c;
  const auto moved = pca_first_component(shifted);
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK_THAT(moved[i], Catch::Matchers::WithinAbs(base[i], 1e-8));

  Matrix flat(5, 3);
  flat.fill(2.5);
  const auto zero = pca_first_component(flat);
  for (double v : zero) CHECK(v == 0.0);

  CHECK_THROWS_AS(pca_first_component(Matrix(1, 3)), std::invalid_argument);
}
