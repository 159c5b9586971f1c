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
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rulkit/linalg.hpp"

namespace rulkit {

struct EvalThresholds {
  double tau_e = 10.0;  // error threshold, cycles
  double tau_u = 0.2;   // normalized uncertainty threshold
  double tau_r = 20.0;  // RUL threshold, cycles
  double tau_1 = 13.0;  // timeliness constant for early predictions
  double tau_2 = 10.0;  // timeliness constant for late predictions
  std::vector<double> tau_u_sweep;  // default 0.1 .. 1.5 step 0.1
  std::vector<double> tau_r_sweep;  // default 10 .. 130 step 10
  std::vector<double> tau_e_sweep;  // default 10 .. 130 step 10

  static EvalThresholds defaults() {
    EvalThresholds t;
    for (int i = 1; i <= 15; ++i) t.tau_u_sweep.push_back(i / 10.0);
    for (int i = 1; i <= 13; ++i) t.tau_r_sweep.push_back(10.0 * i);
    for (int i = 1; i <= 13; ++i) t.tau_e_sweep.push_back(10.0 * i);
    return t;
  }
};

// One evaluated test instance. true_rul is the raw ground truth; metric code
// clips it to r_u before forming errors (the model trains against clipped
// targets and cannot estimate beyond r_u).
struct EvalRecord {
  int unit_id = 0;
  double true_rul = 0.0;
  double estimate = 0.0;
  double u_esd = 0.0;  // normalized
  double u_ent = 0.0;  // normalized
};

enum class UncertaintyKind { esd, ent };

inline double record_uncertainty(const EvalRecord& r, UncertaintyKind kind) {
  return kind == UncertaintyKind::esd ? r.u_esd : r.u_ent;
}

inline double clipped_error(const EvalRecord& r, double r_u) {
  const double truth = r.true_rul < r_u ? r.true_rul : r_u;
  return r.estimate - truth;
}

// ---------------------------------------------------------------------------
// Accuracy metrics

inline double rmse(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("rmse: no errors");
  double sq = 0.0;
  for (double e : errors) sq += e * e;
  return std::sqrt(sq / static_cast<double>(errors.size()));
}

// S = sum(exp(gamma |e|) - 1) with gamma = 1/tau_1 for early predictions
// (e < 0) and 1/tau_2 for late ones; late predictions are penalized more.
inline double timeliness_score(std::span<const double> errors,
                               double tau_1 = 13.0, double tau_2 = 10.0) {
  double s = 0.0;
  for (double e : errors) {
    const double gamma = e < 0.0 ? 1.0 / tau_1 : 1.0 / tau_2;
    s += std::exp(gamma * std::abs(e)) - 1.0;
  }
  return s;
}

inline std::vector<double> clipped_errors(std::span<const EvalRecord> records,
                                          double r_u) {
  std::vector<double> e;
  e.reserve(records.size());
  for (const auto& r : records) e.push_back(clipped_error(r, r_u));
  return e;
}

// ---------------------------------------------------------------------------
// Uncertainty-quality metrics; undefined ratios are absent, never zero

struct Prf {
  std::optional<double> precision, recall, f1;
  int certain_count = 0;
  int correct_and_certain = 0;
  int total = 0;
};

inline Prf uncertainty_prf(std::span<const EvalRecord> records,
                           UncertaintyKind kind, double tau_u, double tau_e,
                           double r_u) {
  Prf out;
  out.total = static_cast<int>(records.size());
  for (const auto& r : records) {
    const bool certain = record_uncertainty(r, kind) <= tau_u;
    const bool correct = std::abs(clipped_error(r, r_u)) <= tau_e;
    if (certain) ++out.certain_count;
    if (certain && correct) ++out.correct_and_certain;
  }
  if (out.certain_count > 0)
    out.precision = static_cast<double>(out.correct_and_certain) / out.certain_count;
  if (out.total > 0)
    out.recall = static_cast<double>(out.correct_and_certain) / out.total;
  if (out.precision && out.recall && (*out.precision + *out.recall) > 0.0)
    out.f1 = 2.0 * *out.precision * *out.recall / (*out.precision + *out.recall);
  return out;
}

// Precision restricted to instances close to failure (true RUL <= tau_r).
inline std::optional<double> precision_low_rul(std::span<const EvalRecord> records,
                                               UncertaintyKind kind, double tau_r,
                                               double tau_u, double tau_e,
                                               double r_u) {
  int denom = 0, numer = 0;
  for (const auto& r : records) {
    const double truth = r.true_rul < r_u ? r.true_rul : r_u;
    if (!(truth <= tau_r && record_uncertainty(r, kind) <= tau_u)) continue;
    ++denom;
    if (std::abs(clipped_error(r, r_u)) <= tau_e) ++numer;
  }
  if (denom == 0) return std::nullopt;
  return static_cast<double>(numer) / denom;
}

// Fraction of correct predictions that are also certain.
inline std::optional<double> coverage_ce(std::span<const EvalRecord> records,
                                         UncertaintyKind kind, double tau_e,
                                         double tau_u, double r_u) {
  int denom = 0, numer = 0;
  for (const auto& r : records) {
    if (!(std::abs(clipped_error(r, r_u)) <= tau_e)) continue;
    ++denom;
    if (record_uncertainty(r, kind) <= tau_u) ++numer;
  }
  if (denom == 0) return std::nullopt;
  return static_cast<double>(numer) / denom;
}

// ---------------------------------------------------------------------------
// Threshold sweep curves

struct CurvePoint {
  double threshold = 0.0;
  std::optional<double> value;
  int count = 0;  // records passing the filter behind this point
};

using Curve = std::vector<CurvePoint>;

struct UncertaintyCurves {
  Curve precision, recall, f1;       // vs tau_u
  Curve avg_error_vs_tau_u;          // mean |error| of certain records
  Curve avg_uncertainty_vs_tau_e;    // mean uncertainty of correct records
  Curve precision_low_rul_vs_tau_r;  // P_l at the default tau_u, tau_e
  Curve coverage_vs_tau_e;           // C_e at the default tau_u
};

inline UncertaintyCurves threshold_curves(std::span<const EvalRecord> records,
                                          UncertaintyKind kind,
                                          const EvalThresholds& th, double r_u) {
  UncertaintyCurves out;
  for (double tau_u : th.tau_u_sweep) {
    const Prf prf = uncertainty_prf(records, kind, tau_u, th.tau_e, r_u);
    out.precision.push_back({tau_u, prf.precision, prf.certain_count});
    out.recall.push_back({tau_u, prf.recall, prf.total});
    out.f1.push_back({tau_u, prf.f1, prf.certain_count});

    double err_sum = 0.0;
    int n = 0;
    for (const auto& r : records)
      if (record_uncertainty(r, kind) <= tau_u) {
        err_sum += std::abs(clipped_error(r, r_u));
        ++n;
      }
    out.avg_error_vs_tau_u.push_back(
        {tau_u, n > 0 ? std::optional<double>(err_sum / n) : std::nullopt, n});
  }
  for (double tau_e : th.tau_e_sweep) {
    double u_sum = 0.0;
    int n = 0;
    for (const auto& r : records)
      if (std::abs(clipped_error(r, r_u)) <= tau_e) {
        u_sum += record_uncertainty(r, kind);
        ++n;
      }
    out.avg_uncertainty_vs_tau_e.push_back(
        {tau_e, n > 0 ? std::optional<double>(u_sum / n) : std::nullopt, n});

    int certain = 0;
    for (const auto& r : records)
      if (std::abs(clipped_error(r, r_u)) <= tau_e &&
          record_uncertainty(r, kind) <= th.tau_u)
        ++certain;
    out.coverage_vs_tau_e.push_back(
        {tau_e, n > 0 ? std::optional<double>(static_cast<double>(certain) / n)
                      : std::nullopt,
         n});
  }
  for (double tau_r : th.tau_r_sweep) {
    int denom = 0;
    const double tau_u = th.tau_u;
    for (const auto& r : records) {
      const double truth = r.true_rul < r_u ? r.true_rul : r_u;
      if (truth <= tau_r && record_uncertainty(r, kind) <= tau_u) ++denom;
    }
    out.precision_low_rul_vs_tau_r.push_back(
        {tau_r, precision_low_rul(records, kind, tau_r, tau_u, th.tau_e, r_u),
         denom});
  }
  return out;
}

struct EvalReport {
  int n = 0;
  double rmse_value = 0.0;
  double score = 0.0;
  Prf prf_esd, prf_ent;                       // at default tau_u, tau_e
  std::optional<double> p_low_esd, p_low_ent; // at default tau_r, tau_u, tau_e
  std::optional<double> c_e_esd, c_e_ent;     // at default tau_e, tau_u
  UncertaintyCurves curves_esd, curves_ent;
  EvalThresholds thresholds;
  double r_u = 130.0;
};

inline EvalReport evaluate_records(std::span<const EvalRecord> records,
                                   const EvalThresholds& th, double r_u) {
  if (records.empty()) throw std::invalid_argument("evaluate_records: no records");
  EvalReport rep;
  rep.n = static_cast<int>(records.size());
  rep.thresholds = th;
  rep.r_u = r_u;
  const std::vector<double> errs = clipped_errors(records, r_u);
  rep.rmse_value = rmse(errs);
  rep.score = timeliness_score(errs, th.tau_1, th.tau_2);
  rep.prf_esd = uncertainty_prf(records, UncertaintyKind::esd, th.tau_u, th.tau_e, r_u);
  rep.prf_ent = uncertainty_prf(records, UncertaintyKind::ent, th.tau_u, th.tau_e, r_u);
  rep.p_low_esd = precision_low_rul(records, UncertaintyKind::esd, th.tau_r,
                                    th.tau_u, th.tau_e, r_u);
  rep.p_low_ent = precision_low_rul(records, UncertaintyKind::ent, th.tau_r,
                                    th.tau_u, th.tau_e, r_u);
  rep.c_e_esd = coverage_ce(records, UncertaintyKind::esd, th.tau_e, th.tau_u, r_u);
  rep.c_e_ent = coverage_ce(records, UncertaintyKind::ent, th.tau_e, th.tau_u, r_u);
  rep.curves_esd = threshold_curves(records, UncertaintyKind::esd, th, r_u);
  rep.curves_ent = threshold_curves(records, UncertaintyKind::ent, th, r_u);
  return rep;
}

// ---------------------------------------------------------------------------
// Instance-level diagnostics

// k train units whose mean prediction vectors lie closest (Euclidean) to the
// test vector; ties broken by unit id. Returns all when fewer than k exist.
inline std::vector<int> nearest_train_instances(
    std::span<const double> test_vector,
    std::span<const std::pair<int, std::vector<double>>> train_vectors,
    int k = 3) {
  std::vector<std::pair<double, int>> dist;
  for (const auto& [unit, vec] : train_vectors) {
    if (vec.size() != test_vector.size())
      throw std::invalid_argument("nearest_train_instances: length mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < vec.size(); ++i) {
      const double d = vec[i] - test_vector[i];
      sq += d * d;
    }
    dist.emplace_back(std::sqrt(sq), unit);
  }
  std::sort(dist.begin(), dist.end());
  if (static_cast<int>(dist.size()) > k) dist.resize(static_cast<std::size_t>(k));
  std::vector<int> out;
  for (const auto& [d, unit] : dist) out.push_back(unit);
  return out;
}

namespace detail {

// Cyclic Jacobi eigen-decomposition for small symmetric matrices; returns
// eigenvalues (diagonal of the rotated matrix) and the rotation product.
inline void jacobi_symmetric(Matrix a, std::vector<double>& eigenvalues,
                             Matrix& eigenvectors) {
  const int n = a.rows;
  eigenvectors = Matrix(n, n);
  for (int i = 0; i < n; ++i) eigenvectors(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-26) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = eigenvectors(i, p), viq = eigenvectors(i, q);
          eigenvectors(i, p) = c * vip - s * viq;
          eigenvectors(i, q) = s * vip + c * viq;
        }
      }
  }
  eigenvalues.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eigenvalues[static_cast<std::size_t>(i)] = a(i, i);
}

}  // namespace detail

// Projects each row of a T x p series onto the first principal component of
// the column-centered data. Sign is fixed so the projected sequence's net
// trend (last minus first) is nonnegative.
inline std::vector<double> pca_first_component(const Matrix& series) {
  if (series.rows < 2)
    throw std::invalid_argument("pca_first_component: need at least 2 rows");
  const int t_len = series.rows, p = series.cols;
  Matrix centered = series;
  for (int c = 0; c < p; ++c) {
    double mu = 0.0;
    for (int r = 0; r < t_len; ++r) mu += series(r, c);
    mu /= t_len;
    for (int r = 0; r < t_len; ++r) centered(r, c) -= mu;
  }
  Matrix cov(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) {
      double s = 0.0;
      for (int r = 0; r < t_len; ++r) s += centered(r, i) * centered(r, j);
      s /= (t_len - 1);
      cov(i, j) = s;
      cov(j, i) = s;
    }
  bool all_zero = true;
  for (double v : cov.data)
    if (v != 0.0) {
      all_zero = false;
      break;
    }
  if (all_zero) return std::vector<double>(static_cast<std::size_t>(t_len), 0.0);

  std::vector<double> eigenvalues;
  Matrix vecs;
  detail::jacobi_symmetric(cov, eigenvalues, vecs);
  int top = 0;
  for (int i = 1; i < p; ++i)
    if (eigenvalues[static_cast<std::size_t>(i)] > eigenvalues[static_cast<std::size_t>(top)]) top = i;

  std::vector<double> proj(static_cast<std::size_t>(t_len), 0.0);
  for (int r = 0; r < t_len; ++r) {
    double s = 0.0;
    for (int c = 0; c < p; ++c) s += centered(r, c) * vecs(c, top);
    proj[static_cast<std::size_t>(r)] = s;
  }
  if (proj.back() - proj.front() < 0.0)
    for (double& v : proj) v = -v;
  return proj;
}

}  // namespace rulkit
