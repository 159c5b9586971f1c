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
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rulkit {

using Vector = std::vector<double>;

// Dense row-major matrix. Small enough here (h <= 100, p <= 27) that plain
// loops with manual unrolling beat any external dependency.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const {
    return data.data() + static_cast<std::size_t>(r) * cols;
  }
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  std::size_t size() const { return data.size(); }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool operator==(const Matrix&) const = default;
};

// y = W x + b. Four independent accumulators per row keep the FP dependency
// chain short; the summation order is fixed, so results stay deterministic.
inline void matvec_add(const Matrix& w, const double* x, const double* b,
                       double* y) {
  const int n = w.cols;
  const int n4 = n & ~3;
  for (int r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int c = 0;
    for (; c < n4; c += 4) {
      s0 += wr[c] * x[c];
      s1 += wr[c + 1] * x[c + 1];
      s2 += wr[c + 2] * x[c + 2];
      s3 += wr[c + 3] * x[c + 3];
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; c < n; ++c) s += wr[c] * x[c];
    y[r] = s + (b ? b[r] : 0.0);
  }
}

// y += W^T a
inline void mat_t_vec_acc(const Matrix& w, const double* a, double* y) {
  for (int r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    const double ar = a[r];
    for (int c = 0; c < w.cols; ++c) y[c] += ar * wr[c];
  }
}

// A += a v^T
inline void outer_acc(Matrix& acc, const double* a, const double* v) {
  for (int r = 0; r < acc.rows; ++r) {
    double* ar = acc.row(r);
    const double s = a[r];
    for (int c = 0; c < acc.cols; ++c) ar[c] += s * v[c];
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty range");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace rulkit
