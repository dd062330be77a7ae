// Copyright 2026 The auroraclr Authors.
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

// Independent reference implementations used as test oracles. None of these
// call into the library's kernels; they are deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "auroraclr/ops.hpp"
#include "auroraclr/rng.hpp"

namespace auroraclr::oracle {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

// Direct six-loop cross-correlation with zero padding.
inline std::vector<double> conv2d(const std::vector<double>& in, std::size_t b, std::size_t cin,
                                  std::size_t h, std::size_t w, const std::vector<double>& k,
                                  std::size_t cout, std::size_t kh, std::size_t kw,
                                  std::size_t stride, std::size_t pad) {
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<double> out(b * cout * oh * ow, 0.0);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          double s = 0.0;
          for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j) {
                const long yy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                const long xx = static_cast<long>(x * stride + j) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) {
                  continue;
                }
                s += in[((n * cin + c) * h + static_cast<std::size_t>(yy)) * w +
                        static_cast<std::size_t>(xx)] *
                     k[((o * cin + c) * kh + i) * kw + j];
              }
          out[((n * cout + o) * oh + y) * ow + x] = s;
        }
  return out;
}

// NT-Xent written as the mean of -log(softmax) over directed positive pairs,
// with the similarity computed from explicit norms.
inline double ntxent(const std::vector<std::vector<double>>& z,
                     const std::vector<std::size_t>& partner, double tau) {
  const std::size_t n = z.size();
  if (n == 0) return 0.0;
  std::vector<std::vector<double>> s(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (std::size_t c = 0; c < z[i].size(); ++c) {
        dot += z[i][c] * z[j][c];
        ni += z[i][c] * z[i][c];
        nj += z[j][c] * z[j][c];
      }
      s[i][j] = dot / (std::sqrt(ni) * std::sqrt(nj));
    }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) denom += std::exp(s[i][k] / tau);
    }
    total += -std::log(std::exp(s[i][partner[i]] / tau) / denom);
  }
  return total / static_cast<double>(n);
}

// Smallest sample value v with at least p% of the sample at or below v.
inline double percentile_by_count(const std::vector<double>& values, double p) {
  std::vector<double> candidates = values;
  std::sort(candidates.begin(), candidates.end());
  const double n = static_cast<double>(values.size());
  for (double v : candidates) {
    const auto at_or_below = std::count_if(values.begin(), values.end(), [v](double x) { return x <= v; });
    if (100.0 * static_cast<double>(at_or_below) >= p * n) return v;
  }
  return candidates.back();
}

// Minimum within-cluster sum of squares over every assignment of the points
// to at most k labels.
inline double exhaustive_kmeans_inertia(const std::vector<std::vector<double>>& pts, std::size_t k) {
  const std::size_t n = pts.size(), d = pts[0].size();
  std::vector<std::size_t> label(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    double inertia = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> centroid(d, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != c) continue;
        ++count;
        for (std::size_t j = 0; j < d; ++j) centroid[j] += pts[i][j];
      }
      if (count == 0) continue;
      for (double& v : centroid) v /= static_cast<double>(count);
      for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != c) continue;
        for (std::size_t j = 0; j < d; ++j) inertia += (pts[i][j] - centroid[j]) * (pts[i][j] - centroid[j]);
      }
    }
    best = std::min(best, inertia);
    std::size_t pos = 0;
    while (pos < n && ++label[pos] == k) label[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

// Silhouette from its textbook definition over Euclidean distances.
inline double silhouette(const std::vector<std::vector<double>>& pts,
                         const std::vector<std::size_t>& label) {
  const std::size_t n = pts.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t c = 0; c < pts[i].size(); ++c) s += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
    return std::sqrt(s);
  };
  std::size_t k = 0;
  for (auto l : label) k = std::max(k, l + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[label[j]] += dist(i, j);
      ++cnt[label[j]];
    }
    if (cnt[label[i]] == 0) continue;  // singleton scores 0
    const double a = sum[label[i]] / static_cast<double>(cnt[label[i]]);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != label[i] && cnt[c] > 0) b = std::min(b, sum[c] / static_cast<double>(cnt[c]));
    }
    if (std::max(a, b) > 0) total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace auroraclr::oracle
