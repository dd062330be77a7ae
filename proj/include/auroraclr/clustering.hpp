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

/// \file clustering.hpp
/// K-means (k-means++ seeding, Lloyd iterations, best of several restarts),
/// mean silhouette scores, the silhouette sweep over k, and the
/// cluster-versus-label cross tabulation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "auroraclr/errors.hpp"
#include "auroraclr/matrix.hpp"
#include "auroraclr/rng.hpp"

namespace auroraclr {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct KMeansResult {
  std::size_t k = 0;
  Matrix centroids;                 // k x d
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::vector<double> inertia_history;  // after every assignment step
};

namespace detail {

inline std::size_t nearest_centroid(std::span<const double> p, const Matrix& centroids,
                                    double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double d = squared_distance(p, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

inline Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows;
  Matrix centroids(k, points.cols);
  auto copy_row = [&](std::size_t c, std::size_t p) {
    std::copy(points.row(p).begin(), points.row(p).end(), centroids.row(c).begin());
  };
  copy_row(0, static_cast<std::size_t>(rng.uniform_int(n)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(rng.uniform_int(n));
    } else {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        if (target < d2[i]) {
          pick = i;
          break;
        }
        target -= d2[i];
      }
      while (d2[pick] <= 0.0 && pick > 0) --pick;  // rounding at the tail
    }
    copy_row(c, pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
    }
  }
  return centroids;
}

inline double assign_points(const Matrix& points, const Matrix& centroids,
                            std::vector<std::size_t>& assignments) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    double d = 0.0;
    assignments[i] = nearest_centroid(points.row(i), centroids, &d);
    inertia += d;
  }
  return inertia;
}

}  // namespace detail

// Single k-means run: k-means++ seeding then Lloyd iterations until the
// assignments stop changing or max_iter is reached. A centroid left without
// points is moved onto the point farthest from its own centroid.
inline KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = 300) {
  const std::size_t n = points.rows, d = points.cols;
  if (k < 1) throw ContractError("kmeans: k must be at least 1");
  if (n < k) {
    throw ContractError("kmeans: " + std::to_string(n) + " points cannot form " +
                        std::to_string(k) + " clusters");
  }
  for (double v : points.values)
    if (!std::isfinite(v)) throw InputError("kmeans: non-finite coordinate");
  Rng rng(seed);
  KMeansResult r;
  r.k = k;
  r.centroids = detail::kmeans_plus_plus(points, k, rng);
  r.assignments.assign(n, 0);
  std::vector<std::size_t> previous;
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
    r.inertia = detail::assign_points(points, r.centroids, r.assignments);
    r.inertia_history.push_back(r.inertia);
    r.iterations_run = iter + 1;
    if (r.assignments == previous) break;
    previous = r.assignments;

    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = r.assignments[i];
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums(c, j) += points(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) r.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dd = squared_distance(points.row(i), r.centroids.row(r.assignments[i]));
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      std::copy(points.row(far).begin(), points.row(far).end(), r.centroids.row(c).begin());
    }
    if (iter + 1 == max_iter) {
      r.inertia = detail::assign_points(points, r.centroids, r.assignments);
      r.inertia_history.push_back(r.inertia);
    }
  }
  return r;
}

// Best inertia over `restarts` independently seeded runs (first wins ties).
inline KMeansResult kmeans_best_of(const Matrix& points, std::size_t k, std::uint64_t seed,
                                   std::size_t restarts = 10, std::size_t max_iter = 300) {
  if (restarts < 1) throw ConfigError("kmeans: restarts must be at least 1");
  std::optional<KMeansResult> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    KMeansResult run = kmeans(points, k, derive_seed(seed, k, r), max_iter);
    if (!best || run.inertia < best->inertia) best = std::move(run);
  }
  return std::move(*best);
}

// Full pairwise Euclidean distance matrix (symmetric, zero diagonal).
inline Matrix pairwise_distances(const Matrix& points) {
  const std::size_t n = points.rows;
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::sqrt(squared_distance(points.row(i), points.row(j)));
      dist(i, j) = v;
      dist(j, i) = v;
    }
  return dist;
}

// Mean silhouette from precomputed distances. Members of singleton clusters
// score 0, as do points with a == b == 0.
inline double silhouette_from_distances(const Matrix& dist, std::span<const std::size_t> assignments) {
  const std::size_t n = dist.rows;
  if (assignments.size() != n) throw DimensionError("silhouette: one assignment per point required");
  std::size_t k = 0;
  for (auto a : assignments) k = std::max(k, a + 1);
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) ++sizes[a];
  std::size_t nonempty = 0;
  for (auto s : sizes) nonempty += s > 0 ? 1 : 0;
  if (nonempty < 2) throw ContractError("silhouette is undefined for fewer than 2 clusters");
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = assignments[i];
    if (sizes[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sums[assignments[j]] += dist(i, j);
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

inline double silhouette_mean(const Matrix& points, std::span<const std::size_t> assignments) {
  if (assignments.size() != points.rows) {
    throw DimensionError("silhouette: one assignment per point required");
  }
  return silhouette_from_distances(pairwise_distances(points), assignments);
}

inline double silhouette_for_labels(const Matrix& points, std::span<const int> labels) {
  std::vector<std::size_t> a;
  a.reserve(labels.size());
  for (int l : labels) {
    if (l < 0) throw ContractError("silhouette: negative label");
    a.push_back(static_cast<std::size_t>(l));
  }
  return silhouette_mean(points, a);
}

struct CrossTab {
  std::size_t num_labels = 0, num_clusters = 0;
  std::vector<std::vector<std::size_t>> counts;               // [label][cluster]
  std::vector<std::vector<std::vector<std::string>>> samples;  // up to m ids per cell

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
      for (auto v : row) t += v;
    return t;
  }
};

inline CrossTab cluster_label_crosstab(std::span<const std::size_t> assignments,
                                       std::span<const int> labels, std::size_t k,
                                       std::size_t num_labels,
                                       std::span<const std::string> ids = {},
                                       std::size_t samples_per_cell = 0) {
  if (assignments.size() != labels.size()) {
    throw DimensionError("crosstab: assignments and labels differ in length");
  }
  if (!ids.empty() && ids.size() != labels.size()) {
    throw DimensionError("crosstab: ids and labels differ in length");
  }
  CrossTab t;
  t.num_labels = num_labels;
  t.num_clusters = k;
  t.counts.assign(num_labels, std::vector<std::size_t>(k, 0));
  t.samples.assign(num_labels, std::vector<std::vector<std::string>>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_labels || assignments[i] >= k) {
      throw ContractError("crosstab: index out of range at row " + std::to_string(i));
    }
    const auto l = static_cast<std::size_t>(labels[i]);
    ++t.counts[l][assignments[i]];
    auto& cell = t.samples[l][assignments[i]];
    if (!ids.empty() && cell.size() < samples_per_cell) cell.push_back(ids[i]);
  }
  return t;
}

struct SilhouetteRow {
  std::size_t k = 0;
  double mean_silhouette = 0.0;
  double inertia = 0.0;
};

struct ClusterReport {
  std::vector<SilhouetteRow> per_k;
  std::size_t best_k = 0;
  KMeansResult best;
  std::optional<double> label_silhouette;
  std::optional<CrossTab> crosstab;
};

struct SweepOptions {
  std::size_t k_min = 3;
  std::size_t k_max = 15;
  std::uint64_t seed = 42;
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  std::size_t samples_per_cell = 5;
};

// K-means and mean silhouette for every k in [k_min, k_max]; best_k is the
// highest silhouette (smaller k on ties). When labels are given the report
// also carries the label silhouette and the crosstab for best_k.
inline ClusterReport silhouette_sweep(const Matrix& points, const SweepOptions& opt,
                                      std::span<const int> labels = {},
                                      std::span<const std::string> ids = {}) {
  if (opt.k_min < 2 || opt.k_max < opt.k_min) {
    throw ConfigError("silhouette sweep needs 2 <= k_min <= k_max");
  }
  if (points.rows < opt.k_max) {
    throw ContractError("silhouette sweep: " + std::to_string(points.rows) +
                        " points, fewer than k_max " + std::to_string(opt.k_max));
  }
  const Matrix dist = pairwise_distances(points);
  ClusterReport report;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = opt.k_min; k <= opt.k_max; ++k) {
    KMeansResult km = kmeans_best_of(points, k, opt.seed, opt.restarts, opt.max_iter);
    std::set<std::size_t> used(km.assignments.begin(), km.assignments.end());
    const double score = used.size() >= 2 ? silhouette_from_distances(dist, km.assignments) : 0.0;
    report.per_k.push_back({k, score, km.inertia});
    if (score > best_score) {
      best_score = score;
      report.best_k = k;
      report.best = std::move(km);
    }
  }
  if (!labels.empty()) {
    if (labels.size() != points.rows) throw DimensionError("sweep: one label per point required");
    std::vector<std::size_t> as_clusters;
    std::size_t num_labels = 0;
    for (int l : labels) {
      if (l < 0) throw ContractError("sweep: negative label");
      as_clusters.push_back(static_cast<std::size_t>(l));
      num_labels = std::max(num_labels, static_cast<std::size_t>(l) + 1);
    }
    std::set<std::size_t> distinct(as_clusters.begin(), as_clusters.end());
    if (distinct.size() >= 2) report.label_silhouette = silhouette_from_distances(dist, as_clusters);
    report.crosstab = cluster_label_crosstab(report.best.assignments, labels, report.best_k,
                                             num_labels, ids, opt.samples_per_cell);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report output

inline void write_sweep_csv(const ClusterReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "k,mean_silhouette\n" << std::setprecision(17);
  for (const auto& row : r.per_k) out << row.k << ',' << row.mean_silhouette << '\n';
}

inline void write_assignments_csv(const ClusterReport& r, std::span<const std::string> ids,
                                  std::span<const int> labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "id,label,cluster\n";
  for (std::size_t i = 0; i < r.best.assignments.size(); ++i) {
    out << ids[i] << ',' << labels[i] << ',' << r.best.assignments[i] << '\n';
  }
}

inline void write_crosstab_csv(const CrossTab& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "label\\cluster";
  for (std::size_t c = 0; c < t.num_clusters; ++c) out << ',' << c;
  out << '\n';
  for (std::size_t l = 0; l < t.num_labels; ++l) {
    out << l;
    for (auto v : t.counts[l]) out << ',' << v;
    out << '\n';
  }
}

inline void write_crosstab_samples(const CrossTab& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t l = 0; l < t.num_labels; ++l)
    for (std::size_t c = 0; c < t.num_clusters; ++c) {
      if (t.counts[l][c] == 0) continue;
      out << "G: " << l << " S: " << c << " (" << t.counts[l][c] << ")";
      for (const auto& id : t.samples[l][c]) out << ' ' << id;
      out << '\n';
    }
}

}  // namespace auroraclr
