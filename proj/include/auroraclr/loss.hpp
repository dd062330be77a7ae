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

/// \file loss.hpp
/// Normalized temperature-scaled cross-entropy over a batch of 2N projected
/// views, plus a plain-loop reference evaluation used as a test oracle.
///
/// For a row i with positive partner j and similarities s = cos(z_k, z_i)/tau,
///   l(i, j) = -s_ij + log sum_{k != i} exp(s_ik).
/// The positive term stays inside the denominator; only k == i is excluded.
/// The batch objective averages l over both orderings of every pair.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "auroraclr/augment.hpp"
#include "auroraclr/errors.hpp"
#include "auroraclr/matrix.hpp"
#include "auroraclr/ops.hpp"
#include "auroraclr/tensor.hpp"

namespace auroraclr {

struct LossConfig {
  double temperature = 0.5;

  void validate() const {
    if (!(temperature > 0.0)) throw ConfigError("loss: temperature must be positive");
  }
};

// S[i][j] = cosine similarity of rows i and j of z.
inline Tensor cosine_similarity_matrix(const Tensor& z) {
  const Tensor unit = l2_normalize_rows(z);
  return matmul(unit, transpose(unit));
}

namespace detail {

inline std::vector<std::uint8_t> off_diagonal_mask(std::size_t n) {
  std::vector<std::uint8_t> keep(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) keep[i * n + i] = 0;
  return keep;
}

// Per-row l(i, partner[i]) as an [n] tensor.
inline Tensor ntxent_rows(const Tensor& z, std::span<const std::size_t> partner,
                          const LossConfig& cfg) {
  cfg.validate();
  const Tensor logits = cosine_similarity_matrix(z) / cfg.temperature;
  const auto keep = off_diagonal_mask(z.dim(0));
  return masked_logsumexp_rows(logits, keep) - gather_columns(logits, partner);
}

}  // namespace detail

// l(i, j) for a single ordered pair.
inline Tensor ntxent_pair(const Tensor& z, std::size_t i, std::size_t j, const LossConfig& cfg) {
  if (z.rank() != 2) throw DimensionError("ntxent_pair expects [2N x p] projections");
  const std::size_t n = z.dim(0);
  if (i == j) throw ContractError("ntxent_pair: i and j must differ");
  if (i >= n || j >= n) throw ContractError("ntxent_pair: index out of range");
  std::vector<std::size_t> partner(n);
  for (std::size_t r = 0; r < n; ++r) partner[r] = (r + 1) % n;
  partner[i] = j;
  // All rows are evaluated; row i is selected.
  const Tensor rows = detail::ntxent_rows(z, partner, cfg);
  std::vector<std::size_t> pick{i};
  return gather_columns(reshape(rows, {1, n}), pick);
}

// Mean over all 2N directed pairs (i, pair_index[i]).
inline Tensor ntxent_batch(const Tensor& z, std::span<const std::size_t> pair_index,
                           const LossConfig& cfg) {
  if (z.rank() != 2) throw DimensionError("ntxent_batch expects [2N x p] projections");
  if (pair_index.size() != z.dim(0) || !is_pairing_involution(pair_index)) {
    throw ContractError("ntxent_batch: pair_index is not a fixed-point-free involution over " +
                        std::to_string(z.dim(0)) + " rows");
  }
  return mean(detail::ntxent_rows(z, pair_index, cfg));
}

// Straight transcription of the per-pair loss and its batch mean with
// explicit loops: no tape, no log-sum-exp shift.
inline double ntxent_oracle(const Matrix& z, std::span<const std::size_t> pair_index,
                            double temperature) {
  if (z.rows != pair_index.size() || !is_pairing_involution(pair_index)) {
    throw ContractError("ntxent_oracle: invalid pairing");
  }
  if (!(temperature > 0.0)) throw ConfigError("ntxent_oracle: temperature must be positive");
  auto sim = [&](std::size_t a, std::size_t b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < z.cols; ++c) {
      dot += z(a, c) * z(b, c);
      na += z(a, c) * z(a, c);
      nb += z(b, c) * z(b, c);
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows; ++i) {
    const std::size_t j = pair_index[i];
    double denom = 0.0;
    for (std::size_t k = 0; k < z.rows; ++k) {
      if (k != i) denom += std::exp(sim(k, i) / temperature);
    }
    total += -std::log(std::exp(sim(i, j) / temperature) / denom);
  }
  return total / static_cast<double>(z.rows);
}

}  // namespace auroraclr
