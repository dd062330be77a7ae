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

/// \file trainer.hpp
/// Adam optimisation of encoder + projection head on the contrastive batch
/// objective, and frozen-encoder embedding extraction.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <string>
#include <vector>

#include "auroraclr/augment.hpp"
#include "auroraclr/binary_io.hpp"
#include "auroraclr/data.hpp"
#include "auroraclr/errors.hpp"
#include "auroraclr/loss.hpp"
#include "auroraclr/matrix.hpp"
#include "auroraclr/model.hpp"
#include "auroraclr/rng.hpp"
#include "auroraclr/tensor.hpp"

namespace auroraclr {

struct TrainConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  std::size_t epochs = 40;
  std::size_t batch_size = 8;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("train: betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be non-negative");
    if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
    if (batch_size < 2) throw ConfigError("train: batch_size must be at least 2");
  }
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient (a parameter without a gradient is treated as having zero
// gradient). The learning rate is not validated; lr = 0 advances the moments
// and leaves parameters fixed.
inline void adam_step(std::span<NamedParameter> params, AdamState& state, const TrainConfig& cfg) {
  if (state.m.empty()) {
    for (auto& p : params) {
      state.m.emplace_back(p.value.numel(), 0.0);
      state.v.emplace_back(p.value.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                        " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (state.m[p].size() != params[p].value.numel()) {
      throw ContractError("adam_step: state shape mismatch for " + params[p].name);
    }
    if (params[p].value.has_grad()) {
      for (double g : params[p].value.grad()) {
        if (!std::isfinite(g)) {
          throw NumericError("non-finite gradient for parameter " + params[p].name);
        }
      }
    }
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& value = params[p].value;
    auto theta = value.mutable_data();
    const bool has_grad = value.has_grad();
    const auto grad = value.grad();
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = has_grad ? grad[i] : 0.0;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      if (cfg.weight_decay != 0.0) theta[i] -= cfg.learning_rate * cfg.weight_decay * theta[i];
      theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t batches = 0;
};

struct TrainResult {
  std::vector<double> loss_history;  // mean loss per epoch
  AdamState optimizer;
  std::string rng_state;
};

using EpochCallback = std::function<void(const EpochStats&)>;

inline std::vector<NamedParameter> trainable_parameters(Encoder& enc, const ProjectionHead& head) {
  auto params = enc.parameters();
  for (auto& p : head.parameters()) params.push_back(p);
  return params;
}

// Each epoch shuffles the records, splits them into full minibatches (the
// remainder is dropped), and takes one Adam step per minibatch.
inline TrainResult train(const Dataset& ds, Encoder& enc, ProjectionHead& head,
                         const AugmentConfig& aug, const LossConfig& loss_cfg,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  aug.validate();
  loss_cfg.validate();
  if (aug.output_size != enc.config().input_size) {
    throw ConfigError("augment output_size " + std::to_string(aug.output_size) +
                      " differs from encoder input_size " +
                      std::to_string(enc.config().input_size));
  }
  if (ds.size() < cfg.batch_size) {
    throw ConfigError("dataset has " + std::to_string(ds.size()) +
                      " records, fewer than batch_size " + std::to_string(cfg.batch_size));
  }
  TrainResult result;
  auto params = trainable_parameters(enc, head);
  Rng schedule(cfg.seed);
  std::vector<std::size_t> order(ds.size());
  const std::size_t batches = ds.size() / cfg.batch_size;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::uint64_t epoch_seed = schedule.next_u64();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffler(derive_seed(epoch_seed, 0));
    shuffler.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<const ImageRecord*> members;
      for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        members.push_back(&ds[order[b * cfg.batch_size + i]]);
      }
      Rng batch_rng(derive_seed(epoch_seed, 1, b));
      const PositiveBatch batch =
          make_positive_batch(std::span<const ImageRecord* const>(members), aug, batch_rng);
      TapeScope scope;
      for (auto& p : params) p.value.zero_grad();
      const Tensor h = enc.forward(batch.views, Mode::kTrain);
      const Tensor z = head.forward(h);
      const Tensor loss = ntxent_batch(z, batch.pair_index, loss_cfg);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      backward(loss);
      adam_step(params, result.optimizer, cfg);
      total += value;
    }
    const double mean_loss = total / static_cast<double>(batches);
    result.loss_history.push_back(mean_loss);
    if (on_epoch) on_epoch(EpochStats{epoch, mean_loss, batches});
  }
  for (auto& p : params) p.value.zero_grad();
  result.rng_state = schedule.serialize();
  return result;
}

// ---------------------------------------------------------------------------
// Embeddings

struct EmbeddingSet {
  Matrix embeddings;  // N x d
  std::vector<int> labels;
  std::vector<std::string> source_ids;

  std::size_t size() const { return embeddings.rows; }
  std::size_t dim() const { return embeddings.cols; }

  void validate() const {
    if (labels.size() != embeddings.rows || source_ids.size() != embeddings.rows) {
      throw FormatError("embedding set: row, label and id counts differ");
    }
  }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

// Inference-mode representations of every record, each image resized in
// full to the encoder input size with no augmentation. Row order follows
// the dataset.
inline EmbeddingSet extract_embeddings(Encoder& enc, const Dataset& ds,
                                       std::size_t batch_size = 16) {
  if (batch_size == 0) throw ConfigError("extraction batch size must be positive");
  NoGradGuard no_grad;
  const std::size_t s = enc.config().input_size, plane = s * s;
  if (enc.config().input_channels != 1) {
    throw DimensionError("extract_embeddings: dataset images are single-channel");
  }
  EmbeddingSet out;
  out.embeddings = Matrix(ds.size(), enc.representation_dim());
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, ds.size() - start);
    std::vector<double> views(count * plane);
    for (std::size_t i = 0; i < count; ++i) {
      const Tensor img = resize_full(ds[start + i].pixels, s);
      std::copy(img.data().begin(), img.data().end(),
                views.begin() + static_cast<std::ptrdiff_t>(i * plane));
    }
    const Tensor h = enc.forward(Tensor({count, 1, s, s}, std::move(views)), Mode::kEval);
    std::copy(h.data().begin(), h.data().end(),
              out.embeddings.values.begin() +
                  static_cast<std::ptrdiff_t>(start * out.embeddings.cols));
  }
  for (const auto& rec : ds.records()) {
    out.labels.push_back(rec.label);
    out.source_ids.push_back(rec.source_id);
  }
  return out;
}

// "CREM", u16 version, u32 N, u32 d, N*d f64 row-major, N u8 labels,
// N u32-prefixed ids.
inline constexpr std::uint16_t kEmbeddingVersion = 1;

inline void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  set.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write embeddings " + path.string());
  binio::write_magic(out, "CREM");
  binio::write_le<std::uint16_t>(out, kEmbeddingVersion);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.size()));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim()));
  for (double v : set.embeddings.values) binio::write_le<double>(out, v);
  for (int l : set.labels) binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(l));
  for (const auto& id : set.source_ids) binio::write_string(out, id);
  if (!out) throw InputError("failed writing embeddings " + path.string());
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embeddings " + path.string());
  binio::expect_magic(in, "CREM");
  const auto version = binio::read_le<std::uint16_t>(in, "embedding version");
  if (version != kEmbeddingVersion) {
    throw FormatError("unsupported embedding version " + std::to_string(version));
  }
  const std::size_t n = binio::read_le<std::uint32_t>(in, "row count");
  const std::size_t d = binio::read_le<std::uint32_t>(in, "dimension");
  if (n * d > (1ULL << 32)) throw FormatError("implausible embedding size");
  EmbeddingSet set;
  set.embeddings = Matrix(n, d);
  for (auto& v : set.embeddings.values) v = binio::read_le<double>(in, "embeddings");
  for (std::size_t i = 0; i < n; ++i) set.labels.push_back(binio::read_le<std::uint8_t>(in, "labels"));
  for (std::size_t i = 0; i < n; ++i) set.source_ids.push_back(binio::read_string(in, "ids", 1U << 16));
  return set;
}

inline void write_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "id,label";
  for (std::size_t j = 0; j < set.dim(); ++j) out << ",e" << j;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.source_ids[i] << ',' << set.labels[i];
    for (double v : set.embeddings.row(i)) out << ',' << v;
    out << '\n';
  }
}

inline void write_loss_history_csv(std::span<const double> history,
                                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "epoch,mean_loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < history.size(); ++e) out << e + 1 << ',' << history[e] << '\n';
}

}  // namespace auroraclr
