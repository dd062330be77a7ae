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

/// \file model.hpp
/// Residual convolutional encoder, bias-free projection head, and the
/// binary checkpoint format.
///
/// Encoder layout: stem conv -> [norm] -> relu -> [max pool] -> stages of
/// residual blocks -> global average pool. The first block of every stage
/// after the first halves the spatial size and uses a 1x1 projection
/// shortcut when the shape changes.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "auroraclr/binary_io.hpp"
#include "auroraclr/errors.hpp"
#include "auroraclr/ops.hpp"
#include "auroraclr/rng.hpp"
#include "auroraclr/tensor.hpp"
#include <nlohmann/json.hpp>

namespace auroraclr {

struct EncoderConfig {
  std::vector<std::size_t> stage_channels{8, 16, 32};
  std::vector<std::size_t> blocks_per_stage{1, 1, 1};
  std::size_t input_size = 48;
  std::size_t input_channels = 1;
  std::size_t stem_kernel = 3;
  std::size_t stem_stride = 1;
  bool stem_max_pool = false;
  bool batch_norm = true;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  std::size_t representation_dim() const { return stage_channels.back(); }

  // ImageNet-style ResNet18 layout on single-channel input.
  static EncoderConfig resnet18(std::size_t input_size = 224) {
    EncoderConfig cfg;
    cfg.stage_channels = {64, 128, 256, 512};
    cfg.blocks_per_stage = {2, 2, 2, 2};
    cfg.input_size = input_size;
    cfg.stem_kernel = 7;
    cfg.stem_stride = 2;
    cfg.stem_max_pool = true;
    return cfg;
  }

  // Spatial side after the stem and after each stage.
  std::vector<std::size_t> feature_sizes() const {
    std::vector<std::size_t> sizes;
    std::size_t s = input_size;
    const std::size_t pad = stem_kernel / 2;
    if (s + 2 * pad < stem_kernel) return {};
    s = (s + 2 * pad - stem_kernel) / stem_stride + 1;
    if (stem_max_pool) {
      if (s < 2) return {};
      s = (s + 2 - 3) / 2 + 1;
    }
    sizes.push_back(s);
    for (std::size_t stage = 0; stage < stage_channels.size(); ++stage) {
      if (stage > 0) {
        if (s < 2) return {};
        s = (s + 2 - 3) / 2 + 1;
      }
      sizes.push_back(s);
    }
    return sizes;
  }

  void validate() const {
    if (stage_channels.empty() || stage_channels.size() != blocks_per_stage.size()) {
      throw ConfigError("encoder: stage_channels and blocks_per_stage must be non-empty and equal length");
    }
    for (auto c : stage_channels)
      if (c == 0) throw ConfigError("encoder: zero channel width");
    for (auto b : blocks_per_stage)
      if (b == 0) throw ConfigError("encoder: every stage needs at least one block");
    if (input_channels == 0 || stem_kernel == 0 || stem_kernel % 2 == 0 || stem_stride == 0) {
      throw ConfigError("encoder: stem kernel must be odd and stride positive");
    }
    if (input_size == 0 || feature_sizes().empty()) {
      throw ConfigError("encoder: input_size " + std::to_string(input_size) +
                        " too small for the downsampling chain");
    }
    if (!(bn_eps > 0.0) || !(bn_momentum >= 0.0 && bn_momentum <= 1.0)) {
      throw ConfigError("encoder: invalid normalization constants");
    }
  }
};

struct HeadConfig {
  std::size_t hidden_dim = 0;  // 0 means "same as the representation dim"
  std::size_t projection_dim = 64;
};

enum class Mode { kTrain, kEval };

struct NamedParameter {
  std::string name;
  Tensor value;
};

struct NamedBuffer {
  std::string name;
  std::vector<double>* values;
};

namespace layers {

inline Tensor kaiming_normal(Shape shape, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  const auto n = shape_numel(shape);
  std::vector<double> values(n);
  for (auto& v : values) v = rng.normal(0.0, stddev);
  return Tensor(std::move(shape), std::move(values), true);
}

struct Conv {
  Tensor weight;  // [cout x cin x k x k]
  std::size_t stride = 1;
  std::size_t padding = 0;

  Conv() = default;
  Conv(std::size_t cin, std::size_t cout, std::size_t kernel, std::size_t stride_, Rng& rng)
      : weight(kaiming_normal({cout, cin, kernel, kernel}, cin * kernel * kernel, rng)),
        stride(stride_),
        padding(kernel / 2) {}

  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, stride, padding); }
};

struct BatchNorm {
  Tensor gamma, beta;
  std::vector<double> running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm() = default;
  BatchNorm(std::size_t channels, double momentum_, double eps_)
      : gamma(Tensor::full({channels}, 1.0, true)),
        beta(Tensor::zeros({channels}, true)),
        running_mean(channels, 0.0),
        running_var(channels, 1.0),
        momentum(momentum_),
        eps(eps_) {}

  Tensor operator()(const Tensor& x, Mode mode) {
    if (mode == Mode::kEval) {
      return batch_norm_eval(x, gamma, beta, running_mean, running_var, eps);
    }
    BatchStatistics stats;
    Tensor y = batch_norm_train(x, gamma, beta, eps, &stats);
    // Running variance tracks the unbiased estimate.
    const double unbias = stats.count > 1 ? static_cast<double>(stats.count) /
                                                static_cast<double>(stats.count - 1)
                                          : 1.0;
    for (std::size_t c = 0; c < running_mean.size(); ++c) {
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * stats.mean[c];
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * stats.variance[c] * unbias;
    }
    return y;
  }
};

struct ResidualBlock {
  Conv conv1, conv2;
  std::optional<BatchNorm> bn1, bn2;
  std::optional<Conv> shortcut;
  std::optional<BatchNorm> shortcut_bn;

  Tensor operator()(const Tensor& x, Mode mode) {
    Tensor y = conv1(x);
    if (bn1) y = (*bn1)(y, mode);
    y = relu(y);
    y = conv2(y);
    if (bn2) y = (*bn2)(y, mode);
    Tensor skip = x;
    if (shortcut) {
      skip = (*shortcut)(x);
      if (shortcut_bn) skip = (*shortcut_bn)(skip, mode);
    }
    return relu(y + skip);
  }
};

}  // namespace layers

class Encoder {
 public:
  Encoder(EncoderConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    const bool bn = cfg_.batch_norm;
    stem_ = layers::Conv(cfg_.input_channels, cfg_.stage_channels[0], cfg_.stem_kernel,
                         cfg_.stem_stride, rng);
    if (bn) stem_bn_.emplace(cfg_.stage_channels[0], cfg_.bn_momentum, cfg_.bn_eps);
    std::size_t in = cfg_.stage_channels[0];
    for (std::size_t stage = 0; stage < cfg_.stage_channels.size(); ++stage) {
      const std::size_t out = cfg_.stage_channels[stage];
      for (std::size_t b = 0; b < cfg_.blocks_per_stage[stage]; ++b) {
        const std::size_t stride = (stage > 0 && b == 0) ? 2 : 1;
        layers::ResidualBlock block;
        block.conv1 = layers::Conv(in, out, 3, stride, rng);
        block.conv2 = layers::Conv(out, out, 3, 1, rng);
        if (bn) {
          block.bn1.emplace(out, cfg_.bn_momentum, cfg_.bn_eps);
          block.bn2.emplace(out, cfg_.bn_momentum, cfg_.bn_eps);
        }
        if (stride != 1 || in != out) {
          block.shortcut = layers::Conv(in, out, 1, stride, rng);
          if (bn) block.shortcut_bn.emplace(out, cfg_.bn_momentum, cfg_.bn_eps);
        }
        blocks_.push_back(std::move(block));
        block_names_.push_back("stage" + std::to_string(stage) + ".block" + std::to_string(b));
        in = out;
      }
    }
  }

  const EncoderConfig& config() const { return cfg_; }
  std::size_t representation_dim() const { return cfg_.representation_dim(); }

  // views: [B x input_channels x input_size x input_size] -> [B x representation_dim]
  Tensor forward(const Tensor& views, Mode mode) {
    if (views.rank() != 4 || views.dim(1) != cfg_.input_channels ||
        views.dim(2) != cfg_.input_size || views.dim(3) != cfg_.input_size) {
      throw DimensionError("encoder expects [B x " + std::to_string(cfg_.input_channels) + " x " +
                           std::to_string(cfg_.input_size) + " x " +
                           std::to_string(cfg_.input_size) + "], got " +
                           shape_str(views.shape()));
    }
    Tensor x = stem_(views);
    if (stem_bn_) x = (*stem_bn_)(x, mode);
    x = relu(x);
    if (cfg_.stem_max_pool) x = max_pool2d(x, 3, 2, 1);
    for (auto& block : blocks_) x = block(x, mode);
    return global_avg_pool(x);
  }

  std::vector<NamedParameter> parameters() {
    std::vector<NamedParameter> out;
    out.push_back({"stem.conv", stem_.weight});
    if (stem_bn_) {
      out.push_back({"stem.bn.gamma", stem_bn_->gamma});
      out.push_back({"stem.bn.beta", stem_bn_->beta});
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      auto& b = blocks_[i];
      const auto& p = block_names_[i];
      out.push_back({p + ".conv1", b.conv1.weight});
      if (b.bn1) {
        out.push_back({p + ".bn1.gamma", b.bn1->gamma});
        out.push_back({p + ".bn1.beta", b.bn1->beta});
      }
      out.push_back({p + ".conv2", b.conv2.weight});
      if (b.bn2) {
        out.push_back({p + ".bn2.gamma", b.bn2->gamma});
        out.push_back({p + ".bn2.beta", b.bn2->beta});
      }
      if (b.shortcut) out.push_back({p + ".shortcut", b.shortcut->weight});
      if (b.shortcut_bn) {
        out.push_back({p + ".shortcut_bn.gamma", b.shortcut_bn->gamma});
        out.push_back({p + ".shortcut_bn.beta", b.shortcut_bn->beta});
      }
    }
    return out;
  }

  // Non-trainable state (normalization running statistics).
  std::vector<NamedBuffer> buffers() {
    std::vector<NamedBuffer> out;
    auto add = [&out](const std::string& prefix, std::optional<layers::BatchNorm>& bn) {
      if (!bn) return;
      out.push_back({prefix + ".running_mean", &bn->running_mean});
      out.push_back({prefix + ".running_var", &bn->running_var});
    };
    add("stem.bn", stem_bn_);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      add(block_names_[i] + ".bn1", blocks_[i].bn1);
      add(block_names_[i] + ".bn2", blocks_[i].bn2);
      add(block_names_[i] + ".shortcut_bn", blocks_[i].shortcut_bn);
    }
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto& p : parameters()) n += p.value.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : parameters()) p.value.zero_grad();
  }

 private:
  EncoderConfig cfg_;
  layers::Conv stem_;
  std::optional<layers::BatchNorm> stem_bn_;
  std::vector<layers::ResidualBlock> blocks_;
  std::vector<std::string> block_names_;
};

// g(h) = relu(h W1) W2 applied row-wise; there are no bias terms.
class ProjectionHead {
 public:
  ProjectionHead(std::size_t representation_dim, const HeadConfig& cfg, std::uint64_t seed) {
    const std::size_t hidden = cfg.hidden_dim == 0 ? representation_dim : cfg.hidden_dim;
    if (representation_dim == 0 || cfg.projection_dim == 0) {
      throw ConfigError("projection head dimensions must be positive");
    }
    Rng rng(seed);
    w1_ = layers::kaiming_normal({representation_dim, hidden}, representation_dim, rng);
    w2_ = layers::kaiming_normal({hidden, cfg.projection_dim}, hidden, rng);
  }

  ProjectionHead(Tensor w1, Tensor w2) : w1_(std::move(w1)), w2_(std::move(w2)) {
    if (w1_.rank() != 2 || w2_.rank() != 2 || w1_.dim(1) != w2_.dim(0)) {
      throw DimensionError("projection head weights " + shape_str(w1_.shape()) + " and " +
                           shape_str(w2_.shape()) + " do not chain");
    }
  }

  std::size_t input_dim() const { return w1_.dim(0); }
  std::size_t hidden_dim() const { return w1_.dim(1); }
  std::size_t projection_dim() const { return w2_.dim(1); }

  Tensor forward(const Tensor& h) const {
    if (h.rank() != 2 || h.dim(1) != input_dim()) {
      throw DimensionError("projection head expects [B x " + std::to_string(input_dim()) +
                           "], got " + shape_str(h.shape()));
    }
    return matmul(relu(matmul(h, w1_)), w2_);
  }

  std::vector<NamedParameter> parameters() const { return {{"head.w1", w1_}, {"head.w2", w2_}}; }

  void zero_grad() {
    w1_.zero_grad();
    w2_.zero_grad();
  }

 private:
  Tensor w1_, w2_;
};

inline Tensor encode(Encoder& enc, const Tensor& views, Mode mode = Mode::kTrain) {
  return enc.forward(views, mode);
}

inline Tensor project(const ProjectionHead& head, const Tensor& h) { return head.forward(h); }

// ---------------------------------------------------------------------------
// Checkpoints: "CRCK", u16 version, u32-prefixed JSON config, u32 entry
// count, per entry (u32-prefixed name, u32 rank, u32 dims..., f64 data),
// u32-prefixed rng state, u32 epoch.

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> data;
  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

struct ModelCheckpoint {
  EncoderConfig encoder;
  HeadConfig head;
  std::vector<NamedArray> parameters;  // trainable tensors and buffers
  std::string rng_state;
  std::uint32_t epoch = 0;
  std::string run_config;  // free-form resolved configuration text
};

inline nlohmann::json config_to_json(const EncoderConfig& e, const HeadConfig& h) {
  nlohmann::json j;
  j["encoder"] = {{"stage_channels", e.stage_channels},
                  {"blocks_per_stage", e.blocks_per_stage},
                  {"input_size", e.input_size},
                  {"input_channels", e.input_channels},
                  {"stem_kernel", e.stem_kernel},
                  {"stem_stride", e.stem_stride},
                  {"stem_max_pool", e.stem_max_pool},
                  {"batch_norm", e.batch_norm},
                  {"bn_momentum", e.bn_momentum},
                  {"bn_eps", e.bn_eps}};
  j["head"] = {{"hidden_dim", h.hidden_dim}, {"projection_dim", h.projection_dim}};
  return j;
}

inline void config_from_json(const nlohmann::json& j, EncoderConfig& e, HeadConfig& h) {
  try {
    const auto& je = j.at("encoder");
    e.stage_channels = je.at("stage_channels").get<std::vector<std::size_t>>();
    e.blocks_per_stage = je.at("blocks_per_stage").get<std::vector<std::size_t>>();
    e.input_size = je.at("input_size").get<std::size_t>();
    e.input_channels = je.at("input_channels").get<std::size_t>();
    e.stem_kernel = je.at("stem_kernel").get<std::size_t>();
    e.stem_stride = je.at("stem_stride").get<std::size_t>();
    e.stem_max_pool = je.at("stem_max_pool").get<bool>();
    e.batch_norm = je.at("batch_norm").get<bool>();
    e.bn_momentum = je.at("bn_momentum").get<double>();
    e.bn_eps = je.at("bn_eps").get<double>();
    const auto& jh = j.at("head");
    h.hidden_dim = jh.at("hidden_dim").get<std::size_t>();
    h.projection_dim = jh.at("projection_dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("invalid checkpoint config: ") + ex.what());
  }
}

inline ModelCheckpoint capture_checkpoint(Encoder& enc, const ProjectionHead& head,
                                          const HeadConfig& head_cfg, std::string rng_state,
                                          std::uint32_t epoch) {
  ModelCheckpoint ck;
  ck.encoder = enc.config();
  ck.head = head_cfg;
  for (auto& p : enc.parameters()) {
    ck.parameters.push_back(
        {p.name, p.value.shape(), {p.value.data().begin(), p.value.data().end()}});
  }
  for (auto& b : enc.buffers()) {
    ck.parameters.push_back({b.name, {b.values->size()}, *b.values});
  }
  for (auto& p : head.parameters()) {
    ck.parameters.push_back(
        {p.name, p.value.shape(), {p.value.data().begin(), p.value.data().end()}});
  }
  ck.rng_state = std::move(rng_state);
  ck.epoch = epoch;
  return ck;
}

// Copies checkpoint values into an existing model. Every model tensor must
// be present with an identical shape, and the checkpoint may not carry extras.
inline void restore_checkpoint(const ModelCheckpoint& ck, Encoder& enc, ProjectionHead& head) {
  std::size_t used = 0;
  auto find = [&](const std::string& name) -> const NamedArray& {
    for (const auto& a : ck.parameters)
      if (a.name == name) return a;
    throw FormatError("checkpoint is missing tensor '" + name + "'");
  };
  auto copy_into = [&](const std::string& name, const Shape& shape, std::span<double> dst) {
    const NamedArray& a = find(name);
    if (a.shape != shape) {
      throw FormatError("shape disagreement for '" + name + "': checkpoint " + shape_str(a.shape) +
                        ", model " + shape_str(shape));
    }
    std::copy(a.data.begin(), a.data.end(), dst.begin());
    ++used;
  };
  for (auto& p : enc.parameters()) copy_into(p.name, p.value.shape(), p.value.mutable_data());
  for (auto& b : enc.buffers()) copy_into(b.name, {b.values->size()}, *b.values);
  for (auto& p : head.parameters()) {
    Tensor t = p.value;
    copy_into(p.name, t.shape(), t.mutable_data());
  }
  if (used != ck.parameters.size()) {
    throw FormatError("checkpoint carries tensors the model does not have");
  }
}

inline void save_checkpoint(const ModelCheckpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  binio::write_magic(out, "CRCK");
  binio::write_le<std::uint16_t>(out, kCheckpointVersion);
  nlohmann::json cfg = config_to_json(ck.encoder, ck.head);
  cfg["run_config"] = ck.run_config;
  binio::write_string(out, cfg.dump());
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ck.parameters.size()));
  for (const auto& a : ck.parameters) {
    binio::write_string(out, a.name);
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : a.data) binio::write_le<double>(out, v);
  }
  binio::write_string(out, ck.rng_state);
  binio::write_le<std::uint32_t>(out, ck.epoch);
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

inline ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  binio::expect_magic(in, "CRCK");
  const auto version = binio::read_le<std::uint16_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelCheckpoint ck;
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(binio::read_string(in, "config"));
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("checkpoint config is not valid JSON: ") + ex.what());
  }
  config_from_json(cfg, ck.encoder, ck.head);
  if (cfg.contains("run_config") && cfg["run_config"].is_string()) {
    ck.run_config = cfg["run_config"].get<std::string>();
  }
  const auto count = binio::read_le<std::uint32_t>(in, "parameter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = binio::read_string(in, "parameter name", 1U << 16);
    const auto rank = binio::read_le<std::uint32_t>(in, "parameter rank");
    if (rank > 8) throw FormatError("implausible rank for '" + a.name + "'");
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.shape.push_back(binio::read_le<std::uint32_t>(in, "parameter shape"));
    }
    const auto n = shape_numel(a.shape);
    if (n > (1ULL << 32)) throw FormatError("implausible size for '" + a.name + "'");
    a.data.resize(n);
    for (auto& v : a.data) v = binio::read_le<double>(in, "parameter data");
    ck.parameters.push_back(std::move(a));
  }
  ck.rng_state = binio::read_string(in, "rng state");
  ck.epoch = binio::read_le<std::uint32_t>(in, "epoch");
  return ck;
}

}  // namespace auroraclr
