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

/// \file config.hpp
/// Run configuration: every module's settings in one struct, readable from a
/// flat `section.key = value` text file. Every key has a default, and the
/// defaults describe the synthetic desk-scale run.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "auroraclr/augment.hpp"
#include "auroraclr/clustering.hpp"
#include "auroraclr/data.hpp"
#include "auroraclr/errors.hpp"
#include "auroraclr/evaluation.hpp"
#include "auroraclr/loss.hpp"
#include "auroraclr/model.hpp"
#include "auroraclr/trainer.hpp"

namespace auroraclr {

struct DataConfig {
  std::size_t synthetic_per_class = 30;
  std::size_t image_size = 48;
  double crop_fraction = kDefaultCropFraction;
};

enum class EmbeddingSpace { kRepresentation, kProjection };

struct ClusterConfig {
  SweepOptions sweep;
  EmbeddingSpace space = EmbeddingSpace::kRepresentation;
  bool normalize = false;  // L2-normalise rows before clustering
};

struct RunConfig {
  std::uint64_t seed = 42;
  DataConfig data;
  AugmentConfig augment;
  EncoderConfig encoder;
  HeadConfig head;
  LossConfig loss;
  TrainConfig train;
  ProbeConfig probe;
  std::size_t folds = 5;
  std::size_t embed_batch = 16;
  ClusterConfig cluster;

  // Full-scale settings: ResNet18 layout, minibatch 128, 100 epochs.
  static RunConfig full_scale() {
    RunConfig cfg;
    cfg.encoder = EncoderConfig::resnet18(224);
    cfg.augment.output_size = 224;
    cfg.data.image_size = 224;
    cfg.train.batch_size = 128;
    cfg.train.epochs = 100;
    return cfg;
  }

  // Pushes the run seed into every stochastic component.
  void propagate_seed() {
    train.seed = seed;
    cluster.sweep.seed = seed;
  }

  std::uint64_t fold_seed() const { return seed; }
  std::uint64_t encoder_seed() const { return derive_seed(seed, 0xE1); }
  std::uint64_t head_seed() const { return derive_seed(seed, 0xE2); }

  void validate() const {
    augment.validate();
    encoder.validate();
    loss.validate();
    train.validate();
    probe.validate();
    if (augment.output_size != encoder.input_size) {
      throw ConfigError("augment.output_size (" + std::to_string(augment.output_size) +
                        ") must equal encoder.input_size (" + std::to_string(encoder.input_size) + ")");
    }
    if (folds < 2) throw ConfigError("probe.folds must be at least 2");
    if (embed_batch < 1) throw ConfigError("embed.batch_size must be positive");
    if (cluster.sweep.k_min < 2 || cluster.sweep.k_max < cluster.sweep.k_min) {
      throw ConfigError("cluster: need 2 <= k_min <= k_max");
    }
    if (cluster.sweep.restarts < 1) throw ConfigError("cluster.restarts must be positive");
  }
};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

inline double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + s + "'");
}

inline std::vector<std::size_t> parse_list(const std::string& key, const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("config key '" + key + "': empty list item");
    out.push_back(parse_uint(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

inline std::string format_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct ConfigField {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

inline std::vector<ConfigField> config_fields(RunConfig& c) {
  std::vector<ConfigField> f;
  auto add_double = [&f](std::string key, double& ref) {
    f.push_back({key, [&ref] { return format_double(ref); },
                 [&ref, key](const std::string& s) { ref = parse_double(key, s); }});
  };
  auto add_size = [&f](std::string key, std::size_t& ref) {
    f.push_back({key, [&ref] { return std::to_string(ref); },
                 [&ref, key](const std::string& s) { ref = static_cast<std::size_t>(parse_uint(key, s)); }});
  };
  auto add_u64 = [&f](std::string key, std::uint64_t& ref) {
    f.push_back({key, [&ref] { return std::to_string(ref); },
                 [&ref, key](const std::string& s) { ref = parse_uint(key, s); }});
  };
  auto add_bool = [&f](std::string key, bool& ref) {
    f.push_back({key, [&ref] { return std::string(ref ? "true" : "false"); },
                 [&ref, key](const std::string& s) { ref = parse_bool(key, s); }});
  };
  auto add_list = [&f](std::string key, std::vector<std::size_t>& ref) {
    f.push_back({key, [&ref] { return format_list(ref); },
                 [&ref, key](const std::string& s) { ref = parse_list(key, s); }});
  };

  add_u64("run.seed", c.seed);
  add_size("data.synthetic_per_class", c.data.synthetic_per_class);
  add_size("data.image_size", c.data.image_size);
  add_double("data.crop_fraction", c.data.crop_fraction);

  add_double("augment.crop_scale_min", c.augment.crop_scale_min);
  add_double("augment.crop_scale_max", c.augment.crop_scale_max);
  add_size("augment.output_size", c.augment.output_size);
  f.push_back({"augment.flip_axis", [&c] { return to_string(c.augment.flip_axis); },
               [&c](const std::string& s) { c.augment.flip_axis = parse_flip_axis(s); }});
  add_double("augment.flip_probability", c.augment.flip_probability);

  add_list("encoder.stage_channels", c.encoder.stage_channels);
  add_list("encoder.blocks_per_stage", c.encoder.blocks_per_stage);
  add_size("encoder.input_size", c.encoder.input_size);
  add_size("encoder.stem_kernel", c.encoder.stem_kernel);
  add_size("encoder.stem_stride", c.encoder.stem_stride);
  add_bool("encoder.stem_max_pool", c.encoder.stem_max_pool);
  add_bool("encoder.batch_norm", c.encoder.batch_norm);
  add_double("encoder.bn_momentum", c.encoder.bn_momentum);

  add_size("head.hidden_dim", c.head.hidden_dim);
  add_size("head.projection_dim", c.head.projection_dim);

  add_double("loss.temperature", c.loss.temperature);

  add_double("train.learning_rate", c.train.learning_rate);
  add_double("train.beta1", c.train.beta1);
  add_double("train.beta2", c.train.beta2);
  add_double("train.epsilon", c.train.epsilon);
  add_double("train.weight_decay", c.train.weight_decay);
  add_size("train.epochs", c.train.epochs);
  add_size("train.batch_size", c.train.batch_size);

  add_size("embed.batch_size", c.embed_batch);

  add_double("probe.l2_strength", c.probe.l2_strength);
  add_size("probe.max_iterations", c.probe.max_iterations);
  add_double("probe.convergence_tol", c.probe.convergence_tol);
  add_double("probe.optimizer_lr", c.probe.optimizer_lr);
  add_bool("probe.standardize", c.probe.standardize);
  add_size("probe.folds", c.folds);

  add_size("cluster.k_min", c.cluster.sweep.k_min);
  add_size("cluster.k_max", c.cluster.sweep.k_max);
  add_size("cluster.restarts", c.cluster.sweep.restarts);
  add_size("cluster.max_iter", c.cluster.sweep.max_iter);
  add_size("cluster.samples_per_cell", c.cluster.sweep.samples_per_cell);
  f.push_back({"cluster.space",
               [&c] { return std::string(c.cluster.space == EmbeddingSpace::kProjection ? "z" : "h"); },
               [&c](const std::string& s) {
                 if (s == "h") {
                   c.cluster.space = EmbeddingSpace::kRepresentation;
                 } else if (s == "z") {
                   c.cluster.space = EmbeddingSpace::kProjection;
                 } else {
                   throw ConfigError("cluster.space must be 'h' or 'z'");
                 }
               }});
  add_bool("cluster.normalize", c.cluster.normalize);
  return f;
}

}  // namespace detail

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (auto& field : detail::config_fields(cfg)) {
    if (field.key == key) {
      field.set(value);
      if (key == "run.seed") cfg.propagate_seed();
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

// Applies `section.key = value` lines; blank lines and '#' comments are skipped.
inline void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(base, buffer.str());
  return base;
}

// Every key with its resolved value, in the same format the parser reads.
inline std::string config_to_text(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string out;
  for (auto& field : detail::config_fields(copy)) out += field.key + " = " + field.get() + "\n";
  return out;
}

}  // namespace auroraclr
