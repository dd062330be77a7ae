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

/// \file augment.hpp
/// Positive-pair generation: every source image yields two independent draws
/// of (random resized crop, then random flip).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "auroraclr/data.hpp"
#include "auroraclr/errors.hpp"
#include "auroraclr/rng.hpp"
#include "auroraclr/tensor.hpp"

namespace auroraclr {

enum class FlipAxis {
  kHorizontalAxis,  // mirror top <-> bottom (row reversal)
  kVerticalAxis,    // mirror left <-> right (column reversal)
  kNone,
};

inline std::string to_string(FlipAxis axis) {
  switch (axis) {
    case FlipAxis::kHorizontalAxis: return "horizontal_axis";
    case FlipAxis::kVerticalAxis: return "vertical_axis";
    case FlipAxis::kNone: return "none";
  }
  return "none";
}

inline FlipAxis parse_flip_axis(const std::string& s) {
  if (s == "horizontal_axis") return FlipAxis::kHorizontalAxis;
  if (s == "vertical_axis") return FlipAxis::kVerticalAxis;
  if (s == "none") return FlipAxis::kNone;
  throw ConfigError("unknown flip axis '" + s + "'");
}

struct AugmentConfig {
  double crop_scale_min = 0.2;
  double crop_scale_max = 1.0;
  std::size_t output_size = 48;
  FlipAxis flip_axis = FlipAxis::kHorizontalAxis;
  double flip_probability = 0.5;

  void validate() const {
    if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0)) {
      throw ConfigError("augment: need 0 < crop_scale_min <= crop_scale_max <= 1");
    }
    if (output_size < 8) throw ConfigError("augment: output_size must be at least 8");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
      throw ConfigError("augment: flip_probability must lie in [0, 1]");
    }
  }
};

struct CropWindow {
  std::size_t top = 0, left = 0, height = 0, width = 0;
  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

// Bilinear resize of a window of a [1 x h x w] image to [1 x size x size].
// Sample positions use pixel-center alignment, so a same-size resize of the
// full image reproduces it exactly.
inline Tensor resize_bilinear(const Tensor& img, const CropWindow& win, std::size_t size) {
  const std::size_t w = img.dim(2);
  const auto src = img.data();
  std::vector<double> out(size * size);
  const double sy = static_cast<double>(win.height) / static_cast<double>(size);
  const double sx = static_cast<double>(win.width) / static_cast<double>(size);
  auto coord = [](std::size_t i, double scale, std::size_t extent, std::size_t& i0,
                  std::size_t& i1, double& frac) {
    double p = (static_cast<double>(i) + 0.5) * scale - 0.5;
    p = std::clamp(p, 0.0, static_cast<double>(extent - 1));
    i0 = static_cast<std::size_t>(std::floor(p));
    i1 = std::min(i0 + 1, extent - 1);
    frac = p - static_cast<double>(i0);
  };
  for (std::size_t oy = 0; oy < size; ++oy) {
    std::size_t y0, y1;
    double fy;
    coord(oy, sy, win.height, y0, y1, fy);
    for (std::size_t ox = 0; ox < size; ++ox) {
      std::size_t x0, x1;
      double fx;
      coord(ox, sx, win.width, x0, x1, fx);
      auto px = [&](std::size_t y, std::size_t x) {
        return src[(win.top + y) * w + win.left + x];
      };
      const double a = px(y0, x0), b = px(y0, x1), c = px(y1, x0), d = px(y1, x1);
      const double top = a + fx * (b - a);
      const double bottom = c + fx * (d - c);
      out[oy * size + ox] = std::clamp(top + fy * (bottom - top), std::min({a, b, c, d}),
                                       std::max({a, b, c, d}));
    }
  }
  return Tensor({1, size, size}, std::move(out));
}

inline Tensor resize_full(const Tensor& img, std::size_t size) {
  return resize_bilinear(img, CropWindow{0, 0, img.dim(1), img.dim(2)}, size);
}

// Draws a square window covering a uniformly sampled area fraction. Windows
// that do not fit are redrawn up to 10 times before falling back to the full image.
inline CropWindow sample_crop_window(std::size_t h, std::size_t w, const AugmentConfig& cfg,
                                     Rng& rng) {
  const double area = static_cast<double>(h) * static_cast<double>(w);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double fraction = rng.uniform(cfg.crop_scale_min, cfg.crop_scale_max);
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(fraction * area)));
    if (side < 1 || side > h || side > w) continue;
    CropWindow win;
    win.height = win.width = side;
    win.top = static_cast<std::size_t>(rng.uniform_int(h - side + 1));
    win.left = static_cast<std::size_t>(rng.uniform_int(w - side + 1));
    return win;
  }
  return CropWindow{0, 0, h, w};
}

inline Tensor random_resized_crop(const Tensor& img, const AugmentConfig& cfg, Rng& rng) {
  if (img.rank() != 3 || img.dim(0) != 1) {
    throw DimensionError("random_resized_crop expects [1 x h x w], got " + shape_str(img.shape()));
  }
  if (img.dim(1) < 2 || img.dim(2) < 2) {
    throw DimensionError("random_resized_crop: image smaller than 2x2");
  }
  const CropWindow win = sample_crop_window(img.dim(1), img.dim(2), cfg, rng);
  return resize_bilinear(img, win, cfg.output_size);
}

inline Tensor flip(const Tensor& img, FlipAxis axis) {
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  const auto src = img.data();
  std::vector<double> out(src.begin(), src.end());
  if (axis == FlipAxis::kNone) return Tensor(img.shape(), std::move(out));
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t sy = axis == FlipAxis::kHorizontalAxis ? h - 1 - y : y;
        const std::size_t sx = axis == FlipAxis::kVerticalAxis ? w - 1 - x : x;
        out[(ch * h + y) * w + x] = src[(ch * h + sy) * w + sx];
      }
  return Tensor(img.shape(), std::move(out));
}

// One uniform draw per call, whether or not the flip happens.
inline Tensor random_flip(const Tensor& img, const AugmentConfig& cfg, Rng& rng) {
  const bool apply = rng.uniform() < cfg.flip_probability;
  return apply ? flip(img, cfg.flip_axis) : flip(img, FlipAxis::kNone);
}

inline Tensor augment_view(const Tensor& img, const AugmentConfig& cfg, Rng& rng) {
  return random_flip(random_resized_crop(img, cfg, rng), cfg, rng);
}

struct PositiveBatch {
  Tensor views;                         // [2N x 1 x s x s]
  std::vector<std::size_t> pair_index;  // partner row of each row
  std::vector<int> source_labels;       // N labels, for evaluation only
};

inline bool is_pairing_involution(std::span<const std::size_t> pair_index) {
  for (std::size_t i = 0; i < pair_index.size(); ++i) {
    const std::size_t j = pair_index[i];
    if (j >= pair_index.size() || j == i || pair_index[j] != i) return false;
  }
  return true;
}

// Rows 2k and 2k+1 are two independent augmentations of records[k]. Each
// record draws from its own generator seeded from `rng`, so records can be
// processed in any order.
inline PositiveBatch make_positive_batch(std::span<const ImageRecord* const> records,
                                         const AugmentConfig& cfg, Rng& rng) {
  if (records.size() < 2) {
    throw ContractError("positive batch needs at least 2 source images, got " +
                        std::to_string(records.size()));
  }
  cfg.validate();
  const std::size_t n = records.size(), s = cfg.output_size, plane = s * s;
  std::vector<std::uint64_t> seeds(n);
  for (auto& seed : seeds) seed = rng.next_u64();
  std::vector<double> views(2 * n * plane);
  PositiveBatch batch;
  batch.pair_index.resize(2 * n);
  batch.source_labels.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    Rng local(seeds[k]);
    for (std::size_t v = 0; v < 2; ++v) {
      const Tensor view = augment_view(records[k]->pixels, cfg, local);
      std::copy(view.data().begin(), view.data().end(),
                views.begin() + static_cast<std::ptrdiff_t>((2 * k + v) * plane));
    }
    batch.pair_index[2 * k] = 2 * k + 1;
    batch.pair_index[2 * k + 1] = 2 * k;
    batch.source_labels[k] = records[k]->label;
  }
  batch.views = Tensor({2 * n, 1, s, s}, std::move(views));
  return batch;
}

inline PositiveBatch make_positive_batch(std::span<const ImageRecord> records,
                                         const AugmentConfig& cfg, Rng& rng) {
  std::vector<const ImageRecord*> ptrs;
  ptrs.reserve(records.size());
  for (const auto& r : records) ptrs.push_back(&r);
  return make_positive_batch(std::span<const ImageRecord* const>(ptrs), cfg, rng);
}

}  // namespace auroraclr
