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

/// \file data.hpp
/// Image records, the border crop and percentile brightness scaling applied
/// to every frame, the synthetic stand-in corpus, stratified folds, and the
/// binary dataset cache.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "auroraclr/binary_io.hpp"
#include "auroraclr/errors.hpp"
#include "auroraclr/image_io.hpp"
#include "auroraclr/rng.hpp"
#include "auroraclr/tensor.hpp"

namespace auroraclr {

inline constexpr std::size_t kNumClasses = 6;

// Label order used by the OATH annotations.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Arc", "Diffuse", "Discrete", "Cloudy", "Moon", "Clear"};

struct ImageRecord {
  Tensor pixels;  // [1 x h x w], values in [0, 1]
  int label = 0;
  std::string source_id;
  bool degenerate = false;  // constant frame, scaled to zeros

  std::size_t height() const { return pixels.dim(1); }
  std::size_t width() const { return pixels.dim(2); }
};

class Dataset {
 public:
  void add(ImageRecord record) {
    if (record.label < 0 || record.label >= static_cast<int>(kNumClasses)) {
      throw InputError("label " + std::to_string(record.label) + " out of range for " +
                       record.source_id);
    }
    if (!ids_.insert(record.source_id).second) {
      throw InputError("duplicate source id " + record.source_id);
    }
    ++class_counts_[static_cast<std::size_t>(record.label)];
    records_.push_back(std::move(record));
  }

  const std::vector<ImageRecord>& records() const { return records_; }
  const ImageRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::array<std::size_t, kNumClasses>& class_counts() const { return class_counts_; }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.label);
    return out;
  }

  // Reorders records by source id.
  void sort_by_id() {
    std::sort(records_.begin(), records_.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.source_id < b.source_id; });
  }

 private:
  std::vector<ImageRecord> records_;
  std::array<std::size_t, kNumClasses> class_counts_{};
  std::set<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Brightness scaling

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based),
// clamped to the first element for small p.
inline double nearest_rank_percentile(std::vector<double> values, double percent) {
  if (values.empty()) throw DimensionError("percentile of empty sample");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(percent * static_cast<double>(n) / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   values.end());
  return values[rank - 1];
}

inline constexpr double kLowPercentile = 1.0;
inline constexpr double kHighPercentile = 99.0;
inline constexpr double kMinBrightnessRange = 1e-12;

struct ScaledImage {
  Tensor pixels;
  bool degenerate = false;
};

// Maps raw brightness to clip((x - m) / M, 0, 1), where m is the 1st
// percentile of the frame and M the 99th percentile of the frame minus m.
// Frames with M below 1e-12 are returned as zeros and flagged degenerate.
inline ScaledImage scale_image(const Tensor& raw) {
  if (raw.numel() == 0) throw DimensionError("scale_image: empty image");
  std::vector<double> values(raw.data().begin(), raw.data().end());
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("scale_image: non-finite pixel");
  }
  const double low = nearest_rank_percentile(values, kLowPercentile);
  for (double& v : values) v -= low;
  const double range = nearest_rank_percentile(values, kHighPercentile);
  ScaledImage out;
  if (!(range >= kMinBrightnessRange)) {
    out.pixels = Tensor::zeros(raw.shape());
    out.degenerate = true;
    return out;
  }
  for (double& v : values) v = std::clamp(v / range, 0.0, 1.0);
  out.pixels = Tensor(raw.shape(), std::move(values));
  return out;
}

// Centered crop of a [h x w] image keeping floor((1 - fraction) * dim) rows
// and columns, the removed border split evenly (odd remainder on the far side).
inline Tensor crop_border(const Tensor& img, double fraction) {
  if (img.rank() != 2) throw DimensionError("crop_border expects a [h x w] image");
  if (!(fraction >= 0.0 && fraction < 0.5)) {
    throw DimensionError("crop_border: fraction must lie in [0, 0.5)");
  }
  const std::size_t h = img.dim(0), w = img.dim(1);
  // The small guard absorbs representation error in products like 0.85 * 100.
  auto keep = [fraction](std::size_t n) {
    return static_cast<std::size_t>(std::floor((1.0 - fraction) * static_cast<double>(n) + 1e-9));
  };
  const std::size_t nh = std::min(h, keep(h)), nw = std::min(w, keep(w));
  if (nh < 1 || nw < 1) throw DimensionError("crop_border: result is empty");
  const std::size_t top = (h - nh) / 2, left = (w - nw) / 2;
  std::vector<double> out(nh * nw);
  const auto src = img.data();
  for (std::size_t r = 0; r < nh; ++r)
    for (std::size_t c = 0; c < nw; ++c) out[r * nw + c] = src[(top + r) * w + left + c];
  return Tensor({nh, nw}, std::move(out));
}

inline constexpr double kDefaultCropFraction = 0.15;

// [h x w] -> [1 x h x w], values rounded to f32 precision.
inline Tensor as_single_channel(const Tensor& img) {
  std::vector<double> v(img.data().begin(), img.data().end());
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  return Tensor({1, img.dim(0), img.dim(1)}, std::move(v));
}

// Crop first, then scale.
inline ImageRecord preprocess_frame(const GrayImage& image, int label, std::string source_id,
                                    double crop_fraction = kDefaultCropFraction) {
  std::vector<double> raw(image.pixels.begin(), image.pixels.end());
  Tensor frame({image.height, image.width}, std::move(raw));
  Tensor cropped = crop_border(frame, crop_fraction);
  ScaledImage scaled = scale_image(cropped);
  ImageRecord rec;
  rec.pixels = as_single_channel(scaled.pixels);
  rec.label = label;
  rec.source_id = std::move(source_id);
  rec.degenerate = scaled.degenerate;
  return rec;
}

// ---------------------------------------------------------------------------
// OATH loading

struct LoadReport {
  Dataset dataset;
  std::vector<std::string> errors;  // per-record decode failures
  std::size_t degenerate = 0;
};

// Reads a `filename,label` CSV and the referenced images under image_dir.
// A listed file that does not exist is a hard error; a file that exists but
// fails to decode is reported and skipped.
inline LoadReport load_oath_dataset(const std::filesystem::path& image_dir,
                                    const std::filesystem::path& label_file,
                                    double crop_fraction = kDefaultCropFraction) {
  std::ifstream in(label_file);
  if (!in) throw InputError("cannot open label file " + label_file.string());
  if (!std::filesystem::is_directory(image_dir)) {
    throw InputError("image directory not found: " + image_dir.string());
  }
  LoadReport report;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::string, int>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "filename,label") {
        throw InputError("label file must start with header 'filename,label'");
      }
      continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw InputError("malformed label line " + std::to_string(line_no) + ": " + line);
    }
    const std::string name = line.substr(0, comma);
    int label = -1;
    try {
      std::size_t used = 0;
      label = std::stoi(line.substr(comma + 1), &used);
      if (used != line.size() - comma - 1) label = -1;
    } catch (const std::exception&) {
      label = -1;
    }
    if (label < 0 || label >= static_cast<int>(kNumClasses)) {
      throw InputError("invalid label on line " + std::to_string(line_no) + ": " + line);
    }
    entries.emplace_back(name, label);
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& [name, label] : entries) {
    const auto path = image_dir / name;
    if (!std::filesystem::exists(path)) {
      throw InputError("label refers to missing image " + path.string());
    }
    try {
      ImageRecord rec = preprocess_frame(read_gray_image(path), label, name, crop_fraction);
      if (rec.degenerate) ++report.degenerate;
      report.dataset.add(std::move(rec));
    } catch (const InputError&) {
      throw;
    } catch (const Error& e) {
      report.errors.push_back(name + ": " + e.what());
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace detail {

// Raw brightness frame for one synthetic record of the given class.
inline std::vector<double> synthesize_frame(int label, std::size_t size, Rng& rng) {
  const auto s = static_cast<double>(size);
  std::vector<double> img(size * size);
  const double background = rng.uniform(0.05, 0.15);
  std::fill(img.begin(), img.end(), background);
  auto at = [&](std::size_t y, std::size_t x) -> double& { return img[y * size + x]; };
  auto add_gaussian = [&](double cy, double cx, double sigma, double amp) {
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        at(y, x) += amp * std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      }
  };

  switch (label) {
    case 0: {  // Arc: one bright band stretching across the field of view
      const double angle = rng.uniform(-0.35, 0.35);
      const double offset = rng.uniform(0.3, 0.7) * s;
      const double width = rng.uniform(0.03, 0.06) * s;
      const double amp = rng.uniform(0.6, 1.0);
      const double ny = std::cos(angle), nx = -std::sin(angle);
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          const double d = (static_cast<double>(y) - offset) * ny +
                           (static_cast<double>(x) - s / 2.0) * nx;
          at(y, x) += amp * std::exp(-d * d / (2.0 * width * width));
        }
      break;
    }
    case 1: {  // Diffuse: broad fuzzy patches
      const auto patches = 3 + rng.uniform_int(3);
      for (std::uint64_t p = 0; p < patches; ++p) {
        add_gaussian(rng.uniform(0.0, s), rng.uniform(0.0, s), rng.uniform(0.15, 0.3) * s,
                     rng.uniform(0.2, 0.4));
      }
      break;
    }
    case 2: {  // Discrete: sharp compact bright structures
      const auto blobs = 4 + rng.uniform_int(5);
      for (std::uint64_t p = 0; p < blobs; ++p) {
        add_gaussian(rng.uniform(0.15, 0.85) * s, rng.uniform(0.15, 0.85) * s,
                     rng.uniform(0.02, 0.05) * s, rng.uniform(0.6, 1.0));
      }
      break;
    }
    case 3: {  // Cloudy: low-contrast broad texture
      const auto waves = 4 + rng.uniform_int(3);
      for (std::uint64_t k = 0; k < waves; ++k) {
        const double fy = rng.uniform(0.5, 2.5) / s, fx = rng.uniform(0.5, 2.5) / s;
        const double phase = rng.uniform(0.0, 6.283185307179586);
        const double amp = rng.uniform(0.03, 0.08);
        for (std::size_t y = 0; y < size; ++y)
          for (std::size_t x = 0; x < size; ++x)
            at(y, x) += amp * std::sin(6.283185307179586 *
                                           (fy * static_cast<double>(y) +
                                            fx * static_cast<double>(x)) +
                                       phase);
      }
      break;
    }
    case 4: {  // Moon: a single saturated disc with a faint halo
      const double cy = rng.uniform(0.2, 0.8) * s, cx = rng.uniform(0.2, 0.8) * s;
      const double radius = rng.uniform(0.06, 0.12) * s;
      add_gaussian(cy, cx, 3.0 * radius, 0.15);
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
          if (dy * dy + dx * dx <= radius * radius) at(y, x) = 1.5;
        }
      break;
    }
    default: {  // Clear: sparse point sources on a dark sky
      const auto stars = 15 + rng.uniform_int(26);
      for (std::uint64_t p = 0; p < stars; ++p) {
        at(rng.uniform_int(size), rng.uniform_int(size)) += rng.uniform(0.3, 1.0);
      }
      break;
    }
  }
  for (double& v : img) v += rng.normal(0.0, 0.02);
  return img;
}

}  // namespace detail

// Six procedurally distinct classes, n_per_class each, image_size square.
// Records are ordered by source id ("syn_<class>_<index>").
inline Dataset generate_synthetic_dataset(std::size_t n_per_class, std::size_t image_size,
                                          std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("synthetic dataset needs at least one image per class");
  if (image_size < 16) throw ConfigError("synthetic image size must be at least 16");
  Dataset ds;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      Rng rng(derive_seed(seed, c, i));
      auto raw = detail::synthesize_frame(static_cast<int>(c), image_size, rng);
      ScaledImage scaled = scale_image(Tensor({image_size, image_size}, std::move(raw)));
      ImageRecord rec;
      rec.pixels = as_single_channel(scaled.pixels);
      rec.label = static_cast<int>(c);
      char id[48];
      std::snprintf(id, sizeof(id), "syn_%zu_%05zu", c, i);
      rec.source_id = id;
      rec.degenerate = scaled.degenerate;
      ds.add(std::move(rec));
    }
  }
  ds.sort_by_id();
  return ds;
}

// ---------------------------------------------------------------------------
// Stratified folds

struct FoldSplit {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignments;  // fold index per record

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : assignments) ++sizes[f];
    return sizes;
  }
};

inline constexpr std::uint64_t kDefaultFoldSeed = 42;

// Stratified k-fold split over integer labels in [0, num_classes). Each
// class's members are shuffled and dealt round-robin; the dealing position
// carries over from one class to the next, so fold sizes differ by at most one.
inline FoldSplit stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw StratificationError("fold count must be at least 2");
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw StratificationError("negative label");
    max_label = std::max(max_label, l);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (!members[c].empty() && members[c].size() < k) {
      throw StratificationError("class " + std::to_string(c) + " has " +
                                std::to_string(members[c].size()) + " members, fewer than " +
                                std::to_string(k) + " folds");
    }
  }
  FoldSplit split;
  split.k = k;
  split.seed = seed;
  split.assignments.assign(labels.size(), 0);
  Rng rng(seed);
  std::size_t position = 0;
  for (auto& group : members) {
    rng.shuffle(std::span<std::size_t>(group));
    for (std::size_t idx : group) split.assignments[idx] = position++ % k;
  }
  return split;
}

inline FoldSplit stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  const auto labels = ds.labels();
  return stratified_folds(std::span<const int>(labels), k, seed);
}

// ---------------------------------------------------------------------------
// Binary cache: "CRDS", u16 version, u32 count, then per record
// u32 id length + id bytes, u8 label, u16 h, u16 w, h*w f32 pixels.

inline constexpr std::uint16_t kCacheVersion = 1;

inline void save_dataset_cache(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write cache " + path.string());
  binio::write_magic(out, "CRDS");
  binio::write_le<std::uint16_t>(out, kCacheVersion);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.size()));
  for (const auto& rec : ds.records()) {
    binio::write_string(out, rec.source_id);
    binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(rec.label));
    binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(rec.height()));
    binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(rec.width()));
    for (double v : rec.pixels.data()) binio::write_le<float>(out, static_cast<float>(v));
  }
  if (!out) throw InputError("failed writing cache " + path.string());
}

inline Dataset load_dataset_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open cache " + path.string());
  binio::expect_magic(in, "CRDS");
  const auto version = binio::read_le<std::uint16_t>(in, "cache version");
  if (version != kCacheVersion) {
    throw FormatError("unsupported cache version " + std::to_string(version));
  }
  const auto count = binio::read_le<std::uint32_t>(in, "record count");
  Dataset ds;
  for (std::uint32_t i = 0; i < count; ++i) {
    ImageRecord rec;
    rec.source_id = binio::read_string(in, "record id", 1U << 16);
    rec.label = binio::read_le<std::uint8_t>(in, "label");
    const std::size_t h = binio::read_le<std::uint16_t>(in, "height");
    const std::size_t w = binio::read_le<std::uint16_t>(in, "width");
    if (h == 0 || w == 0) throw FormatError("zero-sized image in cache");
    std::vector<double> px(h * w);
    bool all_zero = true;
    for (auto& v : px) {
      v = binio::read_le<float>(in, "pixels");
      if (!(v >= 0.0 && v <= 1.0)) throw FormatError("pixel outside [0,1] in cache");
      all_zero = all_zero && v == 0.0;
    }
    rec.pixels = Tensor({1, h, w}, std::move(px));
    rec.degenerate = all_zero;
    try {
      ds.add(std::move(rec));
    } catch (const InputError& e) {
      throw FormatError(std::string("invalid cache record: ") + e.what());
    }
  }
  return ds;
}

}  // namespace auroraclr
