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


#include <gtest/gtest.h>

#include <vector>

#include "auroraclr/augment.hpp"
#include "auroraclr/data.hpp"
#include "support.hpp"

namespace auroraclr {
namespace {

using V = std::vector<double>;
V to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

ImageRecord record_from(Tensor pixels, int label, std::string id) {
  ImageRecord r;
  r.pixels = std::move(pixels);
  r.label = label;
  r.source_id = std::move(id);
  return r;
}

TEST(AugmentConfig, Validation) {
  AugmentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.crop_scale_min = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.crop_scale_max = 1.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.output_size = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.flip_probability = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(FlipAxis, ParseAndPrint) {
  for (FlipAxis a : {FlipAxis::kHorizontalAxis, FlipAxis::kVerticalAxis, FlipAxis::kNone}) {
    EXPECT_EQ(parse_flip_axis(to_string(a)), a);
  }
  EXPECT_THROW(parse_flip_axis("diagonal"), ConfigError);
}

TEST(RandomResizedCrop, FullScaleSameSizeIsIdentity) {
  Rng data(1);
  const Tensor img = oracle::random_tensor({1, 12, 12}, data, 0, 1);
  AugmentConfig cfg;
  cfg.crop_scale_min = cfg.crop_scale_max = 1.0;
  cfg.output_size = 12;
  Rng rng(2);
  EXPECT_EQ(to_vec(random_resized_crop(img, cfg, rng)), to_vec(img));
}

TEST(RandomResizedCrop, ConstantImageStaysConstant) {
  AugmentConfig cfg;
  cfg.output_size = 10;
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Tensor out = random_resized_crop(Tensor::full({1, 17, 23}, 0.37), cfg, rng);
    for (double v : out.data()) {
      EXPECT_EQ(v, 0.37);
    }
  }
}

TEST(RandomResizedCrop, SameSeedSameWindow) {
  AugmentConfig cfg;
  Rng a(77), b(77);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_crop_window(40, 30, cfg, a), sample_crop_window(40, 30, cfg, b));
}

TEST(RandomResizedCrop, WindowsFitAndCoverRequestedArea) {
  AugmentConfig cfg;
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const CropWindow w = sample_crop_window(48, 48, cfg, rng);
    EXPECT_EQ(w.height, w.width);
    EXPECT_LE(w.top + w.height, 48u);
    EXPECT_LE(w.left + w.width, 48u);
    const double frac = static_cast<double>(w.height * w.width) / (48.0 * 48.0);
    EXPECT_GE(frac, 0.2 - 0.05);
    EXPECT_LE(frac, 1.0);
  }
}

TEST(RandomResizedCrop, FallsBackToFullImageWhenNoSquareFits) {
  // A 2x40 strip cannot hold a square covering >= 60% of its area.
  AugmentConfig cfg;
  cfg.crop_scale_min = 0.6;
  Rng rng(4);
  EXPECT_EQ(sample_crop_window(2, 40, cfg, rng), (CropWindow{0, 0, 2, 40}));
}

TEST(RandomResizedCrop, RejectsTinyOrMisshapenInput) {
  AugmentConfig cfg;
  Rng rng(1);
  EXPECT_THROW(random_resized_crop(Tensor::zeros({1, 1, 5}), cfg, rng), DimensionError);
  EXPECT_THROW(random_resized_crop(Tensor::zeros({5, 5}), cfg, rng), DimensionError);
}

TEST(RandomResizedCrop, OutputsStayInUnitInterval) {
  Rng data(10), rng(11);
  AugmentConfig cfg;
  cfg.output_size = 16;
  for (int i = 0; i < 100; ++i) {
    const Tensor img = oracle::random_tensor({1, 20, 20}, data, 0, 1);
    const Tensor out = augment_view(img, cfg, rng);
    for (double v : out.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Flip, HorizontalAxisReversesRows) {
  const Tensor img({1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(to_vec(flip(img, FlipAxis::kHorizontalAxis)), (V{3, 4, 1, 2}));
  EXPECT_EQ(to_vec(flip(img, FlipAxis::kVerticalAxis)), (V{2, 1, 4, 3}));
  EXPECT_EQ(to_vec(flip(img, FlipAxis::kNone)), (V{1, 2, 3, 4}));
}

TEST(Flip, ForcedFlipTwiceIsIdentity) {
  Rng data(12);
  const Tensor img = oracle::random_tensor({1, 5, 7}, data, 0, 1);
  AugmentConfig cfg;
  cfg.flip_probability = 1.0;
  Rng rng(13);
  EXPECT_EQ(to_vec(random_flip(random_flip(img, cfg, rng), cfg, rng)), to_vec(img));
}

TEST(Flip, ZeroProbabilityNeverFlips) {
  Rng data(14);
  const Tensor img = oracle::random_tensor({1, 4, 4}, data, 0, 1);
  AugmentConfig cfg;
  cfg.flip_probability = 0.0;
  Rng rng(15);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(to_vec(random_flip(img, cfg, rng)), to_vec(img));
}

TEST(PositiveBatch, TwoRecordsGiveFourViews) {
  const std::vector<ImageRecord> recs{record_from(Tensor::full({1, 20, 20}, 0.5), 1, "a"),
                                      record_from(Tensor::full({1, 20, 20}, 0.2), 4, "b")};
  AugmentConfig cfg;
  cfg.output_size = 8;
  Rng rng(16);
  const PositiveBatch b = make_positive_batch(std::span<const ImageRecord>(recs), cfg, rng);
  EXPECT_EQ(b.views.shape(), (Shape{4, 1, 8, 8}));
  EXPECT_EQ(b.pair_index, (std::vector<std::size_t>{1, 0, 3, 2}));
  EXPECT_EQ(b.source_labels, (std::vector<int>{1, 4}));
  EXPECT_EQ(b.views[0], 0.5);
  EXPECT_EQ(b.views[2 * 64], 0.2);
}

TEST(PositiveBatch, SingleRecordRejected) {
  const std::vector<ImageRecord> recs{record_from(Tensor::zeros({1, 8, 8}), 0, "a")};
  Rng rng(1);
  EXPECT_THROW(make_positive_batch(std::span<const ImageRecord>(recs), AugmentConfig{}, rng),
               ContractError);
}

TEST(PositiveBatch, DeterministicAndInvolutive) {
  const Dataset ds = generate_synthetic_dataset(2, 16, 21);
  AugmentConfig cfg;
  cfg.output_size = 12;
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) {
    const auto pa = make_positive_batch(std::span<const ImageRecord>(ds.records()), cfg, a);
    const auto pb = make_positive_batch(std::span<const ImageRecord>(ds.records()), cfg, b);
    EXPECT_EQ(to_vec(pa.views), to_vec(pb.views));
    EXPECT_TRUE(is_pairing_involution(pa.pair_index));
    for (double v : pa.views.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(PositiveBatch, IdentityAugmentationReproducesSources) {
  const Dataset ds = generate_synthetic_dataset(1, 16, 22);
  AugmentConfig cfg;
  cfg.crop_scale_min = cfg.crop_scale_max = 1.0;
  cfg.flip_probability = 0.0;
  cfg.output_size = 16;
  Rng rng(6);
  const auto b = make_positive_batch(std::span<const ImageRecord>(ds.records()), cfg, rng);
  const std::size_t plane = 256;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const V src = to_vec(ds[k].pixels);
    for (std::size_t v = 0; v < 2; ++v) {
      const V view(b.views.data().begin() + static_cast<std::ptrdiff_t>((2 * k + v) * plane),
                   b.views.data().begin() + static_cast<std::ptrdiff_t>((2 * k + v + 1) * plane));
      EXPECT_EQ(view, src);
    }
  }
}

TEST(PositiveBatch, ViewsOfAPairDiffer) {
  const Dataset ds = generate_synthetic_dataset(1, 32, 23);
  AugmentConfig cfg;
  cfg.output_size = 16;
  Rng rng(7);
  const auto b = make_positive_batch(std::span<const ImageRecord>(ds.records()), cfg, rng);
  std::size_t differing_pairs = 0;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const auto d = b.views.data();
    differing_pairs += !std::equal(d.begin() + static_cast<std::ptrdiff_t>(2 * k * 256),
                                   d.begin() + static_cast<std::ptrdiff_t>((2 * k + 1) * 256),
                                   d.begin() + static_cast<std::ptrdiff_t>((2 * k + 1) * 256));
  }
  EXPECT_EQ(differing_pairs, ds.size());
}

TEST(PairingInvolution, RejectsFixedPointsAndAsymmetry) {
  EXPECT_TRUE(is_pairing_involution(std::vector<std::size_t>{1, 0, 3, 2}));
  EXPECT_FALSE(is_pairing_involution(std::vector<std::size_t>{0, 1}));
  EXPECT_FALSE(is_pairing_involution(std::vector<std::size_t>{1, 2, 0}));
  EXPECT_FALSE(is_pairing_involution(std::vector<std::size_t>{1, 5}));
}

}  // namespace
}  // namespace auroraclr
