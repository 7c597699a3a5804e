#include <gtest/gtest.h>

#include <random>

#include "lavawatch/detect.hpp"
#include "oracles.hpp"

using namespace lavawatch;

namespace {

BinaryMask to_mask(const oracle::Grid& g) {
  const int h = static_cast<int>(g.size()), w = static_cast<int>(g[0].size());
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, g[y][x] != 0);
  return m;
}

BinaryMask random_mask(std::mt19937& rng, int w, int h, double density) {
  return to_mask(oracle::random_grid(rng, w, h, density));
}

Frame random_frame(std::mt19937& rng, int w, int h) {
  std::uniform_int_distribution<int> byte(0, 255);
  Frame f(w, h);
  for (auto& p : f.pixels()) {
    p = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
         static_cast<std::uint8_t>(byte(rng))};
  }
  return f;
}

}  // namespace

TEST(AbsDiff, IdentityAndExtremes) {
  std::mt19937 rng(1);
  const Frame f = random_frame(rng, 8, 8);
  const DiffMap same = abs_diff(f, f);
  for (auto v : same.values()) EXPECT_EQ(v, 0);
  const Frame black(8, 8, Rgb{0, 0, 0}), white(8, 8, Rgb{255, 255, 255});
  const DiffMap extreme = abs_diff(black, white);
  for (auto v : extreme.values()) EXPECT_EQ(v, 255);
}

TEST(AbsDiff, MatchesPerPixelOracleAndIsSymmetric) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Frame a = random_frame(rng, 8, 8), b = random_frame(rng, 8, 8);
    const DiffMap d = abs_diff(a, b);
    EXPECT_EQ(d, abs_diff(b, a));
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const auto p = a.at(x, y), q = b.at(x, y);
        const int want = std::max({std::abs(p.r - q.r), std::abs(p.g - q.g), std::abs(p.b - q.b)});
        ASSERT_EQ(d.at(x, y), want);
      }
    }
  }
}

TEST(AbsDiff, DimensionMismatch) {
  EXPECT_THROW(abs_diff(Frame(4, 4), Frame(4, 5)), DimensionMismatch);
  EXPECT_THROW(detect_perturbation(Frame(4, 4), Frame(5, 4), DetectParams{}), DimensionMismatch);
}

TEST(ThresholdDiff, Cases) {
  DiffMap zero(6, 4);
  EXPECT_TRUE(threshold_diff(zero, 1).none());
  EXPECT_EQ(threshold_diff(zero, 0).count(), 24u);
  EXPECT_THROW(threshold_diff(zero, 256), InvalidArgument);

  std::mt19937 rng(3);
  std::uniform_int_distribution<int> byte(0, 255);
  DiffMap d(16, 16);
  for (auto& v : d.values()) v = static_cast<std::uint8_t>(byte(rng));
  const auto m = threshold_diff(d, 30);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) ASSERT_EQ(m.get(x, y), d.at(x, y) >= 30);
}

TEST(StructuringElement, AnchorIsFloorCentre) {
  EXPECT_EQ(StructuringElement(2, 1).anchor_x(), 1);
  EXPECT_EQ(StructuringElement(2, 1).anchor_y(), 0);
  EXPECT_EQ(StructuringElement(4, 2).anchor_x(), 2);
  EXPECT_EQ(StructuringElement(4, 2).anchor_y(), 1);
  EXPECT_THROW(StructuringElement(0, 1), InvalidArgument);
}

TEST(Morphology, FullAndEmptyMasks) {
  for (auto k : {StructuringElement{2, 1}, StructuringElement{4, 2}, StructuringElement{5, 5}}) {
    const BinaryMask full(10, 7, true), empty(10, 7, false);
    EXPECT_EQ(erode(full, k), full);
    EXPECT_EQ(dilate(full, k), full);
    EXPECT_EQ(erode(empty, k), empty);
    EXPECT_EQ(dilate(empty, k), empty);
  }
}

TEST(Morphology, SinglePixelErodedAway) {
  BinaryMask m(9, 9);
  m.set(4, 4);
  EXPECT_TRUE(erode(m, {2, 1}).none());
}

TEST(Morphology, SinglePixelDilatedToKernelFootprint) {
  BinaryMask m(9, 9);
  m.set(4, 4);
  const auto d = dilate(m, {4, 2});
  EXPECT_EQ(d.count(), 8u);
  // Anchor (2,1): the footprint covers x in [2,5], y in [3,4].
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) EXPECT_EQ(d.get(x, y), x >= 2 && x <= 5 && y >= 3 && y <= 4) << x << "," << y;
  auto g = oracle::make_grid(9, 9);
  g[4][4] = 1;
  EXPECT_EQ(d, to_mask(oracle::dilate(g, 4, 2)));
}

TEST(Morphology, MatchesBruteForceOnRandomMasks) {
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> ks(1, 6);
  std::uniform_real_distribution<double> density(0.05, 0.95);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = oracle::random_grid(rng, 1 + trial % 23, 1 + (trial * 7) % 19, density(rng));
    const BinaryMask m = to_mask(g);
    const int kw = ks(rng), kh = ks(rng);
    ASSERT_EQ(erode(m, {kw, kh}), to_mask(oracle::erode(g, kw, kh))) << trial;
    ASSERT_EQ(dilate(m, {kw, kh}), to_mask(oracle::dilate(g, kw, kh))) << trial;
  }
}

TEST(Morphology, AdjunctionProperty) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const BinaryMask m = random_mask(rng, 32, 32, 0.1 + 0.8 * (trial % 10) / 10.0);
    for (auto k : {StructuringElement{2, 1}, StructuringElement{4, 2}, StructuringElement{3, 3}}) {
      ASSERT_TRUE(dilate(erode(m, k), k).subset_of(m));
      ASSERT_TRUE(m.subset_of(erode(dilate(m, k), k)));
    }
  }
}

TEST(Morphology, DilationDistributesOverUnion) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const BinaryMask a = random_mask(rng, 32, 32, 0.05), b = random_mask(rng, 32, 32, 0.05);
    const StructuringElement k{4, 2};
    ASSERT_EQ(dilate(a | b, k), dilate(a, k) | dilate(b, k));
  }
}

TEST(MorphOps, ComposesPrimitives) {
  std::mt19937 rng(7);
  DetectParams p;
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracle::random_grid(rng, 32, 32, 0.6);
    auto want = oracle::erode(oracle::erode(g, 2, 1), 2, 1);
    want = oracle::dilate(oracle::dilate(want, 4, 2), 4, 2);
    ASSERT_EQ(morph_ops(to_mask(g), p), to_mask(want));
  }
  EXPECT_TRUE(morph_ops(BinaryMask(8, 8), p).none());
}

TEST(MorphOps, SpeckleRemoved) {
  BinaryMask m(32, 32);
  for (int y = 1; y < 32; y += 3)
    for (int x = 1; x < 32; x += 3) m.set(x, y);
  EXPECT_TRUE(morph_ops(m, DetectParams{}).none());
}

TEST(MorphOps, SolidBlockSurvives) {
  BinaryMask m(40, 40);
  oracle::Grid g = oracle::make_grid(40, 40);
  for (int y = 10; y < 30; ++y)
    for (int x = 10; x < 30; ++x) {
      m.set(x, y);
      g[y][x] = 1;
    }
  const auto out = morph_ops(m, DetectParams{});
  auto want = oracle::dilate(oracle::dilate(oracle::erode(oracle::erode(g, 2, 1), 2, 1), 4, 2), 4, 2);
  EXPECT_EQ(out, to_mask(want));
  EXPECT_GE(out.count(), 400u);
}

TEST(DetectPerturbation, IdenticalFramesNeverPerturb) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Frame f = random_frame(rng, 24, 16);
    for (int tau : {1, 30, 255}) {
      DetectParams p;
      p.diff_threshold = tau;
      p.combine = trial % 2 ? CombineMode::DiffOnly : CombineMode::DiffAndColor;
      ASSERT_TRUE(detect_perturbation(f, f, p).none());
    }
  }
}

TEST(DetectPerturbation, InRangePatchDetected) {
  Frame prev(40, 40, Rgb{40, 40, 40});
  Frame curr = prev;
  const Rgb magenta{230, 40, 230};
  for (int y = 15; y < 25; ++y)
    for (int x = 15; x < 25; ++x) curr.at(x, y) = magenta;
  DetectParams p;
  p.hsv_range = HsvRange(280, 320, 0.3, 1, 0.3, 1);
  const auto mask = detect_perturbation(prev, curr, p);

  oracle::Grid g = oracle::make_grid(40, 40);
  for (int y = 15; y < 25; ++y)
    for (int x = 15; x < 25; ++x) g[y][x] = 1;
  auto want = oracle::dilate(oracle::dilate(oracle::erode(oracle::erode(g, 2, 1), 2, 1), 4, 2), 4, 2);
  EXPECT_EQ(mask, to_mask(want));
  for (int y = 16; y < 24; ++y)
    for (int x = 17; x < 24; ++x) EXPECT_TRUE(mask.get(x, y));
}

TEST(DetectPerturbation, OutOfGatePatchIgnored) {
  Frame prev(40, 40, Rgb{40, 40, 40});
  Frame curr = prev;
  for (int y = 15; y < 25; ++y)
    for (int x = 15; x < 25; ++x) curr.at(x, y) = {230, 40, 230};
  EXPECT_TRUE(detect_perturbation(prev, curr, DetectParams{}).none());
  DetectParams diff_only;
  diff_only.combine = CombineMode::DiffOnly;
  EXPECT_FALSE(detect_perturbation(prev, curr, diff_only).none());
}

TEST(DetectPerturbation, EqualsAndOfStageMasks) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Frame a = random_frame(rng, 20, 20), b = random_frame(rng, 20, 20);
    DetectParams p;
    p.hsv_range = HsvRange(100, 250, 0.1, 1, 0.1, 1);
    const auto raw = threshold_diff(abs_diff(a, b), p.diff_threshold) & in_range(b, p.hsv_range);
    ASSERT_EQ(detect_perturbation(a, b, p), morph_ops(raw, p));
  }
}

TEST(DetectParams, Validation) {
  DetectParams p;
  EXPECT_NO_THROW(p.validate());
  p.diff_threshold = 256;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.min_blob_area = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}
