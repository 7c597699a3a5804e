#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lavawatch/codec.hpp"
#include "lavawatch/imaging.hpp"
#include "oracles.hpp"

using namespace lavawatch;

namespace {

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

TEST(Frame, RejectsZeroDimensions) {
  EXPECT_THROW(Frame(0, 4), InvalidArgument);
  EXPECT_THROW(Frame(4, -1), InvalidArgument);
  EXPECT_THROW(Frame(2, 2, std::vector<Rgb>(3)), InvalidArgument);
}

TEST(Frame, RowMajorAccess) {
  Frame f(3, 2);
  f.at(2, 1) = {1, 2, 3};
  EXPECT_EQ(f.pixels()[5], (Rgb{1, 2, 3}));
}

TEST(Hsv, PureColours) {
  auto red = rgb_to_hsv({255, 0, 0});
  EXPECT_DOUBLE_EQ(red.h, 0.0);
  EXPECT_DOUBLE_EQ(red.s, 1.0);
  EXPECT_DOUBLE_EQ(red.v, 1.0);
  EXPECT_DOUBLE_EQ(rgb_to_hsv({0, 255, 0}).h, 120.0);
  EXPECT_DOUBLE_EQ(rgb_to_hsv({0, 0, 255}).h, 240.0);
  auto grey = rgb_to_hsv({128, 128, 128});
  EXPECT_DOUBLE_EQ(grey.h, 0.0);
  EXPECT_DOUBLE_EQ(grey.s, 0.0);
  auto black = rgb_to_hsv({0, 0, 0});
  EXPECT_DOUBLE_EQ(black.v, 0.0);
  EXPECT_DOUBLE_EQ(black.s, 0.0);
}

TEST(Hsv, FrozenReferenceValue) {
  // Values produced by an independent colorsys computation.
  const auto p = rgb_to_hsv({10, 200, 90});
  EXPECT_NEAR(p.h, 145.26315789473682, 1e-9);
  EXPECT_NEAR(p.s, 0.9500000000000001, 1e-12);
  EXPECT_NEAR(p.v, 0.7843137254901961, 1e-12);
}

TEST(Hsv, MatchesOracleOnRandomColours) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 20000; ++i) {
    const int r = byte(rng), g = byte(rng), b = byte(rng);
    const auto got = rgb_to_hsv({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                 static_cast<std::uint8_t>(b)});
    const auto want = oracle::hsv(r, g, b);
    ASSERT_NEAR(got.h, want.h, 1e-9) << r << "," << g << "," << b;
    ASSERT_NEAR(got.s, want.s, 1e-12);
    ASSERT_NEAR(got.v, want.v, 1e-12);
    ASSERT_GE(got.h, 0.0);
    ASSERT_LT(got.h, 360.0);
  }
}

TEST(Hsv, RoundTripThroughRgbIsExact) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 20000; ++i) {
    const Rgb p{static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                static_cast<std::uint8_t>(byte(rng))};
    ASSERT_EQ(hsv_to_rgb(rgb_to_hsv(p)), p);
  }
}

TEST(HsvRange, Validation) {
  EXPECT_THROW(HsvRange(-1, 10, 0, 1, 0, 1), InvalidArgument);
  EXPECT_THROW(HsvRange(10, 361, 0, 1, 0, 1), InvalidArgument);
  EXPECT_THROW(HsvRange(10, 20, 0.5, 0.4, 0, 1), InvalidArgument);
  EXPECT_THROW(HsvRange(10, 20, 0, 1, 0, 1.5), InvalidArgument);
  EXPECT_NO_THROW(HsvRange::full());
}

TEST(HsvRange, DefaultGateBounds) {
  const auto r = HsvRange::hot_flow_default();
  EXPECT_TRUE(r.contains(HsvPixel{139.0, 0.5, 0.5}));
  EXPECT_TRUE(r.contains(HsvPixel{202.0, 0.5, 0.5}));
  EXPECT_FALSE(r.contains(HsvPixel{138.9, 0.5, 0.5}));
  EXPECT_FALSE(r.contains(HsvPixel{202.1, 0.5, 0.5}));
  EXPECT_FALSE(r.contains(HsvPixel{170.0, 0.1, 0.5}));
  EXPECT_FALSE(r.contains(HsvPixel{170.0, 0.5, 0.2}));
  EXPECT_TRUE(r.contains(hsv_to_rgb({170.0, 0.8, 0.9})));
}

TEST(HsvRange, WrappingHue) {
  HsvRange r(350, 10, 0, 1, 0, 1);
  EXPECT_TRUE(r.wraps());
  EXPECT_TRUE(r.contains(HsvPixel{355, 1, 1}));
  EXPECT_TRUE(r.contains(HsvPixel{5, 1, 1}));
  EXPECT_FALSE(r.contains(HsvPixel{180, 1, 1}));
}

TEST(InRange, FullRangeAcceptsEverything) {
  std::mt19937 rng(3);
  const Frame f = random_frame(rng, 17, 9);
  EXPECT_EQ(in_range(f, HsvRange::full()).count(), f.size());
}

TEST(InRange, MatchesPerPixelOracle) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> hue(0.0, 359.0), unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Frame f = random_frame(rng, 16, 12);
    double hlo = hue(rng), hhi = hue(rng);
    double s1 = unit(rng), s2 = unit(rng), v1 = unit(rng), v2 = unit(rng);
    const HsvRange r(hlo, hhi, std::min(s1, s2), std::max(s1, s2), std::min(v1, v2), std::max(v1, v2));
    const auto mask = in_range(f, r);
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        const auto p = f.at(x, y);
        const bool want = oracle::hsv_in_box(oracle::hsv(p.r, p.g, p.b), hlo, hhi, std::min(s1, s2),
                                             std::max(s1, s2), std::min(v1, v2), std::max(v1, v2));
        ASSERT_EQ(mask.get(x, y), want);
      }
    }
  }
}

TEST(BinaryMask, SetAlgebra) {
  BinaryMask a(4, 4), b(4, 4);
  a.set(1, 1);
  b.set(1, 1);
  b.set(2, 2);
  EXPECT_TRUE(a.subset_of(b));
  EXPECT_FALSE(b.subset_of(a));
  EXPECT_EQ((a | b).count(), 2u);
  EXPECT_EQ((a & b).count(), 1u);
  EXPECT_THROW(a.subset_of(BinaryMask(3, 4)), DimensionMismatch);
}

TEST(Ppm, RoundTrip) {
  std::mt19937 rng(9);
  const Frame f = random_frame(rng, 13, 7);
  EXPECT_TRUE(decode_ppm(encode_ppm(f)).same_pixels(f));
}

TEST(Ppm, HeaderCommentsAndWhitespace) {
  std::string text = "P6\n# a comment\n2 # trailing\n1\n255\n";
  text += std::string("\x01\x02\x03\x04\x05\x06", 6);
  const Bytes bytes(text.begin(), text.end());
  const Frame f = decode_ppm(bytes);
  EXPECT_EQ(f.width(), 2);
  EXPECT_EQ(f.height(), 1);
  EXPECT_EQ(f.at(1, 0), (Rgb{4, 5, 6}));
}

TEST(Ppm, Errors) {
  const std::string truncated = "P6 4 4 255\n\x01\x02";
  EXPECT_THROW(decode_ppm(Bytes(truncated.begin(), truncated.end())), MalformedImage);
  const std::string ascii = "P3 1 1 255\n1 2 3\n";
  EXPECT_THROW(decode_ppm(Bytes(ascii.begin(), ascii.end())), UnsupportedFormat);
  const std::string deep = "P6 1 1 65535\n\x00\x00\x00\x00\x00\x00";
  EXPECT_THROW(decode_ppm(Bytes(deep.begin(), deep.end())), UnsupportedFormat);
  const std::string zero = "P6 0 1 255\n";
  EXPECT_THROW(decode_ppm(Bytes(zero.begin(), zero.end())), MalformedImage);
  EXPECT_THROW(decode_frame(Bytes{'G', 'I', 'F'}), UnsupportedFormat);
}

TEST(Png, RoundTrip) {
  std::mt19937 rng(21);
  const Frame f = random_frame(rng, 31, 17);
  const Bytes png = encode_png(f);
  EXPECT_EQ(sniff_format(png), ImageFormat::Png);
  EXPECT_TRUE(decode_frame(png).same_pixels(f));
}

TEST(Png, DecodesIndependentEncoderOutput) {
  std::mt19937 rng(22);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int channels : {3, 4}) {
    const int w = 9, h = 5;
    std::vector<std::uint8_t> samples(static_cast<std::size_t>(w) * h * channels);
    for (auto& s : samples) s = static_cast<std::uint8_t>(byte(rng));
    const Frame f = decode_png(oracle::png_encode(w, h, samples, channels));
    ASSERT_EQ(f.width(), w);
    ASSERT_EQ(f.height(), h);
    for (int i = 0; i < w * h; ++i) {
      const Rgb want{samples[i * channels], samples[i * channels + 1], samples[i * channels + 2]};
      ASSERT_EQ(f.pixels()[i], want);
    }
  }
}

TEST(Png, CorruptInput) {
  Bytes png = encode_png(Frame(4, 4, Rgb{1, 2, 3}));
  png.resize(png.size() / 2);
  EXPECT_THROW(decode_png(png), MalformedImage);
}

TEST(FrameStream, RoundTripAndCleanEof) {
  std::mt19937 rng(4);
  Frame a = random_frame(rng, 5, 3), b = random_frame(rng, 2, 2);
  a.timestamp_ms = 1439553600000ull;
  b.timestamp_ms = 42;
  std::stringstream ss;
  write_stream_record(ss, a);
  write_stream_record(ss, b);
  FrameStreamReader reader(ss, 10);
  auto fa = reader.next();
  auto fb = reader.next();
  ASSERT_TRUE(fa && fb);
  EXPECT_TRUE(fa->same_pixels(a));
  EXPECT_EQ(fa->timestamp_ms, a.timestamp_ms);
  EXPECT_EQ(fa->frame_id, 10u);
  EXPECT_EQ(fb->frame_id, 11u);
  EXPECT_TRUE(fb->same_pixels(b));
  EXPECT_FALSE(reader.next());
}

TEST(FrameStream, TruncationIsMalformed) {
  std::mt19937 rng(4);
  std::stringstream full;
  write_stream_record(full, random_frame(rng, 4, 4));
  const std::string bytes = full.str();
  for (std::size_t cut : {std::size_t{3}, std::size_t{16}, bytes.size() - 1}) {
    std::stringstream ss(bytes.substr(0, cut));
    FrameStreamReader reader(ss);
    EXPECT_THROW(reader.next(), MalformedImage) << cut;
  }
}
