#pragma once

// Pixel-buffer core: frames, binary masks, HSV conversion and range gating.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lavawatch/error.hpp"

namespace lavawatch {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Decoded raster image, row-major RGB. `frame_id` and `timestamp_ms` are
/// assigned by whoever produces the frame (stream reader, directory scan,
/// scenario generator).
class Frame {
 public:
  Frame() = default;

  Frame(int width, int height, Rgb fill = {})
      : width_(checked_dim(width)), height_(checked_dim(height)),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  Frame(int width, int height, std::vector<Rgb> pixels)
      : width_(checked_dim(width)), height_(checked_dim(height)), pixels_(std::move(pixels)) {
    if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
      throw InvalidArgument("frame pixel count does not match width x height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const Rgb> pixels() const noexcept { return pixels_; }
  std::span<Rgb> pixels() noexcept { return pixels_; }

  const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }
  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }

  std::uint64_t frame_id = 0;
  std::uint64_t timestamp_ms = 0;

  bool same_pixels(const Frame& other) const {
    return width_ == other.width_ && height_ == other.height_ && pixels_ == other.pixels_;
  }

 private:
  static int checked_dim(int d) {
    if (d < 1) throw InvalidArgument("frame dimensions must be >= 1");
    return d;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

/// Per-pixel boolean raster. Bits are stored one per byte so that rows can be
/// scanned without bit twiddling.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
              fill ? 1 : 0) {
    if (width < 0 || height < 0) throw InvalidArgument("mask dimensions must be non-negative");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool get(int x, int y) const noexcept { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) noexcept { bits_[index(x, y)] = v ? 1 : 0; }
  bool in_bounds(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool none() const noexcept { return count() == 0; }

  /// True when every set bit of *this is also set in `other`.
  bool subset_of(const BinaryMask& other) const {
    require_same_shape(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i] && !other.bits_[i]) return false;
    }
    return true;
  }

  BinaryMask& operator&=(const BinaryMask& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= other.bits_[i];
    return *this;
  }
  BinaryMask& operator|=(const BinaryMask& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
    return *this;
  }
  friend BinaryMask operator&(BinaryMask a, const BinaryMask& b) { return a &= b; }
  friend BinaryMask operator|(BinaryMask a, const BinaryMask& b) { return a |= b; }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  void require_same_shape(const BinaryMask& other) const {
    if (width_ != other.width_ || height_ != other.height_) {
      throw DimensionMismatch("mask dimensions differ");
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// h in degrees [0,360), s and v in [0,1]. Hue is stored as 0 when s == 0.
struct HsvPixel {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

/// Hexcone RGB -> HSV, saturation relative to the max channel.
inline HsvPixel rgb_to_hsv(Rgb p) noexcept {
  const int r = p.r, g = p.g, b = p.b;
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const double delta = mx - mn;

  HsvPixel out;
  out.v = mx / 255.0;
  out.s = mx > 0 ? delta / mx : 0.0;
  if (delta == 0.0) return out;

  double h;
  if (mx == r) {
    h = 60.0 * ((g - b) / delta);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

/// Inverse hexcone conversion, rounding each channel to the nearest integer.
inline Rgb hsv_to_rgb(HsvPixel p) noexcept {
  const double h = std::fmod(std::fmod(p.h, 360.0) + 360.0, 360.0);
  const double s = std::clamp(p.s, 0.0, 1.0);
  const double v = std::clamp(p.v, 0.0, 1.0);
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  auto to8 = [m](double ch) {
    return static_cast<std::uint8_t>(std::clamp(std::lround((ch + m) * 255.0), 0L, 255L));
  };
  return {to8(r), to8(g), to8(b)};
}

/// Closed HSV box. When h_lo > h_hi the hue interval wraps through 0.
/// h_hi may be 360 so that [0,360] expresses the whole hue circle.
class HsvRange {
 public:
  HsvRange() = default;
  HsvRange(double h_lo, double h_hi, double s_lo, double s_hi, double v_lo, double v_hi)
      : h_lo_(h_lo), h_hi_(h_hi), s_lo_(s_lo), s_hi_(s_hi), v_lo_(v_lo), v_hi_(v_hi) {
    if (h_lo < 0.0 || h_lo >= 360.0 || h_hi < 0.0 || h_hi > 360.0) {
      throw InvalidArgument("hue bounds must lie in [0,360)");
    }
    if (s_lo < 0.0 || s_hi > 1.0 || s_lo > s_hi) throw InvalidArgument("invalid saturation bounds");
    if (v_lo < 0.0 || v_hi > 1.0 || v_lo > v_hi) throw InvalidArgument("invalid value bounds");
  }

  /// Default hot-flow gate: hue 139..202 degrees, moderately saturated, not dark.
  static HsvRange hot_flow_default() { return {139.0, 202.0, 0.2, 1.0, 0.3, 1.0}; }
  static HsvRange full() { return {0.0, 360.0, 0.0, 1.0, 0.0, 1.0}; }

  bool wraps() const noexcept { return h_lo_ > h_hi_; }

  bool contains(const HsvPixel& p) const noexcept {
    const bool hue_ok = wraps() ? (p.h >= h_lo_ || p.h <= h_hi_) : (p.h >= h_lo_ && p.h <= h_hi_);
    return hue_ok && p.s >= s_lo_ && p.s <= s_hi_ && p.v >= v_lo_ && p.v <= v_hi_;
  }
  bool contains(Rgb p) const noexcept { return contains(rgb_to_hsv(p)); }

  double h_lo() const noexcept { return h_lo_; }
  double h_hi() const noexcept { return h_hi_; }
  double s_lo() const noexcept { return s_lo_; }
  double s_hi() const noexcept { return s_hi_; }
  double v_lo() const noexcept { return v_lo_; }
  double v_hi() const noexcept { return v_hi_; }

 private:
  double h_lo_ = 139.0, h_hi_ = 202.0;
  double s_lo_ = 0.2, s_hi_ = 1.0;
  double v_lo_ = 0.3, v_hi_ = 1.0;
};

inline BinaryMask in_range(const Frame& frame, const HsvRange& range) {
  BinaryMask mask(frame.width(), frame.height());
  auto px = frame.pixels();
  auto bits = mask.bits();
  for (std::size_t i = 0; i < px.size(); ++i) bits[i] = range.contains(px[i]) ? 1 : 0;
  return mask;
}

}  // namespace lavawatch
