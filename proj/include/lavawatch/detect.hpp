#pragma once

// Inter-frame perturbation detection: layer differencing, binarisation,
// rectangular-kernel morphology and the colour gate.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include "lavawatch/error.hpp"
#include "lavawatch/imaging.hpp"

namespace lavawatch {

/// Per-pixel change magnitude (max over channels of |curr - prev|).
class DiffMap {
 public:
  DiffMap() = default;
  DiffMap(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  std::span<std::uint8_t> values() noexcept { return values_; }
  std::uint8_t at(int x, int y) const noexcept {
    return values_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }

  friend bool operator==(const DiffMap&, const DiffMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> values_;
};

/// Rectangular structuring element anchored at (w/2, h/2).
struct StructuringElement {
  int w = 1;
  int h = 1;

  StructuringElement() = default;
  StructuringElement(int width, int height) : w(width), h(height) {
    if (w < 1 || h < 1) throw InvalidArgument("structuring element must be at least 1x1");
  }
  int anchor_x() const noexcept { return w / 2; }
  int anchor_y() const noexcept { return h / 2; }
};

enum class CombineMode {
  DiffAndColor,  // changed AND currently inside the hot-flow colour gate
  DiffOnly,
};

struct DetectParams {
  int diff_threshold = 30;
  StructuringElement erode_kernel{2, 1};
  StructuringElement dilate_kernel{4, 2};
  int morph_passes = 2;
  HsvRange hsv_range = HsvRange::hot_flow_default();
  int min_blob_area = 20;
  CombineMode combine = CombineMode::DiffAndColor;

  void validate() const {
    if (diff_threshold < 0 || diff_threshold > 255) throw InvalidArgument("diff_threshold must be in [0,255]");
    if (min_blob_area < 1) throw InvalidArgument("min_blob_area must be >= 1");
    if (morph_passes < 0) throw InvalidArgument("morph_passes must be >= 0");
  }
};

inline DiffMap abs_diff(const Frame& prev, const Frame& curr) {
  if (prev.width() != curr.width() || prev.height() != curr.height()) {
    throw DimensionMismatch("abs_diff: frames differ in size");
  }
  DiffMap out(curr.width(), curr.height());
  auto a = prev.pixels();
  auto b = curr.pixels();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const int dr = std::abs(int{b[i].r} - int{a[i].r});
    const int dg = std::abs(int{b[i].g} - int{a[i].g});
    const int db = std::abs(int{b[i].b} - int{a[i].b});
    dst[i] = static_cast<std::uint8_t>(std::max({dr, dg, db}));
  }
  return out;
}

inline BinaryMask threshold_diff(const DiffMap& d, int tau) {
  if (tau < 0 || tau > 255) throw InvalidArgument("threshold must be in [0,255]");
  BinaryMask out(d.width(), d.height());
  auto src = d.values();
  auto dst = out.bits();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] >= tau ? 1 : 0;
  return out;
}

namespace detail {

// Sliding-window reduction along one line of `len` cells spaced `stride`
// apart. Output cell i looks at input cells [i+lo, i+hi] clipped to the line.
// want_all: set iff every in-bounds cell is set; otherwise set iff any is.
inline void window_line(const std::uint8_t* src, std::uint8_t* dst, int len, std::ptrdiff_t stride,
                        int lo, int hi, bool want_all, std::vector<int>& prefix) {
  prefix.assign(static_cast<std::size_t>(len) + 1, 0);
  for (int i = 0; i < len; ++i) {
    const bool bit = src[i * stride] != 0;
    prefix[i + 1] = prefix[i] + ((want_all ? !bit : bit) ? 1 : 0);
  }
  for (int i = 0; i < len; ++i) {
    const int a = std::max(i + lo, 0);
    const int b = std::min(i + hi, len - 1);
    const int hits = a <= b ? prefix[b + 1] - prefix[a] : 0;
    dst[i * stride] = want_all ? (hits == 0 ? 1 : 0) : (hits > 0 ? 1 : 0);
  }
}

// Rectangles are separable: the row pass then the column pass gives the same
// result as the full 2-D window, including the clipped border behaviour.
inline BinaryMask rect_window(const BinaryMask& m, int x_lo, int x_hi, int y_lo, int y_hi, bool want_all) {
  const int w = m.width();
  const int h = m.height();
  BinaryMask rows(w, h);
  BinaryMask out(w, h);
  std::vector<int> prefix;
  const std::uint8_t* src = m.bits().data();
  std::uint8_t* mid = rows.bits().data();
  for (int y = 0; y < h; ++y) {
    window_line(src + static_cast<std::ptrdiff_t>(y) * w, mid + static_cast<std::ptrdiff_t>(y) * w, w, 1, x_lo,
                x_hi, want_all, prefix);
  }
  std::uint8_t* dst = out.bits().data();
  for (int x = 0; x < w; ++x) window_line(mid + x, dst + x, h, w, y_lo, y_hi, want_all, prefix);
  return out;
}

}  // namespace detail

/// Bit set iff every in-bounds cell under the kernel is set. Kernel cells
/// falling outside the image are ignored.
inline BinaryMask erode(const BinaryMask& m, const StructuringElement& k) {
  if (m.size() == 0) return m;
  const int ax = k.anchor_x(), ay = k.anchor_y();
  return detail::rect_window(m, -ax, k.w - 1 - ax, -ay, k.h - 1 - ay, true);
}

/// Bit set iff any cell under the reflected kernel is set.
inline BinaryMask dilate(const BinaryMask& m, const StructuringElement& k) {
  if (m.size() == 0) return m;
  const int ax = k.anchor_x(), ay = k.anchor_y();
  return detail::rect_window(m, -(k.w - 1 - ax), ax, -(k.h - 1 - ay), ay, false);
}

inline BinaryMask morph_ops(const BinaryMask& m, const DetectParams& p) {
  BinaryMask out = m;
  for (int i = 0; i < p.morph_passes; ++i) out = erode(out, p.erode_kernel);
  for (int i = 0; i < p.morph_passes; ++i) out = dilate(out, p.dilate_kernel);
  return out;
}

/// Pixels that changed by at least diff_threshold and (in the default mode)
/// currently fall inside the hot-flow HSV gate, cleaned by morph_ops.
inline BinaryMask detect_perturbation(const Frame& prev, const Frame& curr, const DetectParams& p) {
  if (prev.width() != curr.width() || prev.height() != curr.height()) {
    throw DimensionMismatch("detect_perturbation: frames differ in size");
  }
  BinaryMask raw(curr.width(), curr.height());
  auto a = prev.pixels();
  auto b = curr.pixels();
  auto bits = raw.bits();
  const bool gate = p.combine == CombineMode::DiffAndColor;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const int d = std::max({std::abs(int{b[i].r} - int{a[i].r}), std::abs(int{b[i].g} - int{a[i].g}),
                            std::abs(int{b[i].b} - int{a[i].b})});
    // HSV conversion only for changed pixels; identical to ANDing full masks.
    bits[i] = (d >= p.diff_threshold && (!gate || p.hsv_range.contains(b[i]))) ? 1 : 0;
  }
  return morph_ops(raw, p);
}

}  // namespace lavawatch
