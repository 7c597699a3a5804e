#pragma once

// Connected-component extraction and per-blob geometry, including the PCA
// principal axis of each blob's pixel coordinates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "lavawatch/error.hpp"
#include "lavawatch/imaging.hpp"

namespace lavawatch {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct PointF {
  double x = 0.0;
  double y = 0.0;
};

struct BBox {
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  bool contains(PointF p) const noexcept {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
};

/// Raw coordinate moments. Sums are integral so covariances come out exact
/// for collinear and isotropic pixel sets.
struct Moments {
  std::int64_t n = 0;
  std::int64_t sx = 0, sy = 0;
  std::int64_t sxx = 0, sxy = 0, syy = 0;

  void add(int x, int y) noexcept {
    ++n;
    sx += x;
    sy += y;
    sxx += std::int64_t{x} * x;
    sxy += std::int64_t{x} * y;
    syy += std::int64_t{y} * y;
  }

  PointF mean() const noexcept {
    return {static_cast<double>(sx) / static_cast<double>(n), static_cast<double>(sy) / static_cast<double>(n)};
  }

  /// Population covariance (divide by N): {cxx, cxy, cyy}.
  struct Covariance {
    double xx, xy, yy;
  };
  Covariance covariance() const noexcept {
    const __int128 nn = n;
    const __int128 nxx = nn * sxx - static_cast<__int128>(sx) * sx;
    const __int128 nxy = nn * sxy - static_cast<__int128>(sx) * sy;
    const __int128 nyy = nn * syy - static_cast<__int128>(sy) * sy;
    const long double d = static_cast<long double>(n) * static_cast<long double>(n);
    return {static_cast<double>(static_cast<long double>(nxx) / d), static_cast<double>(static_cast<long double>(nxy) / d),
            static_cast<double>(static_cast<long double>(nyy) / d)};
  }
};

struct PrincipalAxis {
  double angle_deg = 0.0;        // [0,180), raster convention (y down)
  double eigenvalue_ratio = 1.0;  // major/minor, +inf when collinear
  double major = 0.0;             // eigenvalues of the covariance
  double minor = 0.0;

  bool degenerate() const noexcept { return eigenvalue_ratio == 1.0; }
};

inline PrincipalAxis principal_axis(const Moments& m) {
  if (m.n < 1) throw EmptyBlob("principal axis of an empty pixel set");
  const auto c = m.covariance();
  PrincipalAxis out;
  const double half_trace = 0.5 * (c.xx + c.yy);
  const double half_diff = 0.5 * (c.xx - c.yy);
  const double root = std::hypot(half_diff, c.xy);
  out.major = half_trace + root;
  out.minor = std::max(half_trace - root, 0.0);
  if (root == 0.0) return out;  // single pixel or isotropic: angle 0, ratio 1

  double angle = 0.5 * std::atan2(2.0 * c.xy, c.xx - c.yy) * 180.0 / std::numbers::pi;
  if (angle < 0.0) angle += 180.0;
  if (angle >= 180.0) angle -= 180.0;
  out.angle_deg = angle;
  out.eigenvalue_ratio = out.minor <= 1e-12 * out.major ? std::numeric_limits<double>::infinity()
                                                        : out.major / out.minor;
  return out;
}

inline PrincipalAxis pca_axis(std::span<const Point> pixels) {
  Moments m;
  for (const Point& p : pixels) m.add(p.x, p.y);
  return principal_axis(m);
}

struct FlowBlob {
  int label = 0;
  std::int64_t area = 0;
  PointF centroid;
  std::int64_t perimeter = 0;
  BBox bbox;
  double principal_angle = 0.0;
  double eigenvalue_ratio = 1.0;
  Moments moments;

  PrincipalAxis axis() const { return principal_axis(moments); }
};

/// Fills principal_angle/eigenvalue_ratio from the blob's moments.
inline FlowBlob with_principal_axis(FlowBlob b) {
  const PrincipalAxis a = b.axis();
  b.principal_angle = a.angle_deg;
  b.eigenvalue_ratio = a.eigenvalue_ratio;
  return b;
}

/// Label raster: 0 is background, blobs are numbered 1..count in raster order
/// of their first pixel.
struct LabelImage {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<std::int32_t> labels;

  std::int32_t at(int x, int y) const noexcept {
    return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

namespace detail {

class DisjointSet {
 public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }
  std::int32_t find(std::int32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
  }

 private:
  std::vector<std::int32_t> parent_;
};

}  // namespace detail

inline LabelImage label_components(const BinaryMask& m, int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8) throw InvalidArgument("connectivity must be 4 or 8");
  const int w = m.width();
  const int h = m.height();
  LabelImage out{w, h, 0, std::vector<std::int32_t>(m.size(), 0)};
  if (m.size() == 0) return out;

  // First pass: provisional labels (1-based into the disjoint set; slot 0 unused).
  detail::DisjointSet sets;
  sets.make();
  auto bits = m.bits();
  auto& lab = out.labels;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!bits[i]) continue;
      std::int32_t neighbours[4];
      int k = 0;
      if (x > 0 && lab[i - 1]) neighbours[k++] = lab[i - 1];
      if (y > 0) {
        const std::size_t up = i - w;
        if (lab[up]) neighbours[k++] = lab[up];
        if (connectivity == 8) {
          if (x > 0 && lab[up - 1]) neighbours[k++] = lab[up - 1];
          if (x + 1 < w && lab[up + 1]) neighbours[k++] = lab[up + 1];
        }
      }
      if (k == 0) {
        lab[i] = sets.make();
        continue;
      }
      std::int32_t best = neighbours[0];
      for (int j = 1; j < k; ++j) best = std::min(best, neighbours[j]);
      lab[i] = best;
      for (int j = 0; j < k; ++j) sets.unite(best, neighbours[j]);
    }
  }

  // Second pass: compact roots into 1..count in raster order of first pixel.
  std::vector<std::int32_t> remap;
  for (auto& l : lab) {
    if (!l) continue;
    const std::int32_t root = sets.find(l);
    if (static_cast<std::size_t>(root) >= remap.size()) remap.resize(static_cast<std::size_t>(root) + 1, 0);
    if (!remap[root]) remap[root] = ++out.count;
    l = remap[root];
  }
  return out;
}

/// Area, centroid, perimeter (pixels with a 4-neighbour outside the blob or
/// the image), bbox and moments for every labelled region.
inline std::vector<FlowBlob> blobs_from_labels(const LabelImage& labels) {
  std::vector<FlowBlob> blobs(static_cast<std::size_t>(labels.count));
  for (int i = 0; i < labels.count; ++i) {
    blobs[i].label = i + 1;
    blobs[i].bbox = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
  }
  const int w = labels.width;
  const int h = labels.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t l = labels.at(x, y);
      if (!l) continue;
      FlowBlob& b = blobs[l - 1];
      b.moments.add(x, y);
      b.bbox.x_min = std::min(b.bbox.x_min, x);
      b.bbox.y_min = std::min(b.bbox.y_min, y);
      b.bbox.x_max = std::max(b.bbox.x_max, x);
      b.bbox.y_max = std::max(b.bbox.y_max, y);
      const bool boundary = x == 0 || y == 0 || x == w - 1 || y == h - 1 || labels.at(x - 1, y) != l ||
                            labels.at(x + 1, y) != l || labels.at(x, y - 1) != l || labels.at(x, y + 1) != l;
      if (boundary) ++b.perimeter;
    }
  }
  for (FlowBlob& b : blobs) {
    b.area = b.moments.n;
    b.centroid = b.moments.mean();
  }
  return blobs;
}

inline std::vector<FlowBlob> connected_components(const BinaryMask& m, int connectivity = 8) {
  return blobs_from_labels(label_components(m, connectivity));
}

inline std::vector<Point> blob_pixels(const LabelImage& labels, int label) {
  std::vector<Point> out;
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      if (labels.at(x, y) == label) out.push_back({x, y});
    }
  }
  return out;
}

inline std::vector<FlowBlob> filter_blobs(std::span<const FlowBlob> blobs, std::int64_t min_area) {
  std::vector<FlowBlob> out;
  std::copy_if(blobs.begin(), blobs.end(), std::back_inserter(out),
               [min_area](const FlowBlob& b) { return b.area >= min_area; });
  return out;
}

}  // namespace lavawatch
