#pragma once

// Flow trajectory estimation: Hough line voting over perturbation masks, the
// slope-intercept form of an (r, theta) line, motion angles and compass
// direction classification.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "lavawatch/blobs.hpp"
#include "lavawatch/error.hpp"
#include "lavawatch/imaging.hpp"

namespace lavawatch {

struct HoughParams {
  int theta_bins = 180;
  double rho_resolution = 1.0;
  int vote_threshold = 20;
  int max_lines = 5;

  void validate() const {
    if (theta_bins < 2) throw InvalidArgument("theta_bins must be >= 2");
    if (!(rho_resolution > 0.0)) throw InvalidArgument("rho_resolution must be > 0");
    if (vote_threshold < 1) throw InvalidArgument("vote_threshold must be >= 1");
    if (max_lines < 1) throw InvalidArgument("max_lines must be >= 1");
  }
};

/// Line x*cos(theta) + y*sin(theta) = r in raster coordinates.
struct HoughLine {
  double r = 0.0;
  double theta = 0.0;  // radians, [0, pi)
  int votes = 0;
  int theta_index = 0;
  int rho_index = 0;

  friend bool operator==(const HoughLine&, const HoughLine&) = default;
};

/// Vote grid indexed [theta_index][rho_index]. rho_index = lround(r / rho_res)
/// + rho_offset, so the grid covers every r reachable inside the image.
struct HoughAccumulator {
  int theta_bins = 0;
  int rho_bins = 0;
  int rho_offset = 0;
  double rho_resolution = 1.0;
  std::vector<std::int32_t> votes;

  std::int32_t at(int t, int r) const noexcept {
    return votes[static_cast<std::size_t>(t) * static_cast<std::size_t>(rho_bins) + static_cast<std::size_t>(r)];
  }
  double theta_of(int t) const noexcept { return t * std::numbers::pi / theta_bins; }
  double rho_of(int r) const noexcept { return (r - rho_offset) * rho_resolution; }
};

inline int hough_rho_offset(int width, int height, double rho_resolution) {
  const double diag = std::hypot(std::max(width - 1, 0), std::max(height - 1, 0));
  return static_cast<int>(std::ceil(diag / rho_resolution));
}

inline HoughAccumulator hough_accumulate(const BinaryMask& m, const HoughParams& p) {
  p.validate();
  HoughAccumulator acc;
  acc.theta_bins = p.theta_bins;
  acc.rho_resolution = p.rho_resolution;
  acc.rho_offset = hough_rho_offset(m.width(), m.height(), p.rho_resolution);
  acc.rho_bins = 2 * acc.rho_offset + 1;
  acc.votes.assign(static_cast<std::size_t>(acc.theta_bins) * static_cast<std::size_t>(acc.rho_bins), 0);

  std::vector<double> cos_t(p.theta_bins), sin_t(p.theta_bins);
  for (int t = 0; t < p.theta_bins; ++t) {
    const double theta = acc.theta_of(t);
    cos_t[t] = std::cos(theta);
    sin_t[t] = std::sin(theta);
  }
  const auto bits = m.bits();
  for (int y = 0; y < m.height(); ++y) {
    const std::uint8_t* row = bits.data() + static_cast<std::size_t>(y) * m.width();
    for (int x = 0; x < m.width(); ++x) {
      if (!row[x]) continue;
      std::int32_t* cell = acc.votes.data() + acc.rho_offset;
      for (int t = 0; t < p.theta_bins; ++t, cell += acc.rho_bins) {
        const double r = x * cos_t[t] + y * sin_t[t];
        ++cell[std::lround(r / p.rho_resolution)];
      }
    }
  }
  return acc;
}

/// Local maxima with votes >= vote_threshold, sorted by votes descending then
/// (theta, r) ascending, truncated to max_lines. A cell must beat every
/// 8-neighbour that precedes it in (theta, r) order and at least tie those
/// after it, so exactly one cell of an equal-valued plateau survives.
inline std::vector<HoughLine> hough_peaks(const HoughAccumulator& acc, const HoughParams& p) {
  std::vector<HoughLine> peaks;
  for (int t = 0; t < acc.theta_bins; ++t) {
    for (int r = 0; r < acc.rho_bins; ++r) {
      const std::int32_t v = acc.at(t, r);
      if (v < p.vote_threshold) continue;
      bool is_peak = true;
      for (int dt = -1; dt <= 1 && is_peak; ++dt) {
        for (int dr = -1; dr <= 1; ++dr) {
          if (dt == 0 && dr == 0) continue;
          const int nt = t + dt, nr = r + dr;
          if (nt < 0 || nt >= acc.theta_bins || nr < 0 || nr >= acc.rho_bins) continue;
          const std::int32_t nv = acc.at(nt, nr);
          const bool before = dt < 0 || (dt == 0 && dr < 0);
          if (before ? nv >= v : nv > v) {
            is_peak = false;
            break;
          }
        }
      }
      if (is_peak) peaks.push_back({acc.rho_of(r), acc.theta_of(t), v, t, r});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const HoughLine& a, const HoughLine& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (a.theta_index != b.theta_index) return a.theta_index < b.theta_index;
    return a.rho_index < b.rho_index;
  });
  if (peaks.size() > static_cast<std::size_t>(p.max_lines)) peaks.resize(static_cast<std::size_t>(p.max_lines));
  return peaks;
}

inline std::vector<HoughLine> hough_transform(const BinaryMask& m, const HoughParams& p = {}) {
  if (m.none()) return {};
  return hough_peaks(hough_accumulate(m, p), p);
}

struct SlopeIntercept {
  double slope = 0.0;
  double intercept = 0.0;
};
struct VerticalLine {
  double x = 0.0;
};
using LineForm = std::variant<SlopeIntercept, VerticalLine>;

/// y = (-cos t / sin t) x + r / sin t, or the vertical x = r when sin t ~ 0.
inline LineForm line_to_slope_form(const HoughLine& l) {
  const double s = std::sin(l.theta);
  if (std::fabs(s) <= 1e-9) return VerticalLine{l.r};
  return SlopeIntercept{-std::cos(l.theta) / s, l.r / s};
}

// ---------------------------------------------------------------------------
// Angles and compass sectors. "grados" is measured counter-clockwise from
// screen-right with y pointing up, so 90 is screen-up.

enum class Direction { NE, NW, SW, SE, Indeterminate };

inline std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::NE: return "NE";
    case Direction::NW: return "NW";
    case Direction::SW: return "SW";
    case Direction::SE: return "SE";
    case Direction::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

inline double normalize_degrees(double deg) noexcept {
  double d = std::fmod(deg, 360.0);
  if (d < 0.0) d += 360.0;
  if (d >= 360.0) d -= 360.0;
  return d;
}

inline double motion_angle(PointF prev, PointF curr) {
  const double dx = curr.x - prev.x;
  const double dy = curr.y - prev.y;
  if (dx == 0.0 && dy == 0.0) throw ZeroDisplacement("centroids coincide");
  return normalize_degrees(std::atan2(-dy, dx) * 180.0 / std::numbers::pi);
}

struct DirectionReading {
  Direction direction = Direction::Indeterminate;
  double displayed_deviation = 0.0;
};

/// Sectors: [0,90] SE, (90,180) SW, [180,270] NW, (270,360) NE. The SW branch
/// reports |grados - 45| verbatim from the original operator display; the
/// other sectors report the distance to their own centre.
inline DirectionReading classify_direction(double grados) noexcept {
  const double g = normalize_degrees(grados);
  if (g > 90.0 && g < 180.0) return {Direction::SW, std::fabs(g - 45.0)};
  if (g <= 90.0) return {Direction::SE, std::fabs(g - 45.0)};
  if (g >= 180.0 && g <= 270.0) return {Direction::NW, std::fabs(g - 225.0)};
  return {Direction::NE, std::fabs(g - 315.0)};
}

enum class TrajectorySource { Pca, Motion, Fused };

inline std::string_view to_string(TrajectorySource s) noexcept {
  switch (s) {
    case TrajectorySource::Pca: return "pca";
    case TrajectorySource::Motion: return "motion";
    case TrajectorySource::Fused: return "fused";
  }
  return "pca";
}

struct FlowTrajectory {
  double grados = 0.0;
  Direction direction = Direction::Indeterminate;
  double displayed_deviation = 0.0;
  TrajectorySource source = TrajectorySource::Pca;

  static FlowTrajectory indeterminate() { return {}; }
};

/// Maps a principal axis (mod 180, raster) to the bearing of its downslope
/// half, i.e. the half pointing toward larger y. A horizontal axis resolves
/// to screen-right.
inline double downslope_bearing(double axis_deg) noexcept {
  const double a = std::fmod(std::fmod(axis_deg, 180.0) + 180.0, 180.0);
  if (a == 0.0) return 0.0;
  return normalize_degrees(360.0 - a);
}

/// Smallest difference between two axis angles taken mod 180.
inline double axis_difference(double a_deg, double b_deg) noexcept {
  const double d = std::fabs(std::fmod(a_deg - b_deg, 180.0));
  return std::min(d, 180.0 - d);
}

struct TrajectoryOptions {
  double min_motion_px = 1.0;
  double hough_agreement_deg = 10.0;
};

/// First (strongest) line passing through the blob, or nullopt.
inline std::optional<HoughLine> blob_hough_line(const FlowBlob& blob, std::span<const HoughLine> lines,
                                                double rho_resolution = 1.0) {
  const double spread = 2.0 * std::sqrt(blob.axis().minor);
  for (const HoughLine& l : lines) {
    const double dist = std::fabs(blob.centroid.x * std::cos(l.theta) + blob.centroid.y * std::sin(l.theta) - l.r);
    if (dist <= rho_resolution + spread) return l;
  }
  return std::nullopt;
}

inline FlowTrajectory estimate_trajectory(const FlowBlob& blob, const std::optional<FlowBlob>& match,
                                          std::span<const HoughLine> lines, const TrajectoryOptions& opt = {}) {
  const PrincipalAxis axis = blob.axis();
  bool hough_agrees = false;
  if (!axis.degenerate()) {
    if (auto line = blob_hough_line(blob, lines)) {
      const double line_axis = std::fmod(line->theta * 180.0 / std::numbers::pi + 90.0, 180.0);
      hough_agrees = axis_difference(line_axis, axis.angle_deg) <= opt.hough_agreement_deg;
    }
  }

  FlowTrajectory out;
  if (match) {
    const double disp = std::hypot(blob.centroid.x - match->centroid.x, blob.centroid.y - match->centroid.y);
    if (disp >= opt.min_motion_px) {
      out.grados = motion_angle(match->centroid, blob.centroid);
      out.source = hough_agrees ? TrajectorySource::Fused : TrajectorySource::Motion;
      const auto reading = classify_direction(out.grados);
      out.direction = reading.direction;
      out.displayed_deviation = reading.displayed_deviation;
      return out;
    }
  }
  if (axis.degenerate()) throw IndeterminateTrajectory("isotropic blob without usable motion");
  out.grados = downslope_bearing(axis.angle_deg);
  out.source = hough_agrees ? TrajectorySource::Fused : TrajectorySource::Pca;
  const auto reading = classify_direction(out.grados);
  out.direction = reading.direction;
  out.displayed_deviation = reading.displayed_deviation;
  return out;
}

/// One-to-one nearest-centroid matching. A pair is admissible when the
/// centroid distance is within 2*sqrt(area) of the larger blob; admissible
/// pairs are taken closest first. Result[i] is the index into `prev` matched
/// to curr[i].
inline std::vector<std::optional<std::size_t>> match_blobs(std::span<const FlowBlob> prev,
                                                           std::span<const FlowBlob> curr) {
  struct Pair {
    double dist;
    std::size_t c, p;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < curr.size(); ++c) {
    for (std::size_t p = 0; p < prev.size(); ++p) {
      const double dist = std::hypot(curr[c].centroid.x - prev[p].centroid.x, curr[c].centroid.y - prev[p].centroid.y);
      const double gate = 2.0 * std::sqrt(static_cast<double>(std::max(curr[c].area, prev[p].area)));
      if (dist <= gate) pairs.push_back({dist, c, p});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.c != b.c) return a.c < b.c;
    return a.p < b.p;
  });
  std::vector<std::optional<std::size_t>> result(curr.size());
  std::vector<bool> used(prev.size(), false);
  for (const Pair& pr : pairs) {
    if (result[pr.c] || used[pr.p]) continue;
    result[pr.c] = pr.p;
    used[pr.p] = true;
  }
  return result;
}

}  // namespace lavawatch
