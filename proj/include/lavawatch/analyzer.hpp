#pragma once

// Per-frame flow analysis: perturbation mask -> blobs -> Hough lines ->
// trajectories, carrying the previous frame and its blobs forward.

#include <optional>
#include <span>
#include <vector>

#include "lavawatch/alert.hpp"
#include "lavawatch/blobs.hpp"
#include "lavawatch/detect.hpp"
#include "lavawatch/imaging.hpp"
#include "lavawatch/trajectory.hpp"

namespace lavawatch {

struct AnalyzerParams {
  DetectParams detect;
  HoughParams hough;
  int connectivity = 8;
  TrajectoryOptions trajectory;

  void validate() const {
    detect.validate();
    hough.validate();
    if (connectivity != 4 && connectivity != 8) throw InvalidArgument("connectivity must be 4 or 8");
  }
};

struct FrameAnalysis {
  BinaryMask mask;
  std::vector<HoughLine> lines;
  std::vector<FlowRecord> flows;
};

inline FrameAnalysis analyze_pair(const Frame& prev, const Frame& curr, std::span<const FlowBlob> prev_blobs,
                                  const AnalyzerParams& p) {
  FrameAnalysis out;
  out.mask = detect_perturbation(prev, curr, p.detect);
  if (out.mask.none()) return out;

  const auto all = connected_components(out.mask, p.connectivity);
  std::vector<FlowBlob> blobs = filter_blobs(all, p.detect.min_blob_area);
  if (blobs.empty()) return out;
  for (auto& b : blobs) b = with_principal_axis(std::move(b));

  out.lines = hough_transform(out.mask, p.hough);
  const auto matches = match_blobs(prev_blobs, blobs);
  out.flows.reserve(blobs.size());
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    std::optional<FlowBlob> match;
    if (matches[i]) match = prev_blobs[*matches[i]];
    FlowTrajectory traj;
    try {
      traj = estimate_trajectory(blobs[i], match, out.lines, p.trajectory);
    } catch (const IndeterminateTrajectory&) {
      traj = FlowTrajectory::indeterminate();
    }
    out.flows.push_back({std::move(blobs[i]), traj});
  }
  return out;
}

/// Stateful wrapper over analyze_pair for a frame sequence. The first frame
/// (or the first after a size change) only primes the state.
class FlowAnalyzer {
 public:
  explicit FlowAnalyzer(AnalyzerParams params = {}) : params_(std::move(params)) { params_.validate(); }

  FrameAnalysis process(const Frame& frame) {
    FrameAnalysis result;
    if (prev_ && prev_->width() == frame.width() && prev_->height() == frame.height()) {
      result = analyze_pair(*prev_, frame, prev_blobs_, params_);
    }
    prev_ = frame;
    prev_blobs_.clear();
    for (const auto& f : result.flows) prev_blobs_.push_back(f.blob);
    return result;
  }

  void reset() {
    prev_.reset();
    prev_blobs_.clear();
  }

  const AnalyzerParams& params() const noexcept { return params_; }

 private:
  AnalyzerParams params_;
  std::optional<Frame> prev_;
  std::vector<FlowBlob> prev_blobs_;
};

}  // namespace lavawatch
