#pragma once

// Synthetic eruption scenarios and the detection-rate benchmark.
//
// A scenario renders a static vertical grey gradient with optional per-pixel
// Gaussian sensor noise. A flow is an anti-aliased thick segment that grows
// from the vent along a bearing; its advancing front fades into the
// background over `edge_softness` pixels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lavawatch/alert.hpp"
#include "lavawatch/analyzer.hpp"
#include "lavawatch/config.hpp"
#include "lavawatch/error.hpp"
#include "lavawatch/imaging.hpp"
#include "lavawatch/trajectory.hpp"

namespace lavawatch {

struct FlowSpec {
  double start_x = 0.0;
  double start_y = 0.0;
  double bearing_deg = 0.0;  // same convention as grados: CCW from screen-right, y up
  double speed = 2.0;        // head advance, px/frame
  double width = 8.0;
  double growth = 2.0;  // length growth, px/frame; equal to speed keeps the tail at the vent
  double initial_length = 8.0;
  double edge_softness = 4.0;
  int onset_frame = 1;
  HsvPixel color{170.0, 0.8, 0.9};
};

struct Scenario {
  std::string id = "scenario";
  int frames = 20;
  int width = 320;
  int height = 240;
  int gradient_top = 25;
  int gradient_bottom = 70;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  std::optional<FlowSpec> flow;

  void validate() const {
    if (frames < 1) throw InvalidArgument("scenario needs at least one frame");
    if (width < 1 || height < 1) throw InvalidArgument("scenario size must be positive");
    if (noise_sigma < 0.0) throw InvalidArgument("noise sigma must be non-negative");
    if (flow && (flow->width <= 0.0 || flow->edge_softness < 1.0 || flow->speed < 0.0 || flow->onset_frame < 0)) {
      throw InvalidArgument("invalid flow parameters");
    }
  }
};

struct FlowGeometry {
  PointF head;
  PointF tail;
};

/// Head and tail of the flow at frame t, or nullopt before onset.
inline std::optional<FlowGeometry> flow_geometry(const FlowSpec& f, int t) {
  if (t < f.onset_frame) return std::nullopt;
  const double k = t - f.onset_frame;
  const double rad = f.bearing_deg * std::numbers::pi / 180.0;
  const double ux = std::cos(rad), uy = -std::sin(rad);
  const double s_head = f.initial_length + f.speed * k;
  const double s_tail = std::max(s_head - (f.initial_length + f.growth * k), 0.0);
  return FlowGeometry{{f.start_x + ux * s_head, f.start_y + uy * s_head},
                      {f.start_x + ux * s_tail, f.start_y + uy * s_tail}};
}

/// Renders a scenario one frame at a time so long or large sequences need
/// not be held in memory. Produces exactly the frames of generate_sequence.
class ScenarioRenderer {
 public:
  explicit ScenarioRenderer(Scenario s)
      : s_(std::move(s)), rng_(s_.seed), noise_(0.0, s_.noise_sigma > 0.0 ? s_.noise_sigma : 1.0) {
    s_.validate();
    if (s_.flow) {
      const auto last = flow_geometry(*s_.flow, s_.frames - 1);
      auto inside = [this](PointF p) {
        return p.x >= 0.0 && p.y >= 0.0 && p.x <= s_.width - 1 && p.y <= s_.height - 1;
      };
      if (!inside({s_.flow->start_x, s_.flow->start_y}) || (last && !inside(last->head))) {
        throw FlowOutOfBounds("flow in scenario '" + s_.id + "' leaves the frame before the sequence ends");
      }
      flow_rgb_ = hsv_to_rgb(s_.flow->color);
    }
    background_.resize(static_cast<std::size_t>(s_.height));
    for (int y = 0; y < s_.height; ++y) {
      const double f = s_.height > 1 ? static_cast<double>(y) / (s_.height - 1) : 0.0;
      background_[y] = s_.gradient_top + (s_.gradient_bottom - s_.gradient_top) * f;
    }
    alpha_.resize(static_cast<std::size_t>(s_.width) * s_.height);
  }

  const Scenario& scenario() const noexcept { return s_; }

  std::optional<Frame> next() {
    if (t_ >= s_.frames) return std::nullopt;
    const int t = t_++;
    std::fill(alpha_.begin(), alpha_.end(), 0.0);
    if (s_.flow) {
      if (const auto g = flow_geometry(*s_.flow, t)) paint_flow(*g);
    }

    Frame frame(s_.width, s_.height);
    frame.frame_id = static_cast<std::uint64_t>(t);
    frame.timestamp_ms = static_cast<std::uint64_t>(t) * 100;
    auto px = frame.pixels();
    auto q = [](double c) { return static_cast<std::uint8_t>(std::clamp(std::lround(c), 0L, 255L)); };
    for (int y = 0; y < s_.height; ++y) {
      const double bg = background_[y];
      for (int x = 0; x < s_.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * s_.width + x;
        const double a = alpha_[i];
        double ch[3] = {bg + a * (flow_rgb_.r - bg), bg + a * (flow_rgb_.g - bg), bg + a * (flow_rgb_.b - bg)};
        if (s_.noise_sigma > 0.0) {
          for (double& c : ch) c += noise_(rng_);
        }
        px[i] = {q(ch[0]), q(ch[1]), q(ch[2])};
      }
    }
    return frame;
  }

 private:
  void paint_flow(const FlowGeometry& g) {
    const FlowSpec& f = *s_.flow;
    const double rad = f.bearing_deg * std::numbers::pi / 180.0;
    const double ux = std::cos(rad), uy = -std::sin(rad);
    const double s_head = (g.head.x - f.start_x) * ux + (g.head.y - f.start_y) * uy;
    const double s_tail = (g.tail.x - f.start_x) * ux + (g.tail.y - f.start_y) * uy;
    const double pad = f.width / 2.0 + 2.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(g.head.x, g.tail.x) - pad)));
    const int x1 = std::min(s_.width - 1, static_cast<int>(std::ceil(std::max(g.head.x, g.tail.x) + pad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(g.head.y, g.tail.y) - pad)));
    const int y1 = std::min(s_.height - 1, static_cast<int>(std::ceil(std::max(g.head.y, g.tail.y) + pad)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = x - f.start_x, py = y - f.start_y;
        const double along = px * ux + py * uy;
        const double across = std::fabs(px * uy - py * ux);
        const double side = std::clamp(f.width / 2.0 + 0.5 - across, 0.0, 1.0);
        const double front = std::clamp((s_head - along) / f.edge_softness, 0.0, 1.0);
        const double back = std::clamp(along - s_tail + 0.5, 0.0, 1.0);
        alpha_[static_cast<std::size_t>(y) * s_.width + x] = side * front * back;
      }
    }
  }

  Scenario s_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
  Rgb flow_rgb_{};
  std::vector<double> background_;
  std::vector<double> alpha_;
  int t_ = 0;
};

inline std::vector<Frame> generate_sequence(const Scenario& s) {
  ScenarioRenderer r(s);
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(s.frames));
  while (auto f = r.next()) frames.push_back(std::move(*f));
  return frames;
}

// ---------------------------------------------------------------------------
// Scenario files

inline std::string scenario_to_text(const Scenario& s) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "id = " << s.id << "\n"
      << "frames = " << s.frames << "\n"
      << "width = " << s.width << "\n"
      << "height = " << s.height << "\n"
      << "gradient_top = " << s.gradient_top << "\n"
      << "gradient_bottom = " << s.gradient_bottom << "\n"
      << "noise_sigma = " << s.noise_sigma << "\n"
      << "seed = " << s.seed << "\n"
      << "flow = " << (s.flow ? "true" : "false") << "\n";
  if (s.flow) {
    const FlowSpec& f = *s.flow;
    out << "flow.start_x = " << f.start_x << "\n"
        << "flow.start_y = " << f.start_y << "\n"
        << "flow.bearing = " << f.bearing_deg << "\n"
        << "flow.speed = " << f.speed << "\n"
        << "flow.width = " << f.width << "\n"
        << "flow.growth = " << f.growth << "\n"
        << "flow.initial_length = " << f.initial_length << "\n"
        << "flow.edge_softness = " << f.edge_softness << "\n"
        << "flow.onset = " << f.onset_frame << "\n"
        << "flow.hue = " << f.color.h << "\n"
        << "flow.sat = " << f.color.s << "\n"
        << "flow.val = " << f.color.v << "\n";
  }
  return out.str();
}

inline Scenario scenario_from_config(const KeyValueConfig& c) {
  Scenario s;
  s.id = c.get_string("id", s.id);
  s.frames = c.get_number<int>("frames", s.frames);
  s.width = c.get_number<int>("width", s.width);
  s.height = c.get_number<int>("height", s.height);
  s.gradient_top = c.get_number<int>("gradient_top", s.gradient_top);
  s.gradient_bottom = c.get_number<int>("gradient_bottom", s.gradient_bottom);
  s.noise_sigma = c.get_number<double>("noise_sigma", s.noise_sigma);
  s.seed = c.get_number<std::uint64_t>("seed", s.seed);
  if (c.get_bool("flow", false)) {
    FlowSpec f;
    f.start_x = c.get_number<double>("flow.start_x", f.start_x);
    f.start_y = c.get_number<double>("flow.start_y", f.start_y);
    f.bearing_deg = c.get_number<double>("flow.bearing", f.bearing_deg);
    f.speed = c.get_number<double>("flow.speed", f.speed);
    f.width = c.get_number<double>("flow.width", f.width);
    f.growth = c.get_number<double>("flow.growth", f.speed);
    f.initial_length = c.get_number<double>("flow.initial_length", f.initial_length);
    f.edge_softness = c.get_number<double>("flow.edge_softness", f.edge_softness);
    f.onset_frame = c.get_number<int>("flow.onset", f.onset_frame);
    f.color.h = c.get_number<double>("flow.hue", f.color.h);
    f.color.s = c.get_number<double>("flow.sat", f.color.s);
    f.color.v = c.get_number<double>("flow.val", f.color.v);
    s.flow = f;
  }
  if (const auto unused = c.unused_keys(); !unused.empty()) {
    throw ConfigError("unknown scenario key: " + unused.front());
  }
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_config(KeyValueConfig::load(path));
}

/// Scenario files (*.txt, *.scenario) in a directory, sorted by file name.
inline std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".txt" || ext == ".scenario")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

/// Flow that starts so that its whole path over `frames` stays centred in
/// the image.
inline FlowSpec centred_flow(int width, int height, int frames, double bearing, double speed, double flow_width) {
  FlowSpec f;
  f.bearing_deg = bearing;
  f.speed = speed;
  f.growth = speed;
  f.width = flow_width;
  f.initial_length = flow_width;
  const double travel = f.initial_length + speed * std::max(frames - 1 - f.onset_frame, 0);
  const double rad = bearing * std::numbers::pi / 180.0;
  f.start_x = (width - 1) / 2.0 - std::cos(rad) * travel / 2.0;
  f.start_y = (height - 1) / 2.0 + std::sin(rad) * travel / 2.0;
  return f;
}

/// The standard benchmark set: `flow_count` flow scenarios with bearings
/// spread round the compass, speeds in [1,4] px/frame and noise sigma in
/// [0,2], followed by `quiet_count` flow-free scenarios.
inline std::vector<Scenario> default_benchmark_scenarios(std::uint64_t seed = 2015, int flow_count = 50,
                                                         int quiet_count = 50, int width = 320, int height = 240,
                                                         int frames = 20) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0), speed(1.0, 4.0), sigma(0.0, 2.0), fwidth(6.0, 12.0);
  std::vector<Scenario> out;
  for (int i = 0; i < flow_count; ++i) {
    Scenario s;
    std::ostringstream id;
    id << "flow_" << std::setw(3) << std::setfill('0') << i;
    s.id = id.str();
    s.width = width;
    s.height = height;
    s.frames = frames;
    s.seed = rng();
    s.noise_sigma = sigma(rng);
    const double bearing = normalize_degrees(360.0 * i / std::max(flow_count, 1) + jitter(rng));
    s.flow = centred_flow(width, height, frames, bearing, speed(rng), fwidth(rng));
    out.push_back(s);
  }
  for (int i = 0; i < quiet_count; ++i) {
    Scenario s;
    std::ostringstream id;
    id << "quiet_" << std::setw(3) << std::setfill('0') << i;
    s.id = id.str();
    s.width = width;
    s.height = height;
    s.frames = frames;
    s.seed = rng();
    s.noise_sigma = sigma(rng);
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchmarkRow {
  std::string id;
  bool eruption = false;
  bool detected = false;
  double detection_pct = 0.0;
  int events = 0;
  int false_events = 0;
  std::optional<Direction> direction;  // most frequent flow direction, flow scenarios only
  bool direction_matches = false;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  double success_pct = 0.0;
  double error_pct = 0.0;
  int false_events = 0;

  /// Mean of the per-scenario detection percentages; error is the mean
  /// shortfall from 100 so the two always sum to 100.
  void aggregate() {
    success_pct = error_pct = 0.0;
    false_events = 0;
    if (rows.empty()) {
      success_pct = 100.0;
      return;
    }
    double hit = 0.0, miss = 0.0;
    for (const auto& r : rows) {
      hit += r.detection_pct;
      miss += 100.0 - r.detection_pct;
      false_events += r.false_events;
    }
    success_pct = hit / static_cast<double>(rows.size());
    error_pct = miss / static_cast<double>(rows.size());
  }
};

/// Runs the full per-frame analysis over one scenario.
inline BenchmarkRow run_scenario(const Scenario& s, const AnalyzerParams& params) {
  BenchmarkRow row;
  row.id = s.id;
  row.eruption = s.flow.has_value();
  ScenarioRenderer frames(s);
  FlowAnalyzer analyzer(params);
  EventBuilder events;

  int active = 0, detected_frames = 0, quiet = 0, quiet_clean = 0;
  int counts[5] = {0, 0, 0, 0, 0};
  while (const auto next = frames.next()) {
    const Frame& f = *next;
    const auto analysis = analyzer.process(f);
    const bool has_event = !analysis.flows.empty();
    if (has_event) {
      events.build(analysis.flows, f);
      ++row.events;
      for (const auto& fl : analysis.flows) ++counts[static_cast<int>(fl.trajectory.direction)];
    }
    if (f.frame_id == 0) continue;  // nothing to compare against
    const bool flow_active = s.flow && static_cast<int>(f.frame_id) >= s.flow->onset_frame;
    if (flow_active) {
      ++active;
      if (has_event) ++detected_frames;
    } else {
      ++quiet;
      if (has_event) {
        ++row.false_events;
      } else {
        ++quiet_clean;
      }
    }
  }

  if (row.eruption) {
    row.detection_pct = active ? 100.0 * detected_frames / active : 0.0;
    row.detected = detected_frames > 0 && row.false_events == 0;
    int best = -1;
    for (int d = 0; d < 4; ++d) {
      if (counts[d] > 0 && (best < 0 || counts[d] > counts[best])) best = d;
    }
    if (best >= 0) {
      row.direction = static_cast<Direction>(best);
      row.direction_matches = *row.direction == classify_direction(s.flow->bearing_deg).direction;
    }
  } else {
    row.detection_pct = quiet ? 100.0 * quiet_clean / quiet : 100.0;
    row.detected = row.false_events == 0;
  }
  return row;
}

inline BenchmarkReport run_benchmark(const std::vector<Scenario>& scenarios, const AnalyzerParams& params) {
  BenchmarkReport report;
  for (const auto& s : scenarios) report.rows.push_back(run_scenario(s, params));
  report.aggregate();
  return report;
}

inline std::string format_pct(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v << "%";
  return out.str();
}

/// Aligned columns in the shape of the classic detection table.
inline std::string report_to_text(const BenchmarkReport& r) {
  std::ostringstream out;
  out << std::left << std::setw(7) << "TESTS" << std::setw(14) << "SCENARIO" << std::setw(7) << "FLOW"
      << std::setw(10) << "DIR" << "DETECTION\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    out << std::left << std::setw(7) << (i + 1) << std::setw(14) << row.id << std::setw(7)
        << (row.eruption ? "yes" : "no") << std::setw(10)
        << (row.direction ? std::string(to_string(*row.direction)) : std::string("-")) << std::right
        << std::setw(8) << format_pct(row.detection_pct) << "\n";
  }
  out << std::left << std::setw(7) << "Result" << std::setw(31) << "Succ" << std::right << std::setw(8)
      << format_pct(r.success_pct) << "\n";
  out << std::left << std::setw(7) << "" << std::setw(31) << "Error" << std::right << std::setw(8)
      << format_pct(r.error_pct) << "\n";
  out << std::left << std::setw(7) << "" << std::setw(31) << "False events" << std::right << std::setw(8)
      << r.false_events << "\n";
  return out.str();
}

inline std::string report_to_json(const BenchmarkReport& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json x;
    x["id"] = row.id;
    x["eruption"] = row.eruption;
    x["detected"] = row.detected;
    x["detection_pct"] = row.detection_pct;
    x["events"] = row.events;
    x["false_events"] = row.false_events;
    if (row.direction) {
      x["direction"] = std::string(to_string(*row.direction));
    } else {
      x["direction"] = nullptr;
    }
    rows.push_back(std::move(x));
  }
  j["rows"] = std::move(rows);
  j["success_pct"] = r.success_pct;
  j["error_pct"] = r.error_pct;
  j["false_events"] = r.false_events;
  return j.dump(2);
}

}  // namespace lavawatch
