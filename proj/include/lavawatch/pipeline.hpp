#pragma once

// Orchestration: frame ingestion -> analysis -> events -> snapshot, dispatch
// and monitor updates, plus the key-value pipeline configuration.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lavawatch/alert.hpp"
#include "lavawatch/analyzer.hpp"
#include "lavawatch/codec.hpp"
#include "lavawatch/config.hpp"
#include "lavawatch/dispatch.hpp"
#include "lavawatch/error.hpp"
#include "lavawatch/monitor.hpp"

namespace lavawatch {

struct SinkConfig {
  enum class Kind { Webhook, Sms, Serial };
  std::string name;
  Kind kind = Kind::Webhook;
  std::string url;   // webhook target or SMS gateway
  std::string to;    // SMS recipient
  std::string path;  // serial: file or FIFO
  std::string tcp;   // serial: host:port
};

struct PipelineConfig {
  std::optional<std::filesystem::path> input_dir;
  std::optional<std::filesystem::path> input_stream;
  double input_fps = 10.0;  // timestamps for directory input
  AnalyzerParams analyzer;
  SeverityThresholds severity;
  std::vector<SinkConfig> sinks;
  RetryPolicy retry;
  bool monitor_enabled = false;
  MonitorConfig monitor;
  double monitor_linger_s = 0.0;
  std::optional<std::filesystem::path> snapshot_dir;
  std::string events_out = "-";
  bool live = false;

  void validate() const {
    if (input_dir.has_value() == input_stream.has_value()) {
      throw ConfigError("exactly one of input.dir and input.stream must be set");
    }
    if (input_dir && !std::filesystem::is_directory(*input_dir)) {
      throw ConfigError("input.dir does not exist: " + input_dir->string());
    }
    if (input_stream && !std::filesystem::exists(*input_stream)) {
      throw ConfigError("input.stream does not exist: " + input_stream->string());
    }
    if (snapshot_dir && !std::filesystem::is_directory(*snapshot_dir)) {
      throw ConfigError("snapshot_dir does not exist: " + snapshot_dir->string());
    }
    if (!(input_fps > 0.0)) throw ConfigError("input.fps must be positive");
    if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
    try {
      analyzer.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    monitor.validate();
  }
};

/// Documented configuration keys with their defaults.
inline PipelineConfig pipeline_config_from(const KeyValueConfig& c, const std::filesystem::path& base = {}) {
  PipelineConfig cfg;
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
  };
  try {
    if (auto v = c.get("input.dir")) cfg.input_dir = resolve(*v);
    if (auto v = c.get("input.stream")) cfg.input_stream = resolve(*v);
    cfg.input_fps = c.get_number<double>("input.fps", cfg.input_fps);

    DetectParams& d = cfg.analyzer.detect;
    d.diff_threshold = c.get_number<int>("detect.diff_threshold", d.diff_threshold);
    d.erode_kernel = {c.get_number<int>("detect.erode_w", d.erode_kernel.w),
                      c.get_number<int>("detect.erode_h", d.erode_kernel.h)};
    d.dilate_kernel = {c.get_number<int>("detect.dilate_w", d.dilate_kernel.w),
                       c.get_number<int>("detect.dilate_h", d.dilate_kernel.h)};
    d.morph_passes = c.get_number<int>("detect.morph_passes", d.morph_passes);
    d.min_blob_area = c.get_number<int>("detect.min_blob_area", d.min_blob_area);
    const std::string combine = c.get_string("detect.combine", "and");
    if (combine == "and") {
      d.combine = CombineMode::DiffAndColor;
    } else if (combine == "diff") {
      d.combine = CombineMode::DiffOnly;
    } else {
      throw ConfigError("detect.combine must be 'and' or 'diff'");
    }
    const HsvRange def = d.hsv_range;
    d.hsv_range = HsvRange(c.get_number<double>("detect.hue_lo", def.h_lo()), c.get_number<double>("detect.hue_hi", def.h_hi()),
                           c.get_number<double>("detect.sat_lo", def.s_lo()), c.get_number<double>("detect.sat_hi", def.s_hi()),
                           c.get_number<double>("detect.val_lo", def.v_lo()), c.get_number<double>("detect.val_hi", def.v_hi()));
    cfg.analyzer.connectivity = c.get_number<int>("detect.connectivity", cfg.analyzer.connectivity);

    HoughParams& h = cfg.analyzer.hough;
    h.theta_bins = c.get_number<int>("hough.theta_bins", h.theta_bins);
    h.rho_resolution = c.get_number<double>("hough.rho_resolution", h.rho_resolution);
    h.vote_threshold = c.get_number<int>("hough.vote_threshold", h.vote_threshold);
    h.max_lines = c.get_number<int>("hough.max_lines", h.max_lines);

    cfg.severity.watch_below = c.get_number<double>("severity.watch_below", cfg.severity.watch_below);
    cfg.severity.warning_below = c.get_number<double>("severity.warning_below", cfg.severity.warning_below);

    cfg.retry.max_attempts = c.get_number<int>("retry.max_attempts", cfg.retry.max_attempts);
    cfg.retry.initial_backoff =
        std::chrono::milliseconds(c.get_number<long>("retry.initial_backoff_ms", cfg.retry.initial_backoff.count()));
    cfg.retry.multiplier = c.get_number<double>("retry.multiplier", cfg.retry.multiplier);

    for (const auto& key : c.keys()) {
      constexpr std::string_view prefix = "sink.";
      if (key.rfind(prefix, 0) != 0 || key.size() < 6 || key.substr(key.size() - 5) != ".type") continue;
      SinkConfig s;
      s.name = key.substr(prefix.size(), key.size() - prefix.size() - 5);
      const std::string base_key = "sink." + s.name + ".";
      const std::string type = c.require_string(key);
      if (type == "webhook") {
        s.kind = SinkConfig::Kind::Webhook;
        s.url = c.require_string(base_key + "url");
      } else if (type == "sms") {
        s.kind = SinkConfig::Kind::Sms;
        s.url = c.require_string(base_key + "url");
        s.to = c.require_string(base_key + "to");
      } else if (type == "serial") {
        s.kind = SinkConfig::Kind::Serial;
        s.path = c.get_string(base_key + "path", "");
        s.tcp = c.get_string(base_key + "tcp", "");
        if (s.path.empty() == s.tcp.empty()) throw ConfigError("serial sink " + s.name + " needs exactly one of path/tcp");
        if (!s.path.empty()) s.path = resolve(s.path).string();
      } else {
        throw ConfigError("unknown sink type '" + type + "' for sink " + s.name);
      }
      cfg.sinks.push_back(std::move(s));
    }

    cfg.monitor_enabled = c.get_bool("monitor.enabled", cfg.monitor_enabled);
    if (auto v = c.get("monitor.bind")) std::tie(cfg.monitor.host, cfg.monitor.port) = MonitorConfig::parse_bind(*v);
    const std::string user = c.get_string("monitor.user", cfg.monitor.credentials.username);
    const std::string salt = c.get_string("monitor.salt", cfg.monitor.credentials.salt);
    if (auto hash = c.get("monitor.password_sha256")) {
      cfg.monitor.credentials = {user, salt, *hash};
    } else if (auto pw = c.get("monitor.password")) {
      cfg.monitor.credentials = Credentials::from_password(user, *pw, salt);
    } else {
      cfg.monitor.credentials.username = user;
    }
    cfg.monitor.page_title = c.get_string("monitor.title", cfg.monitor.page_title);
    cfg.monitor.max_event_history = c.get_number<std::size_t>("monitor.history", cfg.monitor.max_event_history);
    cfg.monitor_linger_s = c.get_number<double>("monitor.linger_s", cfg.monitor_linger_s);

    if (auto v = c.get("snapshot_dir")) cfg.snapshot_dir = resolve(*v);
    cfg.events_out = c.get_string("events.out", cfg.events_out);
    if (cfg.events_out != "-") cfg.events_out = resolve(cfg.events_out).string();
    cfg.live = c.get_bool("live", cfg.live);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  if (const auto unused = c.unused_keys(); !unused.empty()) {
    throw ConfigError("unknown config key: " + unused.front());
  }
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from(KeyValueConfig::load(path), path.parent_path());
}

inline std::vector<std::shared_ptr<AlertSink>> make_sinks(const std::vector<SinkConfig>& configs,
                                                          std::shared_ptr<HttpTransport> http = nullptr) {
  if (!http) http = std::make_shared<HttplibTransport>();
  std::vector<std::shared_ptr<AlertSink>> sinks;
  for (const auto& s : configs) {
    switch (s.kind) {
      case SinkConfig::Kind::Webhook:
        sinks.push_back(std::make_shared<WebhookSink>(s.url, http));
        break;
      case SinkConfig::Kind::Sms:
        sinks.push_back(std::make_shared<SmsGatewaySink>(s.url, s.to, http));
        break;
      case SinkConfig::Kind::Serial:
        if (!s.path.empty()) {
          sinks.push_back(std::make_shared<SerialSink>(s.path, std::make_shared<FileByteTransport>(s.path)));
        } else {
          const auto [host, port] = MonitorConfig::parse_bind(s.tcp);
          sinks.push_back(std::make_shared<SerialSink>(s.tcp, std::make_shared<TcpByteTransport>(host, port)));
        }
        break;
    }
  }
  return sinks;
}

// ---------------------------------------------------------------------------
// Frame sources

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Next frame, nullopt at end. Throws for a bad frame; callers may keep
  /// reading if `recoverable()` is true afterwards.
  virtual std::optional<Frame> next() = 0;
  virtual bool recoverable() const { return true; }
};

/// PPM/PNG files of a directory in file-name order. Timestamps are derived
/// from the frame index and `fps`.
class DirectorySource final : public FrameSource {
 public:
  DirectorySource(const std::filesystem::path& dir, double fps) : fps_(fps) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".ppm" || ext == ".png")) files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end());
  }

  std::optional<Frame> next() override {
    if (index_ >= files_.size()) return std::nullopt;
    const std::size_t i = index_++;
    Frame f = load_image(files_[i]);
    f.frame_id = i;
    f.timestamp_ms = static_cast<std::uint64_t>(std::llround(static_cast<double>(i) * 1000.0 / fps_));
    return f;
  }

  std::size_t size() const noexcept { return files_.size(); }

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t index_ = 0;
  double fps_;
};

class StreamSource final : public FrameSource {
 public:
  explicit StreamSource(const std::filesystem::path& path) : in_(path, std::ios::binary), reader_(in_) {
    if (!in_) throw ConfigError("cannot open frame stream " + path.string());
  }
  std::optional<Frame> next() override { return reader_.next(); }
  // A broken record leaves the stream position undefined.
  bool recoverable() const override { return false; }

 private:
  std::ifstream in_;
  FrameStreamReader reader_;
};

// ---------------------------------------------------------------------------

struct PipelineMetrics {
  std::uint64_t frames = 0;
  std::uint64_t events = 0;
  std::uint64_t skipped_frames = 0;
  std::uint64_t failed_deliveries = 0;
  std::uint64_t snapshot_failures = 0;
  double total_latency_ms = 0.0;
  double wall_seconds = 0.0;

  double mean_latency_ms() const noexcept { return frames ? total_latency_ms / static_cast<double>(frames) : 0.0; }
  double fps() const noexcept {
    return total_latency_ms > 0.0 ? 1000.0 * static_cast<double>(frames) / total_latency_ms : 0.0;
  }
};

/// One pipeline run. Frames must be fed in order; events are emitted in
/// frame order.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::vector<std::shared_ptr<AlertSink>> sinks,
           std::shared_ptr<MonitorState> monitor = nullptr, std::ostream* event_log = nullptr,
           Sleeper sleeper = real_sleeper(), std::ostream* log = nullptr)
      : cfg_(std::move(cfg)), sinks_(std::move(sinks)), monitor_(std::move(monitor)), event_log_(event_log),
        log_(log), sleeper_(std::move(sleeper)), analyzer_(cfg_.analyzer), events_(cfg_.severity) {}

  std::optional<EruptionEvent> process(Frame frame) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg_.live) {
      frame.timestamp_ms = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
              .count());
    }
    std::optional<EruptionEvent> event;
    auto analysis = analyzer_.process(frame);
    if (!analysis.flows.empty()) {
      event = events_.build(std::move(analysis.flows), frame);
      if (cfg_.snapshot_dir) {
        // The alert still goes out without a snapshot; the failure is counted and logged.
        try {
          persist_snapshot(frame, *event, *cfg_.snapshot_dir);
        } catch (const IoFailure& e) {
          ++metrics_.snapshot_failures;
          if (log_) *log_ << "snapshot failed for event " << event->event_id << ": " << e.what() << "\n";
        }
      }
      std::string json = event_to_json(*event);
      if (event_log_) {
        *event_log_ << json << '\n';
        event_log_->flush();
      }
      if (!sinks_.empty()) {
        last_report_ = dispatch(*event, json, sinks_, cfg_.retry, sleeper_);
        for (const auto& o : last_report_->outcomes) {
          if (!o.delivered) ++metrics_.failed_deliveries;
        }
      }
      if (monitor_) monitor_->record_event(std::move(json));
      ++metrics_.events;
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    ++metrics_.frames;
    metrics_.total_latency_ms += ms;
    if (monitor_) {
      monitor_->record_frame(std::make_shared<const Frame>(std::move(frame)), metrics_.fps());
    }
    return event;
  }

  void record_skip() { ++metrics_.skipped_frames; }

  const PipelineMetrics& metrics() const noexcept { return metrics_; }
  const std::optional<DeliveryReport>& last_report() const noexcept { return last_report_; }

 private:
  PipelineConfig cfg_;
  std::vector<std::shared_ptr<AlertSink>> sinks_;
  std::shared_ptr<MonitorState> monitor_;
  std::ostream* event_log_;
  std::ostream* log_;
  Sleeper sleeper_;
  FlowAnalyzer analyzer_;
  EventBuilder events_;
  PipelineMetrics metrics_;
  std::optional<DeliveryReport> last_report_;
};

inline std::string metrics_summary(const PipelineMetrics& m) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << "frames=" << m.frames << " events=" << m.events
      << " skipped=" << m.skipped_frames << " failed_deliveries=" << m.failed_deliveries
      << " snapshot_failures=" << m.snapshot_failures
      << " mean_latency_ms=" << m.mean_latency_ms() << " fps=" << m.fps();
  return out.str();
}

/// Runs the configured input to completion. Per-frame decode failures are
/// logged to `log` and skipped; sink failures only show up in metrics.
inline PipelineMetrics run_pipeline(const PipelineConfig& cfg, std::ostream& event_log, std::ostream& log,
                                    std::shared_ptr<HttpTransport> http = nullptr) {
  cfg.validate();
  std::unique_ptr<FrameSource> source;
  if (cfg.input_dir) {
    source = std::make_unique<DirectorySource>(*cfg.input_dir, cfg.input_fps);
  } else {
    source = std::make_unique<StreamSource>(*cfg.input_stream);
  }

  auto state = std::make_shared<MonitorState>(cfg.monitor.max_event_history);
  std::unique_ptr<MonitorService> service;
  if (cfg.monitor_enabled) {
    service = std::make_unique<MonitorService>(cfg.monitor, state);
    const int port = service->start();
    log << "monitor listening on " << cfg.monitor.host << ":" << port << "\n";
  }
  state->set_state(PipelineState::Running);

  Pipeline pipeline(cfg, make_sinks(cfg.sinks, std::move(http)), state, &event_log, real_sleeper(), &log);
  const auto start = std::chrono::steady_clock::now();
  while (true) {
    std::optional<Frame> frame;
    try {
      frame = source->next();
    } catch (const Error& e) {
      log << "skipping frame: " << e.what() << "\n";
      pipeline.record_skip();
      state->set_state(PipelineState::Degraded);
      if (!source->recoverable()) break;
      continue;
    }
    if (!frame) break;
    try {
      pipeline.process(std::move(*frame));
    } catch (const Error& e) {
      log << "frame failed: " << e.what() << "\n";
      pipeline.record_skip();
      state->set_state(PipelineState::Degraded);
    }
  }
  PipelineMetrics m = pipeline.metrics();
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  state->set_state(PipelineState::Idle);
  if (service && cfg.monitor_linger_s > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(cfg.monitor_linger_s));
  }
  return m;
}

}  // namespace lavawatch
