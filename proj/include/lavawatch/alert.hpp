#pragma once

// Eruption events and their wire encodings: SMS text, the single-byte serial
// command stream, the webhook JSON document, and PNG snapshots on disk.

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lavawatch/blobs.hpp"
#include "lavawatch/codec.hpp"
#include "lavawatch/error.hpp"
#include "lavawatch/imaging.hpp"
#include "lavawatch/trajectory.hpp"

namespace lavawatch {

enum class Severity { Watch, Warning, Critical };

inline std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::Watch: return "Watch";
    case Severity::Warning: return "Warning";
    case Severity::Critical: return "Critical";
  }
  return "Watch";
}

struct FlowRecord {
  FlowBlob blob;
  FlowTrajectory trajectory;
};

struct EruptionEvent {
  std::uint64_t event_id = 0;
  std::uint64_t timestamp_ms = 0;
  std::uint64_t frame_id = 0;
  std::vector<FlowRecord> flows;
  std::optional<std::string> snapshot_path;
  Severity severity = Severity::Watch;

  std::int64_t total_area() const noexcept {
    std::int64_t a = 0;
    for (const auto& f : flows) a += f.blob.area;
    return a;
  }
};

/// Fractions of the frame area. Total flow area below watch_below is Watch,
/// below warning_below is Warning, anything larger is Critical.
struct SeverityThresholds {
  double watch_below = 0.005;
  double warning_below = 0.02;
};

inline Severity classify_severity(std::int64_t flow_area, std::int64_t frame_area, const SeverityThresholds& t = {}) {
  const double fraction = frame_area > 0 ? static_cast<double>(flow_area) / static_cast<double>(frame_area) : 1.0;
  if (fraction < t.watch_below) return Severity::Watch;
  if (fraction < t.warning_below) return Severity::Warning;
  return Severity::Critical;
}

/// Issues strictly increasing event ids for one run.
class EventBuilder {
 public:
  explicit EventBuilder(SeverityThresholds thresholds = {}, std::uint64_t first_id = 1)
      : thresholds_(thresholds), next_id_(first_id) {}

  EruptionEvent build(std::vector<FlowRecord> flows, const Frame& frame) {
    if (flows.empty()) throw NoFlows("an event needs at least one flow");
    EruptionEvent e;
    e.flows = std::move(flows);
    e.frame_id = frame.frame_id;
    e.timestamp_ms = frame.timestamp_ms;
    e.severity = classify_severity(e.total_area(), static_cast<std::int64_t>(frame.size()), thresholds_);
    e.event_id = next_id_++;
    return e;
  }

  std::uint64_t next_id() const noexcept { return next_id_; }

 private:
  SeverityThresholds thresholds_;
  std::uint64_t next_id_;
};

inline std::string iso8601_utc(std::uint64_t timestamp_ms) {
  const std::time_t secs = static_cast<std::time_t>(timestamp_ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// SMS

inline constexpr std::size_t kSmsLimit = 160;

/// Printable ASCII that encodes as a single GSM-7 basic-set septet.
inline bool is_gsm7_basic(char c) noexcept {
  if (c < 0x20 || c > 0x7e) return false;
  switch (c) {
    case '[': case ']': case '{': case '}': case '\\': case '^': case '~': case '|': case '`': return false;
    default: return true;
  }
}

inline std::string format_sms(const EruptionEvent& e) {
  std::string severity(to_string(e.severity));
  for (char& c : severity) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const std::string head = "VOLCAN ALERTA " + severity + " flujos=" + std::to_string(e.flows.size()) + " dir=";
  const std::string tail =
      " area=" + std::to_string(e.total_area()) + "px t=" + iso8601_utc(e.timestamp_ms);

  std::vector<std::string> dirs;
  for (const auto& f : e.flows) dirs.emplace_back(to_string(f.trajectory.direction));

  auto join = [&dirs](std::size_t n, bool elided) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ',';
      s += dirs[i];
    }
    if (elided) s += n ? ",..." : "...";
    return s;
  };

  std::string msg = head + join(dirs.size(), false) + tail;
  if (msg.size() > kSmsLimit) {
    // Elide the direction list first, keeping as many leading entries as fit.
    std::size_t keep = dirs.size();
    while (keep > 0 && head.size() + join(keep, true).size() + tail.size() > kSmsLimit) --keep;
    msg = head + join(keep, true) + tail;
  }
  for (char& c : msg) {
    if (!is_gsm7_basic(c)) c = '?';
  }
  if (msg.size() > kSmsLimit) msg.resize(kSmsLimit);
  return msg;
}

// ---------------------------------------------------------------------------
// Serial command stream: severity byte, one byte per flow direction, '\n'.

inline std::uint8_t serial_code(Severity s) noexcept {
  switch (s) {
    case Severity::Watch: return 'W';
    case Severity::Warning: return 'A';
    case Severity::Critical: return 'C';
  }
  return 'W';
}

inline std::uint8_t serial_code(Direction d) noexcept {
  switch (d) {
    case Direction::NE: return '1';
    case Direction::NW: return '2';
    case Direction::SW: return '3';
    case Direction::SE: return '4';
    case Direction::Indeterminate: return '0';
  }
  return '0';
}

inline std::vector<std::uint8_t> encode_serial(const EruptionEvent& e) {
  std::vector<std::uint8_t> out;
  out.reserve(e.flows.size() + 2);
  out.push_back(serial_code(e.severity));
  for (const auto& f : e.flows) out.push_back(serial_code(f.trajectory.direction));
  out.push_back('\n');
  return out;
}

struct SerialMessage {
  Severity severity = Severity::Watch;
  std::vector<Direction> directions;
};

/// Receiver-side parse of one encoded message.
inline SerialMessage decode_serial(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes.back() != '\n') throw InvalidArgument("serial message must end with newline");
  SerialMessage msg;
  switch (bytes[0]) {
    case 'W': msg.severity = Severity::Watch; break;
    case 'A': msg.severity = Severity::Warning; break;
    case 'C': msg.severity = Severity::Critical; break;
    default: throw InvalidArgument("unknown severity byte");
  }
  for (std::size_t i = 1; i + 1 < bytes.size(); ++i) {
    switch (bytes[i]) {
      case '1': msg.directions.push_back(Direction::NE); break;
      case '2': msg.directions.push_back(Direction::NW); break;
      case '3': msg.directions.push_back(Direction::SW); break;
      case '4': msg.directions.push_back(Direction::SE); break;
      case '0': msg.directions.push_back(Direction::Indeterminate); break;
      default: throw InvalidArgument("unknown direction byte");
    }
  }
  return msg;
}

// ---------------------------------------------------------------------------
// Webhook / history JSON. Field order is fixed so the same event always
// serialises to the same bytes.

inline std::string event_to_json(const EruptionEvent& e) {
  nlohmann::ordered_json flows = nlohmann::ordered_json::array();
  for (const auto& f : e.flows) {
    nlohmann::ordered_json j;
    j["area"] = f.blob.area;
    j["centroid"] = {f.blob.centroid.x, f.blob.centroid.y};
    j["grados"] = f.trajectory.grados;
    j["direction"] = std::string(to_string(f.trajectory.direction));
    j["deviation"] = f.trajectory.displayed_deviation;
    flows.push_back(std::move(j));
  }
  nlohmann::ordered_json j;
  j["event_id"] = e.event_id;
  j["timestamp_ms"] = e.timestamp_ms;
  j["frame_id"] = e.frame_id;
  j["severity"] = std::string(to_string(e.severity));
  j["flows"] = std::move(flows);
  if (e.snapshot_path) {
    j["snapshot"] = *e.snapshot_path;
  } else {
    j["snapshot"] = nullptr;
  }
  return j.dump();
}

inline std::string snapshot_filename(const EruptionEvent& e) {
  return "event_" + std::to_string(e.event_id) + "_" + std::to_string(e.frame_id) + ".png";
}

/// Writes the frame as PNG into `dir` and records the path on the event.
inline std::filesystem::path persist_snapshot(const Frame& frame, EruptionEvent& e, const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoFailure("snapshot directory missing: " + dir.string());
  const std::filesystem::path path = dir / snapshot_filename(e);
  write_file(path, encode_png(frame));
  e.snapshot_path = path.string();
  return path;
}

}  // namespace lavawatch
