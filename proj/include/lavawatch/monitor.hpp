#pragma once

// Read-only monitoring service: basic-auth protected HTML status page plus
// JSON status/event endpoints and the latest processed frame.

#include <openssl/crypto.h>
#include <openssl/sha.h>

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lavawatch/codec.hpp"
#include "lavawatch/error.hpp"
#include "lavawatch/imaging.hpp"

namespace lavawatch {

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out += digits[b >> 4];
    out += digits[b & 0xf];
  }
  return out;
}

inline std::string sha256_hex(std::string_view data) {
  std::uint8_t digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  return to_hex(digest);
}

inline std::optional<std::string> base64_decode(std::string_view in) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  while (!in.empty() && in.back() == '=') in.remove_suffix(1);
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    const int v = value(c);
    if (v < 0) return std::nullopt;
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xff);
    }
  }
  return out;
}

/// Username plus salted SHA-256 of the password (hex). The password itself
/// is never stored.
struct Credentials {
  std::string username;
  std::string salt;
  std::string password_sha256;

  static Credentials from_password(std::string username, std::string_view password, std::string salt) {
    Credentials c{std::move(username), std::move(salt), {}};
    c.password_sha256 = sha256_hex(c.salt + std::string(password));
    return c;
  }

  /// Compares digests with CRYPTO_memcmp so timing does not depend on where
  /// the hashes first differ.
  bool verify(std::string_view user, std::string_view password) const {
    const std::string got = sha256_hex(salt + std::string(password));
    const std::string want_user = sha256_hex(username);
    const std::string got_user = sha256_hex(user);
    const bool pass_ok = got.size() == password_sha256.size() &&
                         CRYPTO_memcmp(got.data(), password_sha256.data(), got.size()) == 0;
    const bool user_ok = CRYPTO_memcmp(want_user.data(), got_user.data(), want_user.size()) == 0;
    return pass_ok && user_ok;
  }
};

struct MonitorConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 asks the OS for an ephemeral port
  Credentials credentials = Credentials::from_password("admin", "admin", "lavawatch");
  std::string page_title = "Volcano flow monitor";
  std::size_t max_event_history = 256;

  void validate() const {
    if (port < 0 || port > 65535) throw ConfigError("monitor port must be in 1..65535, or 0 for an ephemeral port");
    if (max_event_history < 1) throw ConfigError("monitor history must hold at least one event");
  }

  /// Parses "host:port".
  static std::pair<std::string, int> parse_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("bind address must be host:port");
    try {
      std::size_t used = 0;
      const int port = std::stoi(bind.substr(colon + 1), &used);
      if (used != bind.size() - colon - 1) throw ConfigError("bad port in " + bind);
      return {bind.substr(0, colon), port};
    } catch (const std::logic_error&) {
      throw ConfigError("bad port in " + bind);
    }
  }
};

enum class PipelineState { Idle, Running, Degraded };

inline std::string_view to_string(PipelineState s) noexcept {
  switch (s) {
    case PipelineState::Idle: return "Idle";
    case PipelineState::Running: return "Running";
    case PipelineState::Degraded: return "Degraded";
  }
  return "Idle";
}

struct StatusSnapshot {
  double uptime_s = 0.0;
  std::uint64_t frames_processed = 0;
  std::uint64_t events_total = 0;
  std::optional<std::string> last_event;  // event JSON as dispatched
  double current_fps = 0.0;
  PipelineState pipeline_state = PipelineState::Idle;
};

/// Shared state published by the single pipeline writer and read by request
/// handlers. Each update swaps in a new immutable view; readers copy the
/// pointer and never hold the lock while rendering.
class MonitorState {
 public:
  struct View {
    std::uint64_t frames_processed = 0;
    std::uint64_t events_total = 0;
    double current_fps = 0.0;
    PipelineState state = PipelineState::Idle;
    std::deque<std::shared_ptr<const std::string>> history;  // oldest first
    std::shared_ptr<const Frame> latest_frame;
  };

  explicit MonitorState(std::size_t max_history = 256)
      : max_history_(std::max<std::size_t>(max_history, 1)), started_(std::chrono::steady_clock::now()),
        view_(std::make_shared<const View>()) {}

  std::shared_ptr<const View> view() const {
    std::lock_guard lock(mutex_);
    return view_;
  }

  void record_frame(std::shared_ptr<const Frame> frame, double fps) {
    update([&](View& v) {
      ++v.frames_processed;
      v.current_fps = fps;
      v.latest_frame = std::move(frame);
    });
  }

  void record_event(std::string event_json) {
    auto item = std::make_shared<const std::string>(std::move(event_json));
    update([&](View& v) {
      ++v.events_total;
      v.history.push_back(std::move(item));
      while (v.history.size() > max_history_) v.history.pop_front();
    });
  }

  void set_state(PipelineState s) {
    update([s](View& v) { v.state = s; });
  }

  StatusSnapshot snapshot() const {
    const auto v = view();
    StatusSnapshot s;
    s.uptime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    s.frames_processed = v->frames_processed;
    s.events_total = v->events_total;
    s.current_fps = v->current_fps;
    s.pipeline_state = v->state;
    if (!v->history.empty()) s.last_event = *v->history.back();
    return s;
  }

  /// Newest first, at most `limit` entries.
  std::vector<std::shared_ptr<const std::string>> recent_events(std::size_t limit) const {
    const auto v = view();
    std::vector<std::shared_ptr<const std::string>> out;
    for (auto it = v->history.rbegin(); it != v->history.rend() && out.size() < limit; ++it) out.push_back(*it);
    return out;
  }

  std::size_t max_history() const noexcept { return max_history_; }

 private:
  template <typename F>
  void update(F&& mutate) {
    std::lock_guard lock(mutex_);
    auto next = std::make_shared<View>(*view_);
    mutate(*next);
    view_ = std::move(next);
  }

  std::size_t max_history_;
  std::chrono::steady_clock::time_point started_;
  mutable std::mutex mutex_;
  std::shared_ptr<const View> view_;
};

inline std::string status_to_json(const StatusSnapshot& s) {
  nlohmann::ordered_json j;
  j["frames_processed"] = s.frames_processed;
  j["events_total"] = s.events_total;
  j["uptime_s"] = s.uptime_s;
  j["current_fps"] = s.current_fps;
  j["pipeline_state"] = std::string(to_string(s.pipeline_state));
  if (s.last_event) {
    j["last_event"] = nlohmann::ordered_json::parse(*s.last_event);
  } else {
    j["last_event"] = nullptr;
  }
  return j.dump();
}

inline std::string events_to_json(const std::vector<std::shared_ptr<const std::string>>& events) {
  std::string out = "[";
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i) out += ',';
    out += *events[i];
  }
  out += ']';
  return out;
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string render_status_page(const std::string& title, const StatusSnapshot& s,
                                      const std::vector<std::shared_ptr<const std::string>>& recent) {
  std::string html = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" + html_escape(title) +
                     "</title><meta http-equiv=\"refresh\" content=\"5\"></head><body>\n<h1>" + html_escape(title) +
                     "</h1>\n<table>\n";
  auto row = [&html](std::string_view k, const std::string& v) {
    html += "<tr><th>" + html_escape(k) + "</th><td>" + html_escape(v) + "</td></tr>\n";
  };
  row("State", std::string(to_string(s.pipeline_state)));
  row("Uptime (s)", std::to_string(static_cast<std::int64_t>(s.uptime_s)));
  row("Frames processed", std::to_string(s.frames_processed));
  row("Events", std::to_string(s.events_total));
  row("Current FPS", std::to_string(s.current_fps));
  html += "</table>\n<h2>Recent events</h2>\n<table>\n<tr><th>id</th><th>severity</th><th>flows</th>"
          "<th>directions</th></tr>\n";
  for (const auto& e : recent) {
    const auto j = nlohmann::json::parse(*e);
    std::string dirs;
    for (const auto& f : j["flows"]) {
      if (!dirs.empty()) dirs += ", ";
      dirs += f["direction"].get<std::string>();
    }
    html += "<tr><td>" + std::to_string(j["event_id"].get<std::uint64_t>()) + "</td><td>" +
            html_escape(j["severity"].get<std::string>()) + "</td><td>" + std::to_string(j["flows"].size()) +
            "</td><td>" + html_escape(dirs) + "</td></tr>\n";
  }
  html += "</table>\n<p><img src=\"/api/frame/latest.png\" alt=\"latest frame\" width=\"640\"></p>\n</body></html>\n";
  return html;
}

class MonitorService {
 public:
  MonitorService(MonitorConfig cfg, std::shared_ptr<const MonitorState> state)
      : cfg_(std::move(cfg)), state_(std::move(state)) {
    cfg_.validate();
    // The library default adds SO_REUSEPORT, which lets a second server share a busy port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    install_routes();
  }
  MonitorService(const MonitorService&) = delete;
  MonitorService& operator=(const MonitorService&) = delete;
  ~MonitorService() { stop(); }

  /// Binds and starts serving on a background thread. Returns the bound port.
  int start() {
    if (cfg_.port == 0) {
      port_ = server_.bind_to_any_port(cfg_.host);
      if (port_ <= 0) throw BindFailure("cannot bind " + cfg_.host);
    } else {
      if (!server_.bind_to_port(cfg_.host, cfg_.port)) {
        throw BindFailure("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
      }
      port_ = cfg_.port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const noexcept { return port_; }

 private:
  bool authorized(const httplib::Request& req) const {
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Basic ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) return false;
    const auto decoded = base64_decode(std::string_view(header).substr(prefix.size()));
    if (!decoded) return false;
    const auto colon = decoded->find(':');
    if (colon == std::string::npos) return false;
    return cfg_.credentials.verify(std::string_view(*decoded).substr(0, colon),
                                   std::string_view(*decoded).substr(colon + 1));
  }

  void install_routes() {
    server_.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req)) {
        res.status = 401;
        res.set_header("WWW-Authenticate", "Basic realm=\"lavawatch\"");
        res.set_content("unauthorized\n", "text/plain");
        return httplib::Server::HandlerResponse::Handled;
      }
      if (req.method != "GET" && req.method != "HEAD") {
        res.status = 405;
        res.set_header("Allow", "GET, HEAD");
        res.set_content("read-only service\n", "text/plain");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    server_.Get("/", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(render_status_page(cfg_.page_title, state_->snapshot(), state_->recent_events(20)),
                      "text/html; charset=utf-8");
    });

    server_.Get("/api/status", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(status_to_json(state_->snapshot()), "application/json");
    });

    server_.Get("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
      std::size_t limit = state_->max_history();
      if (req.has_param("limit")) {
        const std::string raw = req.get_param_value("limit");
        try {
          std::size_t used = 0;
          const long long v = std::stoll(raw, &used);
          if (used != raw.size() || v < 0) throw std::invalid_argument(raw);
          limit = static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
          res.status = 400;
          res.set_content("limit must be a non-negative integer\n", "text/plain");
          return;
        }
      }
      res.set_content(events_to_json(state_->recent_events(limit)), "application/json");
    });

    server_.Get("/api/frame/latest.png", [this](const httplib::Request&, httplib::Response& res) {
      const auto v = state_->view();
      if (!v->latest_frame) {
        res.status = 404;
        res.set_content("no frame processed yet\n", "text/plain");
        return;
      }
      const Bytes png = encode_png(*v->latest_frame);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });

    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      res.status = 500;
      res.set_content("internal error\n", "text/plain");
    });
  }

  MonitorConfig cfg_;
  std::shared_ptr<const MonitorState> state_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace lavawatch
