#pragma once

// Multi-channel alert delivery. Each sink is attempted independently with
// bounded retries and exponential backoff; outcomes are collected into a
// DeliveryReport. Transports are pluggable so hardware endpoints can be
// replaced by files, sockets, or in-process fakes.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lavawatch/alert.hpp"
#include "lavawatch/error.hpp"

namespace lavawatch {

class DeliveryError : public Error {
  using Error::Error;
};

struct HttpResult {
  int status = 0;  // 0 when no response was received
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post(const std::string& url, const std::string& body, const std::string& content_type) = 0;
};

class ByteTransport {
 public:
  virtual ~ByteTransport() = default;
  virtual void write(std::span<const std::uint8_t> bytes) = 0;
};

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// Plain HTTP client backed by cpp-httplib; one connection per request.
class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::milliseconds timeout = std::chrono::seconds(5)) : timeout_(timeout) {}

  HttpResult post(const std::string& url, const std::string& body, const std::string& content_type) override {
    const UrlParts parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    auto res = client.Post(parts.path, body, content_type);
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, {}};
  }

 private:
  std::chrono::milliseconds timeout_;
};

/// Appends to a regular file or writes into a FIFO / character device.
class FileByteTransport final : public ByteTransport {
 public:
  explicit FileByteTransport(std::string path) : path_(std::move(path)) {}

  void write(std::span<const std::uint8_t> bytes) override {
    const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw DeliveryError("cannot open serial sink " + path_);
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
      if (n <= 0) {
        ::close(fd);
        throw DeliveryError("short write to serial sink " + path_);
      }
      done += static_cast<std::size_t>(n);
    }
    ::close(fd);
  }

 private:
  std::string path_;
};

/// Connects, writes the bytes, and closes, once per message.
class TcpByteTransport final : public ByteTransport {
 public:
  TcpByteTransport(std::string host, int port) : host_(std::move(host)), port_(port) {}

  void write(std::span<const std::uint8_t> bytes) override {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &res) != 0 || !res) {
      throw DeliveryError("cannot resolve " + host_);
    }
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw DeliveryError("cannot connect to " + host_ + ":" + std::to_string(port_));
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
      if (n <= 0) {
        ::close(fd);
        throw DeliveryError("send failed to " + host_);
      }
      done += static_cast<std::size_t>(n);
    }
    ::close(fd);
  }

 private:
  std::string host_;
  int port_;
};

/// Everything a sink may need to deliver one event. `json` is the canonical
/// event document so every channel ships identical bytes.
struct AlertPayload {
  const EruptionEvent& event;
  const std::string& json;
};

class AlertSink {
 public:
  virtual ~AlertSink() = default;
  virtual std::string name() const = 0;
  /// Throws DeliveryError (or any exception) on failure.
  virtual void deliver(const AlertPayload& payload) = 0;
};

class WebhookSink final : public AlertSink {
 public:
  WebhookSink(std::string url, std::shared_ptr<HttpTransport> transport)
      : url_(std::move(url)), transport_(std::move(transport)) {}

  std::string name() const override { return "webhook:" + url_; }

  void deliver(const AlertPayload& payload) override {
    const HttpResult r = transport_->post(url_, payload.json, "application/json");
    if (r.status < 200 || r.status >= 300) {
      throw DeliveryError("webhook " + url_ + " -> " + (r.status ? std::to_string(r.status) : r.error));
    }
  }

 private:
  std::string url_;
  std::shared_ptr<HttpTransport> transport_;
};

class SmsGatewaySink final : public AlertSink {
 public:
  SmsGatewaySink(std::string gateway_url, std::string msisdn, std::shared_ptr<HttpTransport> transport)
      : url_(std::move(gateway_url)), to_(std::move(msisdn)), transport_(std::move(transport)) {}

  std::string name() const override { return "sms:" + to_; }

  static std::string request_body(const std::string& to, const EruptionEvent& e) {
    nlohmann::ordered_json j;
    j["to"] = to;
    j["body"] = format_sms(e);
    return j.dump();
  }

  void deliver(const AlertPayload& payload) override {
    const HttpResult r = transport_->post(url_, request_body(to_, payload.event), "application/json");
    if (r.status < 200 || r.status >= 300) {
      throw DeliveryError("sms gateway " + url_ + " -> " + (r.status ? std::to_string(r.status) : r.error));
    }
  }

 private:
  std::string url_;
  std::string to_;
  std::shared_ptr<HttpTransport> transport_;
};

class SerialSink final : public AlertSink {
 public:
  SerialSink(std::string label, std::shared_ptr<ByteTransport> transport)
      : label_(std::move(label)), transport_(std::move(transport)) {}

  std::string name() const override { return "serial:" + label_; }

  void deliver(const AlertPayload& payload) override { transport_->write(encode_serial(payload.event)); }

 private:
  std::string label_;
  std::shared_ptr<ByteTransport> transport_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;

  /// Wait before attempt number `attempt` (1-based; no wait before the first).
  std::chrono::milliseconds backoff_before(int attempt) const {
    if (attempt <= 1) return std::chrono::milliseconds(0);
    double ms = static_cast<double>(initial_backoff.count());
    for (int i = 2; i < attempt; ++i) ms *= multiplier;
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
  }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

struct SinkOutcome {
  std::string sink;
  bool delivered = false;
  int attempts = 0;
  std::vector<std::chrono::milliseconds> backoffs;
  std::string last_error;
};

struct DeliveryReport {
  std::uint64_t event_id = 0;
  std::vector<SinkOutcome> outcomes;  // one per sink, in configuration order

  bool all_delivered() const noexcept {
    for (const auto& o : outcomes) {
      if (!o.delivered) return false;
    }
    return true;
  }
};

inline SinkOutcome deliver_with_retry(AlertSink& sink, const AlertPayload& payload, const RetryPolicy& policy,
                                      const Sleeper& sleep) {
  SinkOutcome out;
  out.sink = sink.name();
  for (int attempt = 1; attempt <= std::max(policy.max_attempts, 1); ++attempt) {
    if (attempt > 1) {
      const auto wait = policy.backoff_before(attempt);
      out.backoffs.push_back(wait);
      sleep(wait);
    }
    out.attempts = attempt;
    try {
      sink.deliver(payload);
      out.delivered = true;
      out.last_error.clear();
      return out;
    } catch (const std::exception& ex) {
      out.last_error = ex.what();
    }
  }
  return out;
}

/// Attempts every sink concurrently and joins. A failing or slow sink never
/// prevents the others from being tried.
inline DeliveryReport dispatch(const EruptionEvent& e, const std::string& json,
                               std::span<const std::shared_ptr<AlertSink>> sinks, const RetryPolicy& policy = {},
                               Sleeper sleep = real_sleeper()) {
  DeliveryReport report;
  report.event_id = e.event_id;
  if (sinks.empty()) return report;

  const AlertPayload payload{e, json};
  std::vector<std::future<SinkOutcome>> pending;
  pending.reserve(sinks.size());
  for (const auto& sink : sinks) {
    pending.push_back(std::async(std::launch::async, [&payload, &policy, &sleep, sink] {
      return deliver_with_retry(*sink, payload, policy, sleep);
    }));
  }
  for (auto& f : pending) report.outcomes.push_back(f.get());
  return report;
}

inline DeliveryReport dispatch(const EruptionEvent& e, std::span<const std::shared_ptr<AlertSink>> sinks,
                               const RetryPolicy& policy = {}, Sleeper sleep = real_sleeper()) {
  return dispatch(e, event_to_json(e), sinks, policy, std::move(sleep));
}

}  // namespace lavawatch
