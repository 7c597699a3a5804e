#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lavawatch/dispatch.hpp"

using namespace lavawatch;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

EruptionEvent sample_event() {
  EruptionEvent e;
  e.event_id = 9;
  e.frame_id = 3;
  e.timestamp_ms = 1439553600000ull;
  e.severity = Severity::Warning;
  FlowRecord f;
  f.blob.area = 400;
  f.trajectory.direction = Direction::SW;
  f.trajectory.grados = 135;
  e.flows.push_back(f);
  return e;
}

/// Scripted HTTP responses; records every request.
class FakeHttp final : public HttpTransport {
 public:
  explicit FakeHttp(std::vector<int> statuses) : statuses_(std::move(statuses)) {}
  HttpResult post(const std::string& url, const std::string& body, const std::string& type) override {
    std::lock_guard lock(mu_);
    requests.push_back({url, body, type});
    const int s = calls_ < statuses_.size() ? statuses_[calls_] : statuses_.back();
    ++calls_;
    return {s, s ? "" : "connection refused"};
  }
  struct Request {
    std::string url, body, type;
  };
  std::vector<Request> requests;

 private:
  std::mutex mu_;
  std::vector<int> statuses_;
  std::size_t calls_ = 0;
};

class MemoryBytes final : public ByteTransport {
 public:
  void write(std::span<const std::uint8_t> b) override {
    std::lock_guard lock(mu_);
    bytes.insert(bytes.end(), b.begin(), b.end());
  }
  std::vector<std::uint8_t> bytes;

 private:
  std::mutex mu_;
};

class SlowSink final : public AlertSink {
 public:
  explicit SlowSink(std::chrono::milliseconds d) : d_(d) {}
  std::string name() const override { return "slow"; }
  void deliver(const AlertPayload&) override { std::this_thread::sleep_for(d_); }

 private:
  std::chrono::milliseconds d_;
};

struct RecordingSleeper {
  std::shared_ptr<std::vector<std::chrono::milliseconds>> waits = std::make_shared<std::vector<std::chrono::milliseconds>>();
  std::shared_ptr<std::mutex> mu = std::make_shared<std::mutex>();
  Sleeper fn() {
    auto w = waits;
    auto m = mu;
    return [w, m](std::chrono::milliseconds d) {
      std::lock_guard lock(*m);
      w->push_back(d);
    };
  }
};

}  // namespace

TEST(RetryPolicy, BackoffSchedule) {
  RetryPolicy p;
  EXPECT_EQ(p.max_attempts, 3);
  EXPECT_EQ(p.backoff_before(1), 0ms);
  EXPECT_EQ(p.backoff_before(2), 1000ms);
  EXPECT_EQ(p.backoff_before(3), 2000ms);
  EXPECT_EQ(p.backoff_before(4), 4000ms);
}

TEST(Dispatch, EmptySinkListGivesEmptyReport) {
  const auto e = sample_event();
  const auto r = dispatch(e, std::vector<std::shared_ptr<AlertSink>>{}, {}, [](auto) {});
  EXPECT_EQ(r.event_id, 9u);
  EXPECT_TRUE(r.outcomes.empty());
  EXPECT_TRUE(r.all_delivered());
}

TEST(Dispatch, AllHealthy) {
  auto http = std::make_shared<FakeHttp>(std::vector<int>{200});
  auto serial = std::make_shared<MemoryBytes>();
  std::vector<std::shared_ptr<AlertSink>> sinks{
      std::make_shared<WebhookSink>("http://hook.example/ev", http),
      std::make_shared<SmsGatewaySink>("http://sms.example/send", "+593000000", http),
      std::make_shared<SerialSink>("mem", serial)};
  const auto e = sample_event();
  const std::string json = event_to_json(e);
  const auto r = dispatch(e, json, sinks, {}, [](auto) {});
  ASSERT_EQ(r.outcomes.size(), 3u);
  EXPECT_TRUE(r.all_delivered());
  for (const auto& o : r.outcomes) EXPECT_EQ(o.attempts, 1);
  EXPECT_EQ(serial->bytes, encode_serial(e));

  ASSERT_EQ(http->requests.size(), 2u);
  bool saw_hook = false, saw_sms = false;
  for (const auto& req : http->requests) {
    EXPECT_EQ(req.type, "application/json");
    if (req.url == "http://hook.example/ev") {
      saw_hook = true;
      EXPECT_EQ(req.body, json);
    } else {
      saw_sms = true;
      const auto j = nlohmann::json::parse(req.body);
      EXPECT_EQ(j["to"], "+593000000");
      EXPECT_EQ(j["body"], format_sms(e));
      EXPECT_EQ(j.size(), 2u);
    }
  }
  EXPECT_TRUE(saw_hook && saw_sms);
}

TEST(Dispatch, WebhookFailingThriceIsReportedWithoutBlockingSerial) {
  auto http = std::make_shared<FakeHttp>(std::vector<int>{500, 500, 500, 200});
  auto serial = std::make_shared<MemoryBytes>();
  std::vector<std::shared_ptr<AlertSink>> sinks{std::make_shared<WebhookSink>("http://hook.example/ev", http),
                                                std::make_shared<SerialSink>("mem", serial)};
  RecordingSleeper sleeper;
  const auto e = sample_event();
  const auto r = dispatch(e, sinks, {}, sleeper.fn());
  ASSERT_EQ(r.outcomes.size(), 2u);
  EXPECT_FALSE(r.outcomes[0].delivered);
  EXPECT_EQ(r.outcomes[0].attempts, 3);
  EXPECT_EQ(r.outcomes[0].backoffs, (std::vector<std::chrono::milliseconds>{1000ms, 2000ms}));
  EXPECT_NE(r.outcomes[0].last_error.find("500"), std::string::npos);
  EXPECT_TRUE(r.outcomes[1].delivered);
  EXPECT_EQ(r.outcomes[1].attempts, 1);
  EXPECT_EQ(http->requests.size(), 3u);
  EXPECT_EQ(serial->bytes, encode_serial(e));
  EXPECT_FALSE(r.all_delivered());
}

TEST(Dispatch, RecoversOnRetry) {
  auto http = std::make_shared<FakeHttp>(std::vector<int>{0, 503, 204});
  std::vector<std::shared_ptr<AlertSink>> sinks{std::make_shared<WebhookSink>("http://h/", http)};
  const auto r = dispatch(sample_event(), sinks, {}, [](auto) {});
  EXPECT_TRUE(r.outcomes[0].delivered);
  EXPECT_EQ(r.outcomes[0].attempts, 3);
  EXPECT_TRUE(r.outcomes[0].last_error.empty());
}

TEST(Dispatch, AttemptsNeverExceedPolicy) {
  for (int max = 1; max <= 5; ++max) {
    auto http = std::make_shared<FakeHttp>(std::vector<int>{500});
    std::vector<std::shared_ptr<AlertSink>> sinks{std::make_shared<WebhookSink>("http://h/", http)};
    RetryPolicy p;
    p.max_attempts = max;
    const auto r = dispatch(sample_event(), sinks, p, [](auto) {});
    EXPECT_EQ(r.outcomes[0].attempts, max);
    EXPECT_EQ(http->requests.size(), static_cast<std::size_t>(max));
  }
}

TEST(Dispatch, SinksRunConcurrently) {
  std::vector<std::shared_ptr<AlertSink>> sinks;
  for (int i = 0; i < 4; ++i) sinks.push_back(std::make_shared<SlowSink>(300ms));
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = dispatch(sample_event(), sinks, {}, [](auto) {});
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_TRUE(r.all_delivered());
  EXPECT_LT(elapsed, 900ms);
}

TEST(Dispatch, ThrowingSinkDoesNotAffectOthers) {
  class Boom final : public AlertSink {
   public:
    std::string name() const override { return "boom"; }
    void deliver(const AlertPayload&) override { throw std::runtime_error("boom"); }
  };
  auto serial = std::make_shared<MemoryBytes>();
  std::vector<std::shared_ptr<AlertSink>> sinks{std::make_shared<Boom>(), std::make_shared<SerialSink>("m", serial)};
  const auto r = dispatch(sample_event(), sinks, {}, [](auto) {});
  EXPECT_FALSE(r.outcomes[0].delivered);
  EXPECT_EQ(r.outcomes[0].last_error, "boom");
  EXPECT_EQ(r.outcomes[0].sink, "boom");
  EXPECT_TRUE(r.outcomes[1].delivered);
}

TEST(Transports, FileByteTransportAppends) {
  const fs::path p = fs::temp_directory_path() / ("lavawatch_serial_" + std::to_string(::getpid()));
  fs::remove(p);
  FileByteTransport t(p.string());
  const std::vector<std::uint8_t> a{'A', '3', '\n'}, b{'W', '0', '\n'};
  t.write(a);
  t.write(b);
  std::ifstream in(p, std::ios::binary);
  const std::string got((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(got, "A3\nW0\n");
  fs::remove(p);
  EXPECT_THROW(FileByteTransport("/nonexistent-dir/x").write(a), DeliveryError);
}

TEST(Transports, TcpByteTransportDeliversExactBytes) {
  const int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(srv, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  socklen_t len = sizeof addr;
  ::getsockname(srv, reinterpret_cast<sockaddr*>(&addr), &len);
  ASSERT_EQ(::listen(srv, 1), 0);
  std::string received;
  std::thread reader([&] {
    const int c = ::accept(srv, nullptr, nullptr);
    char buf[64];
    ssize_t n;
    while ((n = ::read(c, buf, sizeof buf)) > 0) received.append(buf, static_cast<std::size_t>(n));
    ::close(c);
  });
  TcpByteTransport t("127.0.0.1", ntohs(addr.sin_port));
  t.write(std::vector<std::uint8_t>{'C', '1', '1', '4', '\n'});
  reader.join();
  ::close(srv);
  EXPECT_EQ(received, "C114\n");
  EXPECT_THROW(TcpByteTransport("127.0.0.1", ntohs(addr.sin_port)).write(std::vector<std::uint8_t>{'x'}),
               DeliveryError);
}

TEST(Transports, HttplibAgainstLocalServer) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string last_body;
  server.Post("/hook", [&](const httplib::Request& req, httplib::Response& res) {
    last_body = req.body;
    res.status = ++hits <= 3 ? 500 : 200;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto http = std::make_shared<HttplibTransport>(2s);
  std::vector<std::shared_ptr<AlertSink>> sinks{
      std::make_shared<WebhookSink>("http://127.0.0.1:" + std::to_string(port) + "/hook", http)};
  const auto e = sample_event();
  auto r = dispatch(e, sinks, {}, [](auto) {});
  EXPECT_FALSE(r.outcomes[0].delivered);
  EXPECT_EQ(r.outcomes[0].attempts, 3);
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(last_body, event_to_json(e));
  r = dispatch(e, sinks, {}, [](auto) {});
  EXPECT_TRUE(r.outcomes[0].delivered);
  server.stop();
  th.join();

  const auto refused = dispatch(e, sinks, {}, [](auto) {});
  EXPECT_FALSE(refused.outcomes[0].delivered);
  EXPECT_FALSE(refused.outcomes[0].last_error.empty());
}

TEST(SplitUrl, Forms) {
  EXPECT_EQ(split_url("http://a:8080/x/y").origin, "http://a:8080");
  EXPECT_EQ(split_url("http://a:8080/x/y").path, "/x/y");
  EXPECT_EQ(split_url("http://a").path, "/");
  EXPECT_THROW(split_url("nohost"), ConfigError);
}
