#include <atomic>
#include <bit>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "meattack/error.hpp"
#include "meattack/remote_oracle.hpp"
#include "test_support.hpp"

using namespace meattack;

namespace {

// Minimal model server speaking the wire protocol: answers every valid
// request with fixed logits.
class EchoServer {
 public:
  EchoServer(VideoShape expected, Logits logits, long long num_classes)
      : expected_(expected), logits_(std::move(logits)) {
    server_.Get("/v1/info", [this, num_classes](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"model_id\":\"echo\",\"num_classes\":" + std::to_string(num_classes) +
                          ",\"expected_shape\":[" + std::to_string(expected_.frames) + "," +
                          std::to_string(expected_.height) + "," + std::to_string(expected_.width) +
                          "," + std::to_string(expected_.channels) + "]}",
                      "application/json");
    });
    server_.Post("/v1/logits", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++posts_;
      if (n <= stall_first_) std::this_thread::sleep_for(std::chrono::milliseconds(600));
      try {
        const VideoTensor v = wire::decode_logits_request(req.body);
        if (v.shape() != expected_) {
          res.status = 400;
          res.set_content(wire::encode_error("expected shape " + expected_.to_string() + ", got " +
                                             v.shape().to_string()),
                          "application/json");
          return;
        }
        last_ = v;
        res.set_content(wire::encode_logits_response({logits_, 0, "echo"}), "application/json");
      } catch (const Error& e) {
        res.status = 400;
        res.set_content(wire::encode_error(e.what()), "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~EchoServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int posts() const { return posts_; }
  void stall_first(int n) { stall_first_ = n; }
  const VideoTensor& last() const { return last_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  VideoShape expected_;
  Logits logits_;
  std::atomic<int> posts_{0};
  int stall_first_ = 0;
  VideoTensor last_;
};

RemoteOptions fast_options() {
  RemoteOptions o;
  o.retries = 2;
  o.backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::milliseconds(2000);
  return o;
}

}  // namespace

TEST_SUITE("remote") {

TEST_CASE("base64") {
  for (const std::string s : {"", "f", "fo", "foo", "foob", "fooba", "foobar"}) {
    CHECK(wire::base64_decode(wire::base64_encode(s)) == s);
  }
  CHECK(wire::base64_encode("foobar") == "Zm9vYmFy");
  CHECK(wire::base64_encode("fo") == "Zm8=");
  CHECK_THROWS_AS(wire::base64_decode("abc"), ProtocolError);
}

TEST_CASE("wire documents") {
  const VideoTensor v = testing::random_video({2, 3, 4, 3}, 1);
  const VideoTensor back = wire::decode_logits_request(wire::encode_logits_request(v));
  REQUIRE(back.shape() == v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(back[i] == static_cast<double>(static_cast<float>(v[i])));
  CHECK(wire::decode_info(wire::encode_info({"m", 400, {16, 224, 224, 3}})).num_classes == 400);
  const auto r = wire::decode_logits_response(wire::encode_logits_response({{1.5, -2.0}, 1, "m"}));
  CHECK(r.logits == Logits{1.5, -2.0});
  CHECK(r.label == 1);
  CHECK_THROWS_AS(wire::decode_logits_request("{\"shape\":[1,1,1,1],\"dtype\":\"f16\",\"data\":\"\"}"), ProtocolError);
}

TEST_CASE("logits round-trip bit-exactly") {
  const VideoShape shape{2, 4, 4, 3};
  const Logits fixed{0.1, 1.0 / 3.0, -2.5e17, 1e-300, -0.0};
  EchoServer server(shape, fixed, 5);
  RemoteOracle oracle(server.url(), fast_options());
  CHECK(oracle.num_classes() == 5);
  CHECK(oracle.expected_shape() == shape);
  CHECK(oracle.info().model_id == "echo");
  const VideoTensor v = testing::random_video(shape, 2);
  const Logits got = oracle.query(v);
  REQUIRE(got.size() == fixed.size());
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(got[i]) == std::bit_cast<std::uint64_t>(fixed[i]));
  }
  CHECK(oracle.query_count() == 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(server.last()[i] == static_cast<double>(static_cast<float>(v[i])));
  }
}

TEST_CASE("shape mismatches") {
  const VideoShape shape{2, 4, 4, 3};
  EchoServer server(shape, {1.0, 2.0}, 2);
  RemoteOracle oracle(server.url(), fast_options());
  try {
    oracle.query(VideoTensor({2, 4, 5, 3}));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,4,4,3]") != std::string::npos);
    CHECK(msg.find("[2,4,5,3]") != std::string::npos);
  }
  CHECK(server.posts() == 0);

  // The server also rejects a body whose shape disagrees with its model.
  httplib::Client raw(server.url());
  const auto res = raw.Post("/v1/logits", wire::encode_logits_request(VideoTensor({1, 1, 1, 1})),
                            "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(res->body.find("expected shape") != std::string::npos);
}

TEST_CASE("protocol errors") {
  const VideoShape shape{1, 2, 2, 3};
  {
    EchoServer server(shape, {}, 3);
    RemoteOracle oracle(server.url(), fast_options());
    CHECK_THROWS_AS(oracle.query(VideoTensor(shape)), ProtocolError);
    CHECK(oracle.query_count() == 1);
  }
  {
    EchoServer server(shape, {1.0, 2.0}, 3);
    RemoteOracle oracle(server.url(), fast_options());
    CHECK_THROWS_AS(oracle.query(VideoTensor(shape)), ProtocolError);
  }
  {
    EchoServer server(shape, {1.0}, 0);
    CHECK_THROWS_AS(RemoteOracle(server.url(), fast_options()), ProtocolError);
  }
  CHECK_THROWS_AS(wire::decode_logits_response("{\"logits\":[]}"), ProtocolError);
  CHECK_THROWS_AS(wire::decode_logits_response("not json"), ProtocolError);
  CHECK_THROWS_AS(wire::decode_info("{\"num_classes\":4}"), ProtocolError);
}

TEST_CASE("an unreachable server is a transport error") {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  CHECK_THROWS_AS(RemoteOracle("http://127.0.0.1:" + std::to_string(port), fast_options()),
                  TransportError);
}

TEST_CASE("a retried query counts once") {
  const VideoShape shape{1, 2, 2, 3};
  EchoServer server(shape, {3.0, 1.0}, 2);
  server.stall_first(1);
  RemoteOptions opts = fast_options();
  opts.timeout = std::chrono::milliseconds(250);
  RemoteOracle oracle(server.url(), opts);
  CHECK(oracle.query(VideoTensor(shape)) == Logits{3.0, 1.0});
  CHECK(oracle.query_count() == 1);
  CHECK(server.posts() == 2);
}

}
