#include "meattack/remote_oracle.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "meattack/error.hpp"

namespace meattack {

using nlohmann::json;

namespace wire {

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 payload length is not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ProtocolError("malformed base64 payload");
  // EVP_DecodeBlock keeps the bytes produced by '=' padding.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace {

VideoShape shape_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ProtocolError("shape must be an array [V,H,W,C]");
  for (const auto& d : j) {
    if (!d.is_number_integer() || d.get<long long>() <= 0) {
      throw ProtocolError("shape entries must be positive integers");
    }
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>(),
          j[3].get<std::size_t>()};
}

json shape_to_json(const VideoShape& s) {
  return json::array({s.frames, s.height, s.width, s.channels});
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("response is not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string encode_logits_request(const VideoTensor& video) {
  std::string raw;
  raw.resize(video.size() * 4);
  std::size_t o = 0;
  for (double v : video.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) raw[o++] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  json j{{"shape", shape_to_json(video.shape())}, {"dtype", "f32le"},
         {"data", base64_encode(raw)}};
  return j.dump();
}

VideoTensor decode_logits_request(const std::string& body) {
  const json j = parse_body(body);
  if (!j.is_object() || !j.contains("shape") || !j.contains("dtype") || !j.contains("data")) {
    throw ProtocolError("request needs shape, dtype and data");
  }
  if (j["dtype"] != "f32le") throw ProtocolError("unsupported dtype");
  const VideoShape shape = shape_from_json(j["shape"]);
  const std::string raw = base64_decode(j["data"].get<std::string>());
  if (raw.size() != shape.size() * 4) {
    throw ProtocolError("payload has " + std::to_string(raw.size()) + " bytes, shape needs " +
                        std::to_string(shape.size() * 4));
  }
  std::vector<double> values(shape.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * i + b])) << (8 * b);
    }
    values[i] = std::bit_cast<float>(bits);
  }
  return VideoTensor(shape, std::move(values));
}

std::string encode_logits_response(const LogitsResponse& response) {
  json j{{"logits", response.logits}, {"label", response.label}, {"model_id", response.model_id}};
  return j.dump();
}

LogitsResponse decode_logits_response(const std::string& body) {
  const json j = parse_body(body);
  if (!j.is_object() || !j.contains("logits") || !j["logits"].is_array()) {
    throw ProtocolError("response has no logits array");
  }
  LogitsResponse r;
  for (const auto& v : j["logits"]) {
    if (!v.is_number()) throw ProtocolError("logits must be numbers");
    r.logits.push_back(v.get<double>());
  }
  if (r.logits.empty()) throw ProtocolError("server returned zero logits");
  if (j.contains("label") && j["label"].is_number_integer()) r.label = j["label"].get<Label>();
  if (j.contains("model_id") && j["model_id"].is_string()) r.model_id = j["model_id"];
  return r;
}

std::string encode_info(const ServerInfo& info) {
  json j{{"model_id", info.model_id}, {"num_classes", info.num_classes},
         {"expected_shape", shape_to_json(info.expected_shape)}};
  return j.dump();
}

ServerInfo decode_info(const std::string& body) {
  const json j = parse_body(body);
  if (!j.is_object() || !j.contains("num_classes") || !j.contains("expected_shape")) {
    throw ProtocolError("info response needs num_classes and expected_shape");
  }
  ServerInfo info;
  if (j.contains("model_id") && j["model_id"].is_string()) info.model_id = j["model_id"];
  if (!j["num_classes"].is_number_integer() || j["num_classes"].get<long long>() <= 0) {
    throw ProtocolError("num_classes must be a positive integer");
  }
  info.num_classes = j["num_classes"].get<std::size_t>();
  info.expected_shape = shape_from_json(j["expected_shape"]);
  return info;
}

std::string encode_error(const std::string& message) { return json{{"error", message}}.dump(); }

}  // namespace wire

struct RemoteOracle::Session {
  explicit Session(const std::string& url) : client(url) {}
  httplib::Client client;
};

namespace {

std::string error_message(const httplib::Result& res) {
  try {
    const auto j = json::parse(res->body);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"];
  } catch (const json::exception&) {
  }
  return res->body;
}

// Retries only when no HTTP response came back at all.
template <class Send>
httplib::Result send_with_retry(Send&& send, const RemoteOptions& options, const char* what) {
  auto backoff = options.backoff;
  for (int attempt = 0;; ++attempt) {
    httplib::Result res = send();
    if (res) return res;
    if (attempt >= options.retries) {
      throw TransportError(std::string(what) + ": " + httplib::to_string(res.error()) + " after " +
                           std::to_string(attempt + 1) + " attempts");
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace

RemoteOracle::RemoteOracle(const std::string& base_url, RemoteOptions options)
    : session_(std::make_unique<Session>(base_url)), options_(options) {
  if (!session_->client.is_valid()) throw TransportError("invalid server URL '" + base_url + "'");
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  session_->client.set_connection_timeout(secs.count(), usecs.count());
  session_->client.set_read_timeout(secs.count(), usecs.count());
  session_->client.set_write_timeout(secs.count(), usecs.count());

  auto res = send_with_retry([&] { return session_->client.Get("/v1/info"); }, options_,
                             "GET /v1/info");
  if (res->status != 200) {
    throw ProtocolError("GET /v1/info returned " + std::to_string(res->status) + ": " +
                        error_message(res));
  }
  info_ = wire::decode_info(res->body);
}

RemoteOracle::~RemoteOracle() = default;

Logits RemoteOracle::do_query(const VideoTensor& video) {
  const std::string body = wire::encode_logits_request(video);
  auto res = send_with_retry(
      [&] { return session_->client.Post("/v1/logits", body, "application/json"); }, options_,
      "POST /v1/logits");
  if (res->status != 200) {
    throw ProtocolError("POST /v1/logits returned " + std::to_string(res->status) + ": " +
                        error_message(res));
  }
  auto response = wire::decode_logits_response(res->body);
  if (response.logits.size() != info_.num_classes) {
    throw ProtocolError("server returned " + std::to_string(response.logits.size()) +
                        " logits, session declared " + std::to_string(info_.num_classes));
  }
  return std::move(response.logits);
}

}  // namespace meattack
