#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "meattack/oracle.hpp"

namespace meattack {

// JSON bodies of the HTTP model protocol.
//   POST /v1/logits  {"shape":[V,H,W,C],"dtype":"f32le","data":"<base64>"}
//                 -> {"logits":[...],"label":int,"model_id":string}
//   GET  /v1/info -> {"model_id":...,"num_classes":K,"expected_shape":[V,H,W,C]}
//   non-200       -> {"error":string}
namespace wire {

struct ServerInfo {
  std::string model_id;
  std::size_t num_classes = 0;
  VideoShape expected_shape{};
};

struct LogitsResponse {
  Logits logits;
  Label label = 0;
  std::string model_id;
};

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

std::string encode_logits_request(const VideoTensor& video);
VideoTensor decode_logits_request(const std::string& body);

std::string encode_logits_response(const LogitsResponse& response);
LogitsResponse decode_logits_response(const std::string& body);

std::string encode_info(const ServerInfo& info);
ServerInfo decode_info(const std::string& body);

std::string encode_error(const std::string& message);

}  // namespace wire

struct RemoteOptions {
  int retries = 3;
  std::chrono::milliseconds backoff{100};  // doubled after each retry
  std::chrono::milliseconds timeout{30000};
};

// One session against a model server. GET /v1/info runs in the constructor;
// transport failures are retried with exponential backoff and then surface as
// TransportError. A query counts once however many retries it took.
class RemoteOracle final : public Oracle {
 public:
  explicit RemoteOracle(const std::string& base_url, RemoteOptions options = {});
  ~RemoteOracle() override;

  std::size_t num_classes() const override { return info_.num_classes; }
  VideoShape expected_shape() const override { return info_.expected_shape; }
  const wire::ServerInfo& info() const noexcept { return info_; }

 protected:
  Logits do_query(const VideoTensor& video) override;

 private:
  struct Session;
  std::unique_ptr<Session> session_;
  RemoteOptions options_;
  wire::ServerInfo info_;
};

}  // namespace meattack
