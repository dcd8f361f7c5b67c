#pragma once

#include <chrono>
#include <string>

#include "stereoscope/probe.hpp"

namespace stereoscope {

struct RemoteProbeOptions {
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{200};  // doubles per retry
  std::chrono::seconds timeout{30};
};

// Probe served over HTTP: POST <url>/predict with {"texts": [...]}, expecting
// {"probabilities": [...]} of the same length and order, each in [0, 1].
//
// Transport failures and 5xx/429 answers are retried with exponential backoff;
// once attempts run out a NetworkError is thrown. Malformed answers throw
// ProtocolError without retry.
class RemoteProbe final : public Probe {
 public:
  RemoteProbe(std::string url, std::string model_id, RemoteProbeOptions opts = {});

  std::vector<double> predict_proba(std::span<const std::string> texts) const override;
  using Probe::predict_proba;
  std::string id() const override;
  ProbeKind kind() const override { return ProbeKind::remote; }

  const std::string& url() const { return url_; }

 private:
  std::vector<double> predict_batch(std::span<const std::string> texts) const;

  std::string url_;
  std::string scheme_host_port_;
  std::string path_;
  std::string model_id_;
  RemoteProbeOptions opts_;
};

// Checks a /predict response body against the protocol. `expected` is the
// request length; `model_id`, when non-empty, must match any "model" echo.
std::vector<double> parse_predict_response(const std::string& body, std::size_t expected,
                                           const std::string& model_id = {});

std::string make_predict_request(std::span<const std::string> texts);

// Splits "http[s]://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace stereoscope
