#include "stereoscope/remote_probe.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <httplib.h>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "stereoscope/error.hpp"

namespace stereoscope {

using nlohmann::json;

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("URL needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme != "http" && scheme != "https") throw UsageError("unsupported URL scheme: " + url);
#else
  if (scheme != "http") throw UsageError("this build supports only http:// endpoints: " + url);
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {base, path};
}

std::string make_predict_request(std::span<const std::string> texts) {
  json body;
  body["texts"] = json::array();
  for (const auto& t : texts) body["texts"].push_back(t);
  return body.dump();
}

std::vector<double> parse_predict_response(const std::string& body, std::size_t expected, const std::string& model_id) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ProtocolError("response is not a JSON object");
  const auto it = doc.find("probabilities");
  if (it == doc.end()) throw ProtocolError("response lacks \"probabilities\"");
  if (!it->is_array()) throw ProtocolError("\"probabilities\" is not an array");
  if (it->size() != expected) {
    throw ProtocolError("expected " + std::to_string(expected) + " probabilities, got " + std::to_string(it->size()));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& v : *it) {
    if (!v.is_number()) throw ProtocolError("probability is not a number");
    const double p = v.get<double>();
    if (!(p >= 0.0 && p <= 1.0)) throw ProtocolError("probability " + v.dump() + " outside [0, 1]");
    out.push_back(p);
  }
  const auto m = doc.find("model");
  if (m != doc.end()) {
    if (!m->is_string()) throw ProtocolError("\"model\" echo is not a string");
    if (!model_id.empty() && m->get<std::string>() != model_id) {
      throw ProtocolError("server reports model '" + m->get<std::string>() + "', expected '" + model_id + "'");
    }
  }
  return out;
}

RemoteProbe::RemoteProbe(std::string url, std::string model_id, RemoteProbeOptions opts)
    : url_(std::move(url)), model_id_(std::move(model_id)), opts_(opts) {
  auto [base, path] = split_url(url_);
  scheme_host_port_ = std::move(base);
  path_ = std::move(path) + "/predict";
  if (opts_.batch_size == 0) throw UsageError("batch_size must be positive");
  if (opts_.max_in_flight == 0) throw UsageError("max_in_flight must be positive");
  if (opts_.max_attempts < 1) throw UsageError("max_attempts must be at least 1");
}

std::string RemoteProbe::id() const { return model_id_.empty() ? "remote:" + url_ : "remote:" + model_id_; }

std::vector<double> RemoteProbe::predict_batch(std::span<const std::string> texts) const {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(opts_.timeout);
  client.set_read_timeout(opts_.timeout);
  client.set_write_timeout(opts_.timeout);
  const std::string body = make_predict_request(texts);
  std::string last_error;
  for (int attempt = 0; attempt < opts_.max_attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(opts_.backoff_base * (1 << (attempt - 1)));
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProtocolError("HTTP " + std::to_string(res->status) + " from " + url_ + ": " + res->body);
    }
    return parse_predict_response(res->body, texts.size(), model_id_);
  }
  throw NetworkError("request to " + url_ + path_.substr(path_.rfind('/')) + " failed after " +
                     std::to_string(opts_.max_attempts) + " attempt(s): " + last_error);
}

std::vector<double> RemoteProbe::predict_proba(std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  const std::size_t batches = (texts.size() + opts_.batch_size - 1) / opts_.batch_size;
  std::vector<std::vector<double>> results(batches);
  std::vector<std::exception_ptr> errors(batches);
  auto run = [&](std::size_t b) {
    const std::size_t begin = b * opts_.batch_size;
    const std::size_t len = std::min(opts_.batch_size, texts.size() - begin);
    try {
      results[b] = predict_batch(texts.subspan(begin, len));
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(opts_.max_in_flight, batches);
  if (workers <= 1) {
    for (std::size_t b = 0; b < batches; ++b) run(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < batches; b = next++) run(b);
      });
    }
    for (auto& t : pool) t.join();
  }
  // Report the first failing batch in request order.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<double> out;
  out.reserve(texts.size());
  for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
  return out;
}

}  // namespace stereoscope
