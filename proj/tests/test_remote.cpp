#include <doctest.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "stereoscope/conformance.hpp"
#include "stereoscope/error.hpp"
#include "stereoscope/remote_probe.hpp"

using namespace stereoscope;
using nlohmann::json;

namespace {

// Minimal /predict server on an ephemeral port; the handler decides the answer.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler predict) {
    server_.Post("/predict", std::move(predict));
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"status\":\"ok\"}", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// Probability = length of the text / 100, so order mistakes are visible.
void length_model(const httplib::Request& req, httplib::Response& res) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (...) {
    res.status = 400;
    return;
  }
  if (!body.contains("texts") || !body["texts"].is_array()) {
    res.status = 400;
    return;
  }
  std::vector<double> p;
  for (const auto& t : body["texts"]) {
    if (!t.is_string()) {
      res.status = 400;
      return;
    }
    p.push_back(static_cast<double>(t.get<std::string>().size()) / 100.0);
  }
  res.set_content(json{{"probabilities", p}}.dump(), "application/json");
}

RemoteProbeOptions fast_options() {
  RemoteProbeOptions o;
  o.backoff_base = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST_CASE("URL splitting") {
  CHECK(split_url("http://localhost:8000") == std::pair<std::string, std::string>{"http://localhost:8000", ""});
  CHECK(split_url("http://h:1/v1/") == std::pair<std::string, std::string>{"http://h:1", "/v1"});
  CHECK_THROWS_AS(split_url("ftp://x"), UsageError);
}

TEST_CASE("predict response validation") {
  CHECK(parse_predict_response("{\"probabilities\":[0.1,0.9]}", 2) == std::vector<double>{0.1, 0.9});
  CHECK_THROWS_AS(parse_predict_response("{\"probabilities\":[0.1]}", 2), ProtocolError);
  CHECK_THROWS_AS(parse_predict_response("{\"probabilities\":[1.5]}", 1), ProtocolError);
  CHECK_THROWS_AS(parse_predict_response("{\"probabilities\":[\"x\"]}", 1), ProtocolError);
  CHECK_THROWS_AS(parse_predict_response("[]", 0), ProtocolError);
  CHECK_THROWS_AS(parse_predict_response("nope", 1), ProtocolError);
  CHECK_THROWS_AS(parse_predict_response("{\"probabilities\":[0.2],\"model\":\"a\"}", 1, "b"), ProtocolError);
  CHECK_NOTHROW(parse_predict_response("{\"probabilities\":[0.2],\"model\":\"a\"}", 1, "a"));
  CHECK(json::parse(make_predict_request(std::vector<std::string>{"a\"b", "ü"})) == json{{"texts", {"a\"b", "ü"}}});
}

TEST_CASE("remote probe batches and preserves order") {
  std::atomic<int> requests{0};
  std::mutex mu;
  std::size_t largest = 0;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    {
      std::lock_guard lock(mu);
      largest = std::max(largest, json::parse(req.body)["texts"].size());
    }
    length_model(req, res);
  });
  auto opts = fast_options();
  opts.batch_size = 7;
  RemoteProbe probe(server.url(), "stub", opts);
  std::vector<std::string> texts;
  for (int i = 0; i < 50; ++i) texts.push_back(std::string(static_cast<std::size_t>(i), 'x'));
  const auto p = probe.predict_proba(texts);
  REQUIRE(p.size() == 50);
  for (int i = 0; i < 50; ++i) CHECK(p[static_cast<std::size_t>(i)] == doctest::Approx(i / 100.0));
  CHECK(requests == 8);
  CHECK(largest == 7);
  CHECK(probe.id() == "remote:stub");
  CHECK(probe.predict_proba(std::vector<std::string>{}).empty());
}

TEST_CASE("remote probe retries transient failures") {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = calls == 1 ? 503 : 429;
      return;
    }
    length_model(req, res);
  });
  RemoteProbe probe(server.url(), "stub", fast_options());
  CHECK(probe.predict_proba(std::string("abcd")) == doctest::Approx(0.04));
  CHECK(calls == 3);
}

TEST_CASE("remote probe error classes") {
  SUBCASE("persistent 5xx is a network error") {
    StubServer server([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    RemoteProbe probe(server.url(), "stub", fast_options());
    CHECK_THROWS_AS(probe.predict_proba(std::string("x")), NetworkError);
  }
  SUBCASE("4xx is a protocol error without retry") {
    std::atomic<int> calls{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 400;
    });
    RemoteProbe probe(server.url(), "stub", fast_options());
    CHECK_THROWS_AS(probe.predict_proba(std::string("x")), ProtocolError);
    CHECK(calls == 1);
  }
  SUBCASE("wrong length is a protocol error") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"probabilities\":[0.5,0.5]}", "application/json");
    });
    RemoteProbe probe(server.url(), "stub", fast_options());
    CHECK_THROWS_AS(probe.predict_proba(std::string("x")), ProtocolError);
  }
  SUBCASE("nothing listening") {
    auto opts = fast_options();
    opts.max_attempts = 2;
    RemoteProbe probe("http://127.0.0.1:1", "stub", opts);
    CHECK_THROWS_AS(probe.predict_proba(std::string("x")), NetworkError);
  }
}

TEST_CASE("stub probability") {
  const double p = stub_probability({0.25, 1.5}, 1);
  CHECK(p == doctest::Approx(1.0 / (1.0 + std::exp(-1.25))).epsilon(1e-15));
  CHECK(stub_probability({0.25, 1.5}, 0) + p == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(stub_probability({0.1}, 1), UsageError);
  CHECK(format_predict_response({0.1, 0.25}) == "{\"probabilities\":[0.1,0.25]}");
}

TEST_CASE("conformance suite structure") {
  const auto golden = generate_conformance({});
  CHECK(golden == generate_conformance({}));
  std::istringstream in(golden);
  std::string line;
  std::vector<json> rows;
  while (std::getline(in, line)) rows.push_back(json::parse(line));
  REQUIRE(rows.size() == 1 + 1 + 64 + 4);
  CHECK(rows[0]["kind"] == "header");
  CHECK(rows[1]["kind"] == "health");
  for (std::size_t b = 1; b <= 64; ++b) {
    const auto& c = rows[1 + b];
    CHECK(c["request"]["texts"].size() == b);
    CHECK(json::parse(c["response_body"].get<std::string>())["probabilities"].size() == b);
  }
  CHECK(rows.back()["expect_status"] == 400);
}

TEST_CASE("conformance check against a compliant and a broken server") {
  const ConformanceSpec spec;
  const double p = stub_probability(spec.logits, spec.label_index);
  const auto golden = generate_conformance(spec);
  auto stub = [p](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (...) {
      res.status = 400;
      return;
    }
    if (!body.contains("texts") || !body["texts"].is_array()) {
      res.status = 400;
      return;
    }
    for (const auto& t : body["texts"])
      if (!t.is_string()) {
        res.status = 400;
        return;
      }
    res.set_content(json{{"probabilities", std::vector<double>(body["texts"].size(), p)}}.dump(), "application/json");
  };
  {
    StubServer good(stub);
    const auto r = check_conformance(golden, good.url());
    CHECK(r.ok());
    CHECK(r.cases == 69);
    for (const auto& f : r.failures) MESSAGE(f);
  }
  {
    StubServer lax([](const httplib::Request& req, httplib::Response& res) { length_model(req, res); });
    const auto r = check_conformance(golden, lax.url());
    CHECK_FALSE(r.ok());
    CHECK(r.failures.size() >= 64);
  }
}
