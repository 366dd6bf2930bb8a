#include <doctest.h>

#include <fstream>
#include <set>
#include <thread>

#include "geoprefer/ingest.hpp"
#include "geoprefer/scoring.hpp"
#include "geoprefer/service.hpp"
#include "json_schema.hpp"

// After the Eigen users: httplib pulls in <resolv.h>, whose _res macro
// collides with an Eigen parameter name.
#include <httplib.h>
#include <json.hpp>

using namespace geoprefer;
using nlohmann::json;

namespace {

const testing::SchemaChecker& schema() {
  static const testing::SchemaChecker checker = [] {
    std::ifstream in(std::string(GEOPREFER_SCHEMA));
    return testing::SchemaChecker(json::parse(in));
  }();
  return checker;
}

// A running service on an ephemeral port plus a client bound to it.
struct Harness {
  explicit Harness(std::shared_ptr<const GirTree> tree, ServiceConfig cfg = {})
      : tree(std::move(tree)), svc(this->tree, cfg) {
    port = svc.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { svc.listen_after_bind(); });
    svc.wait_until_ready();
  }
  ~Harness() {
    svc.stop();
    thread.join();
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }

  // Sends the request, checks the status and the schema, returns the body.
  json call(const std::string& method, const std::string& path, const json& body, int status,
            const std::string& ref) const {
    auto c = client();
    httplib::Result res = method == "GET" ? c.Get(path) : c.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CAPTURE(path);
    CAPTURE(res->body);
    CHECK(res->status == status);
    const auto j = json::parse(res->body);
    const auto errs = schema().check(j, ref);
    for (const auto& e : errs) FAIL_CHECK(e);
    return j;
  }

  std::shared_ptr<const GirTree> tree;
  Service svc;
  int port = 0;
  std::thread thread;
};

std::shared_ptr<const GirTree> fixture() {
  static const auto tree =
      std::make_shared<const GirTree>(GirTree::build(load_jsonl(std::string(GEOPREFER_TEST_DATA) + "/fixture200.jsonl")));
  return tree;
}

json query_body(const GirTree& t, std::size_t k) {
  const auto c = t.root().mbr.center();
  return {{"lat", c.lat}, {"lon", c.lon}, {"words", {1, 2, 3, 5, 8, 13, 21}}, {"k", k}};
}

}  // namespace

TEST_CASE("health and objects") {
  Harness h(fixture());
  auto c = h.client();
  auto res = c.Get("/healthz");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "ok");

  const auto id = h.tree->objects()[0].id;
  const auto o = h.call("GET", "/objects/" + std::to_string(id), {}, 200, "#/definitions/object");
  CHECK(o["id"] == id);
  h.call("GET", "/objects/999999", {}, 404, "#/definitions/error");
}

TEST_CASE("unknown sessions are 404") {
  Harness h(fixture());
  h.call("GET", "/sessions/deadbeef", {}, 404, "#/definitions/error");
  h.call("POST", "/sessions/deadbeef/feedback", {{"chosen_id", 1}}, 404, "#/definitions/error");
  h.call("POST", "/sessions/deadbeef/stop", {}, 404, "#/definitions/error");
}

TEST_CASE("invalid bodies are 422 naming the field") {
  Harness h(fixture());
  auto body = query_body(*h.tree, 5);
  body.erase("lat");
  auto e = h.call("POST", "/sessions", body, 422, "#/definitions/error");
  CHECK(e["error"].get<std::string>().find("lat") != std::string::npos);
  body = query_body(*h.tree, 5);
  body["words"] = json::array();
  e = h.call("POST", "/sessions", body, 422, "#/definitions/error");
  CHECK(e["error"].get<std::string>().find("words") != std::string::npos);
  body = query_body(*h.tree, 5);
  body["theta"] = 1;
  e = h.call("POST", "/sessions", body, 422, "#/definitions/error");
  CHECK(e["error"].get<std::string>().find("theta") != std::string::npos);
  body = query_body(*h.tree, 5);
  body["strategy"] = "best";
  e = h.call("POST", "/sessions", body, 422, "#/definitions/error");
  CHECK(e["error"].get<std::string>().find("strategy") != std::string::npos);

  auto c = h.client();
  auto res = c.Post("/sessions", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);
}

TEST_CASE("k at least N finishes immediately") {
  const auto tiny = std::make_shared<const GirTree>(
      GirTree::build(generate_synthetic({.n = 10, .vocab_size = 20, .words_per_object_mean = 4, .seed = 1})));
  Harness h(tiny);
  const auto j = h.call("POST", "/sessions", query_body(*tiny, 50), 201, "#/definitions/progress");
  CHECK(j["done"] == true);
  CHECK(j["results"].size() == 10);
  CHECK(j["rounds_used"] == 0);
  const std::string sid = j["session_id"];
  h.call("POST", "/sessions/" + sid + "/feedback", {{"chosen_id", 1}}, 409, "#/definitions/error");
  h.call("GET", "/sessions/" + sid, {}, 200, "#/definitions/state");
}

TEST_CASE("scripted session reaches done within ten rounds") {
  Harness h(fixture());
  auto body = query_body(*h.tree, 5);
  body["seed"] = 3;
  auto j = h.call("POST", "/sessions", body, 201, "#/definitions/progress");
  const std::string sid = j["session_id"];
  REQUIRE(j["done"] == false);
  CHECK(j["round"] == 1);
  CHECK(j["candidates"].size() <= 8);

  // a choice that was not shown
  std::set<ObjectId> shown;
  for (const auto& c : j["candidates"]) shown.insert(c["id"].get<ObjectId>());
  ObjectId outside = 0;
  for (const auto& o : h.tree->objects())
    if (!shown.count(o.id)) {
      outside = o.id;
      break;
    }
  h.call("POST", "/sessions/" + sid + "/feedback", {{"chosen_id", outside}}, 422, "#/definitions/error");
  h.call("POST", "/sessions/" + sid + "/feedback", json::object(), 422, "#/definitions/error");

  // simulated picks: best proximity + similarity among the shown
  int rounds = 0;
  while (j["done"] == false) {
    ++rounds;
    REQUIRE(rounds <= 10);
    ObjectId pick = 0;
    double best = -1;
    for (const auto& c : j["candidates"]) {
      const double s = c["proximity"].get<double>() + c["similarity"].get<double>();
      if (s > best) {
        best = s;
        pick = c["id"];
      }
    }
    j = h.call("POST", "/sessions/" + sid + "/feedback", {{"chosen_id", pick}}, 200, "#/definitions/progress");
    const auto state = h.call("GET", "/sessions/" + sid, {}, 200, "#/definitions/state");
    CHECK(state["history"].size() >= static_cast<std::size_t>(rounds));
  }
  CHECK(j["results"].size() == 5);
  CHECK(j["p_hat"].size() == 8);
  CHECK(j["rounds_used"] == rounds);
  h.call("POST", "/sessions/" + sid + "/feedback", {{"chosen_id", 1}}, 409, "#/definitions/error");
  const auto stopped = h.call("POST", "/sessions/" + sid + "/stop", {}, 200, "#/definitions/done");
  CHECK(stopped["results"] == j["results"]);
}

TEST_CASE("stop ends a session with results") {
  Harness h(fixture());
  const auto j = h.call("POST", "/sessions", query_body(*h.tree, 5), 201, "#/definitions/progress");
  REQUIRE(j["done"] == false);
  const std::string sid = j["session_id"];
  const auto done = h.call("POST", "/sessions/" + sid + "/stop", {}, 200, "#/definitions/done");
  CHECK(done["termination"] == json::array({"user_stop"}));
  CHECK(done["results"].size() == 5);
  const auto state = h.call("GET", "/sessions/" + sid, {}, 200, "#/definitions/state");
  CHECK(state["phase"] == "terminated");
}

TEST_CASE("concurrent sessions are independent") {
  Harness h(fixture());
  auto body = query_body(*h.tree, 5);
  body["seed"] = 11;
  // reference run
  std::vector<json> reference;
  {
    auto j = h.call("POST", "/sessions", body, 201, "#/definitions/progress");
    reference.push_back(j["candidates"]);
  }
  std::vector<std::thread> threads;
  std::vector<json> firsts(8);
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      auto c = h.client();
      auto res = c.Post("/sessions", body.dump(), "application/json");
      if (res && res->status == 201) firsts[static_cast<std::size_t>(i)] = json::parse(res->body)["candidates"];
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& f : firsts) CHECK(f == reference[0]);
  CHECK(h.svc.session_count() == 9);
}

TEST_CASE("idle sessions expire") {
  ServiceConfig cfg;
  cfg.idle_ttl = std::chrono::seconds(0);
  Harness h(fixture(), cfg);
  const auto j = h.call("POST", "/sessions", query_body(*h.tree, 5), 201, "#/definitions/progress");
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  CHECK(h.svc.expire_idle() == 1);
  h.call("GET", "/sessions/" + j["session_id"].get<std::string>(), {}, 404, "#/definitions/error");
}
