#include "geoprefer/service.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <random>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

namespace geoprefer {

using nlohmann::json;

namespace {

struct HttpError {
  int status;
  std::string message;
};

struct Entry {
  explicit Entry(Session s) : session(std::move(s)) {}
  std::mutex mu;
  Session session;
  std::chrono::steady_clock::time_point last_used = std::chrono::steady_clock::now();
};

json object_brief(const GeoObject& o) {
  json j{{"id", o.id}, {"lat", o.location.lat}, {"lon", o.location.lon}};
  if (o.image_url) j["image_url"] = *o.image_url;
  return j;
}

json candidates_json(const Session& s) {
  json arr = json::array();
  for (auto id : s.shown()) {
    json c = object_brief(s.tree().object(id));
    const auto& sp = s.scores(id);
    c["proximity"] = sp.proximity;
    c["similarity"] = sp.similarity;
    arr.push_back(std::move(c));
  }
  return arr;
}

json results_json(const Session& s) {
  json arr = json::array();
  for (const auto& r : s.results()) {
    json c = object_brief(s.tree().object(r.id));
    c["score"] = r.score;
    arr.push_back(std::move(c));
  }
  return arr;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json progress_json(const std::string& sid, const Session& s) {
  json j{{"session_id", sid}};
  if (s.phase() == Phase::Terminated) {
    j["done"] = true;
    j["results"] = results_json(s);
    j["rounds_used"] = s.rounds_used();
    j["p_hat"] = to_std(s.estimate()->p.weights);
    json reasons = json::array();
    for (auto r : s.termination().reasons) reasons.push_back(to_string(r));
    j["termination"] = reasons;
  } else {
    j["done"] = false;
    j["round"] = s.round_no();
    j["candidates"] = candidates_json(s);
  }
  return j;
}

json state_json(const std::string& sid, const Session& s) {
  json j = progress_json(sid, s);
  j["phase"] = to_string(s.phase());
  j["strategy"] = to_string(s.config().strategy);
  j["k"] = s.query().k;
  j["theta"] = s.query().theta;
  j["candidate_count"] = s.graph().vertex_count();
  j["constraint_count"] = s.constraints().size();
  json hist = json::array();
  for (const auto& r : s.rounds()) {
    json h{{"round", r.round_no}, {"shown", r.shown}};
    h["chosen"] = r.chosen ? json(*r.chosen) : json(nullptr);
    hist.push_back(std::move(h));
  }
  j["history"] = hist;
  return j;
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw HttpError{422, "body must be a JSON object"};
    return j;
  } catch (const json::exception&) {
    throw HttpError{422, "body is not valid JSON"};
  }
}

std::size_t positive_field(const json& body, const char* name, std::size_t fallback) {
  if (!body.contains(name) || body[name].is_null()) return fallback;
  if (!body[name].is_number_integer() || body[name].get<std::int64_t>() < 1)
    throw HttpError{422, std::string("field \"") + name + "\" must be a positive integer"};
  return body[name].get<std::size_t>();
}

Query query_from(const json& body, const ServiceConfig& cfg) {
  Query q;
  for (const char* f : {"lat", "lon"}) {
    if (!body.contains(f) || !body[f].is_number())
      throw HttpError{422, std::string("field \"") + f + "\" is required and must be a number"};
  }
  q.location = {body["lon"].get<double>(), body["lat"].get<double>()};
  if (q.location.lat < -90 || q.location.lat > 90) throw HttpError{422, "field \"lat\" out of range"};
  if (q.location.lon < -180 || q.location.lon > 180) throw HttpError{422, "field \"lon\" out of range"};
  if (!body.contains("words") || !body["words"].is_array() || body["words"].empty())
    throw HttpError{422, "field \"words\" must be a non-empty array of word ids"};
  for (const auto& w : body["words"]) {
    if (!w.is_number_unsigned() || w.get<std::uint64_t>() > 0xffffffffULL)
      throw HttpError{422, "field \"words\" must hold 32-bit unsigned integers"};
    q.words.push_back(w.get<WordId>());
  }
  std::sort(q.words.begin(), q.words.end());
  q.words.erase(std::unique(q.words.begin(), q.words.end()), q.words.end());

  q.k = positive_field(body, "k", cfg.default_k);
  q.theta = positive_field(body, "theta", cfg.default_theta);
  if (q.theta < 2) throw HttpError{422, "field \"theta\" must be >= 2"};
  q.lambda = cfg.default_lambda;
  if (body.contains("lambda") && !body["lambda"].is_null()) {
    if (!body["lambda"].is_number()) throw HttpError{422, "field \"lambda\" must be a number"};
    q.lambda = body["lambda"].get<double>();
    if (!(q.lambda >= 0 && q.lambda <= 1)) throw HttpError{422, "field \"lambda\" must lie in [0, 1]"};
  }
  return q;
}

}  // namespace

struct Service::Impl {
  std::shared_ptr<const GirTree> tree;
  ServiceConfig cfg;
  httplib::Server server;
  mutable std::mutex mu;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions;
  std::mt19937_64 id_rng{std::random_device{}()};
  std::atomic<std::uint64_t> counter{0};

  std::string new_id() {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng()));
    return buf;
  }

  std::shared_ptr<Entry> lookup(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError{404, "unknown session " + id};
    it->second->last_used = std::chrono::steady_clock::now();
    return it->second;
  }

  std::size_t expire() {
    std::lock_guard lock(mu);
    const auto now = std::chrono::steady_clock::now();
    std::size_t n = 0;
    for (auto it = sessions.begin(); it != sessions.end();) {
      if (now - it->second->last_used > cfg.idle_ttl) {
        it = sessions.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

  void routes();
};

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const HttpError& e) {
      send(res, e.status, json{{"error", e.message}});
    } catch (const InvalidChoice& e) {
      send(res, 422, json{{"error", e.what()}});
    } catch (const SessionStateError& e) {
      send(res, 409, json{{"error", e.what()}});
    } catch (const ValidationError& e) {
      send(res, 422, json{{"error", e.what()}});
    } catch (const std::exception& e) {
      send(res, 500, json{{"error", e.what()}});
    }
  };
}

// Exclusive access to one session; a concurrent request gets 409.
std::unique_lock<std::mutex> claim(Entry& e) {
  std::unique_lock lock(e.mu, std::try_to_lock);
  if (!lock.owns_lock()) throw HttpError{409, "another request on this session is in flight"};
  return lock;
}

}  // namespace

void Service::Impl::routes() {
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });

  server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                expire();
                const json body = parse_body(req);
                Query q = query_from(body, cfg);
                SessionConfig sc;
                sc.strategy = cfg.default_strategy;
                if (body.contains("strategy") && !body["strategy"].is_null()) {
                  if (!body["strategy"].is_string()) throw HttpError{422, "field \"strategy\" must be a string"};
                  try {
                    sc.strategy = parse_strategy(body["strategy"].get<std::string>());
                  } catch (const ValidationError&) {
                    throw HttpError{422, "field \"strategy\" must be \"random\" or \"densest\""};
                  }
                }
                sc.seed = cfg.seed + counter.fetch_add(1);
                if (body.contains("seed") && !body["seed"].is_null()) {
                  if (!body["seed"].is_number_unsigned()) throw HttpError{422, "field \"seed\" must be an unsigned integer"};
                  sc.seed = body["seed"].get<std::uint64_t>();
                }
                sc.termination = cfg.termination;
                sc.estimator = cfg.estimator;

                auto entry = std::make_shared<Entry>(Session(*tree, std::move(q), sc));
                std::string id;
                {
                  std::lock_guard lock(mu);
                  do {
                    id = new_id();
                  } while (sessions.contains(id));
                  sessions.emplace(id, entry);
                }
                auto lock = claim(*entry);
                send(res, 201, progress_json(id, entry->session));
              }));

  server.Post(R"(/sessions/([0-9a-f]+)/feedback)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                auto entry = lookup(id);
                const json body = parse_body(req);
                if (!body.contains("chosen_id") || !body["chosen_id"].is_number_unsigned())
                  throw HttpError{422, "field \"chosen_id\" must be an object id"};
                auto lock = claim(*entry);
                if (entry->session.phase() != Phase::Interaction) throw HttpError{409, "session " + id + " is terminated"};
                entry->session.submit_feedback(body["chosen_id"].get<ObjectId>());
                send(res, 200, progress_json(id, entry->session));
              }));

  server.Post(R"(/sessions/([0-9a-f]+)/stop)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                auto entry = lookup(id);
                auto lock = claim(*entry);
                if (entry->session.phase() == Phase::Interaction) entry->session.stop();
                send(res, 200, progress_json(id, entry->session));
              }));

  server.Get(R"(/sessions/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               auto entry = lookup(id);
               auto lock = claim(*entry);
               send(res, 200, state_json(id, entry->session));
             }));

  server.Get(R"(/objects/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               ObjectId oid = 0;
               try {
                 oid = std::stoull(req.matches[1]);
               } catch (const std::exception&) {
                 throw HttpError{404, "unknown object"};
               }
               const auto* o = tree->find(oid);
               if (o == nullptr) throw HttpError{404, "unknown object " + std::to_string(oid)};
               json j = object_brief(*o);
               j["words"] = o->words;
               if (o->tags) j["tags"] = *o->tags;
               send(res, 200, j);
             }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send(res, res.status, json{{"error", "not found"}});
  });
}

Service::Service(std::shared_ptr<const GirTree> tree, ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
  if (!tree) throw Error("service needs a loaded index");
  impl_->tree = std::move(tree);
  impl_->cfg = cfg;
  impl_->routes();
}

Service::~Service() { stop(); }

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

std::size_t Service::session_count() const {
  std::lock_guard lock(impl_->mu);
  return impl_->sessions.size();
}

std::size_t Service::expire_idle() { return impl_->expire(); }

}  // namespace geoprefer
