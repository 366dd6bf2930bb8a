// geoprefer: index, query, serve, evaluate and generate datasets.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoprefer/evaluation.hpp"
#include "geoprefer/girtree.hpp"
#include "geoprefer/ingest.hpp"
#include "geoprefer/service.hpp"
#include "geoprefer/session.hpp"

namespace {

using namespace geoprefer;
using nlohmann::json;

WordSet parse_words(const std::string& csv) {
  WordSet out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v > 0xffffffffULL) throw ValidationError("--words: bad word id \"" + item + "\"");
    out.push_back(static_cast<WordId>(v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw ValidationError("--words: at least one word id is required");
  return out;
}

// "uniform", "random:<seed>" or a path to a JSON array [p0, p1, ..., pt].
PreferenceVector parse_preference(const std::string& spec, std::size_t t) {
  if (spec == "uniform") return PreferenceVector::uniform(t);
  if (spec.rfind("random:", 0) == 0) return random_preference(t, std::stoull(spec.substr(7)));
  std::ifstream in(spec);
  if (!in) throw ValidationError("--simulate-p: cannot open " + spec);
  const auto j = json::parse(in);
  if (!j.is_array() || j.size() != t + 1)
    throw ValidationError("--simulate-p: expected a JSON array of " + std::to_string(t + 1) + " weights");
  Eigen::VectorXd w(static_cast<Eigen::Index>(t + 1));
  for (std::size_t i = 0; i <= t; ++i) {
    w[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    if (w[static_cast<Eigen::Index>(i)] < 0) throw ValidationError("--simulate-p: weights must be >= 0");
  }
  return PreferenceVector(std::move(w));
}

json shown_json(const Session& s) {
  json arr = json::array();
  for (auto id : s.shown()) {
    const auto& sp = s.scores(id);
    arr.push_back({{"id", id}, {"proximity", sp.proximity}, {"similarity", sp.similarity}});
  }
  return arr;
}

void emit_done(const Session& s, std::ostream& out) {
  json reasons = json::array();
  for (auto r : s.termination().reasons) reasons.push_back(to_string(r));
  json results = json::array();
  std::size_t rank = 1;
  for (const auto& r : s.results()) results.push_back({{"rank", rank++}, {"id", r.id}, {"score", r.score}});
  const auto& p = s.estimate()->p.weights;
  out << json{{"event", "done"},
              {"rounds_used", s.rounds_used()},
              {"termination", reasons},
              {"p_hat", std::vector<double>(p.data(), p.data() + p.size())},
              {"results", results}}
             .dump()
      << '\n';
}

struct QueryArgs {
  std::string index;
  double lat = 0;
  double lon = 0;
  std::string words;
  std::size_t k = 20;
  std::size_t theta = 8;
  double lambda = 0.5;
  std::string strategy = "densest";
  std::string simulate_p;
  std::uint64_t seed = 0;
  std::size_t max_rounds = 10;
};

int run_query(const QueryArgs& a) {
  const auto tree = GirTree::load_file(a.index);
  Query q;
  q.location = {a.lon, a.lat};
  q.words = parse_words(a.words);
  q.k = a.k;
  q.theta = a.theta;
  q.lambda = a.lambda;
  SessionConfig cfg;
  cfg.strategy = parse_strategy(a.strategy);
  cfg.seed = a.seed;
  cfg.termination.max_rounds = a.max_rounds;

  std::optional<SimulatedUser> user;
  if (!a.simulate_p.empty()) user = SimulatedUser{parse_preference(a.simulate_p, q.words.size())};

  Session s(tree, q, cfg);
  std::cout << json{{"event", "start"},
                    {"k", q.k},
                    {"theta", q.theta},
                    {"t", q.words.size()},
                    {"lambda", q.lambda},
                    {"strategy", to_string(cfg.strategy)},
                    {"candidates", s.candidates().size()}}
                   .dump()
            << '\n';

  while (s.phase() == Phase::Interaction) {
    std::cout << json{{"event", "round"}, {"round", s.round_no()}, {"shown", shown_json(s)}}.dump() << '\n';
    ObjectId chosen = 0;
    if (user) {
      chosen = user->pick(q, tree, s.shown());
    } else {
      std::cout.flush();
      std::string line;
      if (!std::getline(std::cin, line) || line == "stop") {
        s.stop();
        break;
      }
      try {
        chosen = std::stoull(line);
      } catch (const std::exception&) {
        std::cerr << "expected an object id or \"stop\"\n";
        continue;
      }
    }
    const std::size_t round = s.round_no();
    try {
      s.submit_feedback(chosen);
    } catch (const InvalidChoice& e) {
      if (user) throw;
      std::cerr << e.what() << '\n';
      continue;
    }
    const auto& r = s.rounds()[round - 1];
    std::cout << json{{"event", "feedback"},
                      {"round", round},
                      {"chosen", chosen},
                      {"constraints", r.constraints_added},
                      {"candidates_left", r.vertices_after},
                      {"edges_left", r.edges_after}}
                     .dump()
              << '\n';
  }
  emit_done(s, std::cout);
  return 0;
}

geoprefer::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive top-k geo-tagged image search"};
  app.require_subcommand(1);

  // index build
  auto* index_cmd = app.add_subcommand("index", "Index management");
  index_cmd->require_subcommand(1);
  auto* build_cmd = index_cmd->add_subcommand("build", "Build a GIR-Tree index from a JSONL dataset");
  std::string data_path;
  std::string out_path;
  TreeConfig tree_cfg;
  build_cmd->add_option("--data", data_path, "Dataset (JSONL)")->required()->envname("GEOPREFER_DATA");
  build_cmd->add_option("--out", out_path, "Index file to write")->required();
  build_cmd->add_option("--fanout", tree_cfg.fanout, "Node fanout")->capture_default_str();
  build_cmd->add_option("--sig-bits", tree_cfg.sig.length_bits, "Signature length in bits")->capture_default_str();
  build_cmd->add_option("--bits-per-word", tree_cfg.sig.bits_per_word, "Bits set per visual word")
      ->capture_default_str();
  build_cmd->add_option("--seed", tree_cfg.sig.seed, "Signature hash seed")->capture_default_str();

  // query
  QueryArgs qa;
  auto* query_cmd = app.add_subcommand("query", "Run one interactive query (JSON lines on stdout)");
  query_cmd->add_option("--index", qa.index, "Index file")->required()->envname("GEOPREFER_INDEX");
  query_cmd->add_option("--lat", qa.lat, "Query latitude")->required();
  query_cmd->add_option("--lon", qa.lon, "Query longitude")->required();
  query_cmd->add_option("--words", qa.words, "Comma-separated visual word ids")->required();
  query_cmd->add_option("--k", qa.k, "Number of results")->capture_default_str();
  query_cmd->add_option("--theta", qa.theta, "Candidates shown per round")->capture_default_str();
  query_cmd->add_option("--lambda", qa.lambda, "Proximity/similarity balance")->capture_default_str();
  query_cmd->add_option("--strategy", qa.strategy, "densest|random")->capture_default_str();
  query_cmd->add_option("--simulate-p", qa.simulate_p, "Simulated user: uniform | random:<seed> | <file.json>");
  query_cmd->add_option("--seed", qa.seed, "Selection seed")->capture_default_str();
  query_cmd->add_option("--max-rounds", qa.max_rounds, "Round limit")->capture_default_str();

  // serve
  std::string serve_index;
  std::string listen_addr = "127.0.0.1:8080";
  ServiceConfig svc_cfg;
  long ttl_seconds = 1800;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP session API");
  serve_cmd->add_option("--index", serve_index, "Index file")->required()->envname("GEOPREFER_INDEX");
  serve_cmd->add_option("--listen", listen_addr, "host:port")->capture_default_str()->envname("GEOPREFER_LISTEN");
  serve_cmd->add_option("--session-ttl", ttl_seconds, "Idle session lifetime in seconds")->capture_default_str();
  serve_cmd->add_option("--seed", svc_cfg.seed, "Base seed for session selection")->capture_default_str();

  // eval
  std::string eval_index;
  EvalSpec ev;
  std::string eval_strategy = "densest";
  std::string timing = "wall";
  auto* eval_cmd = app.add_subcommand("eval", "Simulated-user evaluation (CSV on stdout)");
  eval_cmd->add_option("--index", eval_index, "Index file")->required()->envname("GEOPREFER_INDEX");
  eval_cmd->add_option("--sessions", ev.sessions, "Number of simulated sessions")->capture_default_str();
  eval_cmd->add_option("--k", ev.k, "Number of results")->capture_default_str();
  eval_cmd->add_option("--theta", ev.theta, "Candidates shown per round")->capture_default_str();
  eval_cmd->add_option("--t", ev.t, "Query words per session")->capture_default_str();
  eval_cmd->add_option("--strategy", eval_strategy, "densest|random")->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed, "Workload seed")->capture_default_str();
  eval_cmd->add_option("--max-rounds", ev.termination.max_rounds, "Round limit")->capture_default_str();
  eval_cmd->add_option("--timing", timing, "wall: report mean ms per round; off: report NA")
      ->check(CLI::IsMember({"wall", "off"}))
      ->capture_default_str();

  // gen
  SyntheticSpec gen;
  std::string gen_out;
  std::vector<double> bbox;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic JSONL dataset");
  gen_cmd->add_option("--n", gen.n, "Number of objects")->required();
  gen_cmd->add_option("--vocab", gen.vocab_size, "Vocabulary size")->capture_default_str();
  gen_cmd->add_option("--mean-words", gen.words_per_object_mean, "Mean words per object")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--bbox", bbox, "min_lon min_lat max_lon max_lat")->expected(4)->delimiter(',');
  gen_cmd->add_option("--out", gen_out, "Output JSONL path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*build_cmd) {
      auto objects = load_jsonl(data_path);
      const auto tree = GirTree::build(std::move(objects), tree_cfg);
      tree.save_file(out_path);
      std::cerr << "indexed " << tree.size() << " objects, height " << tree.height() << ", " << tree.nodes().size()
                << " nodes\n";
    } else if (*query_cmd) {
      return run_query(qa);
    } else if (*serve_cmd) {
      const auto colon = listen_addr.rfind(':');
      if (colon == std::string::npos) throw ValidationError("--listen must be host:port");
      const std::string host = listen_addr.substr(0, colon);
      const int port = std::stoi(listen_addr.substr(colon + 1));
      svc_cfg.idle_ttl = std::chrono::seconds(ttl_seconds);
      auto tree = std::make_shared<const GirTree>(GirTree::load_file(serve_index));
      Service svc(tree, svc_cfg);
      g_service = &svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << tree->size() << " objects on " << host << ':' << port << '\n';
      if (!svc.listen(host, port)) throw Error("cannot listen on " + listen_addr);
      g_service = nullptr;
    } else if (*eval_cmd) {
      ev.strategy = parse_strategy(eval_strategy);
      const auto tree = GirTree::load_file(eval_index);
      const auto summary = run_eval(tree, ev);
      std::cout << kEvalCsvHeader << '\n' << eval_csv_row(summary, timing == "wall") << '\n';
    } else if (*gen_cmd) {
      if (!bbox.empty()) gen.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
      save_jsonl(gen_out, generate_synthetic(gen));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
