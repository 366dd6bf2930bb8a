#include "geoprefer/session.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <unordered_set>

#include "geoprefer/oracle.hpp"
#include "geoprefer/scoring.hpp"

namespace geoprefer {

namespace {

std::uint64_t round_seed(std::uint64_t seed, std::size_t round) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (round + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

std::string to_string(Strategy s) { return s == Strategy::Random ? "random" : "densest"; }

std::string to_string(Phase p) {
  switch (p) {
    case Phase::CandidateSearch:
      return "candidate_search";
    case Phase::Interaction:
      return "interaction";
    case Phase::Terminated:
      return "terminated";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "random") return Strategy::Random;
  if (s == "densest" || s == "densest-graph" || s == "densestgraph") return Strategy::DensestGraph;
  throw ValidationError("strategy must be \"random\" or \"densest\"");
}

Session::Session(const GirTree& tree, Query q, SessionConfig cfg)
    : tree_(&tree), query_(std::move(q)), cfg_(cfg) {
  validate_query(query_);
  cfg_.estimator.validate();

  candidates_ = gi_super_search(tree, query_);
  if (candidates_.empty()) throw Error("candidate search returned no objects");
  graph_ = NoSuperiorGraph::build(candidates_);
  features_.reserve(candidates_.size());
  for (const auto& c : candidates_) features_.push_back(feature_map(query_, tree.object(c.id), tree.frame()));
  if (cfg_.audit) graph_.check_invariants();

  phase_ = Phase::Interaction;
  if (!check_termination(false)) select_next();
}

const std::vector<ObjectId>& Session::shown() const {
  static const std::vector<ObjectId> kNone;
  if (phase_ != Phase::Interaction || rounds_.empty()) return kNone;
  return rounds_.back().shown;
}

std::size_t Session::rounds_used() const {
  return static_cast<std::size_t>(
      std::count_if(rounds_.begin(), rounds_.end(), [](const RoundState& r) { return r.chosen.has_value(); }));
}

const ScorePair& Session::scores(ObjectId id) const {
  const auto v = graph_.vertex_of(id);
  if (!v) throw Error("object " + std::to_string(id) + " is not a candidate");
  return graph_.scores(*v);
}

void Session::select_next() {
  RoundState r;
  r.round_no = rounds_.size() + 1;
  const auto seed = round_seed(cfg_.seed, rounds_.size());
  const auto picked = cfg_.strategy == Strategy::Random ? select_random(graph_, query_.theta, seed)
                                                        : select_densest(graph_, query_.theta, seed);
  for (auto v : picked) r.shown.push_back(graph_.id(v));
  r.vertices_after = graph_.vertex_count();
  r.edges_after = graph_.edge_count();
  rounds_.push_back(std::move(r));
}

bool Session::check_termination(bool user_stop) {
  termination_ = should_terminate(graph_, query_.k, rounds_used(), cfg_.termination, user_stop);
  if (termination_.terminate) finish();
  return termination_.terminate;
}

void Session::finish() {
  // A round that was shown but never answered is discarded.
  if (!rounds_.empty() && !rounds_.back().chosen) rounds_.pop_back();
  estimate_ = estimate_preference(constraints_, query_.words.size() + 1, cfg_.estimator);
  std::vector<const GeoObject*> live;
  for (auto v : graph_.vertices()) live.push_back(&tree_->object(graph_.id(v)));
  results_ = final_topk(live, query_, estimate_->p, query_.k, tree_->frame());
  phase_ = Phase::Terminated;
}

void Session::submit_feedback(ObjectId chosen) {
  if (phase_ != Phase::Interaction) throw SessionStateError("session is not accepting feedback");
  const std::size_t idx = rounds_.size() - 1;
  {
    const auto& shown = rounds_[idx].shown;
    if (std::find(shown.begin(), shown.end(), chosen) == shown.end())
      throw InvalidChoice("chosen_id " + std::to_string(chosen) + " was not shown in round " +
                          std::to_string(rounds_[idx].round_no));
  }

  const auto t0 = Clock::now();
  std::vector<Vertex> shown;
  for (auto id : rounds_[idx].shown) shown.push_back(*graph_.vertex_of(id));
  const Vertex pick = *graph_.vertex_of(chosen);

  auto fresh = generate_constraints(graph_, shown, pick, rounds_[idx].round_no, features_);
  const auto report = filter_candidates(graph_, fresh, query_.k);
  if (cfg_.audit) graph_.check_invariants();

  auto& round = rounds_[idx];
  round.chosen = chosen;
  round.constraints_added = fresh.size();
  for (auto v : report.vertices_removed) round.removed.push_back(graph_.id(v));
  round.vertices_after = graph_.vertex_count();
  round.edges_after = graph_.edge_count();
  constraints_.insert(constraints_.end(), std::make_move_iterator(fresh.begin()),
                      std::make_move_iterator(fresh.end()));

  if (!check_termination(false)) select_next();
  rounds_[idx].elapsed_ms = ms_since(t0);
}

void Session::stop() {
  if (phase_ != Phase::Interaction) throw SessionStateError("session already terminated");
  check_termination(true);
}

ObjectId SimulatedUser::pick(const Query& q, const GirTree& tree, std::span<const ObjectId> shown) const {
  ObjectId best = 0;
  double best_score = 0.0;
  bool first = true;
  for (auto id : shown) {
    const double s = f_prefer(q, tree.object(id), p_star, tree.frame());
    if (first || s > best_score || (s == best_score && id < best)) {
      best = id;
      best_score = s;
      first = false;
    }
  }
  if (first) throw Error("nothing to pick from");
  return best;
}

PreferenceVector random_preference(std::size_t t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(t) + 1);
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = u(rng);
  return PreferenceVector(std::move(w));
}

void score_retrieval(std::span<const RankedResult> retrieved, std::span<const ObjectId> relevant, SessionReport& out) {
  const std::unordered_set<ObjectId> truth(relevant.begin(), relevant.end());
  std::size_t hit = 0;
  for (const auto& r : retrieved) hit += truth.contains(r.id) ? 1 : 0;
  out.precision = retrieved.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(retrieved.size());
  out.recall = relevant.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(relevant.size());
  const double sum = out.precision + out.recall;
  out.f1 = sum > 0 ? 2.0 * out.precision * out.recall / sum : 0.0;
}

SessionReport simulate(const GirTree& tree, const Query& q, const PreferenceVector& p_star, const SessionConfig& cfg,
                       const SessionObserver& observer) {
  if (p_star.word_count() != q.words.size()) throw ValidationError("preference vector length does not match query");
  const SimulatedUser user{p_star};
  Session s(tree, q, cfg);
  if (observer) observer(s);

  SessionReport rep;
  while (s.phase() == Phase::Interaction) {
    const auto shown = s.shown();
    const ObjectId choice = user.pick(q, tree, shown);
    const auto cv = *s.graph().vertex_of(choice);
    for (auto id : shown) {
      if (id != choice && s.graph().known_superior(*s.graph().vertex_of(id), cv)) {
        ++rep.dominated_picks;
        break;
      }
    }
    s.submit_feedback(choice);
    if (observer) observer(s);
  }

  rep.rounds_used = s.rounds_used();
  rep.candidates = s.candidates().size();
  for (const auto& r : s.rounds()) rep.round_ms.push_back(r.elapsed_ms);
  if (!rep.round_ms.empty()) {
    double sum = 0.0;
    for (auto ms : rep.round_ms) sum += ms;
    rep.mean_ms_per_round = sum / static_cast<double>(rep.round_ms.size());
  }
  rep.results = s.results();
  rep.truth = oracle::brute_topk_prefer(tree.objects(), q, p_star, q.k, tree.frame());
  score_retrieval(rep.results, rep.truth, rep);
  return rep;
}

}  // namespace geoprefer
