#include <doctest.h>

#include "geoprefer/oracle.hpp"
#include "geoprefer/scoring.hpp"
#include "geoprefer/session.hpp"
#include "test_support.hpp"

using namespace geoprefer;
using testing::random_dataset;
using testing::random_query;

namespace {

const GirTree& fixture_tree() {
  static const GirTree tree = GirTree::build(random_dataset(400, 80, 12, 31));
  return tree;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_strategy("random") == Strategy::Random);
  CHECK(parse_strategy("densest") == Strategy::DensestGraph);
  CHECK(to_string(Strategy::DensestGraph) == "densest");
  CHECK_THROWS_AS(parse_strategy("greedy"), ValidationError);
}

TEST_CASE("k at least N terminates immediately with a full ranking") {
  const auto t = GirTree::build(random_dataset(12, 30, 5, 2));
  auto q = random_query(t, 4, 12, 1, 30);
  Session s(t, q);
  CHECK(s.phase() == Phase::Terminated);
  CHECK(s.rounds_used() == 0);
  CHECK(s.results().size() == 12);
  CHECK(s.shown().empty());
  CHECK(s.termination().reasons.front() == TerminationReason::CandidatesExhausted);
  CHECK_THROWS_AS(s.submit_feedback(s.results()[0].id), SessionStateError);
}

TEST_CASE("first round") {
  const auto& t = fixture_tree();
  for (int i = 0; i < 10; ++i) {
    const auto q = random_query(t, 10, 5, i, 80);
    Session s(t, q);
    CHECK(testing::ids_of(s.candidates()) == oracle::brute_k_superiors(t.objects(), q, t.frame()));
    if (s.phase() == Phase::Interaction) {
      CHECK(s.round_no() == 1);
      CHECK(s.shown().size() <= 8);
      CHECK(s.shown().size() >= 2);
    }
  }
}

TEST_CASE("feedback validation") {
  const auto& t = fixture_tree();
  const auto q = random_query(t, 10, 3, 4, 80);
  Session s(t, q);
  REQUIRE(s.phase() == Phase::Interaction);
  ObjectId outside = 0;
  for (const auto& o : t.objects()) {
    if (std::find(s.shown().begin(), s.shown().end(), o.id) == s.shown().end()) {
      outside = o.id;
      break;
    }
  }
  CHECK_THROWS_AS(s.submit_feedback(outside), InvalidChoice);
  CHECK(s.round_no() == 1);
  s.stop();
  CHECK(s.phase() == Phase::Terminated);
  CHECK(!s.results().empty());
  CHECK(s.results().size() <= q.k);
  CHECK(s.rounds_used() == 0);
  CHECK_THROWS_AS(s.submit_feedback(outside), SessionStateError);
}

TEST_CASE("a dominant pick adds no constraints") {
  const auto& t = fixture_tree();
  for (int i = 0; i < 30; ++i) {
    const auto q = random_query(t, 10, 5, 50 + i, 80);
    Session s(t, q);
    if (s.phase() != Phase::Interaction) continue;
    const auto& g = s.graph();
    for (auto id : s.shown()) {
      const auto v = *g.vertex_of(id);
      bool all = true;
      for (auto other : s.shown()) all = all && (other == id || g.known_superior(v, *g.vertex_of(other)));
      if (!all) continue;
      s.submit_feedback(id);
      CHECK(s.rounds()[0].constraints_added == 0);
      CHECK(s.constraints().empty());
      return;
    }
  }
}

TEST_CASE("rounds shrink the graph and results follow the estimate") {
  const auto& t = fixture_tree();
  for (int i = 0; i < 10; ++i) {
    const auto q = random_query(t, 10, 5, 100 + i, 80);
    const auto p = random_preference(q.words.size(), static_cast<std::uint64_t>(i));
    SessionConfig cfg;
    cfg.audit = true;
    cfg.strategy = i % 2 ? Strategy::Random : Strategy::DensestGraph;
    std::size_t v = SIZE_MAX, e = SIZE_MAX;
    Phase last = Phase::CandidateSearch;
    const auto rep = simulate(t, q, p, cfg, [&](const Session& s) {
      CHECK(s.graph().vertex_count() <= v);
      CHECK(s.graph().edge_count() <= e);
      CHECK(static_cast<int>(s.phase()) >= static_cast<int>(last));
      v = s.graph().vertex_count();
      e = s.graph().edge_count();
      last = s.phase();
      if (s.phase() == Phase::Terminated) {
        CHECK(!s.results().empty());
        CHECK((s.estimate()->p.weights.array() >= 0).all());
      }
    });
    CHECK(last == Phase::Terminated);
    CHECK(rep.rounds_used <= 10);
    CHECK(rep.precision >= 0.0);
    CHECK(rep.precision <= 1.0);
    CHECK(rep.truth.size() == 5);
  }
}

TEST_CASE("uniform preference with an immediately ordered graph is exact") {
  // k >= |candidates| -> no rounds, the uniform estimate ranks like f_prefer
  // under the uniform p*, so precision is perfect.
  const auto t = GirTree::build(random_dataset(15, 20, 4, 5));
  auto q = random_query(t, 5, 15, 3, 20);
  const auto rep = simulate(t, q, PreferenceVector::uniform(q.words.size()), {});
  CHECK(rep.rounds_used == 0);
  CHECK(rep.precision == 1.0);
}

TEST_CASE("simulation is deterministic") {
  const auto& t = fixture_tree();
  const auto q = random_query(t, 12, 5, 7, 80);
  const auto p = random_preference(q.words.size(), 99);
  SessionConfig cfg;
  cfg.seed = 17;
  const auto a = simulate(t, q, p, cfg);
  const auto b = simulate(t, q, p, cfg);
  CHECK(a.rounds_used == b.rounds_used);
  CHECK(a.precision == b.precision);
  REQUIRE(a.results.size() == b.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    CHECK(a.results[i].id == b.results[i].id);
    CHECK(a.results[i].score == b.results[i].score);
  }
}

TEST_CASE("retrieval metrics") {
  SessionReport r;
  const std::vector<RankedResult> got{{1, 0}, {2, 0}, {3, 0}, {4, 0}};
  const std::vector<ObjectId> truth{2, 4, 6};
  score_retrieval(got, truth, r);
  CHECK(r.precision == doctest::Approx(0.5));
  CHECK(r.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.f1 == doctest::Approx(2 * 0.5 * (2.0 / 3.0) / (0.5 + 2.0 / 3.0)));
  score_retrieval({}, truth, r);
  CHECK(r.f1 == 0.0);
}
