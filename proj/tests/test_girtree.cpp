#include <doctest.h>

#include <cmath>
#include <sstream>

#include "geoprefer/girtree.hpp"
#include "geoprefer/oracle.hpp"
#include "geoprefer/scoring.hpp"
#include "test_support.hpp"

using namespace geoprefer;
using testing::ids_of;
using testing::object_at;
using testing::random_dataset;
using testing::random_query;

namespace {

// Every object id reachable under node i.
void collect(const GirTree& t, std::size_t i, std::vector<std::size_t>& entries) {
  const auto& n = t.nodes()[i];
  for (std::uint32_t c = n.first; c < n.first + n.count; ++c) {
    if (n.is_leaf) {
      entries.push_back(c);
    } else {
      collect(t, c, entries);
    }
  }
}

std::size_t expected_height(std::size_t n, std::size_t b) {
  std::size_t h = 1;
  for (std::size_t cap = b; cap < n; cap *= b) ++h;
  return h;
}

}  // namespace

TEST_CASE("single object tree") {
  std::vector<GeoObject> objs{object_at(9, 1, 2, {3, 4})};
  const auto t = GirTree::build(objs);
  CHECK(t.height() == 1);
  CHECK(t.size() == 1);
  CHECK(t.root().sig == sign_words(objs[0].words, t.config().sig));
}

TEST_CASE("empty dataset is rejected") { CHECK_THROWS_AS(GirTree::build({}), Error); }

TEST_CASE("tree height and structure") {
  for (std::size_t n : {1u, 5u, 32u, 33u, 100u, 1024u, 1025u, 3000u}) {
    for (std::uint32_t b : {4u, 32u}) {
      TreeConfig cfg;
      cfg.fanout = b;
      const auto t = GirTree::build(random_dataset(n, 200, 10, n * 7 + b), cfg);
      CAPTURE(n);
      CAPTURE(b);
      CHECK(t.height() == expected_height(n, b));

      std::vector<std::size_t> all;
      collect(t, 0, all);
      std::sort(all.begin(), all.end());
      CHECK(all.size() == n);
      CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());

      for (const auto& node : t.nodes()) {
        CHECK(node.count >= 1);
        CHECK(node.count <= b);
        Signature sig(t.config().sig.length_bits);
        for (std::uint32_t c = node.first; c < node.first + node.count; ++c) {
          if (node.is_leaf) {
            const auto& e = t.entries()[c];
            CHECK(node.mbr.contains(e.location));
            CHECK(e.sig == sign_words(t.object(e.id).words, t.config().sig));
            sig |= e.sig;
          } else {
            CHECK(node.mbr.contains(t.nodes()[c].mbr));
            sig |= t.nodes()[c].sig;
          }
        }
        CHECK(node.sig.covers(sig));
      }
    }
  }
}

TEST_CASE("f_sort bounds every covered object") {
  for (int trial = 0; trial < 10; ++trial) {
    TreeConfig cfg;
    cfg.fanout = 8;
    cfg.sig.length_bits = 128;
    const auto t = GirTree::build(random_dataset(300, 100, 12, 100 + trial), cfg);
    const auto q = random_query(t, 10, 5, trial, 100);
    for (std::size_t i = 0; i < t.nodes().size(); ++i) {
      const double bound = f_sort(q, t.nodes()[i], t.frame(), cfg.sig);
      std::vector<std::size_t> under;
      collect(t, i, under);
      for (auto e : under) {
        const auto sp = score_pair(q, t.object(t.entries()[e].id), t.frame());
        CHECK(bound >= sp.proximity + sp.similarity - 1e-12);
      }
    }
  }
}

TEST_CASE("f_sort extremes") {
  const auto t = GirTree::build(random_dataset(50, 30, 5, 1));
  GirNode n = t.root();
  for (std::size_t i = 0; i < n.sig.length(); ++i) n.sig.set(i);
  Query q;
  q.words = {1, 2};
  q.location = n.mbr.center();
  CHECK(f_sort(q, n, t.frame(), t.config().sig) == doctest::Approx(2.0));

  // a far-away point node with an empty signature
  SpatialFrame frame;
  frame.d_max = 1.0;
  GirNode far;
  far.mbr = Rect::around({3, 4});
  far.sig = Signature(t.config().sig.length_bits);
  q.location = {0, 0};
  CHECK(f_sort(q, far, frame, t.config().sig) == 0.0);
}

TEST_CASE("search matches the brute-force oracle") {
  for (std::size_t n : {60u, 400u}) {
    for (std::size_t k : {1u, 5u, 20u}) {
      for (int trial = 0; trial < 4; ++trial) {
        const auto objs = random_dataset(n, 150, 15, n + k * 31 + trial);
        TreeConfig cfg;
        cfg.fanout = 8;
        const auto t = GirTree::build(objs, cfg);
        const auto q = random_query(t, 12, k, trial * 5 + k, 150);
        SearchStats stats;
        const auto got = ids_of(gi_super_search(t, q, &stats));
        CHECK(got == oracle::brute_k_superiors(t.objects(), q, t.frame()));
      }
    }
  }
}

TEST_CASE("k at least N returns everything") {
  const auto t = GirTree::build(random_dataset(40, 50, 6, 4));
  auto q = random_query(t, 5, 40, 2, 50);
  CHECK(gi_super_search(t, q).size() == 40);
}

TEST_CASE("mutually incomparable objects all survive") {
  // proximity falls as similarity rises along the line
  std::vector<GeoObject> objs;
  for (ObjectId i = 0; i < 10; ++i) {
    WordSet w;
    for (WordId x = 0; x <= i; ++x) w.push_back(x);
    objs.push_back(object_at(i + 1, 0.1 * static_cast<double>(i), 0, w));
  }
  const auto t = GirTree::build(objs);
  Query q;
  q.location = {0, 0};
  q.words = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  q.k = 1;
  CHECK(gi_super_search(t, q).size() == 10);
}

TEST_CASE("result set does not depend on insertion order") {
  auto objs = random_dataset(500, 100, 10, 77);
  const auto t1 = GirTree::build(objs);
  std::mt19937_64 rng(1);
  std::shuffle(objs.begin(), objs.end(), rng);
  const auto t2 = GirTree::build(objs);
  for (int i = 0; i < 10; ++i) {
    const auto q = random_query(t1, 8, 5, i, 100);
    CHECK(ids_of(gi_super_search(t1, q)) == ids_of(gi_super_search(t2, q)));
  }
}

TEST_CASE("search output holds the top-k under uniform word weights") {
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = GirTree::build(random_dataset(200, 60, 8, 500 + trial));
    const auto q = random_query(t, 6, 5, trial, 60);
    const auto s = ids_of(gi_super_search(t, q));
    std::mt19937_64 rng(trial);
    for (int j = 0; j < 20; ++j) {
      PreferenceVector p = PreferenceVector::uniform(q.words.size());
      p.weights[0] = std::uniform_real_distribution<double>(0, 3)(rng);
      for (auto id : oracle::brute_topk_prefer(t.objects(), q, p, q.k, t.frame()))
        CHECK(std::binary_search(s.begin(), s.end(), id));
    }
  }
}

TEST_CASE("save, load, save is bit exact") {
  auto objs = random_dataset(300, 80, 10, 8);
  objs[3].image_url = "http://example.org/a.jpg";
  objs[4].tags = std::vector<std::string>{"bridge", "night"};
  TreeConfig cfg;
  cfg.fanout = 7;
  cfg.sig.seed = 99;
  const auto t = GirTree::build(objs, cfg);
  std::ostringstream a;
  t.save(a);
  std::istringstream in(a.str());
  const auto t2 = GirTree::load(in);
  std::ostringstream b;
  t2.save(b);
  CHECK(a.str() == b.str());
  CHECK(t2.frame().d_max == t.frame().d_max);
  CHECK(t2.object(objs[3].id).image_url == objs[3].image_url);
  CHECK(t2.object(objs[4].id).tags == objs[4].tags);
  const auto q = random_query(t, 8, 5, 3, 80);
  CHECK(ids_of(gi_super_search(t, q)) == ids_of(gi_super_search(t2, q)));

  std::istringstream junk("not an index");
  CHECK_THROWS_AS(GirTree::load(junk), Error);
  std::istringstream truncated(a.str().substr(0, a.str().size() / 2));
  CHECK_THROWS_AS(GirTree::load(truncated), Error);
}
