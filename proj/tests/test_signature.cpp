#include <doctest.h>

#include <random>

#include "geoprefer/scoring.hpp"
#include "geoprefer/signature.hpp"

using namespace geoprefer;

TEST_CASE("sign_word is deterministic and sparse") {
  SignatureConfig cfg;
  for (WordId w = 0; w < 1000; ++w) {
    const auto s = sign_word(w, cfg);
    CHECK(s == sign_word(w, cfg));
    CHECK(s.length() == cfg.length_bits);
    CHECK(s.count() >= 1);
    CHECK(s.count() <= cfg.bits_per_word);
  }
}

TEST_CASE("seeds change signatures") {
  SignatureConfig a, b;
  b.seed = 42;
  std::size_t differ = 0;
  for (WordId w = 0; w < 1000; ++w) differ += sign_word(w, a) != sign_word(w, b);
  CHECK(differ > 0);
}

TEST_CASE("config validation") {
  SignatureConfig cfg;
  cfg.bits_per_word = 0;
  CHECK_THROWS(cfg.validate());
  cfg.bits_per_word = 512;
  CHECK_THROWS(cfg.validate());
  cfg.bits_per_word = 3;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("superimpose") {
  SignatureConfig cfg;
  const std::vector<Signature> one{sign_word(5, cfg)};
  CHECK(superimpose(one, cfg.length_bits) == one[0]);
  CHECK(superimpose(std::span<const Signature>{}, cfg.length_bits).count() == 0);

  std::vector<Signature> sigs;
  for (WordId w : {3u, 17u, 99u, 1024u}) sigs.push_back(sign_word(w, cfg));
  const auto all = superimpose(sigs, cfg.length_bits);
  for (const auto& s : sigs) CHECK(all.covers(s));

  std::vector<Signature> rev(sigs.rbegin(), sigs.rend());
  CHECK(superimpose(rev, cfg.length_bits) == all);
  auto left = sigs[0];
  left |= sigs[1];
  auto right = sigs[2];
  right |= sigs[3];
  left |= right;
  CHECK(left == all);

  Signature small(64);
  CHECK_THROWS(small |= sigs[0]);
  const std::vector<Signature> mixed{small, sigs[0]};
  CHECK_THROWS(superimpose(mixed, cfg.length_bits));
}

TEST_CASE("similarity upper bound extremes") {
  SignatureConfig cfg;
  Signature ones(cfg.length_bits), zeros(cfg.length_bits);
  for (std::size_t i = 0; i < cfg.length_bits; ++i) ones.set(i);
  const WordSet q{1, 2, 3, 40};
  CHECK(similarity_upper_bound(q, ones, cfg) == 1.0);
  CHECK(similarity_upper_bound(q, zeros, cfg) == 0.0);
}

TEST_CASE("bound never falls below the true similarity") {
  SignatureConfig cfg;
  cfg.length_bits = 128;  // small, so false positives are common
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<WordId> word(0, 299);
  auto draw = [&](std::size_t n) {
    WordSet s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(word(rng));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    const auto q = draw(20);
    std::vector<WordSet> objs;
    std::vector<Signature> sigs;
    for (int i = 0; i < 8; ++i) {
      objs.push_back(draw(30));
      sigs.push_back(sign_words(objs.back(), cfg));
    }
    const auto node = superimpose(sigs, cfg.length_bits);
    const double bound = similarity_upper_bound(q, node, cfg);
    const SignatureProbe probe(q, cfg);
    CHECK(probe.similarity_upper_bound(node) == bound);
    for (const auto& o : objs) {
      CHECK(bound >= set_similarity(q, o));
      CHECK(similarity_upper_bound(q, sign_words(o, cfg), cfg) >= set_similarity(q, o));
    }
  }
}
