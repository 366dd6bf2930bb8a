#include "geoprefer/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "geoprefer/ingest.hpp"

namespace geoprefer {

EvalWorkItem make_work_item(const GirTree& tree, const EvalSpec& spec, std::size_t i) {
  WordId max_word = 0;
  for (const auto& o : tree.objects()) {
    if (!o.words.empty()) max_word = std::max(max_word, o.words.back());
  }
  const std::uint32_t vocab = max_word + 1;
  if (spec.t > vocab) throw ValidationError("t exceeds the vocabulary of the index");

  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
  std::mt19937_64 rng(seq);

  EvalWorkItem w;
  const auto& box = tree.root().mbr;
  auto uniform = [&rng](double lo, double hi) {
    return lo < hi ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo;
  };
  w.query.location.lon = uniform(box.min_lon, box.max_lon);
  w.query.location.lat = uniform(box.min_lat, box.max_lat);

  const ZipfSampler zipf(vocab, 1.0);
  std::set<WordId> words;
  while (words.size() < spec.t) words.insert(zipf(rng));
  w.query.words.assign(words.begin(), words.end());
  w.query.k = spec.k;
  w.query.theta = spec.theta;
  w.query.lambda = spec.lambda;

  w.p_star = random_preference(spec.t, rng());
  w.session_seed = rng();
  return w;
}

EvalSummary run_eval(const GirTree& tree, const EvalSpec& spec) {
  if (spec.sessions == 0) throw ValidationError("sessions must be >= 1");
  EvalSummary s;
  s.spec = spec;
  for (std::size_t i = 0; i < spec.sessions; ++i) {
    const auto w = make_work_item(tree, spec, i);
    SessionConfig cfg;
    cfg.strategy = spec.strategy;
    cfg.seed = w.session_seed;
    cfg.termination = spec.termination;
    cfg.estimator = spec.estimator;
    s.reports.push_back(simulate(tree, w.query, w.p_star, cfg));
  }
  const double n = static_cast<double>(s.reports.size());
  for (const auto& r : s.reports) {
    s.precision += r.precision / n;
    s.recall += r.recall / n;
    s.f1 += r.f1 / n;
    s.mean_ms_per_round += r.mean_ms_per_round / n;
    s.mean_rounds += static_cast<double>(r.rounds_used) / n;
  }
  return s;
}

std::string eval_csv_row(const EvalSummary& s, bool with_timing) {
  char timing[32] = "NA";
  if (with_timing) std::snprintf(timing, sizeof timing, "%.3f", s.mean_ms_per_round);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%.4f,%.4f,%.4f,%s,%.2f", to_string(s.spec.strategy).c_str(),
                s.spec.k, s.spec.theta, s.spec.t, s.precision, s.recall, s.f1, timing, s.mean_rounds);
  return buf;
}

}  // namespace geoprefer
