#include "geoprefer/scoring.hpp"

#include <algorithm>

namespace geoprefer {

double geo_proximity(const SpatialFrame& frame, const Location& q, const Location& o) {
  if (frame.d_max <= 0.0) return 1.0;
  return std::clamp(1.0 - frame.distance(q, o) / frame.d_max, 0.0, 1.0);
}

std::size_t intersection_size(std::span<const WordId> a, std::span<const WordId> b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

double set_similarity(std::span<const WordId> a, std::span<const WordId> b) {
  const std::size_t common = intersection_size(a, b);
  const std::size_t uni = a.size() + b.size() - common;
  if (uni == 0) return 0.0;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double weighted_similarity(std::span<const WordId> q_words, std::span<const WordId> o_words,
                           const Eigen::Ref<const Eigen::VectorXd>& word_weights) {
  double num = 0.0;
  std::size_t common = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < q_words.size(); ++i) {
    while (j < o_words.size() && o_words[j] < q_words[i]) ++j;
    if (j < o_words.size() && o_words[j] == q_words[i]) {
      num += word_weights[static_cast<Eigen::Index>(i)];
      ++common;
    }
  }
  const std::size_t uni = q_words.size() + o_words.size() - common;
  if (uni == 0) return 0.0;
  return num / static_cast<double>(uni);
}

double f_score(const Query& q, const GeoObject& o, const SpatialFrame& frame) {
  return q.lambda * geo_proximity(frame, q.location, o.location) +
         (1.0 - q.lambda) * set_similarity(q.words, o.words);
}

double f_prefer(const Query& q, const GeoObject& o, const PreferenceVector& p, const SpatialFrame& frame) {
  return p.geo() * geo_proximity(frame, q.location, o.location) + weighted_similarity(q.words, o.words, p.words());
}

Eigen::VectorXd feature_map(const Query& q, const GeoObject& o, const SpatialFrame& frame) {
  const auto t = static_cast<Eigen::Index>(q.words.size());
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(t + 1);
  phi[0] = geo_proximity(frame, q.location, o.location);

  std::size_t common = 0;
  std::size_t j = 0;
  for (Eigen::Index i = 0; i < t; ++i) {
    const WordId w = q.words[static_cast<std::size_t>(i)];
    while (j < o.words.size() && o.words[j] < w) ++j;
    if (j < o.words.size() && o.words[j] == w) {
      phi[i + 1] = 1.0;
      ++common;
    }
  }
  const std::size_t uni = q.words.size() + o.words.size() - common;
  if (uni > 0) phi.tail(t) /= static_cast<double>(uni);
  return phi;
}

ScorePair score_pair(const Query& q, const GeoObject& o, const SpatialFrame& frame) {
  return {geo_proximity(frame, q.location, o.location), set_similarity(q.words, o.words)};
}

DominanceOutcome dominance(const ScorePair& a, const ScorePair& b) {
  if (a == b) return DominanceOutcome::Equal;
  if (dominates(a, b)) return DominanceOutcome::FirstDominates;
  if (dominates(b, a)) return DominanceOutcome::SecondDominates;
  return DominanceOutcome::Incomparable;
}

}  // namespace geoprefer
