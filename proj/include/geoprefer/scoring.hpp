#ifndef GEOPREFER_SCORING_HPP
#define GEOPREFER_SCORING_HPP

#include <span>

#include <Eigen/Core>

#include "geoprefer/model.hpp"

namespace geoprefer {

/// 1 - dist/d_max clamped to [0, 1]; 1 when the frame is degenerate.
double geo_proximity(const SpatialFrame& frame, const Location& q, const Location& o);

/// |a ∩ b| / |a ∪ b|, with 0 for two empty sets.
double set_similarity(std::span<const WordId> a, std::span<const WordId> b);

std::size_t intersection_size(std::span<const WordId> a, std::span<const WordId> b);

/// Sum of the query-word weights over q ∩ o, divided by |q ∪ o|.
///
/// The denominator is the unit-weight union size, so the score is linear
/// in the weights and reduces to set_similarity when every weight is 1.
double weighted_similarity(std::span<const WordId> q_words, std::span<const WordId> o_words,
                           const Eigen::Ref<const Eigen::VectorXd>& word_weights);

/// lambda * proximity + (1 - lambda) * set similarity.
double f_score(const Query& q, const GeoObject& o, const SpatialFrame& frame);

/// p0 * proximity + weighted similarity; equals feature_map(q, o) . p.
double f_prefer(const Query& q, const GeoObject& o, const PreferenceVector& p, const SpatialFrame& frame);

/// (proximity, [w_i ∈ o] / |q ∪ o| for each query word w_i).
Eigen::VectorXd feature_map(const Query& q, const GeoObject& o, const SpatialFrame& frame);

ScorePair score_pair(const Query& q, const GeoObject& o, const SpatialFrame& frame);

enum class DominanceOutcome { FirstDominates, SecondDominates, Incomparable, Equal };

/// Closer-and-more-similar wins: >= on both dimensions, > on at least one.
DominanceOutcome dominance(const ScorePair& a, const ScorePair& b);

inline bool dominates(const ScorePair& a, const ScorePair& b) {
  return a.proximity >= b.proximity && a.similarity >= b.similarity &&
         (a.proximity > b.proximity || a.similarity > b.similarity);
}

}  // namespace geoprefer

#endif  // GEOPREFER_SCORING_HPP
