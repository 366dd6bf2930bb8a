#ifndef GEOPREFER_ESTIMATION_HPP
#define GEOPREFER_ESTIMATION_HPP

#include <span>
#include <vector>

#include "geoprefer/model.hpp"

namespace geoprefer {

struct EstimatorConfig {
  double margin = 1.0;
  double soft_penalty = 10.0;
  std::size_t max_iters = 5000;
  double tol = 1e-8;

  void validate() const;
};

struct EstimateResult {
  PreferenceVector p;
  double objective = 0.0;      // ||p||^2 + soft_penalty * sum of hinge losses
  double dual_objective = 0.0;
  double max_violation = 0.0;  // largest margin - delta . p over the constraints, >= 0
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimum-norm nonnegative p with delta_c . p >= margin for every
/// constraint, relaxed by a hinge penalty when the system is infeasible.
///
/// Separable systems are solved exactly as a least-distance program (NNLS
/// active set). Otherwise accelerated projected ascent runs on the
/// box-constrained dual of the soft-margin problem
///   max_{0 <= a <= C}  margin * sum(a) - ||p(a)||^2,   p(a) = max(0, D^T a) / 2,
/// whose maximizer gives the exact soft-margin primal solution p(a).
/// No constraints yields the uniform vector.
EstimateResult estimate_preference(std::span<const Constraint> constraints, std::size_t dim,
                                   const EstimatorConfig& cfg = {});

/// ||p||^2 + C * sum(max(0, margin - delta . p)).
double soft_margin_objective(std::span<const Constraint> constraints, const Eigen::VectorXd& p,
                             const EstimatorConfig& cfg);

struct RankedResult {
  ObjectId id = 0;
  double score = 0.0;
};

/// Candidates ranked by f_prefer descending (ties by ascending id), first
/// min(k, |candidates|) kept.
std::vector<RankedResult> final_topk(std::span<const GeoObject* const> candidates, const Query& q,
                                     const PreferenceVector& p, std::size_t k, const SpatialFrame& frame);

}  // namespace geoprefer

#endif  // GEOPREFER_ESTIMATION_HPP
