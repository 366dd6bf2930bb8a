#include "geoprefer/estimation.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "geoprefer/scoring.hpp"

namespace geoprefer {

namespace {

struct Nnls {
  Eigen::VectorXd x;
  std::size_t iterations = 0;
};

// Lawson-Hanson active set for min ||E x - f|| subject to x >= 0.
Nnls nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f) {
  const Eigen::Index n = E.cols();
  Nnls out;
  out.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 10 * std::numeric_limits<double>::epsilon() * E.norm() * static_cast<double>(std::max(n, E.rows()));
  const std::size_t limit = 3 * static_cast<std::size_t>(n) + 10;

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Eigen::MatrixXd Ep(E.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) Ep.col(static_cast<Eigen::Index>(i)) = E.col(idx[i]);
    const Eigen::VectorXd zp = Ep.colPivHouseholderQr().solve(f);
    z = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < idx.size(); ++i) z(idx[i]) = zp(static_cast<Eigen::Index>(i));
  };

  while (out.iterations < limit) {
    const Eigen::VectorXd w = E.transpose() * (f - E * out.x);
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > tol && (best < 0 || w(j) > w(best))) best = j;
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    ++out.iterations;

    Eigen::VectorXd z;
    solve_passive(z);
    while (out.iterations < limit) {
      double alpha = 1.0;
      bool clipped = false;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!passive[static_cast<std::size_t>(j)] || z(j) > 0) continue;
        const double step = out.x(j) / (out.x(j) - z(j));
        if (!clipped || step < alpha) alpha = step;
        clipped = true;
      }
      if (!clipped) break;
      out.x += alpha * (z - out.x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && out.x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          out.x(j) = 0.0;
        }
      ++out.iterations;
      solve_passive(z);
    }
    out.x = z;
  }
  return out;
}

struct HardSolution {
  Eigen::VectorXd p;
  std::size_t iterations = 0;
};

// Minimum-norm p >= 0 with D p >= margin, as a least-distance program reduced
// to NNLS. Empty when the system has no solution.
std::optional<HardSolution> least_distance(const Eigen::MatrixXd& D, double margin) {
  const Eigen::Index m = D.rows(), d = D.cols();
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(d + 1, m + d);
  E.topLeftCorner(d, m) = D.transpose();
  E.topRightCorner(d, d).setIdentity();
  E.bottomLeftCorner(1, m).setConstant(margin);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(d + 1);
  f(d) = 1.0;
  const auto u = nnls(E, f);
  const Eigen::VectorXd residual = E * u.x - f;
  if (!(residual(d) < -1e-12)) return std::nullopt;
  return HardSolution{(-residual.head(d) / residual(d)).cwiseMax(0.0), u.iterations};
}

}  // namespace

void EstimatorConfig::validate() const {
  if (!(margin > 0 && soft_penalty > 0 && max_iters > 0 && tol > 0))
    throw ValidationError("estimator: all parameters must be positive");
}

double soft_margin_objective(std::span<const Constraint> constraints, const Eigen::VectorXd& p,
                             const EstimatorConfig& cfg) {
  double hinge = 0.0;
  for (const auto& c : constraints) hinge += std::max(0.0, cfg.margin - c.delta.dot(p));
  return p.squaredNorm() + cfg.soft_penalty * hinge;
}

EstimateResult estimate_preference(std::span<const Constraint> constraints, std::size_t dim,
                                   const EstimatorConfig& cfg) {
  if (dim < 1) throw ValidationError("estimator: dimension must be >= 1");
  cfg.validate();

  EstimateResult r;
  if (constraints.empty()) {
    r.p = PreferenceVector(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim)));
    r.converged = true;
    return r;
  }

  const auto m = static_cast<Eigen::Index>(constraints.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd D(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& delta = constraints[static_cast<std::size_t>(i)].delta;
    if (delta.size() != d) throw ValidationError("estimator: constraint dimension mismatch");
    D.row(i) = delta.transpose();
  }

  // grad = margin - D p(a) is Lipschitz with constant ||D||_2^2 / 2 <= ||D||_F^2 / 2.
  const double lipschitz = 0.5 * D.squaredNorm();
  const double eta = lipschitz > 0 ? 1.0 / lipschitz : 1.0;

  auto primal_of = [&](const Eigen::VectorXd& a) -> Eigen::VectorXd {
    return (0.5 * (D.transpose() * a)).cwiseMax(0.0);
  };
  auto dual_of = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& p) {
    return cfg.margin * a.sum() - p.squaredNorm();
  };

  struct Solve {
    Eigen::VectorXd a, p;
    double primal = 0.0, dual = 0.0, violation = 0.0;
    std::size_t iterations = 0;
  };

  // Accelerated projected ascent on the box-constrained dual, warm-started
  // from a0. Whenever the momentum step would lower the dual, momentum
  // restarts and a plain step (which never lowers it) is taken.
  auto solve = [&](double penalty, Eigen::VectorXd a0) {
    EstimatorConfig c = cfg;
    c.soft_penalty = penalty;
    auto ascent_step = [&](const Eigen::VectorXd& from) -> Eigen::VectorXd {
      const Eigen::VectorXd grad = Eigen::VectorXd::Constant(m, cfg.margin) - D * primal_of(from);
      return (from + eta * grad).cwiseMax(0.0).cwiseMin(penalty);
    };
    Solve s;
    s.a = a0.cwiseMin(penalty);
    Eigen::VectorXd prev = s.a;
    s.p = primal_of(s.a);
    s.dual = dual_of(s.a, s.p);
    s.primal = soft_margin_objective(constraints, s.p, c);
    double momentum = 1.0;
    for (; s.iterations < cfg.max_iters; ++s.iterations) {
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const Eigen::VectorXd y = s.a + ((momentum - 1.0) / next_momentum) * (s.a - prev);
      Eigen::VectorXd next = ascent_step(y);
      Eigen::VectorXd p_next = primal_of(next);
      double dual_next = dual_of(next, p_next);
      if (dual_next < s.dual) {
        next = ascent_step(s.a);
        p_next = primal_of(next);
        dual_next = dual_of(next, p_next);
        momentum = 1.0;
      } else {
        momentum = next_momentum;
      }
      assert(dual_next >= s.dual - 1e-9 * std::max(1.0, std::abs(s.dual)));
      const bool stalled = dual_next == s.dual && momentum == 1.0;
      prev = std::move(s.a);
      s.a = std::move(next);
      s.p = std::move(p_next);
      s.dual = dual_next;
      s.primal = soft_margin_objective(constraints, s.p, c);
      if (s.primal - s.dual <= cfg.tol * std::max(1.0, std::abs(s.primal)) || stalled) {
        ++s.iterations;
        break;
      }
    }
    s.violation = std::max(0.0, (Eigen::VectorXd::Constant(m, cfg.margin) - D * s.p).maxCoeff());
    return s;
  };

  // The hinge term is only a fallback for inconsistent feedback: feature
  // differences are small (word features are 1/|q u o|), so any fixed penalty
  // binds on separable systems too. Solve the hard-margin problem exactly
  // first and keep the soft solution only when no nonnegative p separates.
  if (auto hard = least_distance(D, cfg.margin)) {
    const double slack = (D * hard->p).minCoeff();
    if (slack > 0) {
      // rounding can leave a margin a hair short; scaling up restores it
      if (slack < cfg.margin) hard->p *= cfg.margin / slack;
      r.p = PreferenceVector(hard->p);
      r.objective = soft_margin_objective(constraints, hard->p, cfg);
      r.dual_objective = r.objective;
      r.iterations = hard->iterations;
      r.converged = true;
      return r;
    }
  }
  const Solve chosen = solve(cfg.soft_penalty, Eigen::VectorXd::Zero(m));
  const Eigen::VectorXd& p = chosen.p;
  r.dual_objective = chosen.dual;
  r.converged = chosen.primal - chosen.dual <= std::sqrt(cfg.tol) * std::max(1.0, std::abs(chosen.primal));

  r.p = PreferenceVector(p);
  r.objective = soft_margin_objective(constraints, p, cfg);
  r.iterations = chosen.iterations;
  for (const auto& c : constraints) r.max_violation = std::max(r.max_violation, cfg.margin - c.delta.dot(p));
  r.max_violation = std::max(0.0, r.max_violation);
  return r;
}

std::vector<RankedResult> final_topk(std::span<const GeoObject* const> candidates, const Query& q,
                                     const PreferenceVector& p, std::size_t k, const SpatialFrame& frame) {
  std::vector<RankedResult> all;
  all.reserve(candidates.size());
  for (const auto* o : candidates) all.push_back({o->id, f_prefer(q, *o, p, frame)});
  std::sort(all.begin(), all.end(), [](const RankedResult& a, const RankedResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace geoprefer
