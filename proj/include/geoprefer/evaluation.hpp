#ifndef GEOPREFER_EVALUATION_HPP
#define GEOPREFER_EVALUATION_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "geoprefer/session.hpp"

namespace geoprefer {

/// Workload of simulated sessions over one index.
struct EvalSpec {
  std::size_t sessions = 100;
  std::size_t k = 20;
  std::size_t theta = 8;
  std::size_t t = 100;  // query words
  double lambda = 0.5;
  Strategy strategy = Strategy::DensestGraph;
  std::uint64_t seed = 0;
  TerminationConfig termination;
  EstimatorConfig estimator;
};

struct EvalWorkItem {
  Query query;
  PreferenceVector p_star;
  std::uint64_t session_seed = 0;
};

/// Session i draws its location uniformly from the index extent, t distinct
/// Zipf-distributed word ids from the dataset's id range and a uniform
/// random p_star, all from (seed, i) only.
EvalWorkItem make_work_item(const GirTree& tree, const EvalSpec& spec, std::size_t i);

struct EvalSummary {
  EvalSpec spec;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_ms_per_round = 0.0;
  double mean_rounds = 0.0;
  std::vector<SessionReport> reports;
};

EvalSummary run_eval(const GirTree& tree, const EvalSpec& spec);

inline constexpr const char* kEvalCsvHeader = "strategy,k,theta,t,precision,recall,f1,mean_ms_per_round,mean_rounds";

/// One CSV data row. With with_timing false the timing column reads NA.
std::string eval_csv_row(const EvalSummary& s, bool with_timing = true);

}  // namespace geoprefer

#endif  // GEOPREFER_EVALUATION_HPP
