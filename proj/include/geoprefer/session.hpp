#ifndef GEOPREFER_SESSION_HPP
#define GEOPREFER_SESSION_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "geoprefer/estimation.hpp"
#include "geoprefer/girtree.hpp"
#include "geoprefer/interaction.hpp"

namespace geoprefer {

enum class Strategy { Random, DensestGraph };
enum class Phase { CandidateSearch, Interaction, Terminated };

std::string to_string(Strategy s);
std::string to_string(Phase p);
/// Accepts "random", "densest" and "densest-graph". Throws ValidationError.
Strategy parse_strategy(std::string_view s);

/// Feedback submitted in the wrong phase.
class SessionStateError : public Error {
 public:
  using Error::Error;
};

/// Feedback naming an object that was not shown in the current round.
class InvalidChoice : public Error {
 public:
  using Error::Error;
};

struct SessionConfig {
  Strategy strategy = Strategy::DensestGraph;
  std::uint64_t seed = 0;
  TerminationConfig termination;
  EstimatorConfig estimator;
  bool audit = false;  // check graph invariants after every mutation
};

struct RoundState {
  std::size_t round_no = 0;
  std::vector<ObjectId> shown;
  std::optional<ObjectId> chosen;
  std::size_t constraints_added = 0;
  std::vector<ObjectId> removed;
  std::size_t vertices_after = 0;
  std::size_t edges_after = 0;
  double elapsed_ms = 0.0;  // time to process this round's feedback
};

/// One interactive query: candidate search, feedback rounds, termination.
///
/// The tree must outlive the session. Mutations are not synchronized; the
/// owner serializes calls.
class Session {
 public:
  Session(const GirTree& tree, Query q, SessionConfig cfg = {});

  const Query& query() const { return query_; }
  const SessionConfig& config() const { return cfg_; }
  Phase phase() const { return phase_; }
  const GirTree& tree() const { return *tree_; }

  /// Current round number, 1-based. After termination, the rounds used.
  std::size_t round_no() const { return rounds_.size(); }
  /// Objects to show in the current round; empty once terminated.
  const std::vector<ObjectId>& shown() const;
  const std::vector<RoundState>& rounds() const { return rounds_; }
  std::size_t rounds_used() const;

  const std::vector<Candidate>& candidates() const { return candidates_; }
  const NoSuperiorGraph& graph() const { return graph_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const ScorePair& scores(ObjectId id) const;

  const std::vector<RankedResult>& results() const { return results_; }
  const std::optional<EstimateResult>& estimate() const { return estimate_; }
  const TerminationDecision& termination() const { return termination_; }

  /// Records the user's favourite of the current round and advances.
  void submit_feedback(ObjectId chosen);
  /// Forces termination and produces results.
  void stop();

 private:
  void select_next();
  void finish();
  bool check_termination(bool user_stop);

  const GirTree* tree_;
  Query query_;
  SessionConfig cfg_;
  Phase phase_ = Phase::CandidateSearch;
  std::vector<Candidate> candidates_;
  std::vector<Eigen::VectorXd> features_;  // per graph vertex
  NoSuperiorGraph graph_;
  std::vector<RoundState> rounds_;
  std::vector<Constraint> constraints_;
  std::vector<RankedResult> results_;
  std::optional<EstimateResult> estimate_;
  TerminationDecision termination_;
};

/// Picks argmax f_prefer(q, o, p_star) over the shown set, lowest id on ties.
struct SimulatedUser {
  PreferenceVector p_star;

  ObjectId pick(const Query& q, const GirTree& tree, std::span<const ObjectId> shown) const;
};

/// p0 and every word weight drawn uniformly from [0, 1].
PreferenceVector random_preference(std::size_t t, std::uint64_t seed);

struct SessionReport {
  std::size_t rounds_used = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<double> round_ms;
  double mean_ms_per_round = 0.0;
  std::size_t candidates = 0;
  std::size_t dominated_picks = 0;  // rounds where the user picked a known-beaten object
  std::vector<RankedResult> results;
  std::vector<ObjectId> truth;
};

/// precision = |hit| / |retrieved|, recall = |hit| / |relevant|, F1 their
/// harmonic mean (0 when both are 0).
void score_retrieval(std::span<const RankedResult> retrieved, std::span<const ObjectId> relevant, SessionReport& out);

/// Called after the session starts and after every feedback.
using SessionObserver = std::function<void(const Session&)>;

/// Drives a full session with a simulated user holding p_star and scores
/// the final top-k against the brute-force top-k under p_star.
SessionReport simulate(const GirTree& tree, const Query& q, const PreferenceVector& p_star, const SessionConfig& cfg,
                       const SessionObserver& observer = {});

}  // namespace geoprefer

#endif  // GEOPREFER_SESSION_HPP
