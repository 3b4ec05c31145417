#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cola/evaluators.hpp"
#include "cola/path_space.hpp"

namespace cola::mcts {

// What a run executes per instance. The first three map onto SpaceMode;
// OriginalOnly evaluates the identity path and skips the search entirely.
enum class RunMode : std::uint8_t {
  Joint = 0,
  SkipOnly = 1,
  RecurrenceOnly = 2,
  OriginalOnly = 3,
};

std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& text);  // joint|skip|recur|original
SpaceMode space_mode(RunMode mode);               // OriginalOnly has none

struct SearchConfig {
  int simulations = 200;
  double c = 1.4142135623730951;  // sqrt(2)
  double lambda = 5.0;
  double epsilon = 0.1;
  double rho = 0.0;
  SpaceMode mode = SpaceMode::Joint;
  int l_max = 0;  // 0 -> 2N
  std::uint64_t seed = 0;
};

// Throws ContractViolation when a field is out of range.
void validate(const SearchConfig& config);

struct Candidate {
  LayerPath path;
  EvaluationOutcome outcome;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// One evaluator failure, remembered so the path is not retried and the
// run report can surface it.
struct SearchFailure {
  std::string path;  // text encoding
  std::string message;

  friend bool operator==(const SearchFailure&, const SearchFailure&) = default;
};

struct SearchResult {
  std::string instance_id;
  EvaluationOutcome original_outcome;  // identity path
  std::vector<Candidate> candidates;   // distinct paths, sorted (depth, enc)
  Candidate reported;
  std::vector<Candidate> pareto;
  int simulations_run = 0;
  std::vector<SearchFailure> failures;  // sorted by path encoding

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

// UCB(P) = Q/v + c*sqrt(ln V / v) - lambda*len/N. `total_visits` is the
// number of completed simulations; `path_len` the materialized length of
// the node's state. Unvisited nodes are never scored.
double ucb_score(double q_total, int visits, int total_visits, int path_len,
                 int num_layers, double c, double lambda);

// Keeps candidates not dominated by any other, where A dominates B iff
// A.correct >= B.correct and A.depth <= B.depth with one strict (true above
// false). Input must be deduplicated by path; output ascends by
// (depth, encoding).
std::vector<Candidate> pareto_front(const std::vector<Candidate>& candidates);

// Strict weak order used to pick the reported candidate: depth, then
// distinct layer count, then path encoding (plain string compare).
bool reported_before(const Candidate& a, const Candidate& b);

// The correct candidate with minimum depth, ties by fewer distinct layers,
// then lexicographically smallest encoding. No correct candidate -> the
// identity-path candidate, which the search always evaluates first.
Candidate select_reported(const std::vector<Candidate>& candidates,
                          int num_layers);

// Internal tree counters, exposed for invariant checks. Every descent
// increments visits along its trajectory, so the root absorbs one visit per
// simulation and its children split the rest.
struct TreeStats {
  int root_visits = 0;
  long long root_child_visits = 0;
  double root_q = 0.0;
  int node_count = 0;
};

// Full search: exactly config.simulations iterations of select/expand/
// simulate/backpropagate from the identity root. Deterministic in
// (instance.id, config.seed). Evaluator exceptions other than
// EvaluationError propagate; evaluation errors land in result.failures
// with reward 0.
SearchResult run_search(const TaskInstance& instance,
                        const Evaluator& evaluator,
                        const SearchConfig& config,
                        TreeStats* stats = nullptr);

// OriginalOnly: evaluate the identity path and wrap it as a one-candidate
// result so downstream storage and analytics see a uniform shape.
SearchResult evaluate_original(const TaskInstance& instance,
                               const Evaluator& evaluator, double rho);

}  // namespace cola::mcts
