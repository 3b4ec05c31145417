#pragma once

#include <cstdint>
#include <optional>

#include "cola/mcts.hpp"

namespace cola::mcts {

enum class OracleStatus : std::uint8_t {
  Found = 0,          // exhaustive; best is the optimum
  NoSolution = 1,     // exhaustive; no correct path exists
  BudgetExhausted = 2  // enumeration stopped early; result not authoritative
};

std::string to_string(OracleStatus status);

struct OracleResult {
  OracleStatus status = OracleStatus::NoSolution;
  std::optional<Candidate> best;  // set when a correct path was seen
  std::int64_t complete_paths = 0;
  std::int64_t states_visited = 0;
};

// Exhaustive minimum-depth search over every grammar-reachable complete
// path, with select_reported's tie-breaks (distinct layers, then encoding).
// Depth-first with pruning against the best depth found so far; feasible
// at desk scale only (N <= ~10). `node_budget` bounds visited DFS states.
OracleResult brute_force(const TaskInstance& instance,
                         const Evaluator& evaluator, const StackSpec& spec,
                         SpaceMode mode,
                         std::int64_t node_budget = 50'000'000);

// Number of distinct complete paths the grammar reaches (no evaluation).
// Counting-only twin of brute_force for enumeration tests.
std::int64_t count_complete_paths(const StackSpec& spec, SpaceMode mode,
                                  std::int64_t node_budget = 50'000'000);

}  // namespace cola::mcts
