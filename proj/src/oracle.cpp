#include "cola/oracle.hpp"

namespace cola::mcts {

std::string to_string(OracleStatus status) {
  switch (status) {
    case OracleStatus::Found: return "found";
    case OracleStatus::NoSolution: return "no_solution";
    case OracleStatus::BudgetExhausted: return "budget_exhausted";
  }
  throw ContractViolation("unknown OracleStatus");
}

namespace {

// Distinct complete paths correspond one-to-one with action sequences in
// which a Keep (or Skip) follows a same-kind action only when the earlier
// block was maximal — otherwise Keep(1)+Keep(1) and Keep(2) would both be
// enumerated for the same path. Repeats never merge with a neighbor.
bool canonical_successor(const Action& action, ActionKind last_kind,
                         int last_block) {
  if (action.kind != last_kind) return true;
  if (action.kind == ActionKind::Repeat) return true;
  return last_block == kMaxBlock;
}

// Sentinel "no previous action" marker.
constexpr ActionKind kNoKind = static_cast<ActionKind>(255);

struct Dfs {
  const TaskInstance* instance = nullptr;
  const Evaluator* evaluator = nullptr;
  StackSpec spec;
  SpaceMode mode = SpaceMode::Joint;
  std::int64_t budget = 0;
  bool counting_only = false;

  OracleResult result;
  bool exhausted = false;

  void walk(const PathState& state, ActionKind last_kind, int last_block) {
    if (exhausted) return;
    if (++result.states_visited > budget) {
      exhausted = true;
      return;
    }
    if (is_terminal(state, spec)) {
      ++result.complete_paths;
      if (!counting_only) consider(state.prefix);
      return;
    }
    // Depth bound: every completion is at least as long as the prefix.
    if (result.best &&
        static_cast<int>(state.prefix.size()) > result.best->outcome.depth)
      return;
    for (const Action& action : legal_actions(state, spec, mode)) {
      if (!canonical_successor(action, last_kind, last_block)) continue;
      walk(apply_action(state, action, spec), action.kind, action.block);
      if (exhausted) return;
    }
  }

  void consider(const LayerPath& path) {
    Candidate cand;
    cand.path = path;
    try {
      cand.outcome = evaluator->evaluate(*instance, path);
    } catch (const EvaluationError&) {
      return;  // an unevaluable path cannot witness a solution
    }
    if (!cand.outcome.correct) return;
    if (!result.best || reported_before(cand, *result.best))
      result.best = std::move(cand);
  }
};

}  // namespace

OracleResult brute_force(const TaskInstance& instance,
                         const Evaluator& evaluator, const StackSpec& spec,
                         SpaceMode mode, std::int64_t node_budget) {
  Dfs dfs;
  dfs.instance = &instance;
  dfs.evaluator = &evaluator;
  dfs.spec = spec;
  dfs.mode = mode;
  dfs.budget = node_budget;
  dfs.walk(initial_state(spec), kNoKind, 0);
  dfs.result.status = dfs.exhausted ? OracleStatus::BudgetExhausted
                      : dfs.result.best ? OracleStatus::Found
                                        : OracleStatus::NoSolution;
  return dfs.result;
}

std::int64_t count_complete_paths(const StackSpec& spec, SpaceMode mode,
                                  std::int64_t node_budget) {
  Dfs dfs;
  dfs.spec = spec;
  dfs.mode = mode;
  dfs.budget = node_budget;
  dfs.counting_only = true;
  dfs.walk(initial_state(spec), kNoKind, 0);
  if (dfs.exhausted)
    throw ContractViolation("count_complete_paths: node budget exhausted");
  return dfs.result.complete_paths;
}

}  // namespace cola::mcts
