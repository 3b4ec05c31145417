#include <set>
#include <vector>

#include "cola/evaluators.hpp"
#include "cola/oracle.hpp"
#include "doctest.h"

using namespace cola;
using namespace cola::mcts;

namespace {

// Independent enumeration: walk every legal action sequence and deduplicate
// by materialized path. Exponential, so small N only.
void enumerate_all(const PathState& state, const StackSpec& spec,
                   SpaceMode mode, std::set<LayerPath>& out) {
  const auto actions = legal_actions(state, spec, mode);
  if (actions.empty()) {
    out.insert(materialize(state, spec));
    return;
  }
  for (const auto& action : actions)
    enumerate_all(apply_action(state, action, spec), spec, mode, out);
}

std::set<LayerPath> all_paths(const StackSpec& spec, SpaceMode mode) {
  std::set<LayerPath> out;
  enumerate_all(initial_state(spec), spec, mode, out);
  return out;
}

// Records every path the oracle evaluates.
class RecordingEvaluator final : public Evaluator {
 public:
  RecordingEvaluator(const Evaluator& inner) : inner_(inner) {}
  int num_layers() const override { return inner_.num_layers(); }
  EvaluationOutcome evaluate(const TaskInstance& instance,
                             const LayerPath& path) const override {
    seen_.push_back(path);
    return inner_.evaluate(instance, path);
  }
  const std::vector<LayerPath>& seen() const { return seen_; }

 private:
  const Evaluator& inner_;
  mutable std::vector<LayerPath> seen_;
};

}  // namespace

// ==== enumeration counts ====================================================

TEST_CASE("status names are stable") {
  CHECK(to_string(OracleStatus::Found) == "found");
  CHECK(to_string(OracleStatus::NoSolution) == "no_solution");
  CHECK(to_string(OracleStatus::BudgetExhausted) == "budget_exhausted");
}

TEST_CASE("distinct complete path counts match independent enumeration") {
  // Frozen counts, cross-checked by the exponential dedup enumerator.
  const struct {
    int n;
    std::int64_t joint, skip, recur;
  } expected[] = {
      {2, 14, 3, 7},
      {3, 81, 7, 25},
      {4, 467, 15, 97},
  };
  for (const auto& row : expected) {
    const StackSpec spec = make_spec(row.n);
    CHECK(count_complete_paths(spec, SpaceMode::Joint) == row.joint);
    CHECK(count_complete_paths(spec, SpaceMode::SkipOnly) == row.skip);
    CHECK(count_complete_paths(spec, SpaceMode::RecurrenceOnly) == row.recur);
    CHECK(static_cast<std::int64_t>(all_paths(spec, SpaceMode::Joint).size()) ==
          row.joint);
    CHECK(static_cast<std::int64_t>(
              all_paths(spec, SpaceMode::SkipOnly).size()) == row.skip);
    CHECK(static_cast<std::int64_t>(
              all_paths(spec, SpaceMode::RecurrenceOnly).size()) == row.recur);
  }
  // Skip-only reaches every nonempty subsequence: 2^N - 1.
  CHECK(count_complete_paths(make_spec(5), SpaceMode::SkipOnly) == 31);
  CHECK(count_complete_paths(make_spec(5), SpaceMode::Joint) == 2679);
}

TEST_CASE("the acceptance-scale joint space holds 545432 paths") {
  CHECK(count_complete_paths(make_spec(8, 16), SpaceMode::Joint) == 545432);
}

// ==== exact optimum against full evaluation =================================

namespace {

// Ground-truth optimum: evaluate every reachable path, order by the
// reported_before tie-breaks.
std::optional<Candidate> exhaustive_best(const TaskInstance& instance,
                                         const Evaluator& evaluator,
                                         const StackSpec& spec,
                                         SpaceMode mode) {
  std::optional<Candidate> best;
  for (const auto& path : all_paths(spec, mode)) {
    Candidate cand{path, evaluator.evaluate(instance, path)};
    if (!cand.outcome.correct) continue;
    if (!best || reported_before(cand, *best)) best = cand;
  }
  return best;
}

}  // namespace

TEST_CASE("oracle optimum equals the fully evaluated optimum") {
  const StackSpec spec = make_spec(4);
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    auto [machine, instances] = synth_generate(seed, 4, 2, 5, 4, spec);
    const SynthEvaluator evaluator(machine);
    for (const auto& instance : instances) {
      for (auto mode : {SpaceMode::Joint, SpaceMode::SkipOnly,
                        SpaceMode::RecurrenceOnly}) {
        const auto oracle = brute_force(instance, evaluator, spec, mode);
        const auto truth = exhaustive_best(instance, evaluator, spec, mode);
        if (truth.has_value()) {
          REQUIRE(oracle.status == OracleStatus::Found);
          REQUIRE(oracle.best.has_value());
          CHECK(oracle.best->path == truth->path);
          CHECK(oracle.best->outcome == truth->outcome);
        } else {
          CHECK(oracle.status == OracleStatus::NoSolution);
          CHECK_FALSE(oracle.best.has_value());
        }
      }
    }
  }
}

TEST_CASE("a pinned hidden path is found within its own depth") {
  const LayerPath hidden{0, 1, 1, 2};
  const SynthMachine machine = synth_machine_with_path(41, 4, 2, 5, hidden);
  const auto instances = synth_instances(machine, 42, 4);
  const SynthEvaluator evaluator(machine);
  const StackSpec spec = make_spec(4);
  for (const auto& instance : instances) {
    const auto oracle = brute_force(instance, evaluator, spec, SpaceMode::Joint);
    REQUIRE(oracle.status == OracleStatus::Found);
    CHECK(oracle.best->outcome.correct);
    CHECK(oracle.best->outcome.depth <= 4);  // the hidden witness has depth 4
  }
}

TEST_CASE("shallow optima are found and beat the hidden witness") {
  // Hidden path [1]: layer 1 alone labels the data, so the optimum must
  // have depth 1.
  const SynthMachine machine = synth_machine_with_path(43, 4, 2, 5, {1});
  const auto instances = synth_instances(machine, 44, 3);
  const SynthEvaluator evaluator(machine);
  const StackSpec spec = make_spec(4);
  for (const auto& instance : instances) {
    const auto oracle = brute_force(instance, evaluator, spec, SpaceMode::Joint);
    REQUIRE(oracle.status == OracleStatus::Found);
    CHECK(oracle.best->outcome.depth == 1);
  }
}

TEST_CASE("an unreachable label yields no solution") {
  // Every layer is the identity map, so the reachable set is {x}.
  SynthMachine machine;
  machine.num_layers = 4;
  machine.state_dim = 1;
  machine.modulus = 5;
  machine.matrices = {{1}, {1}, {1}, {1}};
  machine.offsets = {{0}, {0}, {0}, {0}};
  TaskInstance instance;
  instance.id = "nosol";
  instance.payload = nlohmann::json{{"x", std::vector<int>{2}}};
  instance.expected = nlohmann::json(std::vector<int>{3});
  const SynthEvaluator evaluator(machine);
  const auto oracle =
      brute_force(instance, evaluator, make_spec(4), SpaceMode::Joint);
  CHECK(oracle.status == OracleStatus::NoSolution);
  CHECK_FALSE(oracle.best.has_value());
  CHECK(oracle.complete_paths > 0);
}

TEST_CASE("skip-only exploration stays strictly increasing") {
  const StackSpec spec = make_spec(5);
  auto [machine, instances] = synth_generate(45, 5, 2, 5, 1, spec);
  const SynthEvaluator inner(machine);
  const RecordingEvaluator evaluator(inner);
  brute_force(instances[0], evaluator, spec, SpaceMode::SkipOnly);
  CHECK(!evaluator.seen().empty());
  for (const auto& path : evaluator.seen())
    for (std::size_t i = 1; i < path.size(); ++i)
      CHECK(path[i - 1] < path[i]);
}

// ==== budget ================================================================

TEST_CASE("an exhausted budget is reported, never silently truncated") {
  const StackSpec spec = make_spec(6);
  auto [machine, instances] = synth_generate(46, 6, 2, 5, 1, spec);
  const SynthEvaluator evaluator(machine);
  const auto oracle =
      brute_force(instances[0], evaluator, spec, SpaceMode::Joint, 10);
  CHECK(oracle.status == OracleStatus::BudgetExhausted);
  CHECK(oracle.states_visited <= 11);
  CHECK_THROWS_AS(count_complete_paths(spec, SpaceMode::Joint, 10),
                  ContractViolation);
}

// ==== search never beats the oracle =========================================

TEST_CASE("reported search depth never undercuts the oracle optimum") {
  const StackSpec spec = make_spec(5);
  auto [machine, instances] = synth_generate(47, 5, 2, 5, 6, spec);
  const SynthEvaluator evaluator(machine);
  SearchConfig config;
  config.simulations = 60;
  config.seed = 3;
  config.mode = SpaceMode::Joint;
  for (const auto& instance : instances) {
    const auto oracle = brute_force(instance, evaluator, spec, SpaceMode::Joint);
    const auto result = run_search(instance, evaluator, config);
    if (result.reported.outcome.correct) {
      REQUIRE(oracle.status == OracleStatus::Found);
      CHECK(result.reported.outcome.depth >= oracle.best->outcome.depth);
    }
  }
}
