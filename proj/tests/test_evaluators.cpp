#include <cmath>
#include <set>
#include <vector>

#include "cola/evaluators.hpp"
#include "cola/rng.hpp"
#include "doctest.h"

using namespace cola;

// ==== reward law ============================================================

TEST_CASE("make_outcome applies the linear depth discount") {
  const LayerPath path{0, 1, 1, 2};  // depth 4, distinct 3
  const auto correct = make_outcome(true, path, 4, 0.0);
  CHECK(correct.correct);
  CHECK(correct.reward == 1.0);
  CHECK(correct.depth == 4);
  CHECK(correct.non_recurrent_depth == 3);
  CHECK_FALSE(correct.answer.has_value());

  // rho = 0.5 at depth == N discounts to exactly one half.
  const auto discounted = make_outcome(true, identity_path(6), 6, 0.5);
  CHECK(discounted.reward == 0.5);

  const auto wrong = make_outcome(false, path, 4, 0.5, "7");
  CHECK(wrong.reward == 0.0);
  CHECK(wrong.answer == "7");

  // Reward stays within [0,1] for rho in [0, 0.5] even at the 2N cap.
  LayerPath capped(8, 0);
  for (double rho : {0.0, 0.25, 0.5}) {
    const auto out = make_outcome(true, capped, 4, rho);
    CHECK(out.reward >= 0.0);
    CHECK(out.reward <= 1.0);
  }
}

// ==== synthetic machine =====================================================

TEST_CASE("synth_apply reproduces the worked one-dimensional trace") {
  // One layer: x -> 2x + 1 (mod 5). Applying it twice to 1: 1 -> 3 -> 2.
  SynthMachine machine;
  machine.num_layers = 1;
  machine.state_dim = 1;
  machine.modulus = 5;
  machine.matrices = {{2}};
  machine.offsets = {{1}};
  CHECK(synth_apply(machine, {0}, {1}) == std::vector<int>{3});
  CHECK(synth_apply(machine, {0, 0}, {1}) == std::vector<int>{2});
}

TEST_CASE("synth_apply validates dimensions and ranges") {
  SynthMachine machine;
  machine.num_layers = 1;
  machine.state_dim = 1;
  machine.modulus = 5;
  machine.matrices = {{2}};
  machine.offsets = {{1}};
  CHECK_THROWS_AS(synth_apply(machine, {1}, {1}), ContractViolation);
  CHECK_THROWS_AS(synth_apply(machine, {0}, {1, 2}), ContractViolation);
  CHECK_THROWS_AS(synth_apply(machine, {0}, {7}), ContractViolation);
}

namespace {

// Rank of a d*d matrix over Z_p via Gaussian elimination; independent of the
// generator's own invertibility check.
bool invertible_mod_p(const std::vector<int>& matrix, int d, int p) {
  std::vector<long long> a(matrix.begin(), matrix.end());
  int rank = 0;
  for (int col = 0; col < d && rank < d; ++col) {
    int pivot = -1;
    for (int row = rank; row < d; ++row)
      if (a[row * d + col] % p != 0) {
        pivot = row;
        break;
      }
    if (pivot < 0) return false;
    for (int c = 0; c < d; ++c) std::swap(a[pivot * d + c], a[rank * d + c]);
    // Scale pivot row to 1 via Fermat inverse.
    long long inv = 1, base = a[rank * d + col] % p, e = p - 2;
    while (e > 0) {
      if (e & 1) inv = inv * base % p;
      base = base * base % p;
      e >>= 1;
    }
    for (int c = 0; c < d; ++c) a[rank * d + c] = a[rank * d + c] * inv % p;
    for (int row = 0; row < d; ++row) {
      if (row == rank) continue;
      const long long factor = a[row * d + col] % p;
      for (int c = 0; c < d; ++c) {
        a[row * d + c] = (a[row * d + c] - factor * a[rank * d + c]) % p;
        if (a[row * d + c] < 0) a[row * d + c] += p;
      }
    }
    ++rank;
  }
  return rank == d;
}

}  // namespace

TEST_CASE("sampled machines are deterministic with invertible layers") {
  const StackSpec spec = make_spec(4);
  const SynthMachine a = synth_machine(7, 4, 2, 5, spec);
  const SynthMachine b = synth_machine(7, 4, 2, 5, spec);
  CHECK(a.matrices == b.matrices);
  CHECK(a.offsets == b.offsets);
  REQUIRE(a.hidden_generating_path.has_value());
  CHECK(a.hidden_generating_path == b.hidden_generating_path);
  CHECK(a.hidden_generating_path->size() <=
        static_cast<std::size_t>(spec.max_path_len));

  for (const auto& m : a.matrices) CHECK(invertible_mod_p(m, 2, 5));
  for (const auto& m : a.matrices)
    for (int v : m) {
      CHECK(v >= 0);
      CHECK(v < 5);
    }
  for (const auto& off : a.offsets)
    for (int v : off) {
      CHECK(v >= 0);
      CHECK(v < 5);
    }

  const SynthMachine c = synth_machine(8, 4, 2, 5, spec);
  CHECK(a.matrices != c.matrices);
}

TEST_CASE("invertibility holds across seeds and moduli") {
  const StackSpec spec = make_spec(6);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u})
    for (int m : {2, 3, 5, 7}) {
      const SynthMachine machine = synth_machine(seed, 6, 3, m, spec);
      for (const auto& mat : machine.matrices)
        CHECK(invertible_mod_p(mat, 3, m));
    }
}

TEST_CASE("synth instances are labeled by the hidden path") {
  const StackSpec spec = make_spec(4);
  const SynthMachine machine = synth_machine(7, 4, 2, 5, spec);
  const auto instances = synth_instances(machine, 21, 3);
  REQUIRE(instances.size() == 3);
  CHECK(instances[0].id == "synth-0000");
  CHECK(instances[2].id == "synth-0002");

  for (const auto& instance : instances) {
    const auto start = instance.payload.at("x").get<std::vector<int>>();
    const auto label = instance.expected.get<std::vector<int>>();
    CHECK(synth_apply(machine, *machine.hidden_generating_path, start) ==
          label);
    for (int v : start) {
      CHECK(v >= 0);
      CHECK(v < 5);
    }
  }

  // Deterministic in seed, fresh draws otherwise.
  const auto again = synth_instances(machine, 21, 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(instances[i].payload == again[i].payload);
    CHECK(instances[i].expected == again[i].expected);
  }
}

TEST_CASE("the hidden generating path is correct under evaluation") {
  const StackSpec spec = make_spec(6);
  auto [machine, instances] = synth_generate(31, 6, 3, 5, 8, spec);
  const LayerPath hidden = *machine.hidden_generating_path;
  const SynthEvaluator evaluator(machine);
  CHECK(evaluator.num_layers() == 6);
  for (const auto& instance : instances) {
    const auto outcome = evaluator.evaluate(instance, hidden);
    CHECK(outcome.correct);
    CHECK(outcome.reward == 1.0);
    CHECK(outcome.depth == static_cast<int>(hidden.size()));
    REQUIRE(outcome.answer.has_value());
  }
}

TEST_CASE("identity hidden path marks the identity correct") {
  const SynthMachine machine =
      synth_machine_with_path(9, 4, 2, 5, identity_path(4));
  const auto instances = synth_instances(machine, 5, 4);
  const SynthEvaluator evaluator(machine);
  for (const auto& instance : instances)
    CHECK(evaluator.evaluate(instance, identity_path(4)).correct);
}

TEST_CASE("a truncated path misses a label that needs the second layer") {
  // Layer 0 is the identity map, layer 1 doubles. Hidden path [0,1] labels
  // x=1 with 2; the truncated [0] answers 1.
  SynthMachine machine;
  machine.num_layers = 2;
  machine.state_dim = 1;
  machine.modulus = 5;
  machine.matrices = {{1}, {2}};
  machine.offsets = {{0}, {0}};
  machine.hidden_generating_path = LayerPath{0, 1};
  TaskInstance instance;
  instance.id = "t0";
  instance.payload = nlohmann::json{{"x", std::vector<int>{1}}};
  instance.expected = nlohmann::json(std::vector<int>{2});
  const SynthEvaluator evaluator(machine);
  const auto truncated = evaluator.evaluate(instance, {0});
  CHECK_FALSE(truncated.correct);
  CHECK(truncated.answer == "1");
  const auto full = evaluator.evaluate(instance, {0, 1});
  CHECK(full.correct);
  CHECK(full.answer == "2");
}

// ==== toy transformer =======================================================

TEST_CASE("toy models build deterministically") {
  const ToyTransformer a = toy_build(17, 4, 8, 12);
  const ToyTransformer b = toy_build(17, 4, 8, 12);
  CHECK(a.embed == b.embed);
  CHECK(a.positions == b.positions);
  CHECK(a.head == b.head);
  REQUIRE(a.layers.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.layers[i].wq == b.layers[i].wq);
    CHECK(a.layers[i].w2 == b.layers[i].w2);
  }
  const ToyTransformer c = toy_build(18, 4, 8, 12);
  CHECK(a.embed != c.embed);
}

TEST_CASE("toy_forward is a pure function of tokens and path") {
  const ToyTransformer model = toy_build(17, 4, 8, 12);
  const std::vector<int> tokens{3, 1, 4, 1, 5};
  const LayerPath path{0, 2, 2, 3};
  const int once = toy_forward(model, tokens, path);
  const int twice = toy_forward(model, tokens, path);
  CHECK(once == twice);
  CHECK(once >= 0);
  CHECK(once < model.vocab_size);
}

TEST_CASE("activations stay finite on maximal recurrence") {
  const ToyTransformer model = toy_build(29, 6, 8, 12);
  const std::vector<int> tokens{1, 2, 3, 4};
  // Layer 0 applied to the length cap; the 0.5-scaled residual plus
  // normalization must keep activations bounded.
  const LayerPath hammer(2 * model.num_layers, 0);
  double max_abs = 0.0;
  const int label = toy_forward(model, tokens, hammer, &max_abs);
  CHECK(label >= 0);
  CHECK(std::isfinite(max_abs));
  CHECK(max_abs < 1e6);
}

TEST_CASE("toy_forward rejects bad tokens and paths") {
  const ToyTransformer model = toy_build(17, 4, 8, 12);
  CHECK_THROWS_AS(toy_forward(model, {99}, identity_path(4)),
                  ContractViolation);
  CHECK_THROWS_AS(toy_forward(model, {}, identity_path(4)), ContractViolation);
  CHECK_THROWS_AS(toy_forward(model, {1, 2}, {4}), ContractViolation);
  CHECK_THROWS_AS(toy_forward(model, {1, 2}, {}), ContractViolation);
}

TEST_CASE("self-labeled instances make the identity path correct") {
  const ToyTransformer model = toy_build(23, 6, 16, 16);
  const auto instances =
      toy_instances(model, 41, 12, 8, ToyLabeling::SelfLabeled);
  REQUIRE(instances.size() == 12);
  const ToyEvaluator evaluator(model);
  std::set<std::string> ids;
  for (const auto& instance : instances) {
    ids.insert(instance.id);
    const auto outcome = evaluator.evaluate(instance, identity_path(6));
    CHECK(outcome.correct);
    CHECK(outcome.depth == 6);
  }
  CHECK(ids.size() == 12);  // no duplicate ids
}

TEST_CASE("adversarial instances are labeled by the sibling model") {
  const ToyTransformer model = toy_build(23, 6, 16, 16);
  const auto adversarial =
      toy_instances(model, 41, 24, 8, ToyLabeling::Adversarial);
  const auto again = toy_instances(model, 41, 24, 8, ToyLabeling::Adversarial);
  const ToyEvaluator evaluator(model);
  int identity_correct = 0;
  for (int i = 0; i < 24; ++i) {
    CHECK(adversarial[i].payload == again[i].payload);
    CHECK(adversarial[i].expected == again[i].expected);
    if (evaluator.evaluate(adversarial[i], identity_path(6)).correct)
      ++identity_correct;
  }
  // The sibling disagrees with the model on at least some inputs, otherwise
  // the corpus could never show a wrong-to-correct transition.
  CHECK(identity_correct < 24);
}

TEST_CASE("toy evaluation round-trips the path encoding") {
  const ToyTransformer model = toy_build(23, 6, 16, 16);
  const auto instances =
      toy_instances(model, 43, 4, 8, ToyLabeling::SelfLabeled);
  const ToyEvaluator evaluator(model);
  const StackSpec spec = make_spec(6);
  Rng rng = make_stream(3, "toy-roundtrip");
  for (const auto& instance : instances) {
    PathState state = initial_state(spec);
    while (!is_terminal(state, spec)) {
      const auto actions = legal_actions(state, spec, SpaceMode::Joint);
      state = apply_action(state, actions[next_below(rng, actions.size())],
                           spec);
    }
    const LayerPath path = materialize(state, spec);
    const auto direct = evaluator.evaluate(instance, path);
    const auto decoded =
        evaluator.evaluate(instance, decode_path(encode_path(path), spec));
    CHECK(direct == decoded);
  }
}
