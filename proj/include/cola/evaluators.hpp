#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cola/path_space.hpp"

namespace cola {

// One input with its gold label. Payload and expected are backend-specific;
// they travel as JSON so datasets stay language-neutral.
struct TaskInstance {
  std::string id;
  nlohmann::json payload;
  nlohmann::json expected;
};

struct EvaluationOutcome {
  bool correct = false;
  double reward = 0.0;
  int depth = 0;
  int non_recurrent_depth = 0;
  std::optional<std::string> answer;

  friend bool operator==(const EvaluationOutcome&, const EvaluationOutcome&) =
      default;
};

// Reward law: 1 - rho * depth / N when correct, 0 otherwise. rho defaults
// to 0 because the selection objective already carries the length penalty.
EvaluationOutcome make_outcome(bool correct, const LayerPath& path,
                               int num_layers, double rho,
                               std::optional<std::string> answer = {});

// An execution backend: runs one path on one input and reports correctness.
// Implementations are pure in (instance, path) and shareable across
// concurrent searches.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual int num_layers() const = 0;
  virtual EvaluationOutcome evaluate(const TaskInstance& instance,
                                     const LayerPath& path) const = 0;
};

// ---------------------------------------------------------------------------
// Synthetic layer machine
//
// Layer i is the affine map x -> A_i x + b_i over Z_m^d with A_i invertible
// mod m. Exact integer arithmetic makes outcomes bit-reproducible and easy
// to check against straight-line re-computation.
// ---------------------------------------------------------------------------

struct SynthMachine {
  int num_layers = 0;
  int state_dim = 0;
  int modulus = 0;  // small prime
  // matrices[i] is row-major d*d, offsets[i] has d entries, all in [0, m).
  std::vector<std::vector<int>> matrices;
  std::vector<std::vector<int>> offsets;
  // Provenance of generated labels. Absent on machines reconstructed from
  // persisted parameters so search code can never see it.
  std::optional<LayerPath> hidden_generating_path;
};

// Machine with freshly sampled invertible layers and a hidden generating
// path drawn by a random legal-action walk through the Joint grammar.
SynthMachine synth_machine(std::uint64_t seed, int num_layers, int state_dim,
                           int modulus, const StackSpec& spec);

// Same, but with the caller's hidden path (tests pin specific paths).
SynthMachine synth_machine_with_path(std::uint64_t seed, int num_layers,
                                     int state_dim, int modulus,
                                     LayerPath hidden_path);

// `count` instances: random start vectors labeled by the machine's hidden
// generating path. Deterministic in seed.
std::vector<TaskInstance> synth_instances(const SynthMachine& machine,
                                          std::uint64_t seed, int count,
                                          const std::string& id_prefix = "synth");

std::pair<SynthMachine, std::vector<TaskInstance>> synth_generate(
    std::uint64_t seed, int num_layers, int state_dim, int modulus, int count,
    const StackSpec& spec);

std::vector<int> synth_apply(const SynthMachine& machine, const LayerPath& path,
                             std::vector<int> state);

class SynthEvaluator final : public Evaluator {
 public:
  explicit SynthEvaluator(SynthMachine machine, double rho = 0.0)
      : machine_(std::move(machine)), rho_(rho) {}
  int num_layers() const override { return machine_.num_layers; }
  EvaluationOutcome evaluate(const TaskInstance& instance,
                             const LayerPath& path) const override;
  const SynthMachine& machine() const { return machine_; }

 private:
  SynthMachine machine_;
  double rho_;
};

// ---------------------------------------------------------------------------
// Toy transformer
//
// A seeded decoder-style stack small enough to run thousands of paths per
// second: embedding + sinusoid-free learned positions, per-layer single-head
// causal attention and a tanh feed-forward, both pre-normalized residual
// updates, and an argmax head over the last position. Every layer maps
// model_dim -> model_dim, so blocks compose in any order and multiplicity.
// ---------------------------------------------------------------------------

struct ToyTransformer {
  int num_layers = 0;
  int model_dim = 0;
  int vocab_size = 0;
  int max_seq_len = 0;
  std::uint64_t seed = 0;
  double residual_scale = 0.5;

  struct LayerWeights {
    std::vector<double> wq, wk, wv, wo;  // d*d row-major
    std::vector<double> w1, b1;          // hidden*d, hidden (hidden = 2d)
    std::vector<double> w2, b2;          // d*hidden, d
  };
  std::vector<double> embed;      // vocab*d
  std::vector<double> positions;  // max_seq_len*d
  std::vector<double> head;       // vocab*d
  std::vector<LayerWeights> layers;
};

ToyTransformer toy_build(std::uint64_t seed, int num_layers, int model_dim,
                         int vocab_size, int max_seq_len = 16);

// Forward pass over `path`; returns the argmax label (ties -> lowest id).
int toy_forward(const ToyTransformer& model, const std::vector<int>& tokens,
                const LayerPath& path, double* max_abs_activation = nullptr);

class ToyEvaluator final : public Evaluator {
 public:
  explicit ToyEvaluator(ToyTransformer model, double rho = 0.0)
      : model_(std::move(model)), rho_(rho) {}
  int num_layers() const override { return model_.num_layers; }
  EvaluationOutcome evaluate(const TaskInstance& instance,
                             const LayerPath& path) const override;
  const ToyTransformer& model() const { return model_; }

 private:
  ToyTransformer model_;
  double rho_;
};

// Random token sequences labeled either by the full model itself
// (self-labeled: the identity path is correct by construction) or by a
// perturbed sibling model (adversarial: the identity path usually is not).
enum class ToyLabeling : std::uint8_t { SelfLabeled, Adversarial };

std::vector<TaskInstance> toy_instances(const ToyTransformer& model,
                                        std::uint64_t seed, int count,
                                        int seq_len, ToyLabeling labeling,
                                        const std::string& id_prefix = "toy");

}  // namespace cola
