#include "cola/evaluators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cola/rng.hpp"

namespace cola {

EvaluationOutcome make_outcome(bool correct, const LayerPath& path,
                               int num_layers, double rho,
                               std::optional<std::string> answer) {
  const PathMeasure m = measure(path);
  EvaluationOutcome out;
  out.correct = correct;
  out.reward = correct
                   ? 1.0 - rho * static_cast<double>(m.depth) / num_layers
                   : 0.0;
  out.depth = m.depth;
  out.non_recurrent_depth = m.non_recurrent_depth;
  out.answer = std::move(answer);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic machine
// ---------------------------------------------------------------------------

namespace {

// Determinant-nonzero test over the prime field Z_m via Gaussian elimination.
bool invertible_mod(const std::vector<int>& matrix, int dim, int m) {
  std::vector<long long> a(matrix.begin(), matrix.end());
  for (int col = 0; col < dim; ++col) {
    int pivot = -1;
    for (int row = col; row < dim; ++row)
      if (a[row * dim + col] % m != 0) {
        pivot = row;
        break;
      }
    if (pivot < 0) return false;
    if (pivot != col)
      for (int j = 0; j < dim; ++j)
        std::swap(a[pivot * dim + j], a[col * dim + j]);
    // Inverse of the pivot element by Fermat: p^(m-2) mod m.
    long long inv = 1, base = a[col * dim + col] % m, e = m - 2;
    while (e > 0) {
      if (e & 1) inv = inv * base % m;
      base = base * base % m;
      e >>= 1;
    }
    for (int row = col + 1; row < dim; ++row) {
      const long long factor = a[row * dim + col] % m * inv % m;
      for (int j = col; j < dim; ++j) {
        a[row * dim + j] =
            ((a[row * dim + j] - factor * a[col * dim + j]) % m + m * m) % m;
      }
    }
  }
  return true;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(v[i]);
  }
  return out;
}

LayerPath sample_hidden_path(Rng& rng, const StackSpec& spec) {
  PathState state = initial_state(spec);
  while (!is_terminal(state, spec)) {
    const auto actions = legal_actions(state, spec, SpaceMode::Joint);
    state = apply_action(state, actions[next_below(rng, actions.size())], spec);
  }
  return materialize(state, spec);
}

SynthMachine sample_machine(Rng& rng, int num_layers, int state_dim,
                            int modulus) {
  if (num_layers < 1 || state_dim < 1 || modulus < 2)
    throw ContractViolation("synth machine: bad dimensions");
  SynthMachine machine;
  machine.num_layers = num_layers;
  machine.state_dim = state_dim;
  machine.modulus = modulus;
  machine.matrices.resize(num_layers);
  machine.offsets.resize(num_layers);
  for (int i = 0; i < num_layers; ++i) {
    auto& mat = machine.matrices[i];
    do {
      mat.assign(static_cast<std::size_t>(state_dim) * state_dim, 0);
      for (auto& x : mat) x = static_cast<int>(next_below(rng, modulus));
    } while (!invertible_mod(mat, state_dim, modulus));
    machine.offsets[i].resize(state_dim);
    for (auto& x : machine.offsets[i])
      x = static_cast<int>(next_below(rng, modulus));
  }
  return machine;
}

}  // namespace

SynthMachine synth_machine(std::uint64_t seed, int num_layers, int state_dim,
                           int modulus, const StackSpec& spec) {
  Rng rng = make_stream(seed, "synth-machine");
  SynthMachine machine = sample_machine(rng, num_layers, state_dim, modulus);
  machine.hidden_generating_path = sample_hidden_path(rng, spec);
  return machine;
}

SynthMachine synth_machine_with_path(std::uint64_t seed, int num_layers,
                                     int state_dim, int modulus,
                                     LayerPath hidden_path) {
  Rng rng = make_stream(seed, "synth-machine");
  SynthMachine machine = sample_machine(rng, num_layers, state_dim, modulus);
  machine.hidden_generating_path = std::move(hidden_path);
  return machine;
}

std::vector<int> synth_apply(const SynthMachine& machine, const LayerPath& path,
                             std::vector<int> state) {
  const int d = machine.state_dim;
  const int m = machine.modulus;
  if (static_cast<int>(state.size()) != d)
    throw ContractViolation("synth_apply: state dimension mismatch");
  for (int value : state)
    if (value < 0 || value >= m)
      throw ContractViolation("synth_apply: state entry outside [0, modulus)");
  std::vector<int> next(d);
  for (LayerRef layer : path) {
    if (layer < 0 || layer >= machine.num_layers)
      throw ContractViolation("synth_apply: layer index out of range");
    const auto& mat = machine.matrices[layer];
    const auto& off = machine.offsets[layer];
    for (int row = 0; row < d; ++row) {
      long long acc = off[row];
      for (int col = 0; col < d; ++col)
        acc += static_cast<long long>(mat[row * d + col]) * state[col];
      next[row] = static_cast<int>(acc % m);
    }
    state = next;
  }
  return state;
}

std::vector<TaskInstance> synth_instances(const SynthMachine& machine,
                                          std::uint64_t seed, int count,
                                          const std::string& id_prefix) {
  if (!machine.hidden_generating_path)
    throw ContractViolation("synth_instances: machine has no generating path");
  Rng rng = make_stream(seed, "synth-instances");
  std::vector<TaskInstance> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::vector<int> start(machine.state_dim);
    for (auto& x : start) x = static_cast<int>(next_below(rng, machine.modulus));
    const std::vector<int> label =
        synth_apply(machine, *machine.hidden_generating_path, start);
    TaskInstance instance;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "-%04d", i);
    instance.id = id_prefix + idbuf;
    instance.payload = nlohmann::json{{"x", start}};
    instance.expected = nlohmann::json(label);
    out.push_back(std::move(instance));
  }
  return out;
}

std::pair<SynthMachine, std::vector<TaskInstance>> synth_generate(
    std::uint64_t seed, int num_layers, int state_dim, int modulus, int count,
    const StackSpec& spec) {
  SynthMachine machine =
      synth_machine(seed, num_layers, state_dim, modulus, spec);
  auto instances = synth_instances(machine, seed, count);
  return {std::move(machine), std::move(instances)};
}

EvaluationOutcome SynthEvaluator::evaluate(const TaskInstance& instance,
                                           const LayerPath& path) const {
  if (!instance.payload.contains("x") || !instance.payload["x"].is_array())
    throw ContractViolation("synth evaluate: payload lacks start vector");
  std::vector<int> state = instance.payload["x"].get<std::vector<int>>();
  if (static_cast<int>(state.size()) != machine_.state_dim)
    throw ContractViolation("synth evaluate: state dimension mismatch");
  const std::vector<int> final_state = synth_apply(machine_, path, state);
  const std::vector<int> expected = instance.expected.get<std::vector<int>>();
  const bool correct = final_state == expected;
  return make_outcome(correct, path, machine_.num_layers, rho_,
                      join_ints(final_state));
}

// ---------------------------------------------------------------------------
// Toy transformer
// ---------------------------------------------------------------------------

namespace {

void fill_gaussian(Rng& rng, std::vector<double>& v, double scale) {
  for (auto& x : v) x = next_gaussian(rng) * scale;
}

void rms_normalize(const double* x, double* out, int d) {
  double ss = 0.0;
  for (int i = 0; i < d; ++i) ss += x[i] * x[i];
  const double inv = 1.0 / std::sqrt(ss / d + 1e-8);
  for (int i = 0; i < d; ++i) out[i] = x[i] * inv;
}

void matvec(const std::vector<double>& w, const double* x, double* out,
            int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* wr = w.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] = acc;
  }
}

}  // namespace

ToyTransformer toy_build(std::uint64_t seed, int num_layers, int model_dim,
                         int vocab_size, int max_seq_len) {
  if (num_layers < 1 || model_dim < 1 || vocab_size < 2 || max_seq_len < 1)
    throw ContractViolation("toy_build: bad dimensions");
  ToyTransformer model;
  model.num_layers = num_layers;
  model.model_dim = model_dim;
  model.vocab_size = vocab_size;
  model.max_seq_len = max_seq_len;
  model.seed = seed;

  const int d = model_dim;
  const int hidden = 2 * d;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Rng rng = make_stream(seed, "toy-weights");
  model.embed.resize(static_cast<std::size_t>(vocab_size) * d);
  fill_gaussian(rng, model.embed, 1.0);
  model.positions.resize(static_cast<std::size_t>(max_seq_len) * d);
  fill_gaussian(rng, model.positions, 0.3);
  model.layers.resize(num_layers);
  for (auto& lw : model.layers) {
    lw.wq.resize(static_cast<std::size_t>(d) * d);
    lw.wk.resize(static_cast<std::size_t>(d) * d);
    lw.wv.resize(static_cast<std::size_t>(d) * d);
    lw.wo.resize(static_cast<std::size_t>(d) * d);
    lw.w1.resize(static_cast<std::size_t>(hidden) * d);
    lw.b1.resize(hidden);
    lw.w2.resize(static_cast<std::size_t>(d) * hidden);
    lw.b2.resize(d);
    fill_gaussian(rng, lw.wq, scale);
    fill_gaussian(rng, lw.wk, scale);
    fill_gaussian(rng, lw.wv, scale);
    fill_gaussian(rng, lw.wo, scale);
    fill_gaussian(rng, lw.w1, scale);
    fill_gaussian(rng, lw.b1, 0.1);
    fill_gaussian(rng, lw.w2, 1.0 / std::sqrt(static_cast<double>(hidden)));
    fill_gaussian(rng, lw.b2, 0.1);
  }
  model.head.resize(static_cast<std::size_t>(vocab_size) * d);
  fill_gaussian(rng, model.head, scale);
  return model;
}

int toy_forward(const ToyTransformer& model, const std::vector<int>& tokens,
                const LayerPath& path, double* max_abs_activation) {
  const int d = model.model_dim;
  const int hidden = 2 * d;
  const int seq = static_cast<int>(tokens.size());
  if (path.empty())
    throw ContractViolation("toy_forward: empty layer path");
  if (seq < 1 || seq > model.max_seq_len)
    throw ContractViolation("toy_forward: sequence length out of range");
  for (int t : tokens)
    if (t < 0 || t >= model.vocab_size)
      throw ContractViolation("toy_forward: token id outside vocabulary");

  std::vector<double> x(static_cast<std::size_t>(seq) * d);
  for (int t = 0; t < seq; ++t)
    for (int i = 0; i < d; ++i)
      x[t * d + i] = model.embed[static_cast<std::size_t>(tokens[t]) * d + i] +
                     model.positions[static_cast<std::size_t>(t) * d + i];

  std::vector<double> normed(static_cast<std::size_t>(seq) * d);
  std::vector<double> q(static_cast<std::size_t>(seq) * d);
  std::vector<double> k(static_cast<std::size_t>(seq) * d);
  std::vector<double> v(static_cast<std::size_t>(seq) * d);
  std::vector<double> ctx(d), proj(d), hid(hidden), ff(d);
  std::vector<double> weights(seq);
  double max_abs = 0.0;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double alpha = model.residual_scale;

  for (LayerRef layer : path) {
    if (layer < 0 || layer >= model.num_layers)
      throw ContractViolation("toy_forward: layer index out of range");
    const auto& lw = model.layers[layer];

    // Causal single-head attention, pre-normalized residual update.
    for (int t = 0; t < seq; ++t) rms_normalize(&x[t * d], &normed[t * d], d);
    for (int t = 0; t < seq; ++t) {
      matvec(lw.wq, &normed[t * d], &q[t * d], d, d);
      matvec(lw.wk, &normed[t * d], &k[t * d], d, d);
      matvec(lw.wv, &normed[t * d], &v[t * d], d, d);
    }
    for (int t = 0; t < seq; ++t) {
      double max_score = -std::numeric_limits<double>::infinity();
      for (int s = 0; s <= t; ++s) {
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += q[t * d + i] * k[s * d + i];
        weights[s] = dot * inv_sqrt_d;
        max_score = std::max(max_score, weights[s]);
      }
      double denom = 0.0;
      for (int s = 0; s <= t; ++s) {
        weights[s] = std::exp(weights[s] - max_score);
        denom += weights[s];
      }
      std::fill(ctx.begin(), ctx.end(), 0.0);
      for (int s = 0; s <= t; ++s) {
        const double a = weights[s] / denom;
        for (int i = 0; i < d; ++i) ctx[i] += a * v[s * d + i];
      }
      matvec(lw.wo, ctx.data(), proj.data(), d, d);
      for (int i = 0; i < d; ++i) x[t * d + i] += alpha * proj[i];
    }

    // Tanh feed-forward, same residual form. Bounded activation keeps the
    // per-step update bounded, so magnitudes grow at most linearly with
    // depth even when one layer repeats many times.
    for (int t = 0; t < seq; ++t) {
      rms_normalize(&x[t * d], normed.data(), d);
      matvec(lw.w1, normed.data(), hid.data(), hidden, d);
      for (int h = 0; h < hidden; ++h) hid[h] = std::tanh(hid[h] + lw.b1[h]);
      matvec(lw.w2, hid.data(), ff.data(), d, hidden);
      for (int i = 0; i < d; ++i) x[t * d + i] += alpha * (ff[i] + lw.b2[i]);
    }

    if (max_abs_activation)
      for (double value : x) max_abs = std::max(max_abs, std::fabs(value));
  }

  std::vector<double> pooled(d);
  rms_normalize(&x[(seq - 1) * d], pooled.data(), d);
  int best = 0;
  double best_logit = -std::numeric_limits<double>::infinity();
  for (int label = 0; label < model.vocab_size; ++label) {
    double logit = 0.0;
    for (int i = 0; i < d; ++i)
      logit += model.head[static_cast<std::size_t>(label) * d + i] * pooled[i];
    if (logit > best_logit) {
      best_logit = logit;
      best = label;
    }
  }
  if (max_abs_activation) *max_abs_activation = max_abs;
  return best;
}

EvaluationOutcome ToyEvaluator::evaluate(const TaskInstance& instance,
                                         const LayerPath& path) const {
  if (!instance.payload.contains("tokens") ||
      !instance.payload["tokens"].is_array())
    throw ContractViolation("toy evaluate: payload lacks token sequence");
  const auto tokens = instance.payload["tokens"].get<std::vector<int>>();
  const int label = toy_forward(model_, tokens, path);
  const bool correct = instance.expected.is_number_integer() &&
                       instance.expected.get<int>() == label;
  return make_outcome(correct, path, model_.num_layers, rho_,
                      std::to_string(label));
}

std::vector<TaskInstance> toy_instances(const ToyTransformer& model,
                                        std::uint64_t seed, int count,
                                        int seq_len, ToyLabeling labeling,
                                        const std::string& id_prefix) {
  if (seq_len < 1 || seq_len > model.max_seq_len)
    throw ContractViolation("toy_instances: seq_len out of range");
  Rng rng = make_stream(seed, "toy-instances");
  const LayerPath full = identity_path(model.num_layers);
  // Adversarial labels come from a sibling model the searched model never
  // matches exactly, so the identity path is usually wrong.
  std::optional<ToyTransformer> perturbed;
  if (labeling == ToyLabeling::Adversarial)
    perturbed = toy_build(splitmix64(model.seed ^ 0x5bd1e995u), model.num_layers,
                          model.model_dim, model.vocab_size, model.max_seq_len);
  std::vector<TaskInstance> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::vector<int> tokens(seq_len);
    for (auto& t : tokens)
      t = static_cast<int>(next_below(rng, model.vocab_size));
    const int label = labeling == ToyLabeling::SelfLabeled
                          ? toy_forward(model, tokens, full)
                          : toy_forward(*perturbed, tokens, full);
    TaskInstance instance;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "-%04d", i);
    instance.id = id_prefix + idbuf;
    instance.payload = nlohmann::json{{"tokens", tokens}};
    instance.expected = label;
    out.push_back(std::move(instance));
  }
  return out;
}

}  // namespace cola
