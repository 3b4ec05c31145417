#include "cola/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cola/rng.hpp"

namespace cola::mcts {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Joint: return "joint";
    case RunMode::SkipOnly: return "skip";
    case RunMode::RecurrenceOnly: return "recur";
    case RunMode::OriginalOnly: return "original";
  }
  throw ContractViolation("unknown RunMode");
}

RunMode parse_run_mode(const std::string& text) {
  if (text == "joint") return RunMode::Joint;
  if (text == "skip") return RunMode::SkipOnly;
  if (text == "recur") return RunMode::RecurrenceOnly;
  if (text == "original") return RunMode::OriginalOnly;
  throw ParseError("unknown mode '" + text +
                   "' (expected joint|skip|recur|original)");
}

SpaceMode space_mode(RunMode mode) {
  switch (mode) {
    case RunMode::Joint: return SpaceMode::Joint;
    case RunMode::SkipOnly: return SpaceMode::SkipOnly;
    case RunMode::RecurrenceOnly: return SpaceMode::RecurrenceOnly;
    case RunMode::OriginalOnly: break;
  }
  throw ContractViolation("OriginalOnly does not define a search space");
}

void validate(const SearchConfig& config) {
  if (config.simulations < 1)
    throw ContractViolation("search config: simulations must be >= 1");
  if (config.c < 0) throw ContractViolation("search config: c must be >= 0");
  if (config.lambda < 0)
    throw ContractViolation("search config: lambda must be >= 0");
  if (config.epsilon < 0 || config.epsilon > 1)
    throw ContractViolation("search config: epsilon must be in [0, 1]");
  if (config.l_max < 0)
    throw ContractViolation("search config: l_max must be >= 0");
}

double ucb_score(double q_total, int visits, int total_visits, int path_len,
                 int num_layers, double c, double lambda) {
  if (visits < 1 || total_visits < 1 || num_layers < 1)
    throw ContractViolation("ucb_score: visits, V, and N must be >= 1");
  return q_total / visits +
         c * std::sqrt(std::log(static_cast<double>(total_visits)) / visits) -
         lambda * static_cast<double>(path_len) / num_layers;
}

bool reported_before(const Candidate& a, const Candidate& b) {
  if (a.outcome.depth != b.outcome.depth)
    return a.outcome.depth < b.outcome.depth;
  const int da = measure(a.path).non_recurrent_depth;
  const int db = measure(b.path).non_recurrent_depth;
  if (da != db) return da < db;
  return encode_path(a.path) < encode_path(b.path);
}

namespace {

bool canonical_before(const Candidate& a, const Candidate& b) {
  if (a.outcome.depth != b.outcome.depth)
    return a.outcome.depth < b.outcome.depth;
  return encode_path(a.path) < encode_path(b.path);
}

}  // namespace

std::vector<Candidate> pareto_front(const std::vector<Candidate>& candidates) {
  std::vector<Candidate> front;
  for (const auto& b : candidates) {
    bool dominated = false;
    for (const auto& a : candidates) {
      if (&a == &b) continue;
      const bool ge_correct = a.outcome.correct >= b.outcome.correct;
      const bool le_depth = a.outcome.depth <= b.outcome.depth;
      const bool strict = a.outcome.correct > b.outcome.correct ||
                          a.outcome.depth < b.outcome.depth;
      if (ge_correct && le_depth && strict) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(b);
  }
  std::sort(front.begin(), front.end(), canonical_before);
  return front;
}

Candidate select_reported(const std::vector<Candidate>& candidates,
                          int num_layers) {
  if (candidates.empty())
    throw ContractViolation("select_reported: no candidates");
  const Candidate* best = nullptr;
  for (const auto& cand : candidates) {
    if (!cand.outcome.correct) continue;
    if (!best || reported_before(cand, *best)) best = &cand;
  }
  if (best) return *best;
  for (const auto& cand : candidates)
    if (is_identity(cand.path, num_layers)) return cand;
  throw ContractViolation(
      "select_reported: no correct candidate and no identity fallback");
}

namespace {

struct Node {
  PathState state;
  double q_total = 0.0;
  int visits = 0;
  bool terminal = false;
  std::vector<Action> untried;
  std::vector<std::pair<Action, int>> children;  // insertion order
};

class Search {
 public:
  Search(const TaskInstance& instance, const Evaluator& evaluator,
         const SearchConfig& config)
      : instance_(instance),
        evaluator_(evaluator),
        config_(config),
        spec_(make_spec(evaluator.num_layers(), config.l_max)),
        rng_(make_stream(config.seed, instance.id)) {}

  SearchResult run(TreeStats* stats) {
    make_node(initial_state(spec_));
    for (int sim = 0; sim < config_.simulations; ++sim) {
      trajectory_.clear();
      int node = 0;
      trajectory_.push_back(node);
      // Descend to a node that has not been simulated yet (or a terminal
      // one). `sim` equals the completed-simulation count V, so the root
      // itself is simulation #1's leaf and owns the identity evaluation.
      while (nodes_[node].visits > 0 && !nodes_[node].terminal) {
        node = step(node, sim);
        trajectory_.push_back(node);
      }
      const double reward =
          evaluate_path(materialize(nodes_[node].state, spec_));
      for (int n : trajectory_) {
        nodes_[n].visits += 1;
        nodes_[n].q_total += reward;
      }
    }
    if (stats) {
      stats->root_visits = nodes_[0].visits;
      stats->root_q = nodes_[0].q_total;
      stats->node_count = static_cast<int>(nodes_.size());
      stats->root_child_visits = 0;
      for (const auto& [action, child] : nodes_[0].children)
        stats->root_child_visits += nodes_[child].visits;
    }
    return finish();
  }

 private:
  int make_node(PathState state) {
    Node node;
    node.untried = legal_actions(state, spec_, config_.mode);
    node.terminal = node.untried.empty();
    node.state = std::move(state);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  // One descent step: expand with probability epsilon (always when no child
  // exists yet), otherwise follow the best-UCB child, ties to the smallest
  // action.
  int step(int index, int completed) {
    Node& node = nodes_[index];
    if (!node.untried.empty()) {
      const bool must_expand = node.children.empty();
      if (must_expand || next_unit(rng_) < config_.epsilon)
        return expand(index);
    }
    if (node.children.empty())
      throw ContractViolation("search: non-terminal node with no actions");
    int best = -1;
    double best_score = 0.0;
    Action best_action;
    for (const auto& [action, child] : node.children) {
      const Node& c = nodes_[child];
      const double score = ucb_score(
          c.q_total, c.visits, completed,
          static_cast<int>(c.state.prefix.size()) + spec_.num_layers -
              c.state.cursor,
          spec_.num_layers, config_.c, config_.lambda);
      if (best < 0 || score > best_score ||
          (score == best_score && action < best_action)) {
        best = child;
        best_score = score;
        best_action = action;
      }
    }
    return best;
  }

  int expand(int index) {
    auto& untried = nodes_[index].untried;
    if (untried.empty()) throw ContractViolation("expand: no untried actions");
    const auto pick = next_below(rng_, untried.size());
    const Action action = untried[pick];
    untried.erase(untried.begin() + static_cast<std::ptrdiff_t>(pick));
    const int child =
        make_node(apply_action(nodes_[index].state, action, spec_));
    nodes_[index].children.emplace_back(action, child);
    return child;
  }

  double evaluate_path(const LayerPath& path) {
    const std::string enc = encode_path(path);
    if (const auto hit = memo_.find(enc); hit != memo_.end())
      return candidates_[hit->second].outcome.reward;
    Candidate cand;
    cand.path = path;
    try {
      cand.outcome = evaluator_.evaluate(instance_, path);
    } catch (const EvaluationError& err) {
      cand.outcome = make_outcome(false, path, spec_.num_layers, config_.rho);
      failures_.push_back({enc, err.what()});
    }
    memo_.emplace(enc, candidates_.size());
    candidates_.push_back(std::move(cand));
    return candidates_.back().outcome.reward;
  }

  SearchResult finish() {
    SearchResult result;
    result.instance_id = instance_.id;
    result.simulations_run = config_.simulations;
    const std::string identity_enc =
        encode_path(identity_path(spec_.num_layers));
    result.original_outcome = candidates_[memo_.at(identity_enc)].outcome;
    result.candidates = std::move(candidates_);
    std::sort(result.candidates.begin(), result.candidates.end(),
              canonical_before);
    result.pareto = pareto_front(result.candidates);
    result.reported = select_reported(result.candidates, spec_.num_layers);
    result.failures = std::move(failures_);
    std::sort(result.failures.begin(), result.failures.end(),
              [](const SearchFailure& a, const SearchFailure& b) {
                return a.path < b.path;
              });
    return result;
  }

  const TaskInstance& instance_;
  const Evaluator& evaluator_;
  const SearchConfig& config_;
  StackSpec spec_;
  Rng rng_;
  std::vector<Node> nodes_;
  std::vector<int> trajectory_;
  std::vector<Candidate> candidates_;
  std::unordered_map<std::string, std::size_t> memo_;
  std::vector<SearchFailure> failures_;
};

}  // namespace

SearchResult run_search(const TaskInstance& instance,
                        const Evaluator& evaluator,
                        const SearchConfig& config, TreeStats* stats) {
  validate(config);
  return Search(instance, evaluator, config).run(stats);
}

SearchResult evaluate_original(const TaskInstance& instance,
                               const Evaluator& evaluator, double rho) {
  const int n = evaluator.num_layers();
  const LayerPath identity = identity_path(n);
  SearchResult result;
  result.instance_id = instance.id;
  result.simulations_run = 0;
  Candidate cand;
  cand.path = identity;
  try {
    cand.outcome = evaluator.evaluate(instance, identity);
  } catch (const EvaluationError& err) {
    cand.outcome = make_outcome(false, identity, n, rho);
    result.failures.push_back({encode_path(identity), err.what()});
  }
  result.original_outcome = cand.outcome;
  result.candidates = {cand};
  result.pareto = {cand};
  result.reported = std::move(cand);
  return result;
}

}  // namespace cola::mcts
