#include "cola/path_space.hpp"

#include <algorithm>
#include <charconv>

namespace cola {

namespace {

void check_spec(const StackSpec& spec) {
  if (spec.num_layers < 1)
    throw ContractViolation("StackSpec: num_layers must be >= 1");
  if (spec.max_path_len < spec.num_layers)
    throw ContractViolation("StackSpec: max_path_len must be >= num_layers");
}

void check_state(const PathState& state, const StackSpec& spec) {
  check_spec(spec);
  if (state.cursor < 0 || state.cursor > spec.num_layers)
    throw ContractViolation("PathState: cursor out of range");
  if (static_cast<int>(state.prefix.size()) > spec.max_path_len)
    throw ContractViolation("PathState: prefix exceeds max_path_len");
  for (LayerRef layer : state.prefix)
    if (layer < 0 || layer >= spec.num_layers)
      throw ContractViolation("PathState: prefix layer index out of range");
}

// Length of the path this state completes to if no further edits are made.
int default_completion_len(const PathState& state, const StackSpec& spec) {
  return static_cast<int>(state.prefix.size()) + spec.num_layers - state.cursor;
}

bool mode_allows(SpaceMode mode, ActionKind kind) {
  switch (kind) {
    case ActionKind::Keep:
      return true;
    case ActionKind::Skip:
      return mode != SpaceMode::RecurrenceOnly;
    case ActionKind::Repeat:
      return mode != SpaceMode::SkipOnly;
  }
  return false;
}

bool action_fits(const PathState& state, const StackSpec& spec, SpaceMode mode,
                 const Action& a) {
  if (!mode_allows(mode, a.kind)) return false;
  if (a.block < 1 || a.block > kMaxBlock) return false;
  if (state.cursor + a.block > spec.num_layers) return false;
  const int prefix_len = static_cast<int>(state.prefix.size());
  switch (a.kind) {
    case ActionKind::Keep:
      if (a.extra_copies != 0) return false;
      // Keep moves layers from the remainder into the prefix, so the
      // default-completion length is unchanged.
      return default_completion_len(state, spec) <= spec.max_path_len;
    case ActionKind::Skip:
      if (a.extra_copies != 0) return false;
      // A completed path must hold at least one layer.
      if (prefix_len == 0 && state.cursor + a.block == spec.num_layers)
        return false;
      return true;
    case ActionKind::Repeat:
      if (a.extra_copies < 1 || a.extra_copies > kMaxExtraCopies) return false;
      return default_completion_len(state, spec) + a.block * a.extra_copies <=
             spec.max_path_len;
  }
  return false;
}

}  // namespace

StackSpec make_spec(int num_layers, int max_path_len) {
  StackSpec spec{num_layers, max_path_len == 0 ? 2 * num_layers : max_path_len};
  check_spec(spec);
  return spec;
}

std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActionKind::Keep:
      return "Keep(" + std::to_string(a.block) + ")";
    case ActionKind::Skip:
      return "Skip(" + std::to_string(a.block) + ")";
    case ActionKind::Repeat:
      return "Repeat(" + std::to_string(a.block) + "," +
             std::to_string(a.extra_copies) + ")";
  }
  return "?";
}

std::string_view to_string(SpaceMode mode) {
  switch (mode) {
    case SpaceMode::Joint:
      return "joint";
    case SpaceMode::SkipOnly:
      return "skip";
    case SpaceMode::RecurrenceOnly:
      return "recur";
  }
  return "?";
}

PathState initial_state(const StackSpec& spec) {
  check_spec(spec);
  return PathState{{}, 0};
}

std::vector<Action> legal_actions(const PathState& state, const StackSpec& spec,
                                  SpaceMode mode) {
  check_state(state, spec);
  std::vector<Action> out;
  // Emitted in the Action total order: all Keeps, all Skips, all Repeats.
  for (int k = 1; k <= kMaxBlock; ++k)
    if (action_fits(state, spec, mode, keep(k))) out.push_back(keep(k));
  for (int k = 1; k <= kMaxBlock; ++k)
    if (action_fits(state, spec, mode, skip(k))) out.push_back(skip(k));
  for (int k = 1; k <= kMaxBlock; ++k)
    for (int r = 1; r <= kMaxExtraCopies; ++r)
      if (action_fits(state, spec, mode, repeat(k, r)))
        out.push_back(repeat(k, r));
  return out;
}

PathState apply_action(const PathState& state, const Action& action,
                       const StackSpec& spec) {
  check_state(state, spec);
  // Mode is the caller's concern here; reject anything that breaks the
  // grammar or the cap under the widest mode.
  if (!action_fits(state, spec, SpaceMode::Joint, action))
    throw ContractViolation("illegal action " + to_string(action) +
                            " at cursor " + std::to_string(state.cursor) +
                            " (prefix length " +
                            std::to_string(state.prefix.size()) + ", N=" +
                            std::to_string(spec.num_layers) + ", cap=" +
                            std::to_string(spec.max_path_len) + ")");
  PathState next = state;
  switch (action.kind) {
    case ActionKind::Keep:
      for (int i = 0; i < action.block; ++i)
        next.prefix.push_back(state.cursor + i);
      break;
    case ActionKind::Skip:
      break;
    case ActionKind::Repeat:
      for (int copy = 0; copy <= action.extra_copies; ++copy)
        for (int i = 0; i < action.block; ++i)
          next.prefix.push_back(state.cursor + i);
      break;
  }
  next.cursor = state.cursor + action.block;
  return next;
}

LayerPath materialize(const PathState& state, const StackSpec& spec) {
  check_state(state, spec);
  LayerPath path = state.prefix;
  path.reserve(state.prefix.size() + spec.num_layers - state.cursor);
  for (int i = state.cursor; i < spec.num_layers; ++i) path.push_back(i);
  return path;
}

bool is_terminal(const PathState& state, const StackSpec& spec) {
  check_state(state, spec);
  return state.cursor == spec.num_layers;
}

PathMeasure measure(const LayerPath& path) {
  LayerPath sorted = path;
  std::sort(sorted.begin(), sorted.end());
  const auto last = std::unique(sorted.begin(), sorted.end());
  return PathMeasure{static_cast<int>(path.size()),
                     static_cast<int>(last - sorted.begin())};
}

bool is_identity(const LayerPath& path, int num_layers) {
  if (static_cast<int>(path.size()) != num_layers) return false;
  for (int i = 0; i < num_layers; ++i)
    if (path[i] != i) return false;
  return true;
}

LayerPath identity_path(int num_layers) {
  LayerPath path(num_layers);
  for (int i = 0; i < num_layers; ++i) path[i] = i;
  return path;
}

std::string encode_path(const LayerPath& path) {
  std::string out;
  out.reserve(path.size() * 3);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(path[i]);
  }
  return out;
}

LayerPath decode_path(std::string_view text, const StackSpec& spec) {
  check_spec(spec);
  LayerPath path;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(',', pos);
    const std::string_view token =
        text.substr(pos, next == std::string_view::npos ? next : next - pos);
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
      throw ParseError("path text: bad token '" + std::string(token) + "'");
    if (value < 0 || value >= spec.num_layers)
      throw ParseError("path text: layer index '" + std::string(token) +
                       "' outside [0, " + std::to_string(spec.num_layers) +
                       ")");
    path.push_back(value);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (static_cast<int>(path.size()) > spec.max_path_len)
    throw ParseError("path text: length " + std::to_string(path.size()) +
                     " exceeds cap " + std::to_string(spec.max_path_len));
  return path;
}

}  // namespace cola
