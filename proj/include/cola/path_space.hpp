#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cola/errors.hpp"

namespace cola {

// Index of one original layer, zero-based. Rendered one-based only in
// human-facing report output.
using LayerRef = int;

// A concrete execution path: layer indices in application order, repeats
// included. Always non-empty and capped at StackSpec::max_path_len.
using LayerPath = std::vector<LayerRef>;

// The frozen stack being recomposed: N original layers and a cap on how
// long any composed path may grow.
struct StackSpec {
  int num_layers = 0;    // N >= 1
  int max_path_len = 0;  // cap on path length, >= N

  friend bool operator==(const StackSpec&, const StackSpec&) = default;
};

// max_path_len == 0 picks the default cap of 2*N.
StackSpec make_spec(int num_layers, int max_path_len = 0);

enum class ActionKind : std::uint8_t { Keep = 0, Skip = 1, Repeat = 2 };

// One edit on the next contiguous block of untouched layers:
//   Keep(k)      apply the next k layers once, unchanged
//   Skip(k)      drop the next k layers
//   Repeat(k,r)  apply the next k layers r+1 times (r extra copies)
// Block size k and repeat count r both range over 1..4.
struct Action {
  ActionKind kind = ActionKind::Keep;
  int block = 1;
  int extra_copies = 0;  // nonzero only for Repeat

  // Field order gives the documented total order: Keep < Skip < Repeat,
  // then ascending block, then ascending extra_copies.
  friend auto operator<=>(const Action&, const Action&) = default;
};

inline Action keep(int k) { return {ActionKind::Keep, k, 0}; }
inline Action skip(int k) { return {ActionKind::Skip, k, 0}; }
inline Action repeat(int k, int r) { return {ActionKind::Repeat, k, r}; }

constexpr int kMaxBlock = 4;
constexpr int kMaxExtraCopies = 4;

std::string to_string(const Action& a);

// Construction state of a path: the committed prefix plus a cursor marking
// the next original layer not yet edited. The path a state stands for is
// prefix + the untouched remainder [cursor, N).
struct PathState {
  std::vector<LayerRef> prefix;
  int cursor = 0;

  friend bool operator==(const PathState&, const PathState&) = default;
};

// Which edits the search space admits.
enum class SpaceMode : std::uint8_t { Joint = 0, SkipOnly = 1, RecurrenceOnly = 2 };

std::string_view to_string(SpaceMode mode);

struct PathMeasure {
  int depth = 0;                // layer applications, repeats counted
  int non_recurrent_depth = 0;  // distinct layers touched

  friend bool operator==(const PathMeasure&, const PathMeasure&) = default;
};

// Root state: nothing committed, nothing consumed. Materializes to the
// identity path [0, .., N-1].
PathState initial_state(const StackSpec& spec);

// Every action applicable to `state`: block must fit the remaining layers,
// the default continuation must still fit the cap, the mode must admit the
// edit, and a Skip may not leave the completed path empty. Returned in the
// Action total order. Empty exactly when the state is terminal.
std::vector<Action> legal_actions(const PathState& state, const StackSpec& spec,
                                  SpaceMode mode);

// Applies one action. Throws ContractViolation (with the offending action
// spelled out) rather than truncating when the action is illegal.
PathState apply_action(const PathState& state, const Action& action,
                       const StackSpec& spec);

// The path this state stands for: prefix + untouched remainder.
LayerPath materialize(const PathState& state, const StackSpec& spec);

bool is_terminal(const PathState& state, const StackSpec& spec);

PathMeasure measure(const LayerPath& path);

bool is_identity(const LayerPath& path, int num_layers);

LayerPath identity_path(int num_layers);

// Comma-joined index list, e.g. [0,1,1,2] <-> "0,1,1,2". decode_path throws
// ParseError naming the offending token.
std::string encode_path(const LayerPath& path);
LayerPath decode_path(std::string_view text, const StackSpec& spec);

}  // namespace cola
