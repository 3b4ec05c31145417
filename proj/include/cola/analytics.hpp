#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cola/mcts.hpp"
#include "cola/path_space.hpp"

namespace cola::analytics {

using mcts::RunMode;

// One searched instance reduced to what the aggregate views need.
struct PathRecord {
  std::string instance_id;
  bool original_correct = false;
  LayerPath reported_path;
  bool reported_correct = false;
  int depth = 0;
  int non_recurrent_depth = 0;
  RunMode mode = RunMode::Joint;

  friend bool operator==(const PathRecord&, const PathRecord&) = default;
};

PathRecord make_record(const mcts::SearchResult& result, RunMode mode);

enum class TransitionCategory : std::uint8_t {
  OriginalOptimal = 0,  // original correct, nothing shorter found
  CtoC = 1,             // original correct, shorter correct path found
  WtoC = 2,             // original wrong, search found a correct path
  WtoW = 3,             // original wrong, search did not fix it
};

std::string to_string(TransitionCategory category);

// True when the search reported a correct path other than the identity.
bool shorter_correct_found(const PathRecord& record, int num_layers);

TransitionCategory classify_transition(const PathRecord& record,
                                       bool shorter_correct_found);

struct TransitionCounts {
  std::array<int, 4> by_category{};  // indexed by TransitionCategory

  int total() const {
    return by_category[0] + by_category[1] + by_category[2] + by_category[3];
  }
  friend bool operator==(const TransitionCounts&,
                         const TransitionCounts&) = default;
};

TransitionCounts count_transitions(const std::vector<PathRecord>& records,
                                   int num_layers);

// Per-layer usage across reported paths. All ratios derive from integer
// tallies, so the parallel tally reproduces the serial one bit for bit.
struct EngagementProfile {
  std::vector<double> selection_frequency;  // fraction of records using i
  std::vector<double> skip_rate;            // 1 - selection_frequency
  std::vector<double> mean_recurrence;      // mean extra occurrences of i
  double usage_entropy = 0.0;               // natural log
  double max_concentration = 0.0;
  bool empty_usage = false;  // no occurrences at all: entropy undefined

  friend bool operator==(const EngagementProfile&,
                         const EngagementProfile&) = default;
};

EngagementProfile engagement(const std::vector<PathRecord>& records,
                             int num_layers);
// OpenMP tally; identical output to engagement().
EngagementProfile engagement_parallel(const std::vector<PathRecord>& records,
                                      int num_layers);

struct DepthStats {
  double mean_depth = 0.0;
  double mean_non_recurrent_depth = 0.0;
  int count = 0;

  friend bool operator==(const DepthStats&, const DepthStats&) = default;
};

// Mean depths for the C->C and W->C slices; a slice with no records is
// absent rather than zero.
struct DepthByTransition {
  std::optional<DepthStats> c_to_c;
  std::optional<DepthStats> w_to_c;

  friend bool operator==(const DepthByTransition&,
                         const DepthByTransition&) = default;
};

DepthByTransition depth_by_transition(const std::vector<PathRecord>& records,
                                      int num_layers);

struct PercentileRow {
  int q = 0;  // percent of shortest correct paths included
  DepthStats stats;

  friend bool operator==(const PercentileRow&, const PercentileRow&) = default;
};

// Means over the shortest q% of reported-correct records (ceil rule),
// sorted by (depth, non_recurrent_depth, instance_id, mode). Absent when
// no record is correct.
std::optional<std::vector<PercentileRow>> percentile_depths(
    const std::vector<PathRecord>& records,
    const std::vector<int>& qs = {5, 10, 20, 100});

struct TradeoffPoint {
  RunMode mode = RunMode::Joint;
  double mean_depth = 0.0;  // over all records of the mode
  double accuracy = 0.0;    // fraction reported_correct
  int count = 0;

  friend bool operator==(const TradeoffPoint&, const TradeoffPoint&) = default;
};

// One point per mode present in the records, in RunMode order.
std::vector<TradeoffPoint> tradeoff_points(
    const std::vector<PathRecord>& records);

// Thirds of the layer range by index (boundaries round down), summarizing
// skip rate and recurrence per region.
struct SegmentSummary {
  std::string name;  // early | middle | late
  int first_layer = 0;
  int last_layer = 0;  // inclusive; -1 for an empty segment
  double mean_skip_rate = 0.0;
  double mean_recurrence = 0.0;

  friend bool operator==(const SegmentSummary&,
                         const SegmentSummary&) = default;
};

std::vector<SegmentSummary> segment_summaries(const EngagementProfile& profile,
                                              int num_layers);

struct CorpusReport {
  int num_layers = 0;
  int record_count = 0;
  double accuracy = 0.0;  // fraction reported_correct over all records
  TransitionCounts transitions;
  DepthByTransition depth_split;
  std::optional<std::vector<PercentileRow>> percentiles;
  EngagementProfile engagement;
  std::vector<SegmentSummary> segments;
  std::vector<TradeoffPoint> tradeoff;

  friend bool operator==(const CorpusReport&, const CorpusReport&) = default;
};

CorpusReport build_report(const std::vector<PathRecord>& records,
                          int num_layers);

// Canonical JSON (sorted keys) for the report file.
nlohmann::json report_json(const CorpusReport& report);

// CSV with one row per layer: first column the 1-based layer index, then
// one column per named dataset. Values print in shortest round-trip form.
std::string matrix_csv(const std::vector<std::string>& dataset_names,
                       const std::vector<std::vector<double>>& columns);

}  // namespace cola::analytics
