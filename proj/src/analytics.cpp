#include "cola/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cola::analytics {

PathRecord make_record(const mcts::SearchResult& result, RunMode mode) {
  PathRecord record;
  record.instance_id = result.instance_id;
  record.original_correct = result.original_outcome.correct;
  record.reported_path = result.reported.path;
  record.reported_correct = result.reported.outcome.correct;
  record.depth = result.reported.outcome.depth;
  record.non_recurrent_depth = result.reported.outcome.non_recurrent_depth;
  record.mode = mode;
  return record;
}

std::string to_string(TransitionCategory category) {
  switch (category) {
    case TransitionCategory::OriginalOptimal: return "original_optimal";
    case TransitionCategory::CtoC: return "c_to_c";
    case TransitionCategory::WtoC: return "w_to_c";
    case TransitionCategory::WtoW: return "w_to_w";
  }
  throw ContractViolation("unknown TransitionCategory");
}

bool shorter_correct_found(const PathRecord& record, int num_layers) {
  return record.reported_correct &&
         !is_identity(record.reported_path, num_layers);
}

TransitionCategory classify_transition(const PathRecord& record,
                                       bool shorter_correct_found) {
  if (record.original_correct)
    return shorter_correct_found ? TransitionCategory::CtoC
                                 : TransitionCategory::OriginalOptimal;
  return record.reported_correct ? TransitionCategory::WtoC
                                 : TransitionCategory::WtoW;
}

TransitionCounts count_transitions(const std::vector<PathRecord>& records,
                                   int num_layers) {
  TransitionCounts counts;
  for (const auto& record : records) {
    const auto category = classify_transition(
        record, shorter_correct_found(record, num_layers));
    counts.by_category[static_cast<std::size_t>(category)] += 1;
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Engagement
// ---------------------------------------------------------------------------

namespace {

// Integer tallies; every ratio in the profile is formed from these, which
// keeps the parallel and serial versions bit-identical.
struct UsageTally {
  std::vector<std::int64_t> records_using;      // per layer
  std::vector<std::int64_t> extra_occurrences;  // per layer
  std::vector<std::int64_t> occurrences;        // per layer

  explicit UsageTally(int num_layers)
      : records_using(num_layers, 0),
        extra_occurrences(num_layers, 0),
        occurrences(num_layers, 0) {}

  void add(const PathRecord& record, int num_layers) {
    std::vector<int> occ(num_layers, 0);
    for (LayerRef layer : record.reported_path) {
      if (layer < 0 || layer >= num_layers)
        throw ContractViolation("engagement: layer index out of range");
      occ[layer] += 1;
    }
    for (int i = 0; i < num_layers; ++i) {
      if (occ[i] > 0) records_using[i] += 1;
      extra_occurrences[i] += std::max(occ[i] - 1, 0);
      occurrences[i] += occ[i];
    }
  }

  void merge(const UsageTally& other) {
    for (std::size_t i = 0; i < records_using.size(); ++i) {
      records_using[i] += other.records_using[i];
      extra_occurrences[i] += other.extra_occurrences[i];
      occurrences[i] += other.occurrences[i];
    }
  }
};

EngagementProfile profile_from(const UsageTally& tally, int num_layers,
                               std::int64_t record_count) {
  EngagementProfile profile;
  profile.selection_frequency.resize(num_layers);
  profile.skip_rate.resize(num_layers);
  profile.mean_recurrence.resize(num_layers);
  std::int64_t total = 0;
  for (int i = 0; i < num_layers; ++i) total += tally.occurrences[i];
  for (int i = 0; i < num_layers; ++i) {
    profile.selection_frequency[i] =
        static_cast<double>(tally.records_using[i]) / record_count;
    profile.skip_rate[i] = 1.0 - profile.selection_frequency[i];
    profile.mean_recurrence[i] =
        static_cast<double>(tally.extra_occurrences[i]) / record_count;
  }
  if (total == 0) {
    profile.empty_usage = true;
    return profile;
  }
  double entropy = 0.0;
  double max_p = 0.0;
  for (int i = 0; i < num_layers; ++i) {
    if (tally.occurrences[i] == 0) continue;
    const double p = static_cast<double>(tally.occurrences[i]) / total;
    entropy -= p * std::log(p);
    max_p = std::max(max_p, p);
  }
  profile.usage_entropy = entropy;
  profile.max_concentration = max_p;
  return profile;
}

}  // namespace

EngagementProfile engagement(const std::vector<PathRecord>& records,
                             int num_layers) {
  if (records.empty())
    throw ContractViolation("engagement: records must be nonempty");
  UsageTally tally(num_layers);
  for (const auto& record : records) tally.add(record, num_layers);
  return profile_from(tally, num_layers,
                      static_cast<std::int64_t>(records.size()));
}

EngagementProfile engagement_parallel(const std::vector<PathRecord>& records,
                                      int num_layers) {
  if (records.empty())
    throw ContractViolation("engagement: records must be nonempty");
  UsageTally tally(num_layers);
#pragma omp parallel
  {
    UsageTally local(num_layers);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(records.size());
         ++i)
      local.add(records[static_cast<std::size_t>(i)], num_layers);
#pragma omp critical(cola_engagement_merge)
    tally.merge(local);
  }
  return profile_from(tally, num_layers,
                      static_cast<std::int64_t>(records.size()));
}

// ---------------------------------------------------------------------------
// Depth statistics
// ---------------------------------------------------------------------------

namespace {

DepthStats stats_over(const std::vector<const PathRecord*>& slice) {
  DepthStats stats;
  stats.count = static_cast<int>(slice.size());
  double depth_sum = 0.0;
  double nrd_sum = 0.0;
  for (const auto* record : slice) {
    depth_sum += record->depth;
    nrd_sum += record->non_recurrent_depth;
  }
  stats.mean_depth = depth_sum / stats.count;
  stats.mean_non_recurrent_depth = nrd_sum / stats.count;
  return stats;
}

}  // namespace

DepthByTransition depth_by_transition(const std::vector<PathRecord>& records,
                                      int num_layers) {
  std::vector<const PathRecord*> c_to_c;
  std::vector<const PathRecord*> w_to_c;
  for (const auto& record : records) {
    switch (classify_transition(record,
                                shorter_correct_found(record, num_layers))) {
      case TransitionCategory::CtoC: c_to_c.push_back(&record); break;
      case TransitionCategory::WtoC: w_to_c.push_back(&record); break;
      default: break;
    }
  }
  DepthByTransition split;
  if (!c_to_c.empty()) split.c_to_c = stats_over(c_to_c);
  if (!w_to_c.empty()) split.w_to_c = stats_over(w_to_c);
  return split;
}

std::optional<std::vector<PercentileRow>> percentile_depths(
    const std::vector<PathRecord>& records, const std::vector<int>& qs) {
  std::vector<const PathRecord*> correct;
  for (const auto& record : records)
    if (record.reported_correct) correct.push_back(&record);
  if (correct.empty()) return std::nullopt;

  std::sort(correct.begin(), correct.end(),
            [](const PathRecord* a, const PathRecord* b) {
              if (a->depth != b->depth) return a->depth < b->depth;
              if (a->non_recurrent_depth != b->non_recurrent_depth)
                return a->non_recurrent_depth < b->non_recurrent_depth;
              if (a->instance_id != b->instance_id)
                return a->instance_id < b->instance_id;
              return a->mode < b->mode;
            });

  const auto m = static_cast<double>(correct.size());
  std::vector<PercentileRow> rows;
  rows.reserve(qs.size());
  for (int q : qs) {
    if (q < 1 || q > 100)
      throw ContractViolation("percentile_depths: q must be in [1, 100]");
    const auto take = static_cast<std::size_t>(
        std::ceil(static_cast<double>(q) / 100.0 * m));
    std::vector<const PathRecord*> slice(correct.begin(),
                                         correct.begin() + take);
    rows.push_back({q, stats_over(slice)});
  }
  return rows;
}

std::vector<TradeoffPoint> tradeoff_points(
    const std::vector<PathRecord>& records) {
  std::vector<TradeoffPoint> points;
  for (const RunMode mode :
       {RunMode::Joint, RunMode::SkipOnly, RunMode::RecurrenceOnly,
        RunMode::OriginalOnly}) {
    double depth_sum = 0.0;
    int count = 0;
    int correct = 0;
    for (const auto& record : records) {
      if (record.mode != mode) continue;
      depth_sum += record.depth;
      count += 1;
      correct += record.reported_correct ? 1 : 0;
    }
    if (count == 0) continue;
    points.push_back({mode, depth_sum / count,
                      static_cast<double>(correct) / count, count});
  }
  return points;
}

std::vector<SegmentSummary> segment_summaries(const EngagementProfile& profile,
                                              int num_layers) {
  const int b1 = num_layers / 3;
  const int b2 = 2 * num_layers / 3;
  const std::array<std::pair<int, int>, 3> ranges{
      std::pair{0, b1}, std::pair{b1, b2}, std::pair{b2, num_layers}};
  const std::array<std::string, 3> names{"early", "middle", "late"};
  std::vector<SegmentSummary> segments;
  for (int s = 0; s < 3; ++s) {
    SegmentSummary seg;
    seg.name = names[static_cast<std::size_t>(s)];
    const auto [lo, hi] = ranges[static_cast<std::size_t>(s)];
    seg.first_layer = lo;
    seg.last_layer = hi - 1;
    if (lo < hi) {
      double skip_sum = 0.0;
      double rec_sum = 0.0;
      for (int i = lo; i < hi; ++i) {
        skip_sum += profile.skip_rate[static_cast<std::size_t>(i)];
        rec_sum += profile.mean_recurrence[static_cast<std::size_t>(i)];
      }
      seg.mean_skip_rate = skip_sum / (hi - lo);
      seg.mean_recurrence = rec_sum / (hi - lo);
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

CorpusReport build_report(const std::vector<PathRecord>& records,
                          int num_layers) {
  if (records.empty())
    throw ContractViolation("build_report: records must be nonempty");
  CorpusReport report;
  report.num_layers = num_layers;
  report.record_count = static_cast<int>(records.size());
  int correct = 0;
  for (const auto& record : records)
    correct += record.reported_correct ? 1 : 0;
  report.accuracy = static_cast<double>(correct) / report.record_count;
  report.transitions = count_transitions(records, num_layers);
  report.depth_split = depth_by_transition(records, num_layers);
  report.percentiles = percentile_depths(records);
  report.engagement = engagement_parallel(records, num_layers);
  report.segments = segment_summaries(report.engagement, num_layers);
  report.tradeoff = tradeoff_points(records);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json stats_json(const DepthStats& stats) {
  return {{"mean_depth", stats.mean_depth},
          {"mean_non_recurrent_depth", stats.mean_non_recurrent_depth},
          {"count", stats.count}};
}

}  // namespace

nlohmann::json report_json(const CorpusReport& report) {
  nlohmann::json j;
  j["num_layers"] = report.num_layers;
  j["record_count"] = report.record_count;
  j["accuracy"] = report.accuracy;

  nlohmann::json transitions;
  for (int c = 0; c < 4; ++c)
    transitions[to_string(static_cast<TransitionCategory>(c))] =
        report.transitions.by_category[static_cast<std::size_t>(c)];
  j["transitions"] = transitions;

  nlohmann::json split = nlohmann::json::object();
  if (report.depth_split.c_to_c)
    split["c_to_c"] = stats_json(*report.depth_split.c_to_c);
  if (report.depth_split.w_to_c)
    split["w_to_c"] = stats_json(*report.depth_split.w_to_c);
  j["depth_by_transition"] = split;

  if (report.percentiles) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : *report.percentiles) {
      nlohmann::json r = stats_json(row.stats);
      r["q"] = row.q;
      rows.push_back(r);
    }
    j["percentile_depths"] = rows;
  }

  nlohmann::json usage;
  usage["selection_frequency"] = report.engagement.selection_frequency;
  usage["skip_rate"] = report.engagement.skip_rate;
  usage["mean_recurrence"] = report.engagement.mean_recurrence;
  usage["empty_usage"] = report.engagement.empty_usage;
  if (!report.engagement.empty_usage) {
    usage["usage_entropy"] = report.engagement.usage_entropy;
    usage["max_concentration"] = report.engagement.max_concentration;
  }
  j["engagement"] = usage;

  nlohmann::json segments = nlohmann::json::array();
  for (const auto& seg : report.segments)
    segments.push_back({{"name", seg.name},
                        {"first_layer", seg.first_layer},
                        {"last_layer", seg.last_layer},
                        {"mean_skip_rate", seg.mean_skip_rate},
                        {"mean_recurrence", seg.mean_recurrence}});
  j["segments"] = segments;

  nlohmann::json tradeoff = nlohmann::json::array();
  for (const auto& point : report.tradeoff)
    tradeoff.push_back({{"mode", mcts::to_string(point.mode)},
                        {"mean_depth", point.mean_depth},
                        {"accuracy", point.accuracy},
                        {"count", point.count}});
  j["tradeoff_points"] = tradeoff;
  return j;
}

std::string matrix_csv(const std::vector<std::string>& dataset_names,
                       const std::vector<std::vector<double>>& columns) {
  if (dataset_names.size() != columns.size())
    throw ContractViolation("matrix_csv: one name per column required");
  if (columns.empty()) throw ContractViolation("matrix_csv: no columns");
  const std::size_t rows = columns.front().size();
  for (const auto& column : columns)
    if (column.size() != rows)
      throw ContractViolation("matrix_csv: ragged columns");

  std::string out = "layer";
  for (const auto& name : dataset_names) {
    out.push_back(',');
    out += name;
  }
  out.push_back('\n');
  char buf[32];
  for (std::size_t r = 0; r < rows; ++r) {
    out += std::to_string(r + 1);  // human-facing, 1-based
    for (const auto& column : columns) {
      const auto [end, ec] =
          std::to_chars(buf, buf + sizeof buf, column[r]);
      if (ec != std::errc())
        throw ContractViolation("matrix_csv: number formatting failed");
      out.push_back(',');
      out.append(buf, end);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace cola::analytics
