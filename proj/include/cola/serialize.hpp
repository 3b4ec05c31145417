#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cola/evaluators.hpp"
#include "cola/mcts.hpp"

namespace cola::serialize {

inline constexpr std::string_view kSearchResultSchema = "cola.search_result.v1";

// Canonical forms: nlohmann objects keep keys sorted, dump() emits shortest
// round-trip numbers, so equal values give equal bytes.
nlohmann::json outcome_json(const EvaluationOutcome& outcome);
EvaluationOutcome outcome_from_json(const nlohmann::json& j);

nlohmann::json candidate_json(const mcts::Candidate& candidate);
mcts::Candidate candidate_from_json(const nlohmann::json& j,
                                    const StackSpec& spec);

nlohmann::json search_result_json(const mcts::SearchResult& result,
                                  mcts::RunMode mode);
// Validates the schema (required keys, types, path/outcome consistency,
// reported membership) and throws ParseError on any violation.
std::pair<mcts::SearchResult, mcts::RunMode> search_result_from_json(
    const nlohmann::json& j, const StackSpec& spec);

nlohmann::json instance_json(const TaskInstance& instance);
TaskInstance instance_from_json(const nlohmann::json& j);

// Whole-file helpers; all throw IoError with the path named.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     std::string_view content);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::json>& lines);

// FNV-1a 64 of the raw bytes, as 16 lowercase hex digits.
std::string digest_hex(std::string_view bytes);

}  // namespace cola::serialize
