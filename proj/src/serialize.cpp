#include "cola/serialize.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cola/rng.hpp"

namespace cola::serialize {

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError(std::string("missing required key '") + key + "'");
  return j.at(key);
}

std::string require_string(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string())
    throw ParseError(std::string("key '") + key + "' must be a string");
  return v.get<std::string>();
}

int require_int(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number_integer())
    throw ParseError(std::string("key '") + key + "' must be an integer");
  return v.get<int>();
}

bool require_bool(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_boolean())
    throw ParseError(std::string("key '") + key + "' must be a boolean");
  return v.get<bool>();
}

double require_number(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number())
    throw ParseError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

nlohmann::json outcome_json(const EvaluationOutcome& outcome) {
  nlohmann::json j{{"correct", outcome.correct},
                   {"reward", outcome.reward},
                   {"depth", outcome.depth},
                   {"non_recurrent_depth", outcome.non_recurrent_depth}};
  if (outcome.answer) j["answer"] = *outcome.answer;
  return j;
}

EvaluationOutcome outcome_from_json(const nlohmann::json& j) {
  EvaluationOutcome outcome;
  outcome.correct = require_bool(j, "correct");
  outcome.reward = require_number(j, "reward");
  outcome.depth = require_int(j, "depth");
  outcome.non_recurrent_depth = require_int(j, "non_recurrent_depth");
  if (j.contains("answer")) {
    if (!j.at("answer").is_string())
      throw ParseError("key 'answer' must be a string");
    outcome.answer = j.at("answer").get<std::string>();
  }
  return outcome;
}

nlohmann::json candidate_json(const mcts::Candidate& candidate) {
  return {{"path", encode_path(candidate.path)},
          {"outcome", outcome_json(candidate.outcome)}};
}

mcts::Candidate candidate_from_json(const nlohmann::json& j,
                                    const StackSpec& spec) {
  mcts::Candidate candidate;
  candidate.path = decode_path(require_string(j, "path"), spec);
  candidate.outcome = outcome_from_json(require(j, "outcome"));
  const PathMeasure m = measure(candidate.path);
  if (m.depth != candidate.outcome.depth ||
      m.non_recurrent_depth != candidate.outcome.non_recurrent_depth)
    throw ParseError("candidate outcome depths disagree with its path");
  return candidate;
}

nlohmann::json search_result_json(const mcts::SearchResult& result,
                                  mcts::RunMode mode) {
  nlohmann::json j;
  j["schema"] = kSearchResultSchema;
  j["instance_id"] = result.instance_id;
  j["mode"] = mcts::to_string(mode);
  j["original"] = outcome_json(result.original_outcome);
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& candidate : result.candidates)
    candidates.push_back(candidate_json(candidate));
  j["candidates"] = candidates;
  j["reported"] = candidate_json(result.reported);
  nlohmann::json pareto = nlohmann::json::array();
  for (const auto& candidate : result.pareto)
    pareto.push_back(candidate_json(candidate));
  j["pareto"] = pareto;
  j["simulations_run"] = result.simulations_run;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& failure : result.failures)
    failures.push_back(
        {{"path", failure.path}, {"message", failure.message}});
  j["failures"] = failures;
  return j;
}

std::pair<mcts::SearchResult, mcts::RunMode> search_result_from_json(
    const nlohmann::json& j, const StackSpec& spec) {
  if (require_string(j, "schema") != kSearchResultSchema)
    throw ParseError("unknown search result schema");
  mcts::SearchResult result;
  result.instance_id = require_string(j, "instance_id");
  const mcts::RunMode mode = mcts::parse_run_mode(require_string(j, "mode"));
  result.original_outcome = outcome_from_json(require(j, "original"));

  const auto& candidates = require(j, "candidates");
  if (!candidates.is_array() || candidates.empty())
    throw ParseError("'candidates' must be a nonempty array");
  for (const auto& item : candidates)
    result.candidates.push_back(candidate_from_json(item, spec));

  result.reported = candidate_from_json(require(j, "reported"), spec);
  const bool member =
      std::any_of(result.candidates.begin(), result.candidates.end(),
                  [&](const mcts::Candidate& c) {
                    return c.path == result.reported.path;
                  });
  if (!member) throw ParseError("'reported' is not one of 'candidates'");

  const auto& pareto = require(j, "pareto");
  if (!pareto.is_array()) throw ParseError("'pareto' must be an array");
  for (const auto& item : pareto)
    result.pareto.push_back(candidate_from_json(item, spec));

  result.simulations_run = require_int(j, "simulations_run");
  if (result.simulations_run < 0)
    throw ParseError("'simulations_run' must be >= 0");

  const auto& failures = require(j, "failures");
  if (!failures.is_array()) throw ParseError("'failures' must be an array");
  for (const auto& item : failures)
    result.failures.push_back(
        {require_string(item, "path"), require_string(item, "message")});
  return {std::move(result), mode};
}

nlohmann::json instance_json(const TaskInstance& instance) {
  return {{"id", instance.id},
          {"payload", instance.payload},
          {"expected", instance.expected}};
}

TaskInstance instance_from_json(const nlohmann::json& j) {
  TaskInstance instance;
  instance.id = require_string(j, "id");
  if (instance.id.empty()) throw ParseError("instance 'id' must be nonempty");
  instance.payload = require(j, "payload");
  instance.expected = require(j, "expected");
  return instance;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return std::move(buffer).str();
}

void write_text_file(const std::filesystem::path& path,
                     std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory: " +
                    path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<nlohmann::json> lines;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": invalid JSON");
      lines.push_back(std::move(j));
    }
    start = end + 1;
  }
  return lines;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::json>& lines) {
  std::string out;
  for (const auto& j : lines) {
    out += j.dump();
    out.push_back('\n');
  }
  write_text_file(path, out);
}

std::string digest_hex(std::string_view bytes) {
  const std::uint64_t digest = fnv1a64(bytes);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(digest));
  return std::string(buf, 16);
}

}  // namespace cola::serialize
