#pragma once

#include <vector>

#include "cola/mcts.hpp"

namespace cola::runner {

struct CorpusOptions {
  mcts::SearchConfig base;          // mode field replaced per task
  std::vector<mcts::RunMode> modes;
  int workers = 0;  // OpenMP thread count; 0 = library default
};

struct CorpusEntry {
  mcts::RunMode mode = mcts::RunMode::Joint;
  mcts::SearchResult result;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

// Runs every (instance, mode) pair. Output order is instance-major then
// mode, independent of scheduling; each search draws its randomness from
// (seed, instance id), so the parallel and serial runners agree exactly.
std::vector<CorpusEntry> search_corpus(
    const std::vector<TaskInstance>& instances, const Evaluator& evaluator,
    const CorpusOptions& options);

// Single-threaded reference the parallel runner is tested against.
std::vector<CorpusEntry> search_corpus_serial(
    const std::vector<TaskInstance>& instances, const Evaluator& evaluator,
    const CorpusOptions& options);

}  // namespace cola::runner
