#include "cola/corpus.hpp"

#include <cstdint>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cola::runner {

namespace {

void check_options(const CorpusOptions& options) {
  if (options.modes.empty())
    throw ContractViolation("corpus: at least one mode required");
  if (options.workers < 0)
    throw ContractViolation("corpus: workers must be >= 0");
}

CorpusEntry run_task(const TaskInstance& instance, const Evaluator& evaluator,
                     const CorpusOptions& options, mcts::RunMode mode) {
  CorpusEntry entry;
  entry.mode = mode;
  if (mode == mcts::RunMode::OriginalOnly) {
    entry.result =
        mcts::evaluate_original(instance, evaluator, options.base.rho);
  } else {
    mcts::SearchConfig config = options.base;
    config.mode = mcts::space_mode(mode);
    entry.result = mcts::run_search(instance, evaluator, config);
  }
  return entry;
}

}  // namespace

std::vector<CorpusEntry> search_corpus_serial(
    const std::vector<TaskInstance>& instances, const Evaluator& evaluator,
    const CorpusOptions& options) {
  check_options(options);
  std::vector<CorpusEntry> entries;
  entries.reserve(instances.size() * options.modes.size());
  for (const auto& instance : instances)
    for (const auto mode : options.modes)
      entries.push_back(run_task(instance, evaluator, options, mode));
  return entries;
}

std::vector<CorpusEntry> search_corpus(
    const std::vector<TaskInstance>& instances, const Evaluator& evaluator,
    const CorpusOptions& options) {
  check_options(options);
  const std::size_t mode_count = options.modes.size();
  const std::size_t task_count = instances.size() * mode_count;
  std::vector<CorpusEntry> entries(task_count);
  std::vector<std::exception_ptr> errors(task_count);

#ifdef _OPENMP
  const int threads =
      options.workers > 0 ? options.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(task_count); ++t) {
    const auto task = static_cast<std::size_t>(t);
    try {
      entries[task] = run_task(instances[task / mode_count], evaluator,
                               options, options.modes[task % mode_count]);
    } catch (...) {
      // Exceptions must not unwind out of the parallel region; the first
      // task's error (by index, not by time) is rethrown below.
      errors[task] = std::current_exception();
    }
  }

  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);
  return entries;
}

}  // namespace cola::runner
