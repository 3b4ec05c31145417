// Times the OpenMP corpus runner against the serial reference on a seeded
// synthetic suite and checks that both produce identical results.

#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "cola/corpus.hpp"
#include "cola/evaluators.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double run_ms(const char* label, int repeats, const auto& fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto start = Clock::now();
    fn();
    const double ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start)
            .count();
    if (ms < best) best = ms;
  }
  std::printf("%-10s %9.1f ms (best of %d)\n", label, best, repeats);
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpus search benchmark: OpenMP runner vs serial reference"};
  int instances = 64;
  int layers = 8;
  int simulations = 200;
  int workers = 0;
  int repeats = 3;
  std::uint64_t seed = 7;
  app.add_option("--instances", instances, "corpus size");
  app.add_option("--layers", layers, "stack depth N");
  app.add_option("--simulations", simulations, "search budget per instance");
  app.add_option("--workers", workers, "thread count (0 = all)");
  app.add_option("--repeats", repeats, "timing repeats, best kept");
  app.add_option("--seed", seed, "global seed");
  CLI11_PARSE(app, argc, argv);

  const auto [machine, corpus] =
      cola::synth_generate(seed, layers, 3, 5, instances,
                           cola::make_spec(layers));
  cola::SynthMachine params = machine;
  params.hidden_generating_path.reset();
  const cola::SynthEvaluator evaluator(std::move(params));

  cola::runner::CorpusOptions options;
  options.base.simulations = simulations;
  options.base.seed = seed;
  options.modes = {cola::mcts::RunMode::Joint};
  options.workers = workers;

  std::vector<cola::runner::CorpusEntry> serial;
  std::vector<cola::runner::CorpusEntry> parallel;
  const double serial_ms = run_ms("serial", repeats, [&] {
    serial = cola::runner::search_corpus_serial(corpus, evaluator, options);
  });
  const double parallel_ms = run_ms("parallel", repeats, [&] {
    parallel = cola::runner::search_corpus(corpus, evaluator, options);
  });

  if (serial != parallel) {
    std::printf("MISMATCH: parallel results differ from serial reference\n");
    return 1;
  }
  std::printf("identical results; speedup %.2fx\n", serial_ms / parallel_ms);
  return 0;
}
