#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cola/errors.hpp"
#include "cola/harness.hpp"

namespace {

struct CommonArgs {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::optional<std::string> backend;
  std::optional<std::string> server;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config JSON file");
  cmd->add_option("--seed", args.seed, "global seed (overrides config)");
  cmd->add_option("--mode", args.mode,
                  "joint|skip|recur|original (overrides config modes)");
  cmd->add_option("--out", args.out, "output directory (overrides config)");
  cmd->add_option("--backend", args.backend,
                  "synth|toy|external (overrides config)");
  cmd->add_option("--server", args.server,
                  "external evaluator: command to spawn, or host:port");
}

cola::harness::ExperimentConfig resolve(const CommonArgs& args) {
  cola::harness::CliOverrides overrides;
  overrides.seed = args.seed;
  overrides.mode = args.mode;
  overrides.out = args.out;
  overrides.backend = args.backend;
  overrides.server = args.server;
  return cola::harness::load_config(args.config, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cola: test-time layer-composition search over a frozen stack"};
  app.require_subcommand(1);

  CommonArgs generate_args;
  CLI::App* generate =
      app.add_subcommand("generate", "write a seeded dataset with backend "
                                     "parameters and a hidden-path sidecar");
  add_common(generate, generate_args);

  CommonArgs search_args;
  CLI::App* search = app.add_subcommand(
      "search", "run the per-instance search across the corpus");
  add_common(search, search_args);

  CommonArgs brute_args;
  CLI::App* brute = app.add_subcommand(
      "bruteforce", "exhaustively find optimal paths (small stacks only)");
  add_common(brute, brute_args);

  CommonArgs analyze_args;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "aggregate search results into report JSON and CSV");
  add_common(analyze, analyze_args);

  std::string report_out;
  std::vector<std::string> report_dirs;
  CLI::App* report = app.add_subcommand(
      "report", "merge analyzed runs into dataset-column CSV matrices");
  report->add_option("--out", report_out, "output directory")->required();
  report->add_option("dirs", report_dirs, "analyzed run directories")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed())
      return cola::harness::cmd_generate(resolve(generate_args));
    if (search->parsed())
      return cola::harness::cmd_search(resolve(search_args));
    if (brute->parsed())
      return cola::harness::cmd_bruteforce(resolve(brute_args));
    if (analyze->parsed())
      return cola::harness::cmd_analyze(resolve(analyze_args));
    if (report->parsed())
      return cola::harness::cmd_report(report_dirs, report_out);
  } catch (const cola::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const cola::ParseError& err) {
    std::cerr << "schema error: " << err.what() << "\n";
    return 2;
  } catch (const cola::BackendError& err) {
    std::cerr << "backend error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
