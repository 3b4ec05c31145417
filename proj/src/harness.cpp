#include "cola/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cola/analytics.hpp"
#include "cola/corpus.hpp"
#include "cola/oracle.hpp"
#include "cola/rng.hpp"
#include "cola/serialize.hpp"
#include "cola/wire_client.hpp"

namespace fs = std::filesystem;

namespace cola::harness {

namespace {

constexpr const char* kVersionTag = "cola 0.1.0";
constexpr const char* kManifestSchema = "cola.manifest.v1";
constexpr const char* kReportSchema = "cola.report.v1";

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

// Strict object reader: every key must be consumed, so typos fail loudly
// instead of silently keeping a default.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string where)
      : j_(j), where_(std::move(where)) {
    if (!j_.is_object())
      throw ConfigError(where_ + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& into) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      into = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const nlohmann::json& sub(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key))
        throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string, std::less<>> seen_;
};

std::vector<mcts::RunMode> parse_modes(const nlohmann::json& j) {
  if (!j.is_array() || j.empty())
    throw ConfigError("config.modes must be a nonempty array of strings");
  std::vector<mcts::RunMode> modes;
  for (const auto& item : j) {
    if (!item.is_string())
      throw ConfigError("config.modes entries must be strings");
    try {
      modes.push_back(mcts::parse_run_mode(item.get<std::string>()));
    } catch (const ParseError& err) {
      throw ConfigError(std::string("config.modes: ") + err.what());
    }
  }
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t k = i + 1; k < modes.size(); ++k)
      if (modes[i] == modes[k])
        throw ConfigError("config.modes lists a mode twice");
  return modes;
}

void validate_config(const ExperimentConfig& config) {
  if (config.backend != "synth" && config.backend != "toy" &&
      config.backend != "external")
    throw ConfigError("config.backend must be synth, toy, or external");
  if (config.sample_size < 1)
    throw ConfigError("config.sample_size must be >= 1");
  if (config.generate_count < 0)
    throw ConfigError("config.generate_count must be >= 0");
  if (config.modes.empty()) throw ConfigError("config.modes must be nonempty");
  if (config.workers < 0) throw ConfigError("config.workers must be >= 0");
  if (config.oracle_node_budget < 1)
    throw ConfigError("config.oracle_node_budget must be >= 1");
  if (config.oracle_max_layers < 1)
    throw ConfigError("config.oracle_max_layers must be >= 1");
  if (config.out.empty()) throw ConfigError("config.out must be nonempty");
  if (config.dataset_name.empty())
    throw ConfigError("config.dataset_name must be nonempty");
  try {
    mcts::validate(config.search);
  } catch (const ContractViolation& err) {
    throw ConfigError(std::string("config.search: ") + err.what());
  }
  if (config.synth.num_layers < 1 || config.synth.state_dim < 1)
    throw ConfigError("config.synth dimensions must be >= 1");
  if (config.synth.modulus < 2)
    throw ConfigError("config.synth.modulus must be a small prime >= 2");
  if (config.toy.num_layers < 1 || config.toy.model_dim < 1 ||
      config.toy.vocab_size < 2 || config.toy.max_seq_len < 1)
    throw ConfigError("config.toy dimensions out of range");
  if (config.toy.seq_len < 1 || config.toy.seq_len > config.toy.max_seq_len)
    throw ConfigError("config.toy.seq_len must be in [1, max_seq_len]");
  if (config.toy.labeling != "self" && config.toy.labeling != "adversarial")
    throw ConfigError("config.toy.labeling must be self or adversarial");
  if (config.external.num_layers < 1)
    throw ConfigError("config.external.num_layers must be >= 1");
  if (config.external.timeout_ms < 1)
    throw ConfigError("config.external.timeout_ms must be >= 1");
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const CliOverrides& overrides) {
  ExperimentConfig config;
  ObjectReader top(j, "config");
  top.read("backend", config.backend);
  top.read("seed", config.seed);
  top.read("out", config.out);
  if (top.has("modes")) config.modes = parse_modes(top.sub("modes"));
  top.read("sample_size", config.sample_size);
  top.read("generate_count", config.generate_count);
  top.read("dataset_name", config.dataset_name);
  top.read("dataset_path", config.dataset_path);
  top.read("workers", config.workers);
  top.read("oracle_node_budget", config.oracle_node_budget);
  top.read("oracle_max_layers", config.oracle_max_layers);
  if (top.has("search")) {
    ObjectReader search(top.sub("search"), "config.search");
    search.read("simulations", config.search.simulations);
    search.read("c", config.search.c);
    search.read("lambda", config.search.lambda);
    search.read("epsilon", config.search.epsilon);
    search.read("rho", config.search.rho);
    search.read("l_max", config.search.l_max);
    search.finish();
  }
  if (top.has("synth")) {
    ObjectReader synth(top.sub("synth"), "config.synth");
    synth.read("num_layers", config.synth.num_layers);
    synth.read("state_dim", config.synth.state_dim);
    synth.read("modulus", config.synth.modulus);
    synth.finish();
  }
  if (top.has("toy")) {
    ObjectReader toy(top.sub("toy"), "config.toy");
    toy.read("num_layers", config.toy.num_layers);
    toy.read("model_dim", config.toy.model_dim);
    toy.read("vocab_size", config.toy.vocab_size);
    toy.read("max_seq_len", config.toy.max_seq_len);
    toy.read("seq_len", config.toy.seq_len);
    toy.read("labeling", config.toy.labeling);
    toy.finish();
  }
  if (top.has("external")) {
    ObjectReader external(top.sub("external"), "config.external");
    external.read("server", config.external.server);
    external.read("num_layers", config.external.num_layers);
    external.read("timeout_ms", config.external.timeout_ms);
    external.finish();
  }
  top.finish();

  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.out) config.out = *overrides.out;
  if (overrides.backend) config.backend = *overrides.backend;
  if (overrides.server) config.external.server = *overrides.server;
  if (overrides.mode) {
    try {
      config.modes = {mcts::parse_run_mode(*overrides.mode)};
    } catch (const ParseError& err) {
      throw ConfigError(std::string("--mode: ") + err.what());
    }
  }
  config.search.seed = config.seed;
  validate_config(config);
  return config;
}

ExperimentConfig load_config(const std::optional<std::string>& config_path,
                             const CliOverrides& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (config_path) {
    std::string text;
    try {
      text = serialize::read_text_file(*config_path);
    } catch (const IoError& err) {
      throw ConfigError(err.what());
    }
    j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded())
      throw ConfigError("config file is not valid JSON: " + *config_path);
  }
  return config_from_json(j, overrides);
}

nlohmann::json config_json(const ExperimentConfig& config) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto mode : config.modes) modes.push_back(mcts::to_string(mode));
  return {
      {"backend", config.backend},
      {"seed", config.seed},
      {"out", config.out},
      {"modes", modes},
      {"sample_size", config.sample_size},
      {"generate_count", config.generate_count},
      {"dataset_name", config.dataset_name},
      {"dataset_path", config.dataset_path},
      {"workers", config.workers},
      {"oracle_node_budget", config.oracle_node_budget},
      {"oracle_max_layers", config.oracle_max_layers},
      {"search",
       {{"simulations", config.search.simulations},
        {"c", config.search.c},
        {"lambda", config.search.lambda},
        {"epsilon", config.search.epsilon},
        {"rho", config.search.rho},
        {"l_max", config.search.l_max}}},
      {"synth",
       {{"num_layers", config.synth.num_layers},
        {"state_dim", config.synth.state_dim},
        {"modulus", config.synth.modulus}}},
      {"toy",
       {{"num_layers", config.toy.num_layers},
        {"model_dim", config.toy.model_dim},
        {"vocab_size", config.toy.vocab_size},
        {"max_seq_len", config.toy.max_seq_len},
        {"seq_len", config.toy.seq_len},
        {"labeling", config.toy.labeling}}},
      {"external",
       {{"server", config.external.server},
        {"num_layers", config.external.num_layers},
        {"timeout_ms", config.external.timeout_ms}}}};
}

// ---------------------------------------------------------------------------
// Shared pieces
// ---------------------------------------------------------------------------

namespace {

fs::path out_dir(const ExperimentConfig& config) { return config.out; }

fs::path dataset_file(const ExperimentConfig& config) {
  if (!config.dataset_path.empty()) return config.dataset_path;
  return out_dir(config) / "dataset.jsonl";
}

std::vector<TaskInstance> load_dataset(const ExperimentConfig& config,
                                       std::string* digest) {
  const fs::path path = dataset_file(config);
  std::string bytes;
  try {
    bytes = serialize::read_text_file(path);
  } catch (const IoError& err) {
    throw ConfigError(std::string(err.what()) +
                      " (run `cola generate` or set dataset_path)");
  }
  if (digest) *digest = serialize::digest_hex(bytes);
  std::vector<TaskInstance> instances;
  std::unordered_set<std::string> ids;
  for (const auto& line : serialize::read_jsonl(path)) {
    TaskInstance instance = serialize::instance_from_json(line);
    if (!ids.insert(instance.id).second)
      throw ParseError(path.string() + ": duplicate instance id '" +
                       instance.id + "'");
    instances.push_back(std::move(instance));
  }
  if (instances.empty()) throw ParseError(path.string() + ": empty dataset");
  return instances;
}

// min(sample_size, |dataset|) ids via partial Fisher-Yates, then returned
// in dataset order so the manifest does not depend on shuffle internals.
std::vector<TaskInstance> sample_instances(std::vector<TaskInstance> all,
                                           const ExperimentConfig& config,
                                           std::string* notice) {
  const auto total = static_cast<int>(all.size());
  if (config.sample_size >= total) {
    if (config.sample_size > total && notice)
      *notice = "sample_size " + std::to_string(config.sample_size) +
                " exceeds dataset size " + std::to_string(total) +
                "; using every instance";
    return all;
  }
  std::vector<int> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<int>(i);
  Rng rng = make_stream(config.seed, "sample");
  std::vector<bool> chosen(all.size(), false);
  for (int i = 0; i < config.sample_size; ++i) {
    const auto j =
        i + static_cast<int>(next_below(rng, order.size() - i));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(j)]);
    chosen[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        true;
  }
  std::vector<TaskInstance> picked;
  picked.reserve(static_cast<std::size_t>(config.sample_size));
  for (std::size_t i = 0; i < all.size(); ++i)
    if (chosen[i]) picked.push_back(std::move(all[i]));
  return picked;
}

SynthMachine machine_from_json(const nlohmann::json& j) {
  SynthMachine machine;
  machine.num_layers = j.at("num_layers").get<int>();
  machine.state_dim = j.at("state_dim").get<int>();
  machine.modulus = j.at("modulus").get<int>();
  machine.matrices = j.at("matrices").get<std::vector<std::vector<int>>>();
  machine.offsets = j.at("offsets").get<std::vector<std::vector<int>>>();
  if (static_cast<int>(machine.matrices.size()) != machine.num_layers ||
      static_cast<int>(machine.offsets.size()) != machine.num_layers)
    throw ParseError("backend.json: matrix/offset count != num_layers");
  return machine;
}

struct Backend {
  std::unique_ptr<Evaluator> evaluator;
  int num_layers = 0;
};

Backend make_backend(const ExperimentConfig& config) {
  Backend backend;
  if (config.backend == "external") {
    if (config.external.server.empty())
      throw ConfigError("external backend needs --server or external.server");
    backend.evaluator = std::make_unique<wire::ExternalEvaluator>(
        wire::open_server(config.external.server), config.external.num_layers,
        config.search.rho, config.external.timeout_ms);
    backend.num_layers = config.external.num_layers;
    return backend;
  }
  const fs::path path = out_dir(config) / "backend.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(serialize::read_text_file(path));
  } catch (const IoError& err) {
    throw ConfigError(std::string(err.what()) + " (run `cola generate`)");
  } catch (const nlohmann::json::exception&) {
    throw ParseError(path.string() + ": invalid JSON");
  }
  try {
    const auto kind = j.at("backend").get<std::string>();
    if (kind != config.backend)
      throw ConfigError(path.string() + " was generated for backend '" + kind +
                        "', config says '" + config.backend + "'");
    if (kind == "synth") {
      SynthMachine machine = machine_from_json(j);
      backend.num_layers = machine.num_layers;
      backend.evaluator = std::make_unique<SynthEvaluator>(
          std::move(machine), config.search.rho);
    } else {
      ToyTransformer model = toy_build(
          j.at("seed").get<std::uint64_t>(), j.at("num_layers").get<int>(),
          j.at("model_dim").get<int>(), j.at("vocab_size").get<int>(),
          j.at("max_seq_len").get<int>());
      backend.num_layers = model.num_layers;
      backend.evaluator =
          std::make_unique<ToyEvaluator>(std::move(model), config.search.rho);
    }
  } catch (const nlohmann::json::exception&) {
    throw ParseError(path.string() + ": missing or mistyped backend fields");
  }
  return backend;
}

std::string sanitize_filename(const std::string& id) {
  std::string name;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    name.push_back(ok ? c : '_');
  }
  if (name.empty()) name = "instance";
  return name;
}

int effective_workers(const ExperimentConfig& config) {
  // The worker-pool override is the only environment variable honored.
  if (const char* env = std::getenv("COLA_WORKERS")) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  return config.workers;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int cmd_generate(const ExperimentConfig& config) {
  if (config.backend == "external")
    throw ConfigError("generate needs a synth or toy backend");
  const int count =
      config.generate_count > 0 ? config.generate_count : config.sample_size;
  const fs::path dir = out_dir(config);

  std::vector<TaskInstance> instances;
  nlohmann::json backend_json;
  std::vector<nlohmann::json> sidecar;

  if (config.backend == "synth") {
    const StackSpec spec =
        make_spec(config.synth.num_layers, config.search.l_max);
    const SynthMachine machine =
        synth_machine(config.seed, config.synth.num_layers,
                      config.synth.state_dim, config.synth.modulus, spec);
    instances = synth_instances(machine, config.seed, count);
    // Parameters only: a machine rebuilt from this file carries no trace of
    // the generating path, so the search cannot peek at label provenance.
    backend_json = {{"backend", "synth"},
                    {"num_layers", machine.num_layers},
                    {"state_dim", machine.state_dim},
                    {"modulus", machine.modulus},
                    {"matrices", machine.matrices},
                    {"offsets", machine.offsets}};
    const std::string hidden =
        encode_path(*machine.hidden_generating_path);
    for (const auto& instance : instances)
      sidecar.push_back({{"id", instance.id}, {"path", hidden}});
  } else {
    const ToyTransformer model =
        toy_build(config.seed, config.toy.num_layers, config.toy.model_dim,
                  config.toy.vocab_size, config.toy.max_seq_len);
    const ToyLabeling labeling = config.toy.labeling == "self"
                                     ? ToyLabeling::SelfLabeled
                                     : ToyLabeling::Adversarial;
    instances =
        toy_instances(model, config.seed, count, config.toy.seq_len, labeling);
    backend_json = {{"backend", "toy"},
                    {"seed", config.seed},
                    {"num_layers", model.num_layers},
                    {"model_dim", model.model_dim},
                    {"vocab_size", model.vocab_size},
                    {"max_seq_len", model.max_seq_len}};
    // Self-labeled corpora are generated by the identity path; adversarial
    // labels have no generating path inside the searched model.
    for (const auto& instance : instances) {
      nlohmann::json line{{"id", instance.id}};
      if (labeling == ToyLabeling::SelfLabeled)
        line["path"] = encode_path(identity_path(model.num_layers));
      else
        line["path"] = nullptr;
      sidecar.push_back(std::move(line));
    }
  }

  std::vector<nlohmann::json> lines;
  lines.reserve(instances.size());
  for (const auto& instance : instances)
    lines.push_back(serialize::instance_json(instance));
  serialize::write_jsonl(dir / "dataset.jsonl", lines);
  serialize::write_jsonl(dir / "hidden_paths.jsonl", sidecar);
  serialize::write_text_file(dir / "backend.json",
                             backend_json.dump(2) + "\n");

  std::string bytes = serialize::read_text_file(dir / "dataset.jsonl");
  std::cout << "generated " << instances.size() << " instances ("
            << config.backend << ") -> " << (dir / "dataset.jsonl").string()
            << "\ndigest " << serialize::digest_hex(bytes) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

int cmd_search(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::string digest;
  std::vector<TaskInstance> all = load_dataset(config, &digest);
  std::string notice;
  const std::vector<TaskInstance> instances =
      sample_instances(std::move(all), config, &notice);
  if (!notice.empty()) std::cout << "notice: " << notice << "\n";

  const Backend backend = make_backend(config);

  runner::CorpusOptions options;
  options.base = config.search;
  options.base.seed = config.seed;
  options.modes = config.modes;
  options.workers = effective_workers(config);
  const std::vector<runner::CorpusEntry> entries =
      runner::search_corpus(instances, *backend.evaluator, options);

  // Single collector writes every result file.
  const fs::path dir = out_dir(config);
  nlohmann::json index = nlohmann::json::array();
  std::unordered_set<std::string> taken;
  std::int64_t failure_total = 0;
  std::size_t entry_at = 0;
  for (const auto& instance : instances) {
    for (const auto mode : config.modes) {
      const auto& entry = entries[entry_at++];
      std::string file = mcts::to_string(mode) + "/" +
                         sanitize_filename(instance.id);
      std::string candidate = file;
      for (int suffix = 2; !taken.insert(candidate).second; ++suffix)
        candidate = file + "-" + std::to_string(suffix);
      const std::string rel = "results/" + candidate + ".json";
      serialize::write_text_file(
          dir / rel,
          serialize::search_result_json(entry.result, mode).dump() + "\n");
      failure_total += static_cast<std::int64_t>(entry.result.failures.size());
      index.push_back({{"id", instance.id},
                       {"mode", mcts::to_string(mode)},
                       {"file", rel},
                       {"failure_count", entry.result.failures.size()}});
    }
  }

  nlohmann::json ids = nlohmann::json::array();
  for (const auto& instance : instances) ids.push_back(instance.id);
  nlohmann::json manifest{{"schema", kManifestSchema},
                          {"version", kVersionTag},
                          {"config", config_json(config)},
                          {"num_layers", backend.num_layers},
                          {"dataset_path", dataset_file(config).string()},
                          {"dataset_digest", digest},
                          {"dataset_name", config.dataset_name},
                          {"notice", notice},
                          {"instances", ids},
                          {"results", index}};
  serialize::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  // Timing lives apart from the manifest so repeat runs stay byte-identical.
  serialize::write_text_file(
      dir / "timing.json",
      nlohmann::json{{"search_ms", elapsed_ms(start)}}.dump() + "\n");

  std::cout << "searched " << instances.size() << " instances x "
            << config.modes.size() << " mode(s); " << failure_total
            << " evaluation failure(s)\n";
  return failure_total > 0 ? 4 : 0;
}

// ---------------------------------------------------------------------------
// bruteforce
// ---------------------------------------------------------------------------

int cmd_bruteforce(const ExperimentConfig& config) {
  const mcts::RunMode mode = config.modes.front();
  if (mode == mcts::RunMode::OriginalOnly)
    throw ConfigError("bruteforce needs a search mode (joint|skip|recur)");
  std::string digest;
  std::vector<TaskInstance> all = load_dataset(config, &digest);
  const std::vector<TaskInstance> instances =
      sample_instances(std::move(all), config, nullptr);
  const Backend backend = make_backend(config);
  if (backend.num_layers > config.oracle_max_layers)
    throw ConfigError("bruteforce: num_layers " +
                      std::to_string(backend.num_layers) +
                      " exceeds oracle_max_layers " +
                      std::to_string(config.oracle_max_layers));
  const StackSpec spec = make_spec(backend.num_layers, config.search.l_max);

  std::vector<nlohmann::json> lines;
  lines.reserve(instances.size());
  for (const auto& instance : instances) {
    const mcts::OracleResult oracle =
        mcts::brute_force(instance, *backend.evaluator, spec,
                          mcts::space_mode(mode), config.oracle_node_budget);
    nlohmann::json line{{"id", instance.id},
                        {"status", mcts::to_string(oracle.status)},
                        {"states_visited", oracle.states_visited},
                        {"complete_paths", oracle.complete_paths}};
    if (oracle.best) {
      line["path"] = encode_path(oracle.best->path);
      line["depth"] = oracle.best->outcome.depth;
      line["non_recurrent_depth"] = oracle.best->outcome.non_recurrent_depth;
    }
    lines.push_back(std::move(line));
  }
  const fs::path file =
      out_dir(config) / "oracle" / (mcts::to_string(mode) + ".jsonl");
  serialize::write_jsonl(file, lines);
  std::cout << "bruteforced " << instances.size() << " instances -> "
            << file.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

int cmd_analyze(const ExperimentConfig& config) {
  const fs::path dir = out_dir(config);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(
        serialize::read_text_file(dir / "manifest.json"));
  } catch (const IoError& err) {
    throw ConfigError(std::string(err.what()) + " (run `cola search`)");
  } catch (const nlohmann::json::exception&) {
    throw ParseError((dir / "manifest.json").string() + ": invalid JSON");
  }
  int num_layers = 0;
  std::string dataset_name;
  std::string dataset_path;
  std::string dataset_digest;
  nlohmann::json index;
  try {
    if (manifest.at("schema").get<std::string>() != kManifestSchema)
      throw ParseError("unknown manifest schema");
    num_layers = manifest.at("num_layers").get<int>();
    dataset_name = manifest.at("dataset_name").get<std::string>();
    dataset_path = manifest.at("dataset_path").get<std::string>();
    dataset_digest = manifest.at("dataset_digest").get<std::string>();
    index = manifest.at("results");
  } catch (const nlohmann::json::exception&) {
    throw ParseError((dir / "manifest.json").string() +
                     ": missing or mistyped fields");
  }
  if (fs::exists(dataset_path)) {
    const std::string digest =
        serialize::digest_hex(serialize::read_text_file(dataset_path));
    if (digest != dataset_digest)
      throw ConfigError(dataset_path +
                        " no longer matches the manifest digest");
  }

  const StackSpec spec = make_spec(num_layers, 0);
  std::vector<analytics::PathRecord> records;
  std::vector<std::string> excluded;
  for (const auto& item : index) {
    const std::string rel = item.at("file").get<std::string>();
    try {
      const nlohmann::json j =
          nlohmann::json::parse(serialize::read_text_file(dir / rel));
      auto [result, mode] = serialize::search_result_from_json(j, spec);
      records.push_back(analytics::make_record(result, mode));
    } catch (const IoError& err) {
      excluded.push_back(rel + ": " + err.what());
    } catch (const ParseError& err) {
      excluded.push_back(rel + ": " + err.what());
    } catch (const nlohmann::json::exception& err) {
      excluded.push_back(rel + ": invalid JSON");
      (void)err;
    }
  }
  if (records.empty())
    throw ConfigError("analyze: no valid result files under " + dir.string());

  const analytics::CorpusReport corpus =
      analytics::build_report(records, num_layers);

  nlohmann::json report{{"schema", kReportSchema},
                        {"version", kVersionTag},
                        {"dataset_name", dataset_name},
                        {"num_layers", num_layers},
                        {"excluded_count", excluded.size()},
                        {"excluded", excluded},
                        {"corpus", analytics::report_json(corpus)}};
  serialize::write_text_file(dir / "report" / "report.json",
                             report.dump(2) + "\n");
  const std::vector<std::string> names{dataset_name};
  serialize::write_text_file(
      dir / "report" / "selection_frequency.csv",
      analytics::matrix_csv(names, {corpus.engagement.selection_frequency}));
  serialize::write_text_file(
      dir / "report" / "skip_rate.csv",
      analytics::matrix_csv(names, {corpus.engagement.skip_rate}));
  serialize::write_text_file(
      dir / "report" / "mean_recurrence.csv",
      analytics::matrix_csv(names, {corpus.engagement.mean_recurrence}));

  std::cout << "analyzed " << records.size() << " result(s), excluded "
            << excluded.size() << " -> "
            << (dir / "report" / "report.json").string() << "\n";
  for (const auto& entry : excluded) std::cout << "excluded: " << entry << "\n";
  return excluded.empty() ? 0 : 4;
}

// ---------------------------------------------------------------------------
// report (merge analyzed runs into dataset-column matrices)
// ---------------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_dir_arg) {
  if (run_dirs.empty())
    throw ConfigError("report needs at least one analyzed run directory");
  if (out_dir_arg.empty()) throw ConfigError("report needs --out");

  struct Loaded {
    std::string name;
    int num_layers = 0;
    nlohmann::json corpus;
  };
  std::vector<Loaded> runs;
  std::unordered_map<std::string, int> name_uses;
  for (const auto& dir : run_dirs) {
    const fs::path file = fs::path(dir) / "report" / "report.json";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(serialize::read_text_file(file));
    } catch (const IoError& err) {
      throw ConfigError(std::string(err.what()) + " (run `cola analyze`)");
    } catch (const nlohmann::json::exception&) {
      throw ParseError(file.string() + ": invalid JSON");
    }
    Loaded loaded;
    try {
      loaded.name = j.at("dataset_name").get<std::string>();
      loaded.num_layers = j.at("num_layers").get<int>();
      loaded.corpus = j.at("corpus");
    } catch (const nlohmann::json::exception&) {
      throw ParseError(file.string() + ": missing or mistyped fields");
    }
    const int uses = ++name_uses[loaded.name];
    if (uses > 1) loaded.name += "_" + std::to_string(uses);
    runs.push_back(std::move(loaded));
  }
  for (const auto& run : runs)
    if (run.num_layers != runs.front().num_layers)
      throw ConfigError("report: runs disagree on num_layers");

  std::vector<std::string> names;
  std::vector<std::vector<double>> selection;
  std::vector<std::vector<double>> skip;
  std::vector<std::vector<double>> recurrence;
  for (const auto& run : runs) {
    names.push_back(run.name);
    const auto& usage = run.corpus.at("engagement");
    selection.push_back(
        usage.at("selection_frequency").get<std::vector<double>>());
    skip.push_back(usage.at("skip_rate").get<std::vector<double>>());
    recurrence.push_back(
        usage.at("mean_recurrence").get<std::vector<double>>());
  }

  const fs::path dir = out_dir_arg;
  serialize::write_text_file(dir / "selection_frequency.csv",
                             analytics::matrix_csv(names, selection));
  serialize::write_text_file(dir / "skip_rate.csv",
                             analytics::matrix_csv(names, skip));
  serialize::write_text_file(dir / "mean_recurrence.csv",
                             analytics::matrix_csv(names, recurrence));

  std::string tradeoff = "dataset,mode,mean_depth,accuracy,count\n";
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& run : runs) {
    for (const auto& point : run.corpus.at("tradeoff_points")) {
      tradeoff += run.name + "," + point.at("mode").get<std::string>() + "," +
                  nlohmann::json(point.at("mean_depth")).dump() + "," +
                  nlohmann::json(point.at("accuracy")).dump() + "," +
                  nlohmann::json(point.at("count")).dump() + "\n";
    }
    summary.push_back({{"dataset", run.name},
                       {"accuracy", run.corpus.at("accuracy")},
                       {"record_count", run.corpus.at("record_count")}});
  }
  serialize::write_text_file(dir / "tradeoff.csv", tradeoff);
  serialize::write_text_file(
      dir / "summary.json",
      nlohmann::json{{"schema", "cola.report_summary.v1"},
                     {"datasets", summary}}
              .dump(2) +
          "\n");
  std::cout << "merged " << runs.size() << " run(s) -> " << dir.string()
            << "\n";
  return 0;
}

}  // namespace cola::harness
