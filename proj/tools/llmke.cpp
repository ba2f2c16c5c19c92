// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: run, evaluate, audit, compare, record-fixtures.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "llmke/common.hpp"
#include "llmke/gap_audit.hpp"
#include "llmke/pipeline.hpp"

namespace {

using namespace llmke;

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kMissingFixture = 3 };

/// Flags shared by `run` and `record-fixtures`. Unset flags leave the
/// base config untouched.
struct RunFlags {
  std::string config_file;
  std::string manifest;
  std::string input, train, truth, output_dir, fixture_dir, cache_dir, script, data_dir;
  std::string model, setting, disambiguation, provider, api_base, system_prompt;
  double temperature = 0.0;
  std::size_t parallelism = 0, context_budget = 0, few_shot = 0, search_limit = 0;
  int infobox_depth = 0;
  bool record = false;

  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;

  void add(CLI::App& app, bool full) {
    if (full) {
      app.add_option("--config", config_file, "Run config (JSON)");
      app.add_option("--manifest", manifest, "Re-run with the config stored in a manifest.json");
      bind(app.add_option("--truth", truth, "Truth file; enables report.json"),
           [this](RunConfig& c) { c.truth_path = truth; });
      bind(app.add_option("--output-dir", output_dir, "Output directory"),
           [this](RunConfig& c) { c.output_dir = output_dir; });
      bind(app.add_option("--setting", setting, "question | triple | context"), [this](RunConfig& c) {
        const auto parsed = parse_setting(setting);
        if (!parsed) throw ConfigError("unknown setting \"" + setting + "\"");
        c.setting = *parsed;
      });
      bind(app.add_option("--disambiguation", disambiguation, "baseline | improved"), [this](RunConfig& c) {
        const auto parsed = parse_disambiguation_mode(disambiguation);
        if (!parsed) throw ConfigError("unknown disambiguation mode \"" + disambiguation + "\"");
        c.disambiguation_mode = *parsed;
      });
      bind(app.add_option("--provider", provider, "live | replay | scripted"), [this](RunConfig& c) {
        const auto parsed = parse_provider_mode(provider);
        if (!parsed) throw ConfigError("unknown provider \"" + provider + "\"");
        c.provider = *parsed;
      });
      bind(app.add_option("--cache-dir", cache_dir, "Live-mode response cache"),
           [this](RunConfig& c) { c.cache_dir = cache_dir; });
      bind(app.add_flag("--record-fixtures", record, "Live mode: write caches into the fixture directory"),
           [this](RunConfig& c) { c.record_fixtures = record; });
    }
    bind(app.add_option("--input", input, "Query rows (JSONL)"), [this](RunConfig& c) { c.input_path = input; });
    bind(app.add_option("--train", train, "Train split for demonstrations"),
         [this](RunConfig& c) { c.train_path = train; });
    bind(app.add_option("--fixture-dir", fixture_dir, "Fixture directory"),
         [this](RunConfig& c) { c.fixture_dir = fixture_dir; });
    bind(app.add_option("--script", script, "Tag-keyed reply script (scripted provider)"),
         [this](RunConfig& c) { c.script_path = script; });
    bind(app.add_option("--data-dir", data_dir, "Templates and relation config"),
         [this](RunConfig& c) { c.data_dir = data_dir; });
    bind(app.add_option("--model", model, "Chat model name"), [this](RunConfig& c) { c.chat.model_name = model; });
    bind(app.add_option("--temperature", temperature, "Sampling temperature"),
         [this](RunConfig& c) { c.chat.temperature = temperature; });
    bind(app.add_option("--system-prompt", system_prompt, "Optional system turn"),
         [this](RunConfig& c) { c.chat.system_prompt = system_prompt; });
    bind(app.add_option("--parallelism", parallelism, "Concurrent rows"),
         [this](RunConfig& c) { c.parallelism = parallelism; });
    bind(app.add_option("--context-budget", context_budget, "Context size limit in bytes"),
         [this](RunConfig& c) { c.context_budget = context_budget; });
    bind(app.add_option("--few-shot", few_shot, "Demonstrations per prompt"),
         [this](RunConfig& c) { c.few_shot = few_shot; });
    bind(app.add_option("--search-limit", search_limit, "Candidates per entity search"),
         [this](RunConfig& c) { c.search_limit = search_limit; });
    bind(app.add_option("--infobox-depth", infobox_depth, "Nested template depth kept in Infobox values"),
         [this](RunConfig& c) { c.infobox_depth = infobox_depth; });
    bind(app.add_option("--api-base", api_base, "Chat completions base URL"),
         [this](RunConfig& c) { c.api_base = api_base; });
  }

  void bind(CLI::Option* option, std::function<void(RunConfig&)> setter) {
    setters.emplace_back(option, std::move(setter));
  }

  RunConfig resolve() const {
    if (!config_file.empty() && !manifest.empty()) throw ConfigError("use either --config or --manifest");
    RunConfig config;
    if (!config_file.empty()) config = config_from_json(read_file(config_file));
    if (!manifest.empty()) config = config_from_manifest(manifest);
    for (const auto& [option, setter] : setters) {
      if (option->count() > 0) setter(config);
    }
    return config;
  }
};

int cmd_run(const RunFlags& flags) {
  const RunConfig config = flags.resolve();
  const RunResult result = run(config);
  std::cout << "wrote " << result.predictions.size() << " predictions to "
            << (config.output_dir / "predictions.jsonl").string() << "\n";
  if (result.report) std::cout << report_to_table(*result.report);
  return kOk;
}

int cmd_evaluate(const std::string& predictions, const std::string& truth, const std::string& mode,
                 const std::string& json_out, const std::string& data_dir) {
  if (mode != "ids" && mode != "labels") throw ConfigError("score mode must be ids or labels");
  const ProfileTable profiles =
      ProfileTable::load((data_dir.empty() ? default_data_dir() : std::filesystem::path(data_dir)) / "relations.jsonc");
  const auto rows = load_predictions(predictions);
  const auto truth_rows = load_truth(truth, profiles);
  const EvaluationReport report =
      overall_report(rows, truth_rows, mode == "ids" ? ScoreMode::ids : ScoreMode::labels);
  if (!json_out.empty()) write_file(json_out, report_to_json(report) + "\n");
  std::cout << report_to_table(report);
  return kOk;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& label_a, const std::string& label_b) {
  const EvaluationReport report_a = report_from_json(read_file(a));
  const EvaluationReport report_b = report_from_json(read_file(b));
  const auto rows = compare_runs(report_a, report_b);
  std::cout << compare_table(rows, label_a, label_b);
  return kOk;
}

struct AuditFlags {
  std::string predictions;
  std::string truth_store;
  std::string fixture_dir;
  std::string output;
  std::string data_dir;
  bool live = false;
  bool validate = false;
  double aligned_below = AuditThresholds{}.aligned_below;
  double kb_gap_at_least = AuditThresholds{}.kb_gap_at_least;
};

int cmd_audit(const AuditFlags& flags) {
  const std::filesystem::path data_dir =
      flags.data_dir.empty() ? default_data_dir() : std::filesystem::path(flags.data_dir);
  const ProfileTable profiles = ProfileTable::load(data_dir / "relations.jsonc");

  HttplibTransport raw;
  HostRateLimiter limiter(std::chrono::milliseconds(500));
  RetryingTransport transport(raw, RetryPolicy{}, Sleeper{}, &limiter);
  std::unique_ptr<SparqlTruthSource> sparql;
  if (flags.live) {
    sparql = std::make_unique<SparqlTruthSource>(transport, read_file(data_dir / "sparql" / "truth.rq"), profiles);
    if (flags.validate) {
      const auto problems = sparql->validate_property_types(read_file(data_dir / "sparql" / "property_type.rq"));
      for (const auto& problem : problems) std::cerr << "property check: " << problem << "\n";
      if (!problems.empty()) return kConfig;
    }
  } else if (flags.validate) {
    throw ConfigError("--validate-properties needs --live");
  }

  if (flags.truth_store.empty()) throw ConfigError("audit needs --truth-store");
  TruthStore store = TruthStore::load_or_empty(flags.truth_store);
  CachedTruthSource truth(store, sparql.get());

  std::optional<PageStore> pages_store;
  std::optional<CachedPageSource> pages;
  std::optional<ContextAssembler> assembler;
  ImdbTable imdb;
  if (!flags.fixture_dir.empty()) {
    pages_store.emplace(PageStore::load_or_empty(std::filesystem::path(flags.fixture_dir) / "pages.jsonl"));
    pages.emplace(*pages_store, nullptr);
    imdb = ImdbTable::load_or_empty(std::filesystem::path(flags.fixture_dir) / "imdb.jsonl");
    assembler.emplace(*pages, &imdb);
  }
  ContextLookup context;
  if (assembler) {
    context = [&](const PredictionRecord& row) -> std::string {
      try {
        return assembler->assemble(row.query, profiles.profile(row.query.relation)).render();
      } catch (const MissingFixtureError&) {
        return {};
      }
    };
  }

  const auto rows = load_predictions(flags.predictions);
  const auto findings = audit_gaps(rows, truth, context, {flags.aligned_below, flags.kb_gap_at_least});
  if (flags.live) store.save(flags.truth_store);
  if (!flags.output.empty()) write_file(flags.output, findings_to_jsonl(findings));
  std::cout << findings_report(findings);
  return kOk;
}

struct RecordFlags {
  RunFlags run;
  std::vector<std::string> settings{"question", "triple", "context"};
  std::vector<std::string> modes{"baseline", "improved"};
  std::string provider = "scripted";
  std::string output_dir;
  bool keep = false;
};

int cmd_record(const RecordFlags& flags) {
  RunConfig base = flags.run.resolve();
  if (base.fixture_dir.empty()) throw ConfigError("record-fixtures needs --fixture-dir");
  const auto provider = parse_provider_mode(flags.provider);
  if (!provider || *provider == ProviderMode::replay) throw ConfigError("record-fixtures provider is live or scripted");
  base.provider = *provider;
  base.record_fixtures = true;
  base.truth_path.clear();

  const std::filesystem::path llm_path = base.fixture_dir / "llm.jsonl";
  if (!flags.keep && std::filesystem::exists(llm_path)) std::filesystem::remove(llm_path);

  const std::filesystem::path out_root =
      flags.output_dir.empty() ? std::filesystem::temp_directory_path() / "llmke-record"
                                : std::filesystem::path(flags.output_dir);
  for (const auto& setting_name : flags.settings) {
    const auto setting = parse_setting(setting_name);
    if (!setting) throw ConfigError("unknown setting \"" + setting_name + "\"");
    for (const auto& mode_name : flags.modes) {
      const auto mode = parse_disambiguation_mode(mode_name);
      if (!mode) throw ConfigError("unknown disambiguation mode \"" + mode_name + "\"");
      RunConfig config = base;
      config.setting = *setting;
      config.disambiguation_mode = *mode;
      config.output_dir = out_root / (setting_name + "-" + mode_name);
      const RunResult result = run(config);
      std::cout << setting_name << "/" << mode_name << ": " << result.predictions.size() << " rows\n";
    }
  }
  std::cout << "fixtures in " << base.fixture_dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-base construction by probing chat models"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Probe the model for every input row and map answers to Wikidata");
  run_flags.add(*run_cmd, true);

  std::string predictions, truth, mode = "ids", json_out, eval_data_dir;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against truth");
  eval_cmd->add_option("--predictions", predictions, "Predictions (JSONL)")->required();
  eval_cmd->add_option("--truth", truth, "Truth (JSONL)")->required();
  eval_cmd->add_option("--mode", mode, "ids | labels");
  eval_cmd->add_option("--json", json_out, "Also write the report as JSON");
  eval_cmd->add_option("--data-dir", eval_data_dir, "Relation config directory");

  AuditFlags audit_flags;
  auto* audit_cmd = app.add_subcommand("audit", "Compare predictions with current Wikidata");
  audit_cmd->add_option("--predictions", audit_flags.predictions, "Predictions (JSONL)")->required();
  audit_cmd->add_option("--truth-store", audit_flags.truth_store, "Wikidata truth snapshot (JSONL)");
  audit_cmd->add_option("--fixture-dir", audit_flags.fixture_dir, "Page fixtures used for corroboration");
  audit_cmd->add_option("--output", audit_flags.output, "Findings (JSONL)");
  audit_cmd->add_option("--data-dir", audit_flags.data_dir, "Relation config directory");
  audit_cmd->add_option("--aligned-below", audit_flags.aligned_below, "Divergence below this is aligned");
  audit_cmd->add_option("--kb-gap-at-least", audit_flags.kb_gap_at_least,
                        "Corroborated divergence at or above this is a knowledge-base gap candidate");
  audit_cmd->add_flag("--live", audit_flags.live, "Query the SPARQL endpoint for missing entries");
  audit_cmd->add_flag("--validate-properties", audit_flags.validate, "Check property types before auditing");

  std::string report_a, report_b, label_a = "a", label_b = "b";
  auto* compare_cmd = app.add_subcommand("compare", "F1 deltas between two reports");
  compare_cmd->add_option("a", report_a, "First report.json")->required();
  compare_cmd->add_option("b", report_b, "Second report.json")->required();
  compare_cmd->add_option("--label-a", label_a, "Column label for the first report");
  compare_cmd->add_option("--label-b", label_b, "Column label for the second report");

  RecordFlags record_flags;
  auto* record_cmd =
      app.add_subcommand("record-fixtures", "Run every setting and mode, storing replies in the fixture directory");
  record_flags.run.add(*record_cmd, false);
  record_cmd->add_option("--provider", record_flags.provider, "live | scripted");
  record_cmd->add_option("--settings", record_flags.settings, "Settings to record");
  record_cmd->add_option("--modes", record_flags.modes, "Disambiguation modes to record");
  record_cmd->add_option("--output-dir", record_flags.output_dir, "Where the recording runs write outputs");
  record_cmd->add_flag("--keep", record_flags.keep, "Extend the existing llm.jsonl instead of replacing it");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (eval_cmd->parsed()) return cmd_evaluate(predictions, truth, mode, json_out, eval_data_dir);
    if (audit_cmd->parsed()) return cmd_audit(audit_flags);
    if (compare_cmd->parsed()) return cmd_compare(report_a, report_b, label_a, label_b);
    if (record_cmd->parsed()) return cmd_record(record_flags);
  } catch (const MissingFixtureError& e) {
    std::cerr << "error: missing fixture: " << e.what() << "\n";
    return kMissingFixture;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
