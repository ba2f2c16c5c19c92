// SPDX-License-Identifier: Apache-2.0

#include "llmke/pipeline.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string row_tag(std::string_view kind, const QueryRecord& record) {
  return std::string(kind) + "|" + record.subject_qid + "|" + std::string(to_string(record.relation));
}

std::string row_name(std::size_t index, const QueryRecord& record) {
  return "row " + std::to_string(index + 1) + " (" + record.subject_qid + " " +
         std::string(to_string(record.relation)) + ")";
}

/// Rethrows the active exception with the row prefixed, keeping its class.
[[noreturn]] void rethrow_for_row(std::exception_ptr error, const std::string& row) {
  try {
    std::rethrow_exception(error);
  } catch (const MissingFixtureError& e) {
    throw MissingFixtureError(row + ": " + e.what(), e.key());
  } catch (const TransportError& e) {
    throw TransportError(row + ": " + e.what(), e.status());
  } catch (const ConfigError& e) {
    throw ConfigError(row + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(row + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(row + ": " + e.what());
  }
}

std::string path_string(const std::filesystem::path& path) { return path.empty() ? "" : path.string(); }

std::string checksum_or_empty(const std::filesystem::path& path) {
  return !path.empty() && std::filesystem::exists(path) ? file_sha256(path) : std::string();
}

}  // namespace

std::string_view to_string(ProviderMode mode) {
  switch (mode) {
    case ProviderMode::live:
      return "live";
    case ProviderMode::replay:
      return "replay";
    case ProviderMode::scripted:
      return "scripted";
  }
  return "replay";
}

std::optional<ProviderMode> parse_provider_mode(std::string_view name) {
  if (name == "live") return ProviderMode::live;
  if (name == "replay") return ProviderMode::replay;
  if (name == "scripted") return ProviderMode::scripted;
  return std::nullopt;
}

std::string config_to_json(const RunConfig& config) {
  ordered_json out;
  out["input"] = path_string(config.input_path);
  out["train"] = path_string(config.train_path);
  out["truth"] = path_string(config.truth_path);
  out["output_dir"] = path_string(config.output_dir);
  out["fixture_dir"] = path_string(config.fixture_dir);
  out["cache_dir"] = path_string(config.cache_dir);
  out["script"] = path_string(config.script_path);
  out["data_dir"] = path_string(config.data_dir);
  out["model"] = config.chat.model_name;
  out["temperature"] = config.chat.temperature;
  out["max_output_tokens"] = config.chat.max_output_tokens;
  out["system_prompt"] = config.chat.system_prompt;
  out["setting"] = to_string(config.setting);
  out["disambiguation"] = to_string(config.disambiguation_mode);
  out["provider"] = to_string(config.provider);
  out["parallelism"] = config.parallelism;
  out["context_budget"] = config.context_budget;
  out["few_shot"] = config.few_shot;
  out["search_limit"] = config.search_limit;
  out["infobox_depth"] = config.infobox_depth;
  out["api_base"] = config.api_base;
  out["record_fixtures"] = config.record_fixtures;
  return out.dump(2);
}

RunConfig config_from_json(std::string_view json_text) {
  static const std::set<std::string, std::less<>> kKeys = {
      "input",       "train",          "truth",      "output_dir",   "fixture_dir",    "cache_dir",
      "script",      "data_dir",       "model",      "temperature",  "max_output_tokens", "system_prompt",
      "setting",     "disambiguation", "provider",   "parallelism",  "context_budget", "few_shot",
      "search_limit", "infobox_depth", "api_base",   "record_fixtures"};
  RunConfig config;
  try {
    const json in = json::parse(json_text);
    if (!in.is_object()) throw ConfigError("run config must be a JSON object");
    for (const auto& [key, value] : in.items()) {
      if (kKeys.find(key) == kKeys.end()) throw ConfigError("unknown run config key \"" + key + "\"");
    }
    auto path = [&](const char* key, std::filesystem::path& out) {
      if (in.contains(key)) out = in.at(key).get<std::string>();
    };
    path("input", config.input_path);
    path("train", config.train_path);
    path("truth", config.truth_path);
    path("output_dir", config.output_dir);
    path("fixture_dir", config.fixture_dir);
    path("cache_dir", config.cache_dir);
    path("script", config.script_path);
    path("data_dir", config.data_dir);
    config.chat.model_name = in.value("model", config.chat.model_name);
    config.chat.temperature = in.value("temperature", config.chat.temperature);
    config.chat.max_output_tokens = in.value("max_output_tokens", config.chat.max_output_tokens);
    config.chat.system_prompt = in.value("system_prompt", config.chat.system_prompt);
    if (in.contains("setting")) {
      const auto setting = parse_setting(in.at("setting").get<std::string>());
      if (!setting) throw ConfigError("unknown setting " + in.at("setting").dump());
      config.setting = *setting;
    }
    if (in.contains("disambiguation")) {
      const auto mode = parse_disambiguation_mode(in.at("disambiguation").get<std::string>());
      if (!mode) throw ConfigError("unknown disambiguation mode " + in.at("disambiguation").dump());
      config.disambiguation_mode = *mode;
    }
    if (in.contains("provider")) {
      const auto provider = parse_provider_mode(in.at("provider").get<std::string>());
      if (!provider) throw ConfigError("unknown provider " + in.at("provider").dump());
      config.provider = *provider;
    }
    config.parallelism = in.value("parallelism", config.parallelism);
    config.context_budget = in.value("context_budget", config.context_budget);
    config.few_shot = in.value("few_shot", config.few_shot);
    config.search_limit = in.value("search_limit", config.search_limit);
    config.infobox_depth = in.value("infobox_depth", config.infobox_depth);
    config.api_base = in.value("api_base", config.api_base);
    config.record_fixtures = in.value("record_fixtures", config.record_fixtures);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  return config;
}

RunConfig config_from_manifest(const std::filesystem::path& manifest_path) {
  try {
    const json manifest = json::parse(read_file(manifest_path));
    return config_from_json(manifest.at("config").dump());
  } catch (const json::exception& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
}

Pipeline::Pipeline(PipelineServices services, PipelineOptions options, const TemplateSet& templates,
                   const ProfileTable& profiles, const LmSelectionTemplate& lm_template)
    : services_(services),
      options_(std::move(options)),
      templates_(templates),
      profiles_(profiles),
      lm_template_(lm_template) {}

void Pipeline::prepare(std::span<const QueryRecord> queries, std::span<const GroundTruthRecord> train) {
  // The context setting opens with the question exchange.
  const PromptSetting demo_setting =
      options_.setting == PromptSetting::triple ? PromptSetting::triple : PromptSetting::question;
  for (const auto& query : queries) {
    if (examples_.count(query.relation) != 0) continue;
    examples_[query.relation] =
        select_few_shot(train, query.relation, options_.few_shot, demo_setting, templates_, profiles_);
  }
}

PredictionRecord Pipeline::probe(const QueryRecord& record, RowTrace& trace) {
  const auto examples = examples_.find(record.relation);
  if (examples == examples_.end()) {
    throw ConfigError("no demonstrations prepared for " + std::string(to_string(record.relation)));
  }

  PredictionRecord row;
  row.query = record;
  row.setting = options_.setting;

  const Prompt step_one = options_.setting == PromptSetting::triple
                              ? build_triple_prompt(record, examples->second, templates_)
                              : build_question_prompt(record, examples->second, templates_);
  const std::string_view first_kind = options_.setting == PromptSetting::triple ? "triple" : "question";
  auto start = Clock::now();
  const ChatResponse first =
      services_.chat.complete(options_.chat.make_request(step_one.messages, row_tag(first_kind, record)));
  trace.probe_ms += elapsed_ms(start);
  trace.events.push_back(std::string("probe ") + (first.cached ? "cached" : std::string(to_string(first.provider))));

  if (options_.setting != PromptSetting::context) {
    row.raw_model_text = first.text;
    return row;
  }

  row.step_one_text = first.text;
  start = Clock::now();
  ContextAssembler assembler(services_.pages, services_.imdb, options_.context);
  std::vector<std::string> warnings;
  const ContextBundle bundle = assembler.assemble(record, profiles_.profile(record.relation), &warnings);
  trace.context_ms += elapsed_ms(start);
  trace.context_titles = bundle.source_titles;
  for (auto& warning : warnings) trace.events.push_back("context: " + warning);
  if (bundle.truncated) trace.events.push_back("context truncated to budget");

  const Prompt followup = build_context_followup_prompt(step_one, bundle.render(), first.text, templates_);
  start = Clock::now();
  const ChatResponse second =
      services_.chat.complete(options_.chat.make_request(followup.messages, row_tag("context", record)));
  trace.probe_ms += elapsed_ms(start);
  trace.events.push_back(std::string("followup ") +
                         (second.cached ? "cached" : std::string(to_string(second.provider))));
  row.raw_model_text = second.text;
  return row;
}

PredictionRecord Pipeline::process(const QueryRecord& record, RowTrace& trace) {
  const RelationProfile& profile = profiles_.profile(record.relation);
  PredictionRecord row = probe(record, trace);

  ParsedObjectList parsed = parse_object_list(row.raw_model_text);
  row.parse_failed = parsed.failed;
  if (parsed.failed) trace.events.push_back("reply has no list literal");
  std::vector<std::string> objects = profile.value_kind == ValueKind::numeric
                                         ? normalize_numeric_objects(parsed.objects)
                                         : std::move(parsed.objects);

  const auto start = Clock::now();
  EntityMapper mapper(services_.candidates, options_.mode, &services_.chat, options_.chat, options_.search_limit,
                      templates_, lm_template_);
  row.mapping_outcomes = mapper.map_objects(objects, record, profile);
  trace.mapping_ms += elapsed_ms(start);

  for (const auto& outcome : row.mapping_outcomes) {
    row.object_labels.push_back(outcome.object_label);
    row.object_ids.push_back(outcome.resolved_qid.value_or(""));
    if (outcome.error_class) {
      trace.events.push_back(std::string(to_string(*outcome.error_class)) + ": " + outcome.object_label);
    }
  }
  return row;
}

std::vector<PredictionRecord> Pipeline::process_all(std::span<const QueryRecord> queries,
                                                    std::vector<RowTrace>& traces) {
  std::vector<PredictionRecord> rows(queries.size());
  traces.assign(queries.size(), RowTrace{});

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::size_t failure_row = 0;

  auto worker = [&] {
    for (std::size_t i = next++; i < queries.size() && !stop; i = next++) {
      try {
        rows[i] = process(queries[i], traces[i]);
      } catch (const MissingFixtureError&) {
        std::lock_guard lock(failure_mutex);
        if (!failure || i < failure_row) {
          failure = std::current_exception();
          failure_row = i;
        }
        stop = true;
      } catch (const std::exception& e) {
        if (options_.abort_on_row_error) {
          std::lock_guard lock(failure_mutex);
          if (!failure || i < failure_row) {
            failure = std::current_exception();
            failure_row = i;
          }
          stop = true;
        } else {
          rows[i] = PredictionRecord{};
          rows[i].query = queries[i];
          rows[i].setting = options_.setting;
          rows[i].error = e.what();
          traces[i].events.push_back(std::string("row failed: ") + e.what());
        }
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options_.parallelism, 1, std::max<std::size_t>(queries.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < workers; ++t) threads.emplace_back(worker);
  worker();
  for (auto& thread : threads) thread.join();

  if (failure) rethrow_for_row(failure, row_name(failure_row, queries[failure_row]));
  return rows;
}

RunResult run(const RunConfig& config) {
  const auto run_start = Clock::now();
  if (config.input_path.empty()) throw ConfigError("run needs an input file");
  if (config.train_path.empty()) throw ConfigError("run needs a train file for demonstrations");
  if (config.parallelism == 0) throw ConfigError("parallelism must be at least 1");
  if (config.context_budget == 0) throw ConfigError("context budget must be positive");
  if (config.infobox_depth < 0) throw ConfigError("infobox depth must not be negative");
  if (config.provider != ProviderMode::live && config.fixture_dir.empty()) {
    throw ConfigError(std::string(to_string(config.provider)) + " runs need a fixture directory");
  }
  if (config.provider == ProviderMode::scripted && config.script_path.empty()) {
    throw ConfigError("scripted runs need a reply script");
  }
  if (config.provider == ProviderMode::live && config.record_fixtures && config.fixture_dir.empty()) {
    throw ConfigError("recording fixtures needs a fixture directory");
  }

  const std::filesystem::path data_dir = config.data_dir.empty() ? default_data_dir() : config.data_dir;
  const TemplateSet templates = TemplateSet::load(data_dir / "templates.json");
  const ProfileTable profiles = ProfileTable::load(data_dir / "relations.jsonc");
  const LmSelectionTemplate lm_template = LmSelectionTemplate::load(data_dir / "lm_disambiguation.txt");

  const std::vector<QueryRecord> queries = load_queries(config.input_path);
  const std::vector<GroundTruthRecord> train = load_truth(config.train_path, profiles);
  std::optional<std::vector<GroundTruthRecord>> truth;
  if (!config.truth_path.empty()) truth = load_truth(config.truth_path, profiles);

  const bool live = config.provider == ProviderMode::live;
  const std::filesystem::path store_dir =
      live && !config.record_fixtures ? config.cache_dir : config.fixture_dir;
  const std::filesystem::path llm_path = store_dir / "llm.jsonl";
  const std::filesystem::path candidates_path = store_dir / "candidates.jsonl";
  const std::filesystem::path pages_path = store_dir / "pages.jsonl";
  const std::filesystem::path imdb_path = (config.fixture_dir.empty() ? store_dir : config.fixture_dir) / "imdb.jsonl";

  FixtureStore llm_store = FixtureStore::load_or_empty(llm_path);
  CandidateStore candidate_store = CandidateStore::load_or_empty(candidates_path);
  PageStore page_store = PageStore::load_or_empty(pages_path);
  const ImdbTable imdb = ImdbTable::load_or_empty(imdb_path);

  std::unique_ptr<HttplibTransport> raw_transport;
  std::unique_ptr<HostRateLimiter> limiter;
  std::unique_ptr<RetryingTransport> transport;
  std::unique_ptr<ChatProvider> provider;
  std::unique_ptr<CandidateSource> search_upstream;
  std::unique_ptr<PageSource> page_upstream;
  switch (config.provider) {
    case ProviderMode::replay:
      provider = std::make_unique<ReplayProvider>(llm_store);
      break;
    case ProviderMode::scripted:
      provider = std::make_unique<ScriptedProvider>(ScriptedProvider::load(config.script_path));
      break;
    case ProviderMode::live: {
      const std::string key = OpenAIChatProvider::api_key_from_env();
      raw_transport = std::make_unique<HttplibTransport>();
      limiter = std::make_unique<HostRateLimiter>(std::chrono::milliseconds(100));
      transport = std::make_unique<RetryingTransport>(*raw_transport, RetryPolicy{}, Sleeper{}, limiter.get());
      provider = std::make_unique<OpenAIChatProvider>(*transport, key, config.api_base);
      search_upstream = std::make_unique<WikidataSearch>(*transport);
      page_upstream = std::make_unique<WikipediaApi>(*transport);
      break;
    }
  }

  ChatClientOptions chat_options;
  chat_options.max_in_flight = config.parallelism;
  chat_options.persistent = config.provider == ProviderMode::replay ? nullptr : &llm_store;
  ChatClient chat(*provider, chat_options);
  CachedCandidateSource candidates(candidate_store, search_upstream.get());
  CachedPageSource pages(page_store, page_upstream.get());

  PipelineOptions options;
  options.setting = config.setting;
  options.mode = config.disambiguation_mode;
  options.chat = config.chat;
  options.few_shot = config.few_shot;
  options.search_limit = config.search_limit;
  options.parallelism = config.parallelism;
  options.context.budget = config.context_budget;
  options.context.infobox.template_depth = config.infobox_depth;
  options.abort_on_row_error = !live;

  Pipeline pipeline({chat, candidates, pages, &imdb}, options, templates, profiles, lm_template);
  pipeline.prepare(queries, train);

  auto save_stores = [&] {
    if (config.provider == ProviderMode::replay) return;
    std::filesystem::create_directories(store_dir);
    llm_store.save(llm_path);
    if (live) {
      candidate_store.save(candidates_path);
      page_store.save(pages_path);
    }
  };

  std::vector<RowTrace> traces;
  RunResult result;
  try {
    result.predictions = pipeline.process_all(queries, traces);
  } catch (...) {
    save_stores();
    throw;
  }
  save_stores();

  std::filesystem::create_directories(config.output_dir);
  write_predictions(config.output_dir / "predictions.jsonl", result.predictions);

  std::string events;
  double probe_ms = 0.0;
  double context_ms = 0.0;
  double mapping_ms = 0.0;
  std::size_t context_fetches = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    ordered_json line;
    line["row"] = i + 1;
    line["SubjectEntityID"] = queries[i].subject_qid;
    line["Relation"] = to_string(queries[i].relation);
    line["events"] = traces[i].events;
    line["context_titles"] = traces[i].context_titles;
    line["probe_ms"] = traces[i].probe_ms;
    line["context_ms"] = traces[i].context_ms;
    line["mapping_ms"] = traces[i].mapping_ms;
    events += line.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
    probe_ms += traces[i].probe_ms;
    context_ms += traces[i].context_ms;
    mapping_ms += traces[i].mapping_ms;
    context_fetches += traces[i].context_titles.size();
  }
  write_file(config.output_dir / "events.jsonl", events);

  if (truth) {
    result.report = overall_report(result.predictions, *truth);
    write_file(config.output_dir / "report.json", report_to_json(*result.report) + "\n");
    write_file(config.output_dir / "report.txt", report_to_table(*result.report));
  }

  std::size_t parse_failures = 0;
  std::size_t row_errors = 0;
  for (const auto& row : result.predictions) {
    parse_failures += row.parse_failed ? 1 : 0;
    row_errors += row.error.empty() ? 0 : 1;
  }

  ordered_json manifest;
  manifest["config"] = ordered_json::parse(config_to_json(config));
  manifest["checksums"] = {
      {"input", checksum_or_empty(config.input_path)},
      {"train", checksum_or_empty(config.train_path)},
      {"truth", checksum_or_empty(config.truth_path)},
      {"templates", templates.checksum()},
      {"relations", checksum_or_empty(data_dir / "relations.jsonc")},
      {"lm_template", checksum_or_empty(data_dir / "lm_disambiguation.txt")},
      {"llm_fixtures", checksum_or_empty(llm_path)},
      {"candidate_fixtures", checksum_or_empty(candidates_path)},
      {"page_fixtures", checksum_or_empty(pages_path)},
      {"imdb", checksum_or_empty(imdb_path)},
  };
  manifest["counts"] = {
      {"rows", result.predictions.size()},
      {"parse_failures", parse_failures},
      {"row_errors", row_errors},
      {"context_fetches", context_fetches},
  };
  manifest["timings_ms"] = {
      {"total", elapsed_ms(run_start)},
      {"probe", probe_ms},
      {"context", context_ms},
      {"mapping", mapping_ms},
  };
  if (result.report) manifest["overall"] = ordered_json::parse(report_to_json(*result.report))["overall"];
  result.manifest_json = manifest.dump(2);
  write_file(config.output_dir / "manifest.json", result.manifest_json + "\n");
  return result;
}

}  // namespace llmke
