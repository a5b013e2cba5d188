#include "its/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <regex>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "its/codebook.hpp"
#include "its/corpus.hpp"
#include "its/llm.hpp"
#include "its/metrics.hpp"
#include "its/probability.hpp"
#include "its/reporting.hpp"
#include "its/similarity.hpp"

namespace its::cli {
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::DomainError:
      return kUsage;
    case ErrorKind::ProviderExhausted:
    case ErrorKind::CredentialMissing:
    case ErrorKind::FixtureMiss:
    case ErrorKind::MalformedResponse:
    case ErrorKind::MissingKey:
    case ErrorKind::EmptyThemes:
    case ErrorKind::MalformedEntry:
    case ErrorKind::UnrecognizedVerdict:
    case ErrorKind::EmptyCodebook:
    case ErrorKind::EmptyCodeList:
    case ErrorKind::JudgeFailed:
    case ErrorKind::ProviderError:
    case ErrorKind::MissingVector:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::ZeroNorm:
      return kProvider;
    case ErrorKind::InvalidMatrix:
    case ErrorKind::InvalidSeries:
      return kValidationFailed;
    case ErrorKind::CorpusEmpty:
    case ErrorKind::CorpusFileInvalid:
    case ErrorKind::ManifestMismatch:
    case ErrorKind::EmptyCurve:
    case ErrorKind::OutputExists:
    case ErrorKind::Io:
      return kIo;
  }
  return kIo;
}

namespace {

struct ProviderFlags {
  std::string mode = "live";
  std::string fixtures;
  std::string endpoint{llm::kDefaultChatEndpoint};
  std::string credential_env{llm::kDefaultCredentialEnv};
  int max_retries = 3;
  int timeout_ms = 60'000;
  int backoff_ms = 500;
};

void add_provider_flags(CLI::App& cmd, ProviderFlags& f) {
  cmd.add_option("--mode", f.mode, "Provider mode")
      ->check(CLI::IsMember({"live", "replay", "record"}))
      ->capture_default_str();
  cmd.add_option("--fixtures", f.fixtures, "Replay fixture directory (replay/record modes)");
  cmd.add_option("--endpoint", f.endpoint, "Chat-completions endpoint URL")->capture_default_str();
  cmd.add_option("--credential-env", f.credential_env,
                 "Environment variable holding the API key")
      ->capture_default_str();
  cmd.add_option("--max-retries", f.max_retries, "HTTP retries on 429/5xx/timeouts")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option("--timeout-ms", f.timeout_ms, "HTTP timeout per attempt")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--backoff-ms", f.backoff_ms, "Base of the exponential backoff")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

std::shared_ptr<llm::CompletionProvider> make_provider(const ProviderFlags& f) {
  if ((f.mode == "replay" || f.mode == "record") && f.fixtures.empty()) {
    fail(ErrorKind::Usage, "--mode " + f.mode + " requires --fixtures DIR");
  }
  if (f.mode == "replay") {
    if (!fs::is_directory(f.fixtures)) {
      fail(ErrorKind::Io, f.fixtures + ": fixture directory not found");
    }
    return std::make_shared<llm::ReplayProvider>(f.fixtures);
  }
  llm::ProviderConfig cfg;
  cfg.endpoint_url = f.endpoint;
  cfg.credential_env_var = f.credential_env;
  cfg.max_retries = f.max_retries;
  cfg.timeout = std::chrono::milliseconds(f.timeout_ms);
  cfg.backoff_base = std::chrono::milliseconds(f.backoff_ms);
  const char* key = std::getenv(f.credential_env.c_str());
  if (key == nullptr || *key == '\0') {
    fail(ErrorKind::CredentialMissing, "environment variable " + f.credential_env + " is not set");
  }
  auto live = std::make_shared<llm::HttpChatProvider>(cfg);
  if (f.mode == "record") return std::make_shared<llm::RecordingProvider>(live, f.fixtures);
  return live;
}

std::string default_run_id(const std::string& corpus_name) {
  auto stamp = reporting::utc_now_iso8601();
  stamp.erase(std::remove_if(stamp.begin(), stamp.end(), [](char c) { return c == ':' || c == '-'; }),
              stamp.end());
  return corpus_name + "-" + stamp;
}

// ---------------------------------------------------------------------- run

struct RunFlags {
  std::string corpus;
  std::string order_manifest;
  std::string dataset;
  std::string model{llm::kDefaultModel};
  int codes = 15;
  double temperature = 0.0;
  int max_output_tokens = 2048;
  int parse_retries = 2;
  std::string out = "runs";
  std::string run_id;
  std::uint64_t seed = 0;
  bool resume = false;
  bool parallel_judgments = false;
  bool exact_match = false;
  long token_budget = 16000;
  double chars_per_token = 4.0;
  ProviderFlags provider;
};

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  if (f.temperature != 0.0) {
    fail(ErrorKind::Usage, "pipeline runs use temperature 0");
  }
  corpus::OrderSpec order;
  if (!f.order_manifest.empty()) order.manifest = f.order_manifest;
  auto corpus = corpus::load_corpus(f.corpus, order);
  if (!f.dataset.empty()) corpus.name = f.dataset;
  for (const auto& w : corpus::check_token_budget(corpus, f.token_budget, f.chars_per_token)) {
    err << fmt::format("warning: interview {} is ~{} tokens, above the {} token budget\n",
                       w.interview_id, w.estimated_tokens, w.budget);
  }

  const auto run_id = f.run_id.empty() ? default_run_id(corpus.name) : f.run_id;
  const fs::path out_root = f.out;
  if (fs::exists(out_root / run_id)) fail(ErrorKind::OutputExists, (out_root / run_id).string());
  const auto work_dir = out_root / ".work" / run_id;

  auto provider = make_provider(f.provider);
  llm::GatewayOptions gopts;
  gopts.model_id = f.model;
  gopts.temperature = f.temperature;
  gopts.max_output_tokens = f.max_output_tokens;
  gopts.parse_retries = f.parse_retries;
  const llm::Gateway gateway(provider, gopts);

  codebook::PipelineConfig pcfg;
  pcfg.n_codes = f.codes;
  pcfg.reduce.parallel_judgments = f.parallel_judgments;
  pcfg.reduce.exact_match_fast_path = f.exact_match;
  pcfg.work_dir = work_dir;
  pcfg.resume = f.resume;

  reporting::RunManifest manifest;
  manifest.run_id = run_id;
  manifest.corpus_name = corpus.name;
  manifest.model_id = f.model;
  manifest.temperature = f.temperature;
  manifest.n_codes_requested = f.codes;
  manifest.provider_mode = f.provider.mode;
  for (const auto& iv : corpus.interviews) manifest.interview_order.push_back(iv.id);
  manifest.settings = {
      {"corpus_path", f.corpus},
      {"order_manifest", f.order_manifest},
      {"fixtures", f.provider.fixtures},
      {"endpoint", f.provider.mode == "replay" ? std::string{} : f.provider.endpoint},
      {"credential_env", f.provider.credential_env},
      {"max_output_tokens", f.max_output_tokens},
      {"parse_retries", f.parse_retries},
      {"parallel_judgments", f.parallel_judgments},
      {"exact_match_fast_path", f.exact_match},
      {"seed", f.seed},
  };
  manifest.started_at = reporting::utc_now_iso8601();

  codebook::PipelineResult result;
  try {
    result = codebook::run_pipeline(corpus, gateway, pcfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (fs::exists(work_dir / "run_state.json")) {
      err << fmt::format("completed interviews are saved in {}; continue with the same flags "
                         "plus --run-id {} --resume\n",
                         work_dir.string(), run_id);
    }
    return exit_code_for(e.kind());
  }

  const auto& last = result.series.points.back();
  const auto its = metrics::its_slope_ratio(last.total_after, last.unique_after);
  manifest.totals = {its.total_codes, its.unique_codes, its.slope_ratio};
  manifest.finished_at = reporting::utc_now_iso8601();
  const auto index = reporting::write_run_artifacts(result.state, result.series, manifest, out_root);
  std::error_code ec;
  fs::remove_all(work_dir, ec);
  if (fs::is_empty(out_root / ".work", ec)) fs::remove(out_root / ".work", ec);

  out << fmt::format("total={} unique={} ITS={}\n", its.total_codes, its.unique_codes,
                     metrics::display_ratio(its.slope_ratio));
  out << "run directory: " << index.run_dir.string() << "\n";
  return kOk;
}

// ----------------------------------------------------------------- simulate

struct SimulateFlags {
  long space = 100;
  int iterations = 10;
  int draw = 15;
  int replications = 1000;
  std::uint64_t seed = 42;
  bool with_replacement = false;
  long unique_codes = 66;
  long codes_next = 15;
  long space_max = 300;
  std::string out;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
  probability::SimulationConfig cfg;
  cfg.code_space = f.space;
  cfg.iterations = f.iterations;
  cfg.draw_size = f.draw;
  cfg.replications = f.replications;
  cfg.seed = f.seed;
  cfg.sampling = f.with_replacement ? probability::Sampling::WithReplacement
                                    : probability::Sampling::WithoutReplacement;
  const auto result = probability::simulate_code_space(cfg);
  const auto curve =
      probability::probability_curve(f.unique_codes, f.codes_next, f.unique_codes, f.space_max);
  reporting::write_simulation_artifacts(f.out, result, curve, f.unique_codes, f.codes_next);

  const auto& last = result.per_iteration.back();
  const auto expected =
      probability::expected_unique(cfg.code_space, cfg.iterations, cfg.draw_size, cfg.sampling);
  out << fmt::format("iterations={} total={} mean_unique={:.2f} stddev={:.2f} expected={:.2f}\n",
                     last.iteration, last.mean_total, last.mean_unique, last.stddev_unique,
                     expected);
  out << fmt::format("P(at least one unique | unique={}, next={}, space={}) = {:.4f}\n",
                     f.unique_codes, f.codes_next, f.space_max, curve.back().probability);
  out << "outputs: " << f.out << "\n";
  return kOk;
}

// ----------------------------------------------------------------- validate

struct ValidateFlags {
  std::string run_dir;
  std::string vectors;
  std::string embed_endpoint;
  std::string embed_model = "all-mpnet-base-v2";
  std::string credential_env{llm::kDefaultCredentialEnv};
  double threshold = similarity::kHardThreshold;
  double warn_threshold = similarity::kDefaultWarnThreshold;
};

int cmd_validate(const ValidateFlags& f, std::ostream& out, std::ostream& err) {
  if (f.vectors.empty() == f.embed_endpoint.empty()) {
    fail(ErrorKind::Usage, "give exactly one of --vectors FILE or --embed-endpoint URL");
  }
  const fs::path run_dir = f.run_dir;
  const auto unique_csv = run_dir / "cumulative_unique.csv";
  if (!fs::exists(unique_csv)) fail(ErrorKind::Io, unique_csv.string() + " not found");
  const auto codes = codebook::read_codes_csv(unique_csv);

  std::vector<similarity::EmbedInput> inputs;
  for (const auto& c : codes) inputs.push_back({c.code_id(), c.codebook_text()});

  std::unique_ptr<similarity::EmbeddingProvider> provider;
  if (!f.vectors.empty()) {
    if (!fs::exists(f.vectors)) fail(ErrorKind::Io, f.vectors + ": vectors file not found");
    provider = std::make_unique<similarity::FileEmbeddingProvider>(f.vectors);
  } else {
    similarity::HttpEmbeddingConfig cfg;
    cfg.endpoint_url = f.embed_endpoint;
    cfg.model_id = f.embed_model;
    cfg.credential_env_var = f.credential_env;
    provider = std::make_unique<similarity::HttpEmbeddingProvider>(cfg);
  }
  const auto vectors = similarity::embed_codes(inputs, *provider);
  const auto matrix = similarity::similarity_matrix(vectors);
  const auto hard = similarity::validate_uniqueness(matrix, f.threshold);
  const auto warn = similarity::validate_uniqueness(matrix, f.warn_threshold);
  reporting::write_similarity_artifacts(run_dir, matrix, hard, warn);

  for (const auto& p : warn.flagged_pairs) {
    if (p.similarity < f.threshold - similarity::kTolerance) {
      err << fmt::format("warning: near-duplicate {} ~ {} (cosine {:.4f})\n", p.code_id_a,
                         p.code_id_b, p.similarity);
    }
  }
  for (const auto& p : hard.flagged_pairs) {
    out << fmt::format("duplicate: {} ~ {} (cosine {:.6f})\n", p.code_id_a, p.code_id_b,
                       p.similarity);
  }
  out << fmt::format("codes={} flagged={} near_duplicates={} passed={}\n", matrix.n,
                     hard.flagged_pairs.size(), warn.flagged_pairs.size(),
                     hard.passed ? "true" : "false");
  return hard.passed ? kOk : kValidationFailed;
}

// ----------------------------------------------------------- reduce-posthoc

struct PosthocFlags {
  std::string run_dir;
  std::string model;
  int parse_retries = 2;
  ProviderFlags provider;
};

std::vector<fs::path> interview_code_files(const fs::path& codes_dir) {
  static const std::regex pattern(R"(interview_(\d+)\.csv)");
  std::vector<std::pair<int, fs::path>> found;
  if (fs::is_directory(codes_dir)) {
    for (const auto& e : fs::directory_iterator(codes_dir)) {
      std::smatch m;
      const auto name = e.path().filename().string();
      if (std::regex_match(name, m, pattern)) found.emplace_back(std::stoi(m[1]), e.path());
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [n, p] : found) out.push_back(std::move(p));
  return out;
}

int cmd_reduce_posthoc(const PosthocFlags& f, std::ostream& out) {
  const fs::path run_dir = f.run_dir;
  const auto files = interview_code_files(run_dir / "codes");
  if (files.empty()) fail(ErrorKind::Io, (run_dir / "codes").string() + ": no interview code CSVs");

  std::vector<Code> all;
  for (const auto& p : files) {
    auto codes = codebook::read_codes_csv(p);
    all.insert(all.end(), codes.begin(), codes.end());
  }

  llm::GatewayOptions gopts;
  gopts.parse_retries = f.parse_retries;
  gopts.model_id = f.model;
  if (fs::exists(run_dir / "manifest.json")) {
    std::ifstream in(run_dir / "manifest.json");
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    if (!doc.is_discarded()) {
      if (gopts.model_id.empty()) gopts.model_id = doc.value("model_id", std::string{});
      gopts.temperature = doc.value("temperature", 0.0);
    }
  }
  if (gopts.model_id.empty()) gopts.model_id = std::string(llm::kDefaultModel);

  const llm::Gateway gateway(make_provider(f.provider), gopts);
  const auto posteriori = codebook::reduce_a_posteriori(all, codebook::gateway_judge(gateway));

  long incremental = -1;
  if (fs::exists(run_dir / "cumulative_unique.csv")) {
    incremental = static_cast<long>(codebook::read_codes_csv(run_dir / "cumulative_unique.csv").size());
  }
  const auto dir = run_dir / "posthoc";
  fs::create_directories(dir);
  codebook::write_codes_csv(dir / "unique_a_posteriori.csv", posteriori);
  const long apost = static_cast<long>(posteriori.size());
  nlohmann::ordered_json report{{"total_codes", all.size()},
                                {"a_posteriori_unique", apost}};
  if (incremental >= 0) {
    report["incremental_unique"] = incremental;
    report["delta"] = apost - incremental;
  }
  std::ofstream(dir / "comparison.json") << report.dump(2) << "\n";

  if (incremental >= 0) {
    out << fmt::format("incremental={} a_posteriori={} delta={}\n", incremental, apost,
                       apost - incremental);
  } else {
    out << fmt::format("a_posteriori={} (no incremental codebook to compare)\n", apost);
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"its-meter: LLM initial coding and inductive thematic saturation metrics",
               "its-meter"};
  app.require_subcommand(1);
  app.allow_extras(false);

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "Code a corpus incrementally and compute ITS");
  run_cmd->add_option("--corpus", rf.corpus, "Directory of transcript files")
      ->required()
      ->check(CLI::ExistingDirectory);
  run_cmd->add_option("--order-manifest", rf.order_manifest,
                      "File listing transcript filenames in coding order");
  run_cmd->add_option("--dataset", rf.dataset, "Dataset name (default: corpus directory name)");
  run_cmd->add_option("--model", rf.model, "Model id")->capture_default_str();
  run_cmd->add_option("--codes", rf.codes, "Codes requested per interview")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--temperature", rf.temperature, "Sampling temperature (must be 0)")
      ->check(CLI::Range(0.0, 2.0))
      ->capture_default_str();
  run_cmd->add_option("--max-output-tokens", rf.max_output_tokens, "Completion token limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--parse-retries", rf.parse_retries, "Re-asks on unparseable responses")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  run_cmd->add_option("--out", rf.out, "Output root")->capture_default_str();
  run_cmd->add_option("--run-id", rf.run_id, "Run directory name (default: corpus-timestamp)");
  run_cmd->add_option("--seed", rf.seed, "Recorded in the manifest")->capture_default_str();
  run_cmd->add_flag("--resume", rf.resume, "Continue an interrupted run with the same --run-id");
  run_cmd->add_flag("--parallel-judgments", rf.parallel_judgments,
                    "Issue the dedup calls of one interview concurrently");
  run_cmd->add_flag("--exact-match", rf.exact_match,
                    "Skip the judge for exact (case-insensitive) text matches");
  run_cmd->add_option("--token-budget", rf.token_budget, "Context budget for the size warning")
      ->capture_default_str();
  run_cmd->add_option("--chars-per-token", rf.chars_per_token, "Token estimate heuristic")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_provider_flags(*run_cmd, rf.provider);

  SimulateFlags sf;
  auto* sim_cmd = app.add_subcommand("simulate", "Code-space draw simulation and probability curve");
  sim_cmd->add_option("--space", sf.space, "Code space size")->capture_default_str();
  sim_cmd->add_option("--iterations", sf.iterations, "Interviews simulated")->capture_default_str();
  sim_cmd->add_option("--draw", sf.draw, "Codes drawn per interview")->capture_default_str();
  sim_cmd->add_option("--replications", sf.replications, "Monte Carlo repeats")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sf.seed, "Generator seed")->capture_default_str();
  sim_cmd->add_flag("--with-replacement", sf.with_replacement,
                    "Draw with replacement inside one interview");
  sim_cmd->add_option("--unique-codes", sf.unique_codes, "Unique codes for the probability curve")
      ->capture_default_str();
  sim_cmd->add_option("--codes-next", sf.codes_next, "Codes of the next interview")
      ->capture_default_str();
  sim_cmd->add_option("--space-max", sf.space_max, "Last code space on the probability curve")
      ->capture_default_str();
  sim_cmd->add_option("--out", sf.out, "Output directory")->required();

  ValidateFlags vf;
  auto* val_cmd = app.add_subcommand("validate", "Cosine-similarity check of the unique codebook");
  val_cmd->add_option("--run-dir", vf.run_dir, "Run directory")->required();
  val_cmd->add_option("--vectors", vf.vectors, "Precomputed vectors (.csv or .json)");
  val_cmd->add_option("--embed-endpoint", vf.embed_endpoint, "Embeddings endpoint URL");
  val_cmd->add_option("--embed-model", vf.embed_model, "Embedding model id")->capture_default_str();
  val_cmd->add_option("--credential-env", vf.credential_env, "API key environment variable")
      ->capture_default_str();
  val_cmd->add_option("--threshold", vf.threshold, "Hard duplicate threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  val_cmd->add_option("--warn-threshold", vf.warn_threshold, "Near-duplicate warning threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  PosthocFlags pf;
  auto* post_cmd = app.add_subcommand(
      "reduce-posthoc", "A-posteriori codebook reduction compared with the incremental one");
  post_cmd->add_option("--run-dir", pf.run_dir, "Run directory")->required();
  post_cmd->add_option("--model", pf.model, "Model id (default: the run's)");
  post_cmd->add_option("--parse-retries", pf.parse_retries, "Re-asks on unparseable responses")
      ->capture_default_str();
  add_provider_flags(*post_cmd, pf.provider);

  std::string report_dir;
  auto* rep_cmd = app.add_subcommand("report", "Re-render plots from a run's CSVs");
  rep_cmd->add_option("--run-dir", report_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    } else {
      err << app.help();
    }
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(rf, out, err);
    if (*sim_cmd) return cmd_simulate(sf, out);
    if (*val_cmd) return cmd_validate(vf, out, err);
    if (*post_cmd) return cmd_reduce_posthoc(pf, out);
    if (*rep_cmd) {
      for (const auto& p : reporting::render_run_plots(report_dir)) {
        out << (fs::path(report_dir) / p).string() << "\n";
      }
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}

}  // namespace its::cli
