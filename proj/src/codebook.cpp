#include "its/codebook.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <fstream>
#include <map>

#include <fmt/core.h>
#include <json.hpp>

#include "its/error.hpp"

namespace its::codebook {
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> CodebookState::unique_texts() const {
  std::vector<std::string> out;
  out.reserve(cumulative_unique.size());
  for (const auto& c : cumulative_unique) out.push_back(c.codebook_text());
  return out;
}

void CodebookState::check_invariants() const {
  long generated = 0;
  long accepted = 0;
  for (const auto& t : per_interview) {
    if (t.codes_accepted_unique > t.codes_generated || t.codes_accepted_unique < 0) {
      fail(ErrorKind::InvalidSeries, fmt::format("interview {} accepted {} of {}", t.interview_id,
                                                 t.codes_accepted_unique, t.codes_generated));
    }
    generated += t.codes_generated;
    accepted += t.codes_accepted_unique;
  }
  if (generated != static_cast<long>(cumulative_total.size()) ||
      accepted != static_cast<long>(cumulative_unique.size()) ||
      accepted_at.size() != cumulative_unique.size() ||
      cumulative_unique.size() > cumulative_total.size()) {
    fail(ErrorKind::InvalidSeries, "codebook counts disagree with per-interview tallies");
  }
}

Judge gateway_judge(const llm::Gateway& gateway) {
  return [&gateway](const std::string& candidate, const std::vector<std::string>& frozen) {
    return gateway.judge(candidate, frozen);
  };
}

CodebookState bootstrap_unique(const std::vector<Code>& first_interview_codes) {
  if (first_interview_codes.empty()) {
    fail(ErrorKind::EmptyCodeList, "the first interview produced no codes");
  }
  CodebookState s;
  s.cumulative_total = first_interview_codes;
  s.cumulative_unique = first_interview_codes;
  s.accepted_at.assign(first_interview_codes.size(), 1);
  const auto n = static_cast<int>(first_interview_codes.size());
  s.per_interview.push_back({first_interview_codes.front().interview_id, n, n});
  return s;
}

namespace {

std::string folded(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!out.empty() && out.back() != ' ') out += ' ';
    } else {
      out += static_cast<char>(std::tolower(c));
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

[[noreturn]] void rethrow_with_code(const std::exception_ptr& ep, const Code& code) {
  const auto context =
      fmt::format("judging code {} '{}'", code.code_id(), code.codebook_text());
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    throw Error(e.kind(), context + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::JudgeFailed, context + ": " + e.what());
  }
}

}  // namespace

CodebookState reduce_interview(CodebookState state, const std::vector<Code>& new_codes,
                               const Judge& judge, const ReduceOptions& options) {
  if (state.per_interview.empty() || state.cumulative_unique.empty()) {
    fail(ErrorKind::EmptyCodebook, "reduce_interview called before bootstrap");
  }
  if (new_codes.empty()) fail(ErrorKind::EmptyCodeList, "interview produced no codes");

  const auto frozen = state.unique_texts();
  std::vector<std::string> frozen_folded;
  if (options.exact_match_fast_path) {
    for (const auto& t : frozen) frozen_folded.push_back(folded(t));
  }

  const auto n = static_cast<std::ptrdiff_t>(new_codes.size());
  std::vector<char> duplicate(new_codes.size(), 0);
  std::vector<std::exception_ptr> errors(new_codes.size());

  auto judge_one = [&](std::ptrdiff_t i) {
    try {
      const auto text = new_codes[i].codebook_text();
      if (options.exact_match_fast_path &&
          std::find(frozen_folded.begin(), frozen_folded.end(), folded(text)) !=
              frozen_folded.end()) {
        duplicate[i] = 1;
        return;
      }
      duplicate[i] = judge(text, frozen) ? 1 : 0;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (options.parallel_judgments) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) judge_one(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) judge_one(i);
  }

  for (std::size_t i = 0; i < new_codes.size(); ++i) {
    if (errors[i]) rethrow_with_code(errors[i], new_codes[i]);
  }

  const int ordinal = static_cast<int>(state.per_interview.size()) + 1;
  int accepted = 0;
  for (std::size_t i = 0; i < new_codes.size(); ++i) {
    if (!duplicate[i]) {
      state.cumulative_unique.push_back(new_codes[i]);
      state.accepted_at.push_back(ordinal);
      ++accepted;
    }
  }
  state.cumulative_total.insert(state.cumulative_total.end(), new_codes.begin(), new_codes.end());
  state.per_interview.push_back(
      {new_codes.front().interview_id, static_cast<int>(new_codes.size()), accepted});
  return state;
}

std::vector<Code> reduce_a_posteriori(const std::vector<Code>& all_codes, const Judge& judge) {
  if (all_codes.empty()) fail(ErrorKind::EmptyCodeList, "nothing to reduce");
  std::vector<Code> accepted{all_codes.front()};
  std::vector<std::string> texts{all_codes.front().codebook_text()};
  for (std::size_t i = 1; i < all_codes.size(); ++i) {
    const auto text = all_codes[i].codebook_text();
    bool dup = false;
    try {
      dup = judge(text, texts);
    } catch (...) {
      rethrow_with_code(std::current_exception(), all_codes[i]);
    }
    if (!dup) {
      accepted.push_back(all_codes[i]);
      texts.push_back(text);
    }
  }
  return accepted;
}

metrics::SaturationSeries series_of(const CodebookState& state) {
  metrics::SaturationSeries s;
  long total = 0;
  long unique = 0;
  for (std::size_t i = 0; i < state.per_interview.size(); ++i) {
    total += state.per_interview[i].codes_generated;
    unique += state.per_interview[i].codes_accepted_unique;
    s.points.push_back({static_cast<int>(i) + 1, total, unique});
  }
  return s;
}

// ---------------------------------------------------------------- CSV forms

namespace {
const csv::Row kCodeColumns{"interview_id", "index", "name", "description", "quote"};

int to_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Io, fmt::format("bad {} value '{}'", what, s));
  }
}
}  // namespace

csv::Table codes_table(const std::vector<Code>& codes) {
  csv::Table t{kCodeColumns, {}};
  for (const auto& c : codes) {
    t.rows.push_back(
        {c.interview_id, std::to_string(c.index_in_interview), c.name, c.description, c.quote});
  }
  return t;
}

csv::Table unique_table(const CodebookState& state) {
  auto t = codes_table(state.cumulative_unique);
  t.header.push_back("accepted_at_interview");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    t.rows[i].push_back(std::to_string(state.accepted_at.at(i)));
  }
  return t;
}

std::vector<Code> codes_from_table(const csv::Table& table) {
  const auto iid = table.column("interview_id");
  const auto idx = table.column("index");
  const auto name = table.column("name");
  const auto desc = table.column("description");
  const auto quote = table.column("quote");
  std::vector<Code> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    out.push_back(Code{r[name], r[desc], r[quote], r[iid], to_int(r[idx], "index")});
  }
  return out;
}

std::vector<int> accepted_at_from_table(const csv::Table& table) {
  const auto col = table.column("accepted_at_interview");
  std::vector<int> out;
  for (const auto& r : table.rows) out.push_back(to_int(r[col], "accepted_at_interview"));
  return out;
}

void write_codes_csv(const fs::path& path, const std::vector<Code>& codes) {
  csv::write(path, codes_table(codes));
}

std::vector<Code> read_codes_csv(const fs::path& path) {
  return codes_from_table(csv::read(path));
}

CodebookState load_state(const fs::path& total_csv, const fs::path& unique_csv,
                         const std::vector<std::string>& interview_order) {
  CodebookState s;
  s.cumulative_total = read_codes_csv(total_csv);
  const auto unique = csv::read(unique_csv);
  s.cumulative_unique = codes_from_table(unique);
  s.accepted_at = accepted_at_from_table(unique);

  std::map<std::string, int> generated;
  for (const auto& c : s.cumulative_total) ++generated[c.interview_id];
  std::map<int, int> accepted;
  for (int a : s.accepted_at) ++accepted[a];

  for (std::size_t i = 0; i < interview_order.size(); ++i) {
    const auto& id = interview_order[i];
    const int ordinal = static_cast<int>(i) + 1;
    s.per_interview.push_back({id, generated[id], accepted[ordinal]});
  }
  s.check_invariants();
  return s;
}

// ----------------------------------------------------------------- pipeline

namespace {

constexpr const char* kRunStateFile = "run_state.json";

fs::path codes_path(const fs::path& work, int ordinal) {
  return work / "codes" / fmt::format("interview_{}.csv", ordinal);
}

void write_json_atomic(const fs::path& path, const json& doc) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, tmp.string() + ": cannot write");
    out << doc.dump(2) << '\n';
    if (!out) fail(ErrorKind::Io, tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, path.string() + ": " + ec.message());
}

void persist_snapshot(const fs::path& work, const CodebookState& state,
                      const std::vector<std::string>& order) {
  const int ordinal = static_cast<int>(state.per_interview.size());
  const auto dir_name = fmt::format("state_{}", ordinal);
  const auto dir = work / dir_name;
  fs::create_directories(dir);
  write_codes_csv(dir / "cumulative_total.csv", state.cumulative_total);
  csv::write(dir / "cumulative_unique.csv", unique_table(state));
  write_json_atomic(work / kRunStateFile, json{{"last_completed_ordinal", ordinal},
                                               {"snapshot_path", dir_name},
                                               {"interview_order", order}});
  if (ordinal > 1) {
    std::error_code ec;
    fs::remove_all(work / fmt::format("state_{}", ordinal - 1), ec);
  }
}

std::optional<CodebookState> load_snapshot(const fs::path& work,
                                           const std::vector<std::string>& order) {
  const auto state_file = work / kRunStateFile;
  if (!fs::exists(state_file)) return std::nullopt;
  std::ifstream in(state_file);
  const auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::Io, state_file.string() + ": not JSON");
  const auto last = doc.at("last_completed_ordinal").get<int>();
  const auto saved_order = doc.at("interview_order").get<std::vector<std::string>>();
  if (saved_order.size() != order.size() || !std::equal(saved_order.begin(), saved_order.end(),
                                                        order.begin())) {
    fail(ErrorKind::ManifestMismatch, "corpus order differs from the interrupted run");
  }
  const auto dir = work / doc.at("snapshot_path").get<std::string>();
  std::vector<std::string> done(order.begin(), order.begin() + last);
  return load_state(dir / "cumulative_total.csv", dir / "cumulative_unique.csv", done);
}

std::vector<Code> code_or_reload(const corpus::Interview& iv, const Coder& coder,
                                 const std::optional<fs::path>& work) {
  if (work) {
    const auto path = codes_path(*work, iv.ordinal);
    if (fs::exists(path)) return read_codes_csv(path);
  }
  auto codes = coder(iv);
  if (work) {
    fs::create_directories(*work / "codes");
    const auto path = codes_path(*work, iv.ordinal);
    auto tmp = path;
    tmp += ".tmp";
    write_codes_csv(tmp, codes);
    fs::rename(tmp, path);
  }
  return codes;
}

}  // namespace

PipelineResult run_pipeline(const corpus::Corpus& corpus, const Coder& coder, const Judge& judge,
                            const PipelineConfig& config) {
  if (corpus.empty()) fail(ErrorKind::CorpusEmpty, "corpus has no interviews");
  std::vector<std::string> order;
  for (const auto& iv : corpus.interviews) order.push_back(iv.id);

  std::optional<CodebookState> state;
  if (config.work_dir) {
    if (fs::exists(*config.work_dir / kRunStateFile) && !config.resume) {
      fail(ErrorKind::OutputExists,
           config.work_dir->string() + " holds an interrupted run; resume it or remove it");
    }
    fs::create_directories(*config.work_dir);
    if (config.resume) state = load_snapshot(*config.work_dir, order);
  }

  auto report = [&](const CodebookState& s) {
    if (config.work_dir) persist_snapshot(*config.work_dir, s, order);
    if (config.on_interview_done) config.on_interview_done(series_of(s).points.back());
  };

  std::size_t next = state ? state->per_interview.size() : 0;
  if (!state) {
    state = bootstrap_unique(code_or_reload(corpus.interviews.front(), coder, config.work_dir));
    report(*state);
    next = 1;
  }
  for (; next < corpus.interviews.size(); ++next) {
    const auto& iv = corpus.interviews[next];
    const auto codes = code_or_reload(iv, coder, config.work_dir);
    state = reduce_interview(std::move(*state), codes, judge, config.reduce);
    report(*state);
  }
  state->check_invariants();
  auto series = series_of(*state);
  return {std::move(*state), std::move(series)};
}

PipelineResult run_pipeline(const corpus::Corpus& corpus, const llm::Gateway& gateway,
                            const PipelineConfig& config) {
  const Coder coder = [&](const corpus::Interview& iv) {
    return gateway.code_interview(iv.id, iv.text, config.n_codes);
  };
  return run_pipeline(corpus, coder, gateway_judge(gateway), config);
}

}  // namespace its::codebook
