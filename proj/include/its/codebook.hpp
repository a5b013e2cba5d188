#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "its/code.hpp"
#include "its/corpus.hpp"
#include "its/csv.hpp"
#include "its/llm.hpp"
#include "its/metrics.hpp"

namespace its::codebook {

struct InterviewTally {
  std::string interview_id;
  int codes_generated = 0;
  int codes_accepted_unique = 0;
  friend bool operator==(const InterviewTally&, const InterviewTally&) = default;
};

/// The cumulative total codebook and the cumulative unique codebook.
/// Mutated by a single owner; copies handed out are snapshots.
struct CodebookState {
  std::vector<Code> cumulative_total;
  std::vector<Code> cumulative_unique;  // first-acceptance order
  std::vector<int> accepted_at;         // interview ordinal per unique code
  std::vector<InterviewTally> per_interview;

  std::vector<std::string> unique_texts() const;
  /// Throws InvalidSeries when the count identities do not hold.
  void check_invariants() const;

  friend bool operator==(const CodebookState&, const CodebookState&) = default;
};

/// Same-meaning judgment: true when `candidate` duplicates something in
/// `frozen_codebook`. Must be safe to call concurrently.
using Judge = std::function<bool(const std::string& candidate,
                                 const std::vector<std::string>& frozen_codebook)>;

Judge gateway_judge(const llm::Gateway& gateway);

struct ReduceOptions {
  /// Issue the judgments of one interview concurrently.
  bool parallel_judgments = false;
  /// Treat a case-insensitive exact text match as a duplicate without asking
  /// the judge.
  bool exact_match_fast_path = false;
};

/// Interview 1 seeds both codebooks. Throws EmptyCodeList.
CodebookState bootstrap_unique(const std::vector<Code>& first_interview_codes);

/// Judges every new code against the unique codebook as it stood before
/// this interview, then appends the codes judged new in their original
/// order. Judge failures are rethrown with the offending code attached.
CodebookState reduce_interview(CodebookState state, const std::vector<Code>& new_codes,
                               const Judge& judge, const ReduceOptions& options = {});

/// Baseline: a single sequential pass over every code, each judged against
/// the codes accepted so far.
std::vector<Code> reduce_a_posteriori(const std::vector<Code>& all_codes, const Judge& judge);

metrics::SaturationSeries series_of(const CodebookState& state);

struct PipelineConfig {
  int n_codes = 15;
  ReduceOptions reduce;
  /// When set, raw codes and a resumable snapshot are persisted here after
  /// every interview.
  std::optional<std::filesystem::path> work_dir;
  /// Continue from the snapshot in work_dir instead of refusing to start.
  bool resume = false;
  std::function<void(const metrics::SeriesPoint&)> on_interview_done;
};

struct PipelineResult {
  CodebookState state;
  metrics::SaturationSeries series;
};

/// Codes interview 1 and bootstraps, then codes and reduces every later
/// interview in order.
PipelineResult run_pipeline(const corpus::Corpus& corpus, const llm::Gateway& gateway,
                            const PipelineConfig& config);

/// Same loop with the coder and judge injected directly.
using Coder = std::function<std::vector<Code>(const corpus::Interview&)>;
PipelineResult run_pipeline(const corpus::Corpus& corpus, const Coder& coder, const Judge& judge,
                            const PipelineConfig& config);

// CSV forms. Columns: interview_id,index,name,description,quote
// (+accepted_at_interview for the unique codebook).
csv::Table codes_table(const std::vector<Code>& codes);
csv::Table unique_table(const CodebookState& state);
std::vector<Code> codes_from_table(const csv::Table& table);
std::vector<int> accepted_at_from_table(const csv::Table& table);

void write_codes_csv(const std::filesystem::path& path, const std::vector<Code>& codes);
std::vector<Code> read_codes_csv(const std::filesystem::path& path);

/// Rebuilds a state from the two codebook CSVs. Per-interview tallies are
/// recovered from interview ids (total) and accepted_at (unique) using
/// `interview_order`.
CodebookState load_state(const std::filesystem::path& total_csv,
                         const std::filesystem::path& unique_csv,
                         const std::vector<std::string>& interview_order);

}  // namespace its::codebook
