#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "its/codebook.hpp"
#include "its/metrics.hpp"
#include "its/probability.hpp"
#include "its/similarity.hpp"

namespace its::reporting {

struct PlotLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// One polyline (with point markers) per table, axes with ticks, legend.
/// Output depends only on the inputs. Throws EmptyCurve.
std::string render_line_plot(const std::vector<metrics::CurveTable>& tables,
                             const PlotLabels& labels);

/// n x n grid on a blue-white-red ramp over [-1, 1].
std::string render_heatmap(const similarity::SimilarityMatrix& matrix,
                           const std::string& title = "Cosine similarity of unique codes");

struct Totals {
  long total_codes = 0;
  long unique_codes = 0;
  double its_ratio = 0.0;
};

struct RunManifest {
  std::string run_id;
  std::string corpus_name;
  std::string model_id;
  double temperature = 0.0;
  int n_codes_requested = 15;
  std::string provider_mode;  // live | replay | record
  std::vector<std::string> interview_order;
  Totals totals;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;
  /// Settings that shape the run but are not fields above (endpoint,
  /// fixture dir, seed, ...). Never holds credentials.
  nlohmann::ordered_json settings = nlohmann::ordered_json::object();

  /// SHA-256 over every field except run_id and the timestamps.
  std::string config_digest() const;
  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& doc);
};

std::string utc_now_iso8601();

nlohmann::ordered_json metrics_json(const std::string& dataset,
                                    const metrics::SaturationSeries& series);

csv::Table series_table(const metrics::SaturationSeries& series);
metrics::SaturationSeries series_from_table(const csv::Table& table);
csv::Table curve_table(const metrics::CurveTable& curve);

struct ArtifactIndex {
  std::filesystem::path run_dir;
  std::vector<std::filesystem::path> files;  // relative to run_dir, in write order
};

/// Creates <out_root>/<run_id>/ and writes codes, codebooks, series,
/// curves, metrics, plots and the manifest. Throws OutputExists if the
/// directory is already there.
ArtifactIndex write_run_artifacts(const codebook::CodebookState& state,
                                  const metrics::SaturationSeries& series,
                                  const RunManifest& manifest,
                                  const std::filesystem::path& out_root);

struct LoadedRun {
  codebook::CodebookState state;
  metrics::SaturationSeries series;
  RunManifest manifest;
};

/// Reads a run directory back from its CSVs and manifest.
LoadedRun load_run(const std::filesystem::path& run_dir);

/// Re-renders plots/*.svg from series.csv.
std::vector<std::filesystem::path> render_run_plots(const std::filesystem::path& run_dir);

/// similarity/{matrix.csv, heatmap.svg, report.json}.
std::vector<std::filesystem::path> write_similarity_artifacts(
    const std::filesystem::path& run_dir, const similarity::SimilarityMatrix& matrix,
    const similarity::UniquenessReport& hard, const similarity::UniquenessReport& warn);

csv::Table matrix_table(const similarity::SimilarityMatrix& matrix);

/// simulation.csv, probability_curve.csv and their plots under `out_dir`.
std::vector<std::filesystem::path> write_simulation_artifacts(
    const std::filesystem::path& out_dir, const probability::SimulationResult& result,
    const std::vector<probability::CurveRow>& curve, long curve_unique_codes,
    long curve_codes_next);

/// Shortest round-trip decimal form.
std::string format_number(double value);

}  // namespace its::reporting
