#include <doctest.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "its/reporting.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

using namespace its;
using its::testing::error_kind;
using its::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

codebook::PipelineResult teaching_run() {
  const auto d = synthetic::teaching_dataset();
  auto provider = std::make_shared<synthetic::ScriptedProvider>(d);
  return codebook::run_pipeline(synthetic::to_corpus(d), llm::Gateway(provider), {});
}

reporting::RunManifest manifest_for(const std::string& run_id) {
  reporting::RunManifest m;
  m.run_id = run_id;
  m.corpus_name = "teaching";
  m.model_id = "gpt-3.5-turbo-16k";
  m.provider_mode = "replay";
  for (const auto& iv : synthetic::teaching_dataset().interviews) m.interview_order.push_back(iv.id);
  m.totals = {135, 53, 53.0 / 135.0};
  m.started_at = "2026-01-01T00:00:00Z";
  m.finished_at = "2026-01-01T00:00:01Z";
  m.settings["fixtures"] = "fixtures/teaching/replay";
  return m;
}

}  // namespace

TEST_CASE("line plots are deterministic and carry every series") {
  const auto r = teaching_run();
  const auto curves = metrics::curve_export(r.series);
  const reporting::PlotLabels labels{"Codes", "Interview", "Codes"};
  const auto a = reporting::render_line_plot({curves.total, curves.unique}, labels);
  const auto b = reporting::render_line_plot({curves.total, curves.unique}, labels);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(count(a, "class=\"series\"") == 2);
  CHECK(a.find("data-name=\"total\"") != std::string::npos);
  CHECK(a.find("data-name=\"unique\"") != std::string::npos);
  CHECK(a.find("Interview") != std::string::npos);
  CHECK(error_kind([&] { reporting::render_line_plot({}, labels); }) == ErrorKind::EmptyCurve);
  metrics::CurveTable empty{"e", "x", "y", {}};
  CHECK(error_kind([&] { reporting::render_line_plot({empty}, labels); }) == ErrorKind::EmptyCurve);
}

TEST_CASE("heatmap draws one cell per entry") {
  similarity::SimilarityMatrix m{2, {1.0, 0.2, 0.2, 1.0}, {"a#0", "b#1"}};
  const auto svg = reporting::render_heatmap(m);
  CHECK(count(svg, "class=\"cell\"") == 4);
  CHECK(svg.find("a#0") != std::string::npos);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<similarity::EmbeddingVector> v;
  for (int i = 0; i < 66; ++i) {
    similarity::EmbeddingVector e{"c" + std::to_string(i), {}};
    for (int d = 0; d < 32; ++d) e.values.push_back(g(rng));
    v.push_back(std::move(e));
  }
  const auto big = similarity::similarity_matrix(v);
  const auto start = std::chrono::steady_clock::now();
  const auto svg66 = reporting::render_heatmap(big);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
  CHECK(count(svg66, "class=\"cell\"") == 66 * 66);
}

TEST_CASE("manifest round trip and config digest") {
  const auto m = manifest_for("r1");
  const auto back = reporting::RunManifest::from_json(nlohmann::json::parse(m.to_json().dump()));
  CHECK(back.to_json() == m.to_json());
  CHECK(back.config_digest() == m.config_digest());
  auto other = m;
  other.run_id = "r2";
  other.started_at = "2027-01-01T00:00:00Z";
  CHECK(other.config_digest() == m.config_digest());
  other.n_codes_requested = 10;
  CHECK(other.config_digest() != m.config_digest());
  CHECK(m.to_json().dump().find("api_key") == std::string::npos);
}

TEST_CASE("run artifacts round-trip and never overwrite") {
  TempDir out;
  const auto r = teaching_run();
  const auto index = reporting::write_run_artifacts(r.state, r.series, manifest_for("r1"), out.path());
  for (const auto& f : index.files) CHECK(std::filesystem::exists(index.run_dir / f));
  for (const char* f : {"cumulative_total.csv", "cumulative_unique.csv", "series.csv",
                        "metrics.json", "manifest.json", "plots/comparison.svg",
                        "plots/ratio.svg", "curves/ratio.csv", "codes/interview_1.csv"})
    CHECK(std::filesystem::exists(index.run_dir / f));

  const auto loaded = reporting::load_run(index.run_dir);
  CHECK(loaded.state == r.state);
  CHECK(loaded.series == r.series);
  CHECK(loaded.manifest.to_json() == manifest_for("r1").to_json());

  const auto metrics = nlohmann::json::parse(slurp(index.run_dir / "metrics.json"));
  CHECK(metrics.at("total_codes") == 135);
  CHECK(metrics.at("unique_codes") == 53);
  CHECK(metrics.at("its_slope_ratio_display") == "0.39");

  const auto before = slurp(index.run_dir / "series.csv");
  CHECK(error_kind([&] {
          reporting::write_run_artifacts(r.state, r.series, manifest_for("r1"), out.path());
        }) == ErrorKind::OutputExists);
  CHECK(slurp(index.run_dir / "series.csv") == before);

  const auto second = reporting::write_run_artifacts(r.state, r.series, manifest_for("r2"), out.path());
  for (const char* f : {"cumulative_total.csv", "cumulative_unique.csv", "series.csv",
                        "plots/total.svg", "plots/unique.svg", "plots/comparison.svg"})
    CHECK(slurp(index.run_dir / f) == slurp(second.run_dir / f));

  const auto svg = slurp(index.run_dir / "plots/ratio.svg");
  std::filesystem::remove(index.run_dir / "plots/ratio.svg");
  reporting::render_run_plots(index.run_dir);
  CHECK(slurp(index.run_dir / "plots/ratio.svg") == svg);
}

TEST_CASE("series table round trip") {
  metrics::SaturationSeries s{{{1, 15, 15}, {2, 29, 23}, {3, 44, 29}}};
  CHECK(reporting::series_from_table(reporting::series_table(s)) == s);
  const auto t = reporting::series_table(s);
  CHECK(t.header == std::vector<std::string>{"ordinal", "total_after", "unique_after", "ratio"});
}

TEST_CASE("simulation artifacts") {
  TempDir out;
  probability::SimulationConfig c;
  c.replications = 20;
  const auto r = probability::simulate_code_space(c);
  const auto curve = probability::probability_curve(66, 15, 66, 120);
  const auto files = reporting::write_simulation_artifacts(out.path(), r, curve, 66, 15);
  for (const auto& f : files) CHECK(std::filesystem::exists(f.is_absolute() ? f : out.path() / f));
  const auto sim = csv::read(out / "simulation.csv");
  CHECK(sim.rows.size() == 10);
  CHECK(csv::read(out / "probability_curve.csv").rows.size() == curve.size());
}

TEST_CASE("number formatting is shortest round trip") {
  CHECK(reporting::format_number(0.5) == "0.5");
  CHECK(reporting::format_number(66.0 / 534.0) == "0.12359550561797752");
  CHECK(reporting::format_number(3.0) == "3");
}
