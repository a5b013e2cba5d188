#include "its/reporting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include <fmt/core.h>

#include "its/digest.hpp"
#include "its/error.hpp"

namespace its::reporting {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string format_number(double value) { return fmt::format("{}", value); }

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double range, int target_ticks) {
  const double raw = range / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double nice = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
  return nice * mag;
}

std::string tick_label(double v) {
  if (std::abs(v - std::round(v)) < 1e-9) return fmt::format("{}", static_cast<long>(std::round(v)));
  return fmt::format("{:.2f}", v);
}

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c",
                                              "#ff7f0e", "#9467bd", "#8c564b"};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

template <typename Json>
void write_json(const fs::path& path, const Json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::Io, path.string() + ": not valid JSON");
  return doc;
}

}  // namespace

std::string render_line_plot(const std::vector<metrics::CurveTable>& tables,
                             const PlotLabels& labels) {
  if (tables.empty()) fail(ErrorKind::EmptyCurve, "no curves to plot");
  for (const auto& t : tables) {
    if (t.rows.empty()) fail(ErrorKind::EmptyCurve, "curve '" + t.name + "' has no rows");
  }

  constexpr double W = 720, H = 440, L = 70, R = 170, T = 40, B = 55;
  const double pw = W - L - R, ph = H - T - B;

  double xmin = tables[0].rows[0].x, xmax = xmin, ymin = 0.0, ymax = tables[0].rows[0].y;
  for (const auto& t : tables) {
    for (const auto& p : t.rows) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  if (xmax == xmin) {
    xmin -= 1;
    xmax += 1;
  }
  if (ymax == ymin) ymax = ymin + 1;
  const double ystep = nice_step(ymax - ymin, 5);
  ymax = std::ceil(ymax / ystep) * ystep;
  const double xstep = std::max(1.0, nice_step(xmax - xmin, 8));

  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return T + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H);
  s += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  s += fmt::format("<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                   L + pw / 2, xml_escape(labels.title));

  // grid and ticks
  for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + ystep * 1e-9; y += ystep) {
    s += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#e5e5e5\"/>\n"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        L, sy(y), L + pw, L - 6, sy(y) + 4, tick_label(y));
  }
  for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + xstep * 1e-9; x += xstep) {
    s += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#e5e5e5\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{3:.2f}\" text-anchor=\"middle\">{4}</text>\n",
        sx(x), T, T + ph, T + ph + 18, tick_label(x));
  }
  s += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n", L, T,
      pw, ph);
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", L + pw / 2,
                   H - 14, xml_escape(labels.x_label));
  s += fmt::format(
      "<text x=\"18\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.2f})\">"
      "{1}</text>\n",
      T + ph / 2, xml_escape(labels.y_label));

  for (std::size_t k = 0; k < tables.size(); ++k) {
    const auto* color = kPalette[k % kPalette.size()];
    const auto& t = tables[k];
    std::string pts;
    for (const auto& p : t.rows) {
      if (!pts.empty()) pts += ' ';
      pts += fmt::format("{:.2f},{:.2f}", sx(p.x), sy(p.y));
    }
    s += fmt::format(
        "<polyline class=\"series\" data-name=\"{}\" fill=\"none\" stroke=\"{}\" "
        "stroke-width=\"2\" points=\"{}\"/>\n",
        xml_escape(t.name), color, pts);
    for (const auto& p : t.rows) {
      s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", sx(p.x),
                       sy(p.y), color);
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(k);
    s += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" "
        "stroke-width=\"3\"/>\n<text x=\"{4:.2f}\" y=\"{5:.2f}\">{6}</text>\n",
        L + pw + 14, ly, L + pw + 38, color, L + pw + 44, ly + 4, xml_escape(t.name));
  }
  s += "</svg>\n";
  return s;
}

namespace {

std::string ramp(double v) {
  v = std::clamp(v, -1.0, 1.0);
  // white at 0, dark red at +1, dark blue at -1
  const double t = std::abs(v);
  const int tr = v >= 0 ? 165 : 49, tg = v >= 0 ? 0 : 54, tb = v >= 0 ? 38 : 149;
  auto mix = [t](int target) {
    return static_cast<int>(std::lround(255.0 + (target - 255.0) * t));
  };
  return fmt::format("#{:02x}{:02x}{:02x}", mix(tr), mix(tg), mix(tb));
}

}  // namespace

std::string render_heatmap(const similarity::SimilarityMatrix& m, const std::string& title) {
  similarity::check_matrix(m);
  const double cell = std::clamp(640.0 / static_cast<double>(std::max<std::size_t>(m.n, 1)), 4.0, 28.0);
  const bool labels = m.n <= 80;
  const double font = std::min(10.0, cell - 1.0);
  const double L = labels ? 90 : 20, T = 50;
  const double grid = cell * static_cast<double>(m.n);
  const double W = L + grid + 90, H = T + grid + 30;

  std::string s;
  s.reserve(m.n * m.n * 64 + 1024);
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H);
  s += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", W, H);
  s += fmt::format("<text x=\"{:.2f}\" y=\"26\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                   L + grid / 2, xml_escape(title));
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.n; ++j) {
      s += fmt::format(
          "<rect class=\"cell\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
          L + cell * static_cast<double>(j), T + cell * static_cast<double>(i), cell, cell,
          ramp(m.at(i, j)));
    }
    if (labels) {
      s += fmt::format(
          "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" font-size=\"{:.1f}\">{}</text>\n",
          L - 4, T + cell * (static_cast<double>(i) + 0.5) + font / 3, font,
          xml_escape(m.code_ids[i]));
    }
  }
  // colour bar
  const double bx = L + grid + 30, bh = std::min(grid, 200.0);
  for (int k = 0; k < 20; ++k) {
    const double v = 1.0 - 2.0 * (k + 0.5) / 20.0;
    s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"16\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                     bx, T + bh * k / 20.0, bh / 20.0, ramp(v));
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">1</text>\n", bx + 20, T + 8);
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">-1</text>\n", bx + 20, T + bh);
  s += "</svg>\n";
  return s;
}

// ------------------------------------------------------------------ manifest

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {
ordered_json config_part(const RunManifest& m) {
  return ordered_json{{"corpus_name", m.corpus_name},
                      {"model_id", m.model_id},
                      {"temperature", m.temperature},
                      {"n_codes_requested", m.n_codes_requested},
                      {"provider_mode", m.provider_mode},
                      {"interview_order", m.interview_order},
                      {"settings", m.settings}};
}
}  // namespace

std::string RunManifest::config_digest() const { return sha256_hex(config_part(*this).dump()); }

ordered_json RunManifest::to_json() const {
  auto doc = ordered_json{{"run_id", run_id}};
  const auto config = config_part(*this);
  for (const auto& [k, v] : config.items()) doc[k] = v;
  doc["totals"] = {{"total_codes", totals.total_codes},
                   {"unique_codes", totals.unique_codes},
                   {"its_ratio", totals.its_ratio}};
  doc["timestamps"] = {{"started_at", started_at}, {"finished_at", finished_at}};
  doc["config_digest"] = config_digest();
  return doc;
}

RunManifest RunManifest::from_json(const json& doc) {
  RunManifest m;
  try {
    m.run_id = doc.at("run_id").get<std::string>();
    m.corpus_name = doc.at("corpus_name").get<std::string>();
    m.model_id = doc.at("model_id").get<std::string>();
    m.temperature = doc.at("temperature").get<double>();
    m.n_codes_requested = doc.at("n_codes_requested").get<int>();
    m.provider_mode = doc.at("provider_mode").get<std::string>();
    m.interview_order = doc.at("interview_order").get<std::vector<std::string>>();
    const auto& t = doc.at("totals");
    m.totals = {t.at("total_codes").get<long>(), t.at("unique_codes").get<long>(),
                t.at("its_ratio").get<double>()};
    m.started_at = doc.at("timestamps").value("started_at", "");
    m.finished_at = doc.at("timestamps").value("finished_at", "");
    if (doc.contains("settings")) m.settings = ordered_json::parse(doc.at("settings").dump());
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

// ------------------------------------------------------------------- tables

ordered_json metrics_json(const std::string& dataset, const metrics::SaturationSeries& series) {
  const auto ratios = metrics::ratio_series(series);
  const auto& last = series.points.back();
  const auto its = metrics::its_slope_ratio(last.total_after, last.unique_after);
  const auto diag = metrics::slope_diagnostics(series);
  ordered_json rs = ordered_json::array();
  for (const auto& r : ratios) rs.push_back({{"interview", r.ordinal}, {"ratio", r.ratio}});
  return ordered_json{
      {"dataset", dataset},
      {"interviews", series.points.size()},
      {"total_codes", its.total_codes},
      {"unique_codes", its.unique_codes},
      {"its_slope_ratio", its.slope_ratio},
      {"its_slope_ratio_display", metrics::display_ratio(its.slope_ratio)},
      {"ratio_series", rs},
      {"least_squares_diagnostic",
       {{"normative", false},
        {"total_slope", diag.total_slope},
        {"unique_slope", diag.unique_slope},
        {"slope_ratio", diag.slope_ratio}}},
  };
}

csv::Table series_table(const metrics::SaturationSeries& series) {
  const auto ratios = metrics::ratio_series(series);
  csv::Table t{{"ordinal", "total_after", "unique_after", "ratio"}, {}};
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    t.rows.push_back({std::to_string(p.ordinal), std::to_string(p.total_after),
                      std::to_string(p.unique_after), format_number(ratios[i].ratio)});
  }
  return t;
}

metrics::SaturationSeries series_from_table(const csv::Table& table) {
  const auto o = table.column("ordinal");
  const auto t = table.column("total_after");
  const auto u = table.column("unique_after");
  metrics::SaturationSeries s;
  try {
    for (const auto& r : table.rows) {
      s.points.push_back({std::stoi(r[o]), std::stol(r[t]), std::stol(r[u])});
    }
  } catch (const std::exception& e) {
    fail(ErrorKind::Io, std::string("bad series row: ") + e.what());
  }
  metrics::validate(s);
  return s;
}

csv::Table curve_table(const metrics::CurveTable& curve) {
  csv::Table t{{"ordinal", "value"}, {}};
  for (const auto& p : curve.rows) t.rows.push_back({format_number(p.x), format_number(p.y)});
  return t;
}

csv::Table matrix_table(const similarity::SimilarityMatrix& m) {
  csv::Table t;
  t.header.push_back("code_id");
  t.header.insert(t.header.end(), m.code_ids.begin(), m.code_ids.end());
  for (std::size_t i = 0; i < m.n; ++i) {
    csv::Row row{m.code_ids[i]};
    for (std::size_t j = 0; j < m.n; ++j) row.push_back(format_number(m.at(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------- artifacts

namespace {

std::vector<fs::path> write_plots(const fs::path& run_dir, const metrics::SaturationSeries& series,
                                  const std::string& dataset) {
  const auto curves = metrics::curve_export(series);
  fs::create_directories(run_dir / "plots");
  const std::string suffix = dataset.empty() ? "" : " (" + dataset + ")";
  const std::vector<std::pair<fs::path, std::string>> plots{
      {"plots/total.svg",
       render_line_plot({curves.total}, {"Cumulative total codes" + suffix, "interview", "codes"})},
      {"plots/unique.svg",
       render_line_plot({curves.unique}, {"Cumulative unique codes" + suffix, "interview", "codes"})},
      {"plots/comparison.svg",
       render_line_plot({curves.total, curves.unique},
                        {"Total and unique codes" + suffix, "interview", "codes"})},
      {"plots/ratio.svg",
       render_line_plot({curves.ratio}, {"ITS ratio unique/total" + suffix, "interview", "ratio"})},
  };
  std::vector<fs::path> out;
  for (const auto& [rel, svg] : plots) {
    write_text(run_dir / rel, svg);
    out.push_back(rel);
  }
  return out;
}

}  // namespace

ArtifactIndex write_run_artifacts(const codebook::CodebookState& state,
                                  const metrics::SaturationSeries& series,
                                  const RunManifest& manifest, const fs::path& out_root) {
  if (manifest.run_id.empty()) fail(ErrorKind::Usage, "run_id is empty");
  const auto run_dir = out_root / manifest.run_id;
  if (fs::exists(run_dir)) fail(ErrorKind::OutputExists, manifest.run_id);
  metrics::validate(series);
  state.check_invariants();

  const auto staging = out_root / ("." + manifest.run_id + ".partial");
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::create_directories(staging / "codes", ec);
  if (ec) fail(ErrorKind::Io, staging.string() + ": " + ec.message());

  ArtifactIndex index{run_dir, {}};
  auto add = [&](const fs::path& rel) { index.files.push_back(rel); };

  std::size_t offset = 0;
  for (std::size_t i = 0; i < state.per_interview.size(); ++i) {
    const auto count = static_cast<std::size_t>(state.per_interview[i].codes_generated);
    const std::vector<Code> codes(state.cumulative_total.begin() + offset,
                                  state.cumulative_total.begin() + offset + count);
    offset += count;
    const auto rel = fs::path("codes") / fmt::format("interview_{}.csv", i + 1);
    codebook::write_codes_csv(staging / rel, codes);
    add(rel);
  }
  codebook::write_codes_csv(staging / "cumulative_total.csv", state.cumulative_total);
  add("cumulative_total.csv");
  csv::write(staging / "cumulative_unique.csv", codebook::unique_table(state));
  add("cumulative_unique.csv");
  csv::write(staging / "series.csv", series_table(series));
  add("series.csv");

  const auto curves = metrics::curve_export(series);
  fs::create_directories(staging / "curves");
  for (const auto* c : {&curves.total, &curves.unique, &curves.ratio}) {
    const auto rel = fs::path("curves") / (c->name + ".csv");
    csv::write(staging / rel, curve_table(*c));
    add(rel);
  }
  write_json(staging / "metrics.json", metrics_json(manifest.corpus_name, series));
  add("metrics.json");
  for (const auto& rel : write_plots(staging, series, manifest.corpus_name)) add(rel);
  write_json(staging / "manifest.json", manifest.to_json());
  add("manifest.json");

  fs::rename(staging, run_dir, ec);
  if (ec) fail(ErrorKind::Io, run_dir.string() + ": " + ec.message());
  return index;
}

LoadedRun load_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) fail(ErrorKind::Io, run_dir.string() + ": not a run directory");
  LoadedRun r;
  r.manifest = RunManifest::from_json(read_json(run_dir / "manifest.json"));
  r.state = codebook::load_state(run_dir / "cumulative_total.csv",
                                 run_dir / "cumulative_unique.csv", r.manifest.interview_order);
  r.series = series_from_table(csv::read(run_dir / "series.csv"));
  return r;
}

std::vector<fs::path> render_run_plots(const fs::path& run_dir) {
  const auto series = series_from_table(csv::read(run_dir / "series.csv"));
  std::string dataset;
  if (fs::exists(run_dir / "manifest.json")) {
    dataset = read_json(run_dir / "manifest.json").value("corpus_name", "");
  }
  return write_plots(run_dir, series, dataset);
}

std::vector<fs::path> write_similarity_artifacts(const fs::path& run_dir,
                                                 const similarity::SimilarityMatrix& matrix,
                                                 const similarity::UniquenessReport& hard,
                                                 const similarity::UniquenessReport& warn) {
  const auto dir = run_dir / "similarity";
  fs::create_directories(dir);
  csv::write(dir / "matrix.csv", matrix_table(matrix));
  write_text(dir / "heatmap.svg", render_heatmap(matrix));
  auto pairs = [](const similarity::UniquenessReport& r) {
    ordered_json a = ordered_json::array();
    for (const auto& p : r.flagged_pairs) {
      a.push_back({{"code_id_a", p.code_id_a}, {"code_id_b", p.code_id_b},
                   {"similarity", p.similarity}});
    }
    return ordered_json{{"threshold", r.threshold}, {"passed", r.passed}, {"flagged_pairs", a}};
  };
  double max_off = -1.0;
  for (std::size_t i = 0; i < matrix.n; ++i) {
    for (std::size_t j = i + 1; j < matrix.n; ++j) max_off = std::max(max_off, matrix.at(i, j));
  }
  write_json(dir / "report.json", ordered_json{{"codes", matrix.n},
                                               {"max_off_diagonal", max_off},
                                               {"hard", pairs(hard)},
                                               {"warning", pairs(warn)}});
  return {dir / "matrix.csv", dir / "heatmap.svg", dir / "report.json"};
}

std::vector<fs::path> write_simulation_artifacts(const fs::path& out_dir,
                                                 const probability::SimulationResult& result,
                                                 const std::vector<probability::CurveRow>& curve,
                                                 long curve_unique_codes, long curve_codes_next) {
  fs::create_directories(out_dir / "plots");
  const auto& c = result.config;

  csv::Table sim{{"iteration", "mean_total", "mean_unique", "stddev_unique"}, {}};
  metrics::CurveTable total{"total", "iteration", "codes", {}};
  metrics::CurveTable unique{"unique (simulated mean)", "iteration", "codes", {}};
  metrics::CurveTable expected{"unique (expected)", "iteration", "codes", {}};
  for (const auto& it : result.per_iteration) {
    sim.rows.push_back({std::to_string(it.iteration), format_number(it.mean_total),
                        format_number(it.mean_unique), format_number(it.stddev_unique)});
    total.rows.push_back({static_cast<double>(it.iteration), it.mean_total});
    unique.rows.push_back({static_cast<double>(it.iteration), it.mean_unique});
    expected.rows.push_back(
        {static_cast<double>(it.iteration),
         probability::expected_unique(c.code_space, it.iteration, c.draw_size, c.sampling)});
  }
  csv::write(out_dir / "simulation.csv", sim);
  write_text(out_dir / "plots/simulation.svg",
             render_line_plot({total, unique, expected},
                              {fmt::format("{} iterations in {} code space, draw {}", c.iterations,
                                           c.code_space, c.draw_size),
                               "iteration", "codes"}));

  std::vector<fs::path> out{out_dir / "simulation.csv", out_dir / "plots/simulation.svg"};
  if (!curve.empty()) {
    csv::Table pc{{"space", "probability"}, {}};
    metrics::CurveTable pcurve{"P(at least one unique)", "code space", "probability", {}};
    for (const auto& r : curve) {
      pc.rows.push_back({std::to_string(r.space), format_number(r.probability)});
      pcurve.rows.push_back({static_cast<double>(r.space), r.probability});
    }
    csv::write(out_dir / "probability_curve.csv", pc);
    write_text(out_dir / "plots/probability_curve.svg",
               render_line_plot({pcurve}, {fmt::format("P(at least one unique), {} unique, {} "
                                                       "codes next",
                                                       curve_unique_codes, curve_codes_next),
                                           "code space", "probability"}));
    out.push_back(out_dir / "probability_curve.csv");
    out.push_back(out_dir / "plots/probability_curve.svg");
  }
  return out;
}

}  // namespace its::reporting
