// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "cli_runner.hpp"
#include "its/codebook.hpp"
#include "its/probability.hpp"
#include "its/reporting.hpp"
#include "its/similarity.hpp"
#include "oracles.hpp"
#include "parser_cases.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

#ifndef ITS_FIXTURE_DIR
#error "ITS_FIXTURE_DIR must point at tests/fixtures"
#endif

using namespace its;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kFixtures{ITS_FIXTURE_DIR};

struct Outcome {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.ok) ++failures;
  std::cout << (o.ok ? "PASS " : "FAIL ") << name;
  if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
  std::cout << std::endl;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct ReplayRun {
  int code = 0;
  double seconds = 0.0;
  fs::path dir;
  nlohmann::json metrics;
};

ReplayRun replay(const std::string& dataset, const fs::path& out, const std::string& run_id) {
  const auto start = Clock::now();
  const auto r = testing::run_cli({"run", "--corpus", (kFixtures / dataset / "corpus").string(),
                                   "--dataset", dataset, "--mode", "replay", "--fixtures",
                                   (kFixtures / dataset / "replay").string(), "--out", out.string(),
                                   "--run-id", run_id});
  ReplayRun rr{r.code, seconds_since(start), out / run_id, {}};
  if (r.code == 0) rr.metrics = nlohmann::json::parse(slurp(rr.dir / "metrics.json"));
  return rr;
}

Outcome counts_check(const ReplayRun& r, long total, long unique, const std::string& display) {
  Outcome o;
  o.expect(r.code == 0, fmt::format("exit code {}", r.code));
  if (r.code != 0) return o;
  const long t = r.metrics.at("total_codes"), u = r.metrics.at("unique_codes");
  const double ratio = r.metrics.at("its_slope_ratio");
  o.expect(t == total, fmt::format("total {}", t));
  o.expect(u == unique, fmt::format("unique {}", u));
  o.expect(ratio == static_cast<double>(unique) / static_cast<double>(total),
           fmt::format("ratio {}", ratio));
  o.expect(r.metrics.at("its_slope_ratio_display") == display,
           "display " + r.metrics.at("its_slope_ratio_display").get<std::string>());
  o.detail += (o.detail.empty() ? "" : "; ") + fmt::format("{}/{} in {:.2f} s", u, t, r.seconds);
  return o;
}

std::vector<double> ratios(const ReplayRun& r) {
  std::vector<double> out;
  for (const auto& p : r.metrics.at("ratio_series")) out.push_back(p.at("ratio"));
  return out;
}

}  // namespace

int main() {
  testing::TempDir work;
  ReplayRun scrum, teaching;

  criterion("scrum replay: 534 total, 66 unique, ITS 0.12, under 5 s offline", [&] {
    scrum = replay("scrum", work.path(), "scrum");
    auto o = counts_check(scrum, 534, 66, "0.12");
    o.expect(scrum.seconds < 5.0, fmt::format("took {:.2f} s", scrum.seconds));
    return o;
  });

  criterion("teaching replay: 135 total, 53 unique, ITS 0.39", [&] {
    teaching = replay("teaching", work.path(), "teaching");
    return counts_check(teaching, 135, 53, "0.39");
  });

  criterion("ratio series: starts at 1.0, ends in the expected bands", [&] {
    Outcome o;
    const auto s = ratios(scrum), t = ratios(teaching);
    o.expect(s.size() == 39 && t.size() == 10, "series lengths");
    if (!o.ok) return o;
    o.expect(s.front() == 1.0, "scrum first");
    o.expect(t.front() == 1.0, "teaching first");
    o.expect(s.back() >= 0.10 && s.back() <= 0.15, fmt::format("scrum final {}", s.back()));
    o.expect(t.back() >= 0.35 && t.back() <= 0.45, fmt::format("teaching final {}", t.back()));
    o.detail += fmt::format("scrum final {:.4f}, teaching final {:.4f}", s.back(), t.back());
    return o;
  });

  criterion("probability closed form", [] {
    Outcome o;
    const double p66 = probability::p_at_least_one_unique(66, 66, 15);
    const double p90 = probability::p_at_least_one_unique(66, 90, 15);
    const double p132 = probability::p_at_least_one_unique(66, 132, 15);
    o.expect(p66 == 0.0, fmt::format("p(66,66,15)={}", p66));
    o.expect(p90 >= 0.985 && p90 <= 0.995, fmt::format("p(66,90,15)={}", p90));
    o.expect(std::abs(p132 - (1.0 - std::pow(2.0, -15))) <= 1e-12, fmt::format("p(66,132,15)={}", p132));
    o.expect(std::abs(p90 - oracle::p_at_least_one_unique(66, 90, 15)) < 1e-12, "oracle mismatch");
    const auto curve = probability::probability_curve(66, 15, 66, 500);
    for (std::size_t i = 1; i < curve.size(); ++i)
      if (!(curve[i].probability > curve[i - 1].probability))
        o.expect(false, fmt::format("not increasing at space {}", curve[i].space));
    o.detail += (o.detail.empty() ? "" : "; ") + fmt::format("p(66,90,15)={:.5f}", p90);
    return o;
  });

  criterion("simulation mean unique within 3 SE of the expectation, under 30 s", [] {
    Outcome o;
    const auto start = Clock::now();
    for (auto [space, iterations] : {std::pair{100L, 10}, {1000L, 10}, {1000L, 100}}) {
      probability::SimulationConfig c;
      c.code_space = space;
      c.iterations = iterations;
      c.draw_size = 15;
      c.replications = 1000;
      const auto r = probability::simulate_code_space(c);
      const auto& last = r.per_iteration.back();
      const double expected = probability::expected_unique(space, iterations, 15);
      const double exact = oracle::expected_unique_exact(space, iterations, 15);
      const double se = last.stddev_unique / std::sqrt(1000.0);
      o.expect(std::abs(expected - exact) < 1e-6 * exact,
               fmt::format("({},{},15) closed form {} vs exact {}", space, iterations, expected, exact));
      o.expect(std::abs(last.mean_unique - exact) <= 3.0 * se,
               fmt::format("({},{},15) mean {} vs {} (se {})", space, iterations, last.mean_unique,
                           exact, se));
      if (space == 100) {
        o.expect(last.mean_total - last.mean_unique >= 50.0,
                 fmt::format("separation {}", last.mean_total - last.mean_unique));
      }
      o.detail += fmt::format("{}({},{},15) mean {:.2f} expected {:.2f}", o.detail.empty() ? "" : "; ",
                              space, iterations, last.mean_unique, exact);
    }
    const double secs = seconds_since(start);
    o.expect(secs < 30.0, fmt::format("took {:.2f} s", secs));
    return o;
  });

  criterion("codebook invariants over random judges and corpora", [] {
    Outcome o;
    std::mt19937_64 rng(424242);
    int violations = 0;
    for (int trial = 0; trial < 300; ++trial) {
      const int interviews = 1 + static_cast<int>(rng() % 12);
      std::vector<std::vector<Code>> study;
      for (int i = 0; i < interviews; ++i) {
        std::vector<Code> codes;
        const int n = 1 + static_cast<int>(rng() % 16);
        for (int k = 0; k < n; ++k) {
          Code c;
          c.name = fmt::format("code {}", rng() % 40);
          c.description = fmt::format("about {}", rng() % 7);
          c.interview_id = fmt::format("iv{:02d}", i + 1);
          c.index_in_interview = k;
          codes.push_back(c);
        }
        study.push_back(std::move(codes));
      }
      const std::uint64_t salt = rng();
      const codebook::Judge judge = [salt](const std::string& cand, const std::vector<std::string>& f) {
        auto sorted = f;
        std::sort(sorted.begin(), sorted.end());
        std::string key = cand;
        for (const auto& x : sorted) key += "|" + x;
        return ((std::hash<std::string>{}(key) ^ salt) % 3) != 0;
      };
      auto run = [&](bool permute) {
        auto state = codebook::bootstrap_unique(study[0]);
        for (std::size_t i = 1; i < study.size(); ++i) {
          auto codes = study[i];
          if (permute) std::shuffle(codes.begin(), codes.end(), rng);
          state = codebook::reduce_interview(std::move(state), codes, judge);
          if (state.cumulative_unique.size() > state.cumulative_total.size()) ++violations;
          const auto& t = state.per_interview.back();
          if (t.codes_accepted_unique > t.codes_generated) ++violations;
        }
        state.check_invariants();
        return state;
      };
      const auto plain = run(false);
      const auto permuted = run(true);
      std::set<std::string> a, b;
      for (const auto& c : plain.cumulative_unique) a.insert(c.code_id());
      for (const auto& c : permuted.cumulative_unique) b.insert(c.code_id());
      if (a != b) ++violations;
      if (!(run(false) == plain)) ++violations;
    }
    o.expect(violations == 0, fmt::format("{} violations", violations));

    // replay determinism, byte for byte
    const auto d = synthetic::make_dataset("prop", {9, 12, 7, 16, 5}, {9, 4, 2, 6, 0}, 17);
    testing::TempDir fixtures, out;
    auto scripted = std::make_shared<synthetic::ScriptedProvider>(d);
    codebook::run_pipeline(synthetic::to_corpus(d),
                           llm::Gateway(std::make_shared<llm::RecordingProvider>(scripted, fixtures.path())),
                           {});
    const llm::Gateway replay_gw(std::make_shared<llm::ReplayProvider>(fixtures.path()));
    for (const char* name : {"a", "b"}) {
      const auto r = codebook::run_pipeline(synthetic::to_corpus(d), replay_gw, {});
      codebook::write_codes_csv(out / (std::string(name) + "_total.csv"), r.state.cumulative_total);
      csv::write(out / (std::string(name) + "_unique.csv"), codebook::unique_table(r.state));
    }
    o.expect(slurp(out / "a_total.csv") == slurp(out / "b_total.csv"), "total CSV differs");
    o.expect(slurp(out / "a_unique.csv") == slurp(out / "b_unique.csv"), "unique CSV differs");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("300 random studies");
    return o;
  });

  criterion("similarity: hand values, symmetry, injected duplicate, 66-code fixture", [&] {
    Outcome o;
    namespace sim = similarity;
    const sim::EmbeddingVector x{"x", {1, 0}}, y{"y", {0, 1}}, xy{"xy", {1, 1}};
    o.expect(std::abs(sim::cosine(x, x) - 1.0) <= 1e-9, "cos(x,x)");
    o.expect(std::abs(sim::cosine(x, y)) <= 1e-9, "cos(x,y)");
    o.expect(std::abs(sim::cosine(x, xy) - 1.0 / std::sqrt(2.0)) <= 1e-9, "cos(x,xy)");

    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    std::vector<sim::EmbeddingVector> v;
    for (int i = 0; i < 50; ++i) {
      sim::EmbeddingVector e{fmt::format("c{}", i), {}};
      for (int d = 0; d < 24; ++d) e.values.push_back(g(rng));
      v.push_back(std::move(e));
    }
    const auto m = sim::similarity_matrix(v);
    double asym = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
      diag = std::max(diag, std::abs(m.at(i, i) - 1.0));
      for (std::size_t j = 0; j < m.n; ++j) asym = std::max(asym, std::abs(m.at(i, j) - m.at(j, i)));
    }
    o.expect(asym <= 1e-9, fmt::format("asymmetry {}", asym));
    o.expect(diag <= 1e-6, fmt::format("diagonal error {}", diag));
    o.expect(sim::validate_uniqueness(m).passed, "random vectors flagged");

    v[31].values = v[8].values;
    const auto dup = sim::validate_uniqueness(sim::similarity_matrix(v));
    o.expect(!dup.passed && dup.flagged_pairs.size() == 1 && dup.flagged_pairs[0].code_id_a == "c8" &&
                 dup.flagged_pairs[0].code_id_b == "c31",
             "injected duplicate not flagged");

    const auto r = testing::run_cli({"validate", "--run-dir", scrum.dir.string(), "--vectors",
                                     (kFixtures / "scrum" / "vectors.csv").string()});
    o.expect(r.code == 0, fmt::format("66-code validate exit {}", r.code));
    o.expect(r.out.find("codes=66") != std::string::npos, "66 codes not reported");
    return o;
  });

  criterion("parser robustness over the recorded completion suite", [] {
    Outcome o;
    const auto cases = testing::run_parser_cases(kFixtures / "parser");
    o.expect(cases.size() >= 10, fmt::format("{} cases", cases.size()));
    bool sixteen_accepted = false;
    for (const auto& c : cases) {
      o.expect(c.actual == c.expect, fmt::format("{}: {} != {}", c.file, c.actual, c.expect));
      if (c.expect == "ok:16" && c.actual == "ok:16") sixteen_accepted = true;
    }
    o.expect(sixteen_accepted, "16-entry response not accepted");
    if (o.ok) o.detail = fmt::format("{} cases", cases.size());
    return o;
  });

  criterion("round trip and byte-identical repeat runs", [&] {
    Outcome o;
    const auto loaded = reporting::load_run(teaching.dir);
    testing::TempDir out;
    reporting::write_run_artifacts(loaded.state, loaded.series, loaded.manifest, out.path());
    const auto again = reporting::load_run(out / loaded.manifest.run_id);
    o.expect(again.state == loaded.state, "state differs after reload");
    o.expect(again.series == loaded.series, "series differs after reload");
    o.expect(static_cast<long>(again.state.cumulative_unique.size()) == 53, "unique count");

    const auto second = replay("scrum", work.path(), "scrum-again");
    int compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(scrum.dir)) {
      const auto ext = entry.path().extension();
      if (ext != ".csv" && ext != ".svg") continue;
      if (entry.path().parent_path().filename() == "similarity") continue;
      const auto rel = fs::relative(entry.path(), scrum.dir);
      ++compared;
      o.expect(slurp(entry.path()) == slurp(second.dir / rel), rel.string() + " differs");
    }
    o.expect(compared > 40, fmt::format("only {} files compared", compared));
    if (o.ok) o.detail = fmt::format("{} CSV/SVG files identical", compared);
    return o;
  });

  std::cout << (failures == 0 ? "ALL PASS" : fmt::format("{} FAILED", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
