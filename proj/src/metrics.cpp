#include "its/metrics.hpp"

#include <cmath>

#include <fmt/core.h>

#include "its/error.hpp"

namespace its::metrics {

void validate(const SaturationSeries& series) {
  if (series.points.empty()) fail(ErrorKind::InvalidSeries, "series is empty");
  const SeriesPoint* prev = nullptr;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    if (p.ordinal != static_cast<int>(i) + 1) {
      fail(ErrorKind::InvalidSeries, fmt::format("point {} has ordinal {}", i, p.ordinal));
    }
    if (p.unique_after < 1 || p.unique_after > p.total_after) {
      fail(ErrorKind::InvalidSeries,
           fmt::format("ordinal {}: unique {} outside [1, total {}]", p.ordinal, p.unique_after,
                       p.total_after));
    }
    if (prev != nullptr &&
        (p.total_after < prev->total_after || p.unique_after < prev->unique_after)) {
      fail(ErrorKind::InvalidSeries, fmt::format("ordinal {}: counts decreased", p.ordinal));
    }
    prev = &p;
  }
}

ItsResult its_slope_ratio(long total_codes, long unique_codes) {
  if (unique_codes < 1 || total_codes < 1 || unique_codes > total_codes) {
    fail(ErrorKind::DomainError,
         fmt::format("need 1 <= unique ({}) <= total ({})", unique_codes, total_codes));
  }
  return {unique_codes, total_codes,
          static_cast<double>(unique_codes) / static_cast<double>(total_codes)};
}

std::string display_ratio(double ratio) { return fmt::format("{:.2f}", ratio); }

std::vector<RatioPoint> ratio_series(const SaturationSeries& series) {
  validate(series);
  std::vector<RatioPoint> out;
  out.reserve(series.points.size());
  for (const auto& p : series.points) {
    out.push_back({p.ordinal, static_cast<double>(p.unique_after) /
                                  static_cast<double>(p.total_after)});
  }
  return out;
}

CurveTables curve_export(const SaturationSeries& series) {
  const auto ratios = ratio_series(series);
  CurveTables t{{"total", "interview", "cumulative total codes", {}},
                {"unique", "interview", "cumulative unique codes", {}},
                {"ratio", "interview", "unique / total", {}}};
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    const double x = p.ordinal;
    t.total.rows.push_back({x, static_cast<double>(p.total_after)});
    t.unique.rows.push_back({x, static_cast<double>(p.unique_after)});
    t.ratio.rows.push_back({x, ratios[i].ratio});
  }
  return t;
}

double least_squares_slope(const std::vector<CurvePoint>& rows) {
  if (rows.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (const auto& r : rows) {
    mx += r.x;
    my += r.y;
  }
  mx /= static_cast<double>(rows.size());
  my /= static_cast<double>(rows.size());
  double sxy = 0, sxx = 0;
  for (const auto& r : rows) {
    sxy += (r.x - mx) * (r.y - my);
    sxx += (r.x - mx) * (r.x - mx);
  }
  return sxx == 0.0 ? 0.0 : sxy / sxx;
}

SlopeDiagnostics slope_diagnostics(const SaturationSeries& series) {
  const auto t = curve_export(series);
  SlopeDiagnostics d;
  d.total_slope = least_squares_slope(t.total.rows);
  d.unique_slope = least_squares_slope(t.unique.rows);
  d.slope_ratio = d.total_slope == 0.0 ? 0.0 : d.unique_slope / d.total_slope;
  return d;
}

}  // namespace its::metrics
