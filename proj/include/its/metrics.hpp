#pragma once

#include <string>
#include <vector>

namespace its::metrics {

struct SeriesPoint {
  int ordinal = 0;
  long total_after = 0;
  long unique_after = 0;
  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

/// Cumulative total and unique code counts after each interview.
struct SaturationSeries {
  std::vector<SeriesPoint> points;
  friend bool operator==(const SaturationSeries&, const SaturationSeries&) = default;
};

/// Throws InvalidSeries unless ordinals run 1,2,3..., both counts are
/// non-decreasing and 1 <= unique_after <= total_after.
void validate(const SaturationSeries& series);

struct ItsResult {
  long unique_codes = 0;
  long total_codes = 0;
  double slope_ratio = 0.0;  // unique / total, full precision
};

/// unique / total. Throws DomainError unless 1 <= unique <= total.
ItsResult its_slope_ratio(long total_codes, long unique_codes);

/// Two-decimal rendering used in summaries ("0.12").
std::string display_ratio(double ratio);

struct RatioPoint {
  int ordinal = 0;
  double ratio = 0.0;
};

std::vector<RatioPoint> ratio_series(const SaturationSeries& series);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};

struct CurveTable {
  std::string name;  // "total", "unique", "ratio"
  std::string x_label;
  std::string y_label;
  std::vector<CurvePoint> rows;
};

struct CurveTables {
  CurveTable total;
  CurveTable unique;
  CurveTable ratio;
};

CurveTables curve_export(const SaturationSeries& series);

/// Ordinary least-squares slope of y on x. Diagnostic only; the normative
/// metric is the endpoint ratio.
double least_squares_slope(const std::vector<CurvePoint>& rows);

struct SlopeDiagnostics {
  double total_slope = 0.0;
  double unique_slope = 0.0;
  double slope_ratio = 0.0;
};

SlopeDiagnostics slope_diagnostics(const SaturationSeries& series);

}  // namespace its::metrics
