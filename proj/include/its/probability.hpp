#pragma once

#include <cstdint>
#include <vector>

namespace its::probability {

/// 1 - (unique / space)^codes_next. Throws DomainError when
/// space < unique or any argument is below 1.
double p_at_least_one_unique(long unique_codes, long code_space, long codes_next_interview);

struct CurveRow {
  long space = 0;
  double probability = 0.0;
};

/// p_at_least_one_unique over space_first..space_last inclusive.
std::vector<CurveRow> probability_curve(long unique_codes, long codes_next_interview,
                                        long space_first, long space_last);

enum class Sampling {
  WithoutReplacement,  // draw_size distinct values per iteration
  WithReplacement,
};

struct SimulationConfig {
  long code_space = 100;
  int iterations = 10;
  int draw_size = 15;
  int replications = 1000;
  std::uint64_t seed = 42;
  Sampling sampling = Sampling::WithoutReplacement;
};

struct IterationStats {
  int iteration = 0;
  double mean_total = 0.0;
  double mean_unique = 0.0;
  double stddev_unique = 0.0;  // sample standard deviation across replications
};

struct SimulationResult {
  SimulationConfig config;
  std::vector<IterationStats> per_iteration;
};

/// Throws DomainError on an invalid config.
void validate(const SimulationConfig& config);

/// Unique counts after each iteration for one replication. The generator
/// stream depends only on (seed, replication).
std::vector<long> simulate_replication(const SimulationConfig& config, int replication);

/// Replications run in parallel (OpenMP); aggregation is in replication
/// order, so the result is bit-identical to simulate_code_space_serial.
SimulationResult simulate_code_space(const SimulationConfig& config);

/// Reference implementation kept for tests and benchmarks.
SimulationResult simulate_code_space_serial(const SimulationConfig& config);

/// Analytic mean of the unique count after `iterations` draws:
///   without replacement  S * (1 - (1 - k/S)^i)
///   with replacement     S * (1 - (1 - 1/S)^(i*k))
double expected_unique(long code_space, int iterations, int draw_size,
                       Sampling sampling = Sampling::WithoutReplacement);

}  // namespace its::probability
