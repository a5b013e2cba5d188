#include "its/probability.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <fmt/core.h>

#include "its/error.hpp"

namespace its::probability {

double p_at_least_one_unique(long unique_codes, long code_space, long codes_next_interview) {
  if (unique_codes < 1 || codes_next_interview < 1) {
    fail(ErrorKind::DomainError, "unique codes and next-interview codes must be >= 1");
  }
  if (code_space < unique_codes) {
    fail(ErrorKind::DomainError,
         fmt::format("code space {} is smaller than the {} unique codes", code_space,
                     unique_codes));
  }
  const double base = static_cast<double>(unique_codes) / static_cast<double>(code_space);
  return 1.0 - std::pow(base, static_cast<double>(codes_next_interview));
}

std::vector<CurveRow> probability_curve(long unique_codes, long codes_next_interview,
                                        long space_first, long space_last) {
  if (space_first < unique_codes) {
    fail(ErrorKind::DomainError, fmt::format("range starts at {} below the {} unique codes",
                                             space_first, unique_codes));
  }
  if (space_last < space_first) fail(ErrorKind::DomainError, "empty space range");
  std::vector<CurveRow> out;
  out.reserve(static_cast<std::size_t>(space_last - space_first + 1));
  for (long s = space_first; s <= space_last; ++s) {
    out.push_back({s, p_at_least_one_unique(unique_codes, s, codes_next_interview)});
  }
  return out;
}

void validate(const SimulationConfig& c) {
  if (c.code_space < 1 || c.iterations < 1 || c.draw_size < 1 || c.replications < 1) {
    fail(ErrorKind::DomainError, "space, iterations, draw and replications must all be >= 1");
  }
  if (c.sampling == Sampling::WithoutReplacement && c.draw_size > c.code_space) {
    fail(ErrorKind::DomainError,
         fmt::format("draw size {} exceeds code space {}", c.draw_size, c.code_space));
  }
}

std::vector<long> simulate_replication(const SimulationConfig& c, int replication) {
  std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                    static_cast<std::uint32_t>(replication)};
  std::mt19937_64 rng(seq);

  std::vector<char> seen(static_cast<std::size_t>(c.code_space), 0);
  std::vector<long> pool(static_cast<std::size_t>(c.code_space));
  std::iota(pool.begin(), pool.end(), 0L);

  std::vector<long> unique_after;
  unique_after.reserve(static_cast<std::size_t>(c.iterations));
  long unique = 0;
  for (int it = 0; it < c.iterations; ++it) {
    if (c.sampling == Sampling::WithoutReplacement) {
      // Partial Fisher-Yates: the first draw_size slots become a uniform
      // k-subset regardless of the pool's current permutation.
      for (int j = 0; j < c.draw_size; ++j) {
        std::uniform_int_distribution<long> pick(j, c.code_space - 1);
        std::swap(pool[j], pool[pick(rng)]);
        auto& flag = seen[pool[j]];
        if (!flag) {
          flag = 1;
          ++unique;
        }
      }
    } else {
      std::uniform_int_distribution<long> pick(0, c.code_space - 1);
      for (int j = 0; j < c.draw_size; ++j) {
        auto& flag = seen[pick(rng)];
        if (!flag) {
          flag = 1;
          ++unique;
        }
      }
    }
    unique_after.push_back(unique);
  }
  return unique_after;
}

namespace {

SimulationResult aggregate(const SimulationConfig& c,
                           const std::vector<std::vector<long>>& trajectories) {
  SimulationResult r{c, {}};
  const double n = static_cast<double>(c.replications);
  for (int it = 0; it < c.iterations; ++it) {
    double sum = 0.0;
    for (const auto& t : trajectories) sum += static_cast<double>(t[it]);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& t : trajectories) {
      const double d = static_cast<double>(t[it]) - mean;
      ss += d * d;
    }
    const double sd = c.replications > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    r.per_iteration.push_back(
        {it + 1, static_cast<double>(it + 1) * static_cast<double>(c.draw_size), mean, sd});
  }
  return r;
}

}  // namespace

SimulationResult simulate_code_space(const SimulationConfig& c) {
  validate(c);
  std::vector<std::vector<long>> trajectories(static_cast<std::size_t>(c.replications));
#pragma omp parallel for schedule(static)
  for (int rep = 0; rep < c.replications; ++rep) {
    trajectories[rep] = simulate_replication(c, rep);
  }
  return aggregate(c, trajectories);
}

SimulationResult simulate_code_space_serial(const SimulationConfig& c) {
  validate(c);
  std::vector<std::vector<long>> trajectories;
  trajectories.reserve(static_cast<std::size_t>(c.replications));
  for (int rep = 0; rep < c.replications; ++rep) {
    trajectories.push_back(simulate_replication(c, rep));
  }
  return aggregate(c, trajectories);
}

double expected_unique(long code_space, int iterations, int draw_size, Sampling sampling) {
  if (code_space < 1 || iterations < 0 || draw_size < 1) {
    fail(ErrorKind::DomainError, "space and draw must be >= 1, iterations >= 0");
  }
  const double s = static_cast<double>(code_space);
  if (sampling == Sampling::WithReplacement) {
    return s * (1.0 - std::pow(1.0 - 1.0 / s, static_cast<double>(iterations) * draw_size));
  }
  if (draw_size > code_space) {
    fail(ErrorKind::DomainError,
         fmt::format("draw size {} exceeds code space {}", draw_size, code_space));
  }
  return s * (1.0 - std::pow(1.0 - static_cast<double>(draw_size) / s, iterations));
}

}  // namespace its::probability
