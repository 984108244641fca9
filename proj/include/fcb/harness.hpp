#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fcb/bandit.hpp"
#include "fcb/causal.hpp"
#include "fcb/divergence.hpp"
#include "fcb/instance_io.hpp"
#include "fcb/model.hpp"

namespace fcb {

struct OracleReport {
  double E = 0.0;
  std::vector<ArmOracle> arms;
  std::vector<bool> fair;
  std::optional<int> best_fair_arm;
  std::vector<double> delta;  // mu_{k*} - mu_k, empty without a fair arm
  bool degenerate = false;    // another fair arm ties the best
  std::optional<double> xi_star;
};

OracleReport oracle_report(const Instance& instance, double E);
Json to_json(const OracleReport& report);

struct SweepConfig {
  std::vector<std::int64_t> horizons;  // T values
  int runs = 1;
  std::vector<Algorithm> algorithms;
  std::uint64_t base_seed = 0;
  int threads = 1;
  double budget = 1.0;  // average cost per pull
  double fairness_E = 1.0;
};

struct ErrorRow {
  std::int64_t T = 0;
  Algorithm algorithm = Algorithm::CsrV2;
  int runs = 0;
  int misidentifications = 0;
  int no_fair_arm = 0;
  int failures = 0;
  double error_rate = 0.0;
  double wall_time = 0.0;  // seconds summed over runs
  std::uint64_t base_seed = 0;
};

struct ErrorCurve {
  std::string instance_digest;
  std::vector<ErrorRow> rows;
};

/// Seed of one run, derived from the sweep coordinates.
std::uint64_t run_seed(std::uint64_t base, std::size_t horizon_index, std::size_t run_index,
                       Algorithm algo);

/// Runs every (T, algorithm, run) cell and scores the decisions against the
/// oracle's best fair arm (or NoFairArm). A run that throws counts as a
/// misidentification and a failure.
ErrorCurve run_sweep(const Instance& instance, const DivergenceSet& div, const OracleReport& truth,
                     const SweepConfig& config);

void write_curve_csv(std::ostream& out, const ErrorCurve& curve);
Json to_json(const ErrorCurve& curve);
Json to_json(const RunTrace& trace);
Json to_json(const PhaseRecord& record);
Json to_json(const DivergenceSet& div);

}  // namespace fcb
