#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcb/allocation.hpp"
#include "fcb/causal.hpp"
#include "fcb/divergence.hpp"
#include "fcb/estimation.hpp"
#include "fcb/model.hpp"

namespace fcb {

/// n(T) = ceil(log2(10 sqrt(T))).
int phase_count(std::int64_t T);
/// sum_{i=1}^n 1/i.
double logbar(int n);

struct PhaseSchedule {
  int n = 0;
  double logbar = 0.0;
  std::vector<std::int64_t> tau;
};

/// tau(l) = floor(T / (l logbar)), with the deficit added to tau(1).
PhaseSchedule phase_schedule(std::int64_t T);

enum class Variant { V1, V2 };
enum class Algorithm { CsrV1, CsrV2, TsV1, TsV2 };

const char* to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

enum class EliminationReason { SubOptimal, UnfairHigh, UnfairLow };
const char* to_string(EliminationReason r);

struct Elimination {
  int arm = -1;
  EliminationReason reason = EliminationReason::SubOptimal;
  std::optional<Direction> direction;  // set for the unfairness clauses
};

struct PhaseRecord {
  int stage = 1;  // 2 only for the second stage of the two-stage baseline
  int l = 1;
  double epsilon = 1.0;
  std::int64_t tau = 0;
  std::vector<int> remaining;  // R at the start of the phase
  std::vector<int> fair;
  Allocation allocation;
  PullCounts counts;
  EstimateVector estimates;
  std::vector<Elimination> eliminated;
};

struct RunTrace {
  std::vector<PhaseRecord> phases;
  std::optional<int> decision;  // nullopt is NoFairArm
  std::int64_t samples_spent = 0;
  double cost_spent = 0.0;
};

struct RunConfig {
  std::int64_t T = 0;
  double budget = 1.0;
  double fairness_E = 1.0;
  Variant variant = Variant::V2;
};

/// Arms of R passing all four strict margin tests at phase l. Arms with a
/// missing fairness estimate are left out.
std::vector<int> fair_set(const EstimateVector& est, int l, double E, std::span<const int> R);

/// One elimination step. The reward clause compares against the best Y-hat
/// over F; with check_reward or check_fairness off the matching clauses are
/// skipped. A clause whose estimate is missing never fires.
std::vector<int> eliminate(const EstimateVector& est, std::span<const int> F, int l, double E,
                           std::span<const int> R, std::vector<Elimination>* log = nullptr,
                           bool check_reward = true, bool check_fairness = true);

/// Constraint successive rejection. Throws Error(Infeasible) from allocation.
RunTrace run_csr(const Instance& instance, const Sampler& sampler, const DivergenceSet& div,
                 const RunConfig& config, Rng& rng);

/// Two-stage baseline: fairness-only elimination on floor(T/2) pulls, then
/// reward-only elimination on the rest.
RunTrace run_two_stage(const Instance& instance, const Sampler& sampler, const DivergenceSet& div,
                       const RunConfig& config, Rng& rng);

RunTrace run_algorithm(Algorithm algo, const Instance& instance, const Sampler& sampler,
                       const DivergenceSet& div, std::int64_t T, double budget, double E, Rng& rng);

/// Extra allocation constraints implied by the instance flags at horizon T.
std::vector<LinearConstraint> instance_constraints(const Instance& instance, std::int64_t T);

/// v*(B, R) for the instance with all regimes enabled.
double v_star(const Instance& instance, const DivergenceSet& div, double budget,
              std::span<const int> R, std::int64_t T);

struct ArmBound {
  double delta = 0.0;  // mu_{k*} - mu_k
  double so = 0.0;     // infinity when no bracket matches
  double f_ssp = 0.0;
  double f_sps = 0.0;
  double rho = 0.0;
  double v_star_rstar = 0.0;
  std::vector<int> rstar;
};

struct BoundReport {
  std::optional<int> best_fair_arm;
  // Best-fair-arm case.
  double l0 = 0.0;
  double rho_star = 0.0;
  double h_bar = 0.0;
  double error_bound = 1.0;
  std::vector<ArmBound> arms;
  // No-fair-arm case.
  double xi_star = 0.0;
  double v_star_all = 0.0;
  double no_fair_probability_lower = 0.0;
};

BoundReport bound_report(const Instance& instance, std::span<const ArmOracle> oracle,
                         const DivergenceSet& div, double budget, std::int64_t T, double E);

}  // namespace fcb
