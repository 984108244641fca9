#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcb/causal.hpp"
#include "fcb/matrix.hpp"
#include "fcb/model.hpp"

namespace fcb {

/// f1(x) = x e^{x-1} - 1.
double f1(double x);

/// Cutoff matrices, indexed [target arm k][source arm j].
struct DivergenceSet {
  Matrix m;
  Matrix d_ssp;
  Matrix d_sps;

  int arm_count() const { return m.rows(); }
  const Matrix& fairness(Direction d) const { return d == Direction::SSPrime ? d_ssp : d_sps; }
};

/// Exact computation is the default. Monte Carlo mode needs a positive draw
/// count.
struct DivergenceOptions {
  bool monte_carlo = false;
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// D_f1(P_i || P_j) for the conditional of V given pa(V), with the pa(V)
/// marginal taken from the model (no arm changes it).
double conditional_f_divergence(const CausalModel& model, const Arm& arm_i, const Arm& arm_j);
double conditional_f_divergence(const CausalModel& model, const Arm& arm_i, const Arm& arm_j,
                                std::int64_t cap);
/// Same quantity with pa(V) drawn from the observational joint; the inner sum
/// over V stays exact.
McEstimate conditional_f_divergence_mc(const CausalModel& model, const Arm& arm_i,
                                       const Arm& arm_j, std::int64_t draws, Rng& rng);

/// M_kj = 1 + ln(1 + D_f1(P_k || P_j)).
Matrix outcome_matrix(const CausalModel& model, std::span<const Arm> arms,
                      const DivergenceOptions& options = {});

/// D_kj = ln(E_{k,s}[exp|u|] + E_{k,s'}[exp|u|]) where u is the fairness weight
/// for the direction with source arm j and target arm k.
Matrix fairness_matrix(const CausalModel& model, std::span<const Arm> arms, Direction direction,
                       const DivergenceOptions& options = {});

/// One entry of the fairness matrix: target arm k, source arm j, exact.
double fairness_divergence(const CausalModel& model, const Arm& arm_k, const Arm& arm_j,
                           Direction direction);

DivergenceSet compute_divergences(const CausalModel& model, std::span<const Arm> arms,
                                  const DivergenceOptions& options = {});

/// Smallest eta with P_i(P_i/P_j > eta) <= eps/2.
double quantile_eta(const CausalModel& model, const Arm& arm_i, const Arm& arm_j, double eps);

/// Smallest gamma with P_{i,s}(|u| > gamma) + P_{i,s'}(|u| > gamma) <= eps/2.
double quantile_gamma(const CausalModel& model, const Arm& arm_i, const Arm& arm_j, double eps,
                      Direction direction);

}  // namespace fcb
