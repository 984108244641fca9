#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fcb/model.hpp"

namespace fcb {

enum class ViolationKind {
  BadReference,
  Cycle,
  NegativeEntry,
  UnnormalizedRow,
  SensitiveHasParents,
  SensitiveNotBinary,
  SupportMismatch,
  BadTargetEncoding,
  ArmShape,
  ArmUnnormalizedRow,
  ArmZeroPattern,
  NegativeCost,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::string summary() const;
};

ValidationReport validate_model(const CausalModel& model, std::span<const Arm> arms);

/// Throws Error(Validation) with the report summary when validation fails.
void require_valid(const CausalModel& model, std::span<const Arm> arms);

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Ancestral sampler over a finalized model. V is drawn from the pulled arm's
/// table; under ForceS / ForceSprime the sensitive node is set to the forced
/// state.
class Sampler {
 public:
  Sampler(const CausalModel& model, std::span<const Arm> arms);

  Sample draw(int arm, Regime regime, Rng& rng) const;
  /// Fills `values` (one entry per node) with a joint draw.
  void draw_values(int arm, Regime regime, Rng& rng, std::vector<int>& values) const;

 private:
  int pick(std::span<const double> cumulative, Rng& rng) const;

  const CausalModel* model_;
  std::vector<std::vector<double>> node_cdf_;
  std::vector<std::vector<double>> arm_cdf_;
};

/// P_to(v | pa(v)) / P_from(v | pa(v)) at the sample's V context.
double importance_weight_outcome(const CausalModel& model, const Sample& sample,
                                 const Arm& from, const Arm& to);

/// Product over X in ch(S) of P(x | pa\S, s) / P(x | pa\S, s') for SSPrime (the
/// inverse ratio for SPrimeS). When V is itself a child of S, its factor uses
/// `to`'s table.
double sensitive_ratio(const CausalModel& model, const Sample& sample, const Arm& to,
                       Direction direction);

/// (P_to / P_from) * (sensitive_ratio - 1). The sample must come from the
/// regime that forces the direction's conditioning attribute.
double importance_weight_fairness(const CausalModel& model, const Sample& sample,
                                  const Arm& from, const Arm& to, Direction direction);

/// mu_k = E_k[Y], exact.
double exact_outcome_mean(const CausalModel& model, const Arm& arm);
double exact_outcome_mean(const CausalModel& model, const Arm& arm, std::int64_t cap);

/// zeta_k for the direction, exact: E_{k,forced}[Y (sensitive_ratio - 1)].
double exact_fairness(const CausalModel& model, const Arm& arm, Direction direction);
double exact_fairness(const CausalModel& model, const Arm& arm, Direction direction,
                      std::int64_t cap);

/// Exact per-arm quantities used for scoring and bound reporting.
struct ArmOracle {
  double mu = 0.0;
  double zeta_ssp = 0.0;
  double zeta_sps = 0.0;

  /// Strict E-fairness in both directions.
  bool fair(double E) const;
};

std::vector<ArmOracle> exact_oracles(const CausalModel& model, std::span<const Arm> arms);

}  // namespace fcb
