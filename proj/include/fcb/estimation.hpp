#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "fcb/divergence.hpp"
#include "fcb/model.hpp"

namespace fcb {

/// A distinct observation and how many times it was seen.
struct PoolEntry {
  Sample sample;
  std::int64_t count = 0;
};

/// Samples grouped by source arm and regime. Identical observations are
/// stored once with a multiplicity, which leaves every estimator unchanged.
class SamplePool {
 public:
  SamplePool(int arm_count, bool forced_into_outcome);

  void add(const Sample& sample, std::int64_t count = 1);

  int arm_count() const { return static_cast<int>(outcome_.size()); }
  bool forced_into_outcome() const { return forced_into_outcome_; }

  /// Entries usable for outcome estimation from arm j.
  const std::vector<PoolEntry>& outcome_entries(int j) const { return outcome_[j].entries; }
  /// Entries drawn under arm j with S forced (regime ForceS or ForceSprime).
  const std::vector<PoolEntry>& forced_entries(int j, Regime regime) const;

  std::int64_t outcome_count(int j) const { return outcome_[j].total; }
  std::int64_t forced_count(int j, Regime regime) const;
  std::int64_t total_samples() const { return total_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<int>& key) const noexcept;
  };
  struct Bucket {
    std::vector<PoolEntry> entries;
    std::unordered_map<std::vector<int>, std::size_t, KeyHash> index;
    std::int64_t total = 0;

    void add(const Sample& sample, const std::vector<int>& key, std::int64_t count);
  };

  static std::vector<int> key_of(const Sample& sample);

  bool forced_into_outcome_;
  std::vector<Bucket> outcome_;
  std::vector<Bucket> force_s_;
  std::vector<Bucket> force_sprime_;
  std::int64_t total_ = 0;
};

struct EstimateVector {
  std::vector<std::optional<double>> y_hat;
  std::vector<std::optional<double>> zeta_ssp_hat;
  std::vector<std::optional<double>> zeta_sps_hat;
  double epsilon = 1.0;

  const std::vector<std::optional<double>>& zeta(Direction d) const {
    return d == Direction::SSPrime ? zeta_ssp_hat : zeta_sps_hat;
  }
};

/// Clip level 2 ln(2/eps) * divergence.
double clip_threshold(double eps, double divergence);

/// Z_k = sum_j tau_j / M_kj over the outcome pool.
double outcome_normalizer(const SamplePool& pool, int k, const Matrix& m);
/// O_k = sum_j tau_{j,attr} / D_kj, attr = s' for SSPrime and s for SPrimeS.
double fairness_normalizer(const SamplePool& pool, int k, const Matrix& d, Direction direction);

/// Clipped pooled estimate of mu_k. Throws Error(NoSamples) when Z_k = 0.
double pooled_outcome_estimate(const CausalModel& model, const SamplePool& pool,
                               std::span<const Arm> arms, int k, double eps, const Matrix& m);

/// Clipped pooled estimate of zeta_k for the direction. Throws Error(NoSamples)
/// when O_k = 0.
double pooled_fairness_estimate(const CausalModel& model, const SamplePool& pool,
                                std::span<const Arm> arms, int k, double eps, const Matrix& d,
                                Direction direction);

/// All three estimates for every arm; empty normalizers give nullopt.
EstimateVector estimate_all(const CausalModel& model, const SamplePool& pool,
                            std::span<const Arm> arms, double eps, const DivergenceSet& div);
/// Same, restricted to `which`; the other arms are left as nullopt.
EstimateVector estimate_all(const CausalModel& model, const SamplePool& pool,
                            std::span<const Arm> arms, double eps, const DivergenceSet& div,
                            std::span<const int> which);

}  // namespace fcb
