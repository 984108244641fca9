#include "fcb/estimation.hpp"

#include <cmath>

#include "fcb/causal.hpp"
#include "fcb/error.hpp"

namespace fcb {

std::size_t SamplePool::KeyHash::operator()(const std::vector<int>& key) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (int v : key) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

void SamplePool::Bucket::add(const Sample& sample, const std::vector<int>& key, std::int64_t count) {
  auto [it, inserted] = index.try_emplace(key, entries.size());
  if (inserted)
    entries.push_back({sample, count});
  else
    entries[it->second].count += count;
  total += count;
}

SamplePool::SamplePool(int arm_count, bool forced_into_outcome)
    : forced_into_outcome_(forced_into_outcome),
      outcome_(arm_count),
      force_s_(arm_count),
      force_sprime_(arm_count) {}

std::vector<int> SamplePool::key_of(const Sample& s) {
  std::vector<int> key;
  key.reserve(4 + s.v_parents.size() + 3 * s.schild.size());
  key.push_back(s.s_value);
  key.insert(key.end(), s.v_parents.begin(), s.v_parents.end());
  key.push_back(s.v);
  for (const auto& c : s.schild) {
    key.insert(key.end(), c.others.begin(), c.others.end());
    key.push_back(c.x);
  }
  key.push_back(s.y_state);
  return key;
}

void SamplePool::add(const Sample& sample, std::int64_t count) {
  if (sample.arm < 0 || sample.arm >= arm_count())
    throw Error(ErrorKind::Validation, "sample arm index out of range");
  const auto key = key_of(sample);
  const int j = sample.arm;
  switch (sample.regime) {
    case Regime::Observational:
      outcome_[j].add(sample, key, count);
      break;
    case Regime::ForceS:
      force_s_[j].add(sample, key, count);
      if (forced_into_outcome_) outcome_[j].add(sample, key, count);
      break;
    case Regime::ForceSprime:
      force_sprime_[j].add(sample, key, count);
      if (forced_into_outcome_) outcome_[j].add(sample, key, count);
      break;
  }
  total_ += count;
}

const std::vector<PoolEntry>& SamplePool::forced_entries(int j, Regime regime) const {
  if (regime == Regime::Observational) throw Error(ErrorKind::WrongRegime, "forced entries need a forced regime");
  return regime == Regime::ForceS ? force_s_[j].entries : force_sprime_[j].entries;
}

std::int64_t SamplePool::forced_count(int j, Regime regime) const {
  if (regime == Regime::Observational) throw Error(ErrorKind::WrongRegime, "forced counts need a forced regime");
  return regime == Regime::ForceS ? force_s_[j].total : force_sprime_[j].total;
}

double clip_threshold(double eps, double divergence) {
  return 2.0 * std::log(2.0 / eps) * divergence;
}

double outcome_normalizer(const SamplePool& pool, int k, const Matrix& m) {
  double z = 0.0;
  for (int j = 0; j < pool.arm_count(); ++j)
    if (const auto n = pool.outcome_count(j)) z += static_cast<double>(n) / m(k, j);
  return z;
}

double fairness_normalizer(const SamplePool& pool, int k, const Matrix& d, Direction direction) {
  const Regime regime = conditioning_regime(direction);
  double o = 0.0;
  for (int j = 0; j < pool.arm_count(); ++j)
    if (const auto n = pool.forced_count(j, regime)) o += static_cast<double>(n) / d(k, j);
  return o;
}

double pooled_outcome_estimate(const CausalModel& model, const SamplePool& pool,
                               std::span<const Arm> arms, int k, double eps, const Matrix& m) {
  const double z = outcome_normalizer(pool, k, m);
  if (z <= 0.0) throw Error(ErrorKind::NoSamples, "no outcome samples for arm " + std::to_string(k));
  double num = 0.0;
  for (int j = 0; j < pool.arm_count(); ++j) {
    const auto& entries = pool.outcome_entries(j);
    if (entries.empty()) continue;
    const double thr = clip_threshold(eps, m(k, j));
    double part = 0.0;
    for (const PoolEntry& e : entries) {
      if (e.sample.outcome == 0.0) continue;
      const double w = importance_weight_outcome(model, e.sample, arms[j], arms[k]);
      if (w <= thr) part += static_cast<double>(e.count) * e.sample.outcome * w;
    }
    num += part / m(k, j);
  }
  return num / z;
}

double pooled_fairness_estimate(const CausalModel& model, const SamplePool& pool,
                                std::span<const Arm> arms, int k, double eps, const Matrix& d,
                                Direction direction) {
  const double o = fairness_normalizer(pool, k, d, direction);
  if (o <= 0.0) throw Error(ErrorKind::NoSamples, "no forced samples for arm " + std::to_string(k));
  const Regime regime = conditioning_regime(direction);
  double num = 0.0;
  for (int j = 0; j < pool.arm_count(); ++j) {
    const auto& entries = pool.forced_entries(j, regime);
    if (entries.empty()) continue;
    const double thr = clip_threshold(eps, d(k, j));
    double part = 0.0;
    for (const PoolEntry& e : entries) {
      if (e.sample.outcome == 0.0) continue;
      const double u = importance_weight_fairness(model, e.sample, arms[j], arms[k], direction);
      if (std::abs(u) <= thr) part += static_cast<double>(e.count) * e.sample.outcome * u;
    }
    num += part / d(k, j);
  }
  return num / o;
}

EstimateVector estimate_all(const CausalModel& model, const SamplePool& pool,
                            std::span<const Arm> arms, double eps, const DivergenceSet& div) {
  std::vector<int> all(arms.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
  return estimate_all(model, pool, arms, eps, div, all);
}

EstimateVector estimate_all(const CausalModel& model, const SamplePool& pool,
                            std::span<const Arm> arms, double eps, const DivergenceSet& div,
                            std::span<const int> which) {
  const std::size_t K = arms.size();
  EstimateVector out;
  out.epsilon = eps;
  out.y_hat.assign(K, std::nullopt);
  out.zeta_ssp_hat.assign(K, std::nullopt);
  out.zeta_sps_hat.assign(K, std::nullopt);
  for (int k : which) {
    if (outcome_normalizer(pool, k, div.m) > 0.0)
      out.y_hat[k] = pooled_outcome_estimate(model, pool, arms, k, eps, div.m);
    if (fairness_normalizer(pool, k, div.d_ssp, Direction::SSPrime) > 0.0)
      out.zeta_ssp_hat[k] = pooled_fairness_estimate(model, pool, arms, k, eps, div.d_ssp, Direction::SSPrime);
    if (fairness_normalizer(pool, k, div.d_sps, Direction::SPrimeS) > 0.0)
      out.zeta_sps_hat[k] = pooled_fairness_estimate(model, pool, arms, k, eps, div.d_sps, Direction::SPrimeS);
  }
  return out;
}

}  // namespace fcb
