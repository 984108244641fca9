#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fcb/estimation.hpp"
#include "fcb/error.hpp"
#include "fcb/generate.hpp"
#include "oracles.hpp"

using namespace fcb;
using fcb::testing::enumerate_joint;
using fcb::testing::expected_fairness_estimate;
using fcb::testing::expected_outcome_estimate;
using fcb::testing::random_instance;

namespace {

Instance chain(std::vector<double> v_given_s, std::vector<std::vector<double>> arm_tables) {
  Instance inst;
  CausalModel& m = inst.model;
  m.nodes = {{"S", {"s", "s'"}, {}, {0.5, 0.5}},
             {"V", {"0", "1"}, {0}, v_given_s},
             {"Y", {"0", "1"}, {1}, {0.9, 0.1, 0.2, 0.8}}};
  m.sensitive = 0;
  m.intervention = 1;
  m.target = 2;
  m.target_values = {0.0, 1.0};
  for (std::size_t k = 0; k < arm_tables.size(); ++k) inst.arms.push_back(Arm{static_cast<int>(k), arm_tables[k]});
  m.finalize();
  return inst;
}

Sample observation(int arm, Regime regime, int s, int v, double y) {
  Sample x;
  x.arm = arm;
  x.regime = regime;
  x.s_value = s;
  x.v_parents = {s};
  x.v = v;
  x.schild = {{1, {}, v}};
  x.y_state = y > 0 ? 1 : 0;
  x.outcome = y;
  return x;
}

}  // namespace

TEST_CASE("own-arm samples give the plain sample mean") {
  const Instance inst = chain({0.3, 0.7, 0.6, 0.4}, {{0.3, 0.7, 0.6, 0.4}, {0.5, 0.5, 0.5, 0.5}});
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  SamplePool pool(2, false);
  const double ys[] = {1.0, 0.0, 1.0, 1.0, 0.0};
  for (int i = 0; i < 5; ++i) pool.add(observation(0, Regime::Observational, i % 2, i % 2, ys[i]));
  for (double eps : {1.0, 0.25})
    CHECK(pooled_outcome_estimate(inst.model, pool, inst.arms, 0, eps, div.m) == doctest::Approx(0.6));
}

TEST_CASE("a clipped sample adds nothing to the numerator but counts in the normalizer") {
  // Arm 1 has P(V=1|s) = 0.01, arm 0 has 0.99: the weight from arm 1 to arm 0 is 99.
  const Instance inst = chain({0.99, 0.01, 0.5, 0.5}, {{0.01, 0.99, 0.5, 0.5}, {0.99, 0.01, 0.5, 0.5}});
  Matrix M(2, 2, 1.0);
  SamplePool pool(2, false);
  pool.add(observation(0, Regime::Observational, 0, 1, 1.0));
  pool.add(observation(1, Regime::Observational, 0, 1, 1.0));
  // Threshold at eps = 1 is 2 ln 2 < 99, so only the own-arm sample counts.
  CHECK(pooled_outcome_estimate(inst.model, pool, inst.arms, 0, 1.0, M) == doctest::Approx(0.5));
  CHECK(outcome_normalizer(pool, 0, M) == 2.0);
}

TEST_CASE("single forced sample with a known fairness weight") {
  // V is the only child of S with ratio P(V=1|s)/P(V=1|s') = 0.6/0.4.
  const Instance inst = chain({0.4, 0.6, 0.6, 0.4}, {{0.4, 0.6, 0.6, 0.4}});
  Matrix D(1, 1, std::log(2.0));
  SamplePool pool(1, false);
  pool.add(observation(0, Regime::ForceSprime, kStateSPrime, 1, 1.0));
  CHECK(pooled_fairness_estimate(inst.model, pool, inst.arms, 0, 1.0, D, Direction::SSPrime) == doctest::Approx(0.5));
  CHECK_THROWS_AS(pooled_fairness_estimate(inst.model, pool, inst.arms, 0, 1.0, D, Direction::SPrimeS), Error);
}

TEST_CASE("symmetric children give a zero fairness estimate") {
  const Instance inst = chain({0.3, 0.7, 0.3, 0.7}, {{0.3, 0.7, 0.3, 0.7}, {0.6, 0.4, 0.6, 0.4}});
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(1);
  SamplePool pool(2, false);
  for (int i = 0; i < 500; ++i) {
    pool.add(sampler.draw(i % 2, Regime::ForceS, rng));
    pool.add(sampler.draw(i % 2, Regime::ForceSprime, rng));
  }
  const EstimateVector est = estimate_all(inst.model, pool, inst.arms, 0.5, div);
  for (int k = 0; k < 2; ++k) {
    CHECK(*est.zeta_ssp_hat[k] == 0.0);
    CHECK(*est.zeta_sps_hat[k] == 0.0);
    CHECK_FALSE(est.y_hat[k].has_value());
  }
}

TEST_CASE("empty pool yields missing estimates and NoSamples") {
  const Instance inst = random_instance(3);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  SamplePool pool(inst.arm_count(), false);
  const EstimateVector est = estimate_all(inst.model, pool, inst.arms, 1.0, div);
  for (int k = 0; k < inst.arm_count(); ++k) {
    CHECK_FALSE(est.y_hat[k]);
    CHECK_FALSE(est.zeta_ssp_hat[k]);
    CHECK_FALSE(est.zeta_sps_hat[k]);
  }
  try {
    pooled_outcome_estimate(inst.model, pool, inst.arms, 0, 1.0, div.m);
    FAIL("expected NoSamples");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoSamples);
  }
}

TEST_CASE("pool routes forced samples by regime") {
  const Instance inst = random_instance(4);
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(2);
  SamplePool pool(inst.arm_count(), false), merged(inst.arm_count(), true);
  for (int i = 0; i < 300; ++i) {
    for (Regime r : {Regime::Observational, Regime::ForceS, Regime::ForceSprime}) {
      const Sample s = sampler.draw(0, r, rng);
      pool.add(s);
      merged.add(s);
    }
  }
  CHECK(pool.outcome_count(0) == 300);
  CHECK(pool.forced_count(0, Regime::ForceS) == 300);
  CHECK(pool.forced_count(0, Regime::ForceSprime) == 300);
  CHECK(merged.outcome_count(0) == 900);
  CHECK(pool.total_samples() == 900);
  for (const PoolEntry& e : pool.forced_entries(0, Regime::ForceSprime)) CHECK(e.sample.s_value == kStateSPrime);
  std::int64_t n = 0;
  for (const PoolEntry& e : pool.outcome_entries(0)) n += e.count;
  CHECK(n == 300);
}

TEST_CASE("estimates do not depend on sample order") {
  const Instance inst = random_instance(8);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(6);
  std::vector<Sample> samples;
  for (int i = 0; i < 2000; ++i) samples.push_back(sampler.draw(i % inst.arm_count(), static_cast<Regime>(i % 3), rng));
  SamplePool a(inst.arm_count(), false), b(inst.arm_count(), false);
  for (const Sample& s : samples) a.add(s);
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) b.add(*it);
  const EstimateVector ea = estimate_all(inst.model, a, inst.arms, 0.25, div);
  const EstimateVector eb = estimate_all(inst.model, b, inst.arms, 0.25, div);
  for (int k = 0; k < inst.arm_count(); ++k) {
    CHECK(*ea.y_hat[k] == doctest::Approx(*eb.y_hat[k]).epsilon(1e-12));
    CHECK(*ea.zeta_ssp_hat[k] == doctest::Approx(*eb.zeta_ssp_hat[k]).epsilon(1e-12));
  }
}

TEST_CASE("clip threshold grows as eps shrinks") {
  double last = 0.0;
  for (double eps : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
    const double t = clip_threshold(eps, 1.7);
    CHECK(t > last);
    CHECK(t == doctest::Approx(2.0 * std::log(2.0 / eps) * 1.7));
    last = t;
  }
}

TEST_CASE("exact estimator expectations sit inside the bias brackets") {
  for (std::uint64_t seed = 500; seed < 520; ++seed) {
    const Instance inst = random_instance(seed);
    const DivergenceSet div = compute_divergences(inst.model, inst.arms);
    const std::vector<int> tau(inst.arm_count(), 1);
    for (double eps : {1.0, 0.5, 0.25}) {
      for (int k = 0; k < inst.arm_count(); ++k) {
        const double mu = exact_outcome_mean(inst.model, inst.arms[k]);
        const double ey = expected_outcome_estimate(inst, tau, k, eps, div.m);
        CHECK(ey <= mu + 1e-10);
        CHECK(mu <= ey + eps / 2.0 + 1e-10);
        for (Direction d : {Direction::SSPrime, Direction::SPrimeS}) {
          const double z = exact_fairness(inst.model, inst.arms[k], d);
          CHECK(std::abs(expected_fairness_estimate(inst, tau, k, eps, div.fairness(d), d) - z) <= eps / 2.0 + 1e-10);
        }
      }
    }
  }
}

TEST_CASE("leaked samples from one arm estimate every arm of a low-divergence instance") {
  BinomialChainParams p;
  p.m = 6;
  p.f = {0.1, 0.25, 0.4, 0.55, 0.7, 0.9};
  p.arm_p = {{0.50, 0.45}, {0.52, 0.47}, {0.48, 0.50}, {0.55, 0.50}, {0.45, 0.42}};
  const Instance inst = build_binomial_chain(p);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(10);
  SamplePool pool(inst.arm_count(), false);
  for (int i = 0; i < 100000; ++i) pool.add(sampler.draw(1, Regime::Observational, rng));
  const EstimateVector est = estimate_all(inst.model, pool, inst.arms, 0.03, div);
  for (int k = 0; k < inst.arm_count(); ++k)
    CHECK(std::abs(*est.y_hat[k] - exact_outcome_mean(inst.model, inst.arms[k])) < 0.02);
}
