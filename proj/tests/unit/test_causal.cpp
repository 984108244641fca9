#include <cmath>

#include "doctest.h"
#include "fcb/causal.hpp"
#include "fcb/error.hpp"
#include "fcb/generate.hpp"
#include "fcb/inference.hpp"
#include "oracles.hpp"

using namespace fcb;
using fcb::testing::brute_fairness;
using fcb::testing::brute_outcome_mean;
using fcb::testing::enumerate_joint;
using fcb::testing::random_instance;

namespace {

// S -> V -> Y with binary nodes. Y's value is its state index.
Instance chain(double p_s, std::vector<double> v_given_s, std::vector<double> y_given_v,
               std::vector<std::vector<double>> arm_tables = {}) {
  Instance inst;
  CausalModel& m = inst.model;
  m.nodes = {{"S", {"s", "s'"}, {}, {p_s, 1.0 - p_s}},
             {"V", {"0", "1"}, {0}, v_given_s},
             {"Y", {"0", "1"}, {1}, y_given_v}};
  m.sensitive = 0;
  m.intervention = 1;
  m.target = 2;
  m.target_values = {0.0, 1.0};
  if (arm_tables.empty()) arm_tables.push_back(v_given_s);
  for (std::size_t k = 0; k < arm_tables.size(); ++k) {
    Arm a;
    a.index = static_cast<int>(k);
    a.table = arm_tables[k];
    inst.arms.push_back(a);
  }
  m.finalize();
  return inst;
}

}  // namespace

TEST_CASE("validate_model accepts a well-formed chain") {
  const Instance inst = chain(0.5, {0.3, 0.7, 0.6, 0.4}, {0.9, 0.1, 0.2, 0.8});
  CHECK(validate_model(inst.model, inst.arms).ok());
}

TEST_CASE("validate_model reports a cycle") {
  Instance inst = chain(0.5, {0.3, 0.7, 0.6, 0.4}, {0.9, 0.1, 0.2, 0.8});
  inst.model.nodes[0].parents = {2};
  inst.model.nodes[0].cpt = {0.5, 0.5, 0.5, 0.5};
  const auto report = validate_model(inst.model, inst.arms);
  CHECK(report.has(ViolationKind::Cycle));
  CHECK(report.has(ViolationKind::SensitiveHasParents));
}

TEST_CASE("validate_model reports an unnormalized row") {
  Instance inst = chain(0.5, {0.3, 0.7, 0.6, 0.4}, {0.5, 0.6, 0.2, 0.8});
  const auto report = validate_model(inst.model, inst.arms);
  CHECK(report.has(ViolationKind::UnnormalizedRow));
  CHECK_THROWS_AS(require_valid(inst.model, inst.arms), Error);
}

TEST_CASE("validate_model reports support mismatch and zero-pattern mismatch") {
  // V's support under s differs from s' in arm 0.
  Instance inst = chain(0.5, {0.0, 1.0, 0.6, 0.4}, {0.9, 0.1, 0.2, 0.8},
                        {{0.0, 1.0, 0.6, 0.4}, {0.3, 0.7, 0.6, 0.4}});
  const auto report = validate_model(inst.model, inst.arms);
  CHECK(report.has(ViolationKind::SupportMismatch));
  CHECK(report.has(ViolationKind::ArmZeroPattern));
}

TEST_CASE("sampling a deterministic model returns the unique consistent sample") {
  const Instance inst = chain(1.0, {0.0, 1.0, 0.0, 1.0}, {1.0, 0.0, 0.0, 1.0});
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const Sample s = sampler.draw(0, Regime::Observational, rng);
    CHECK(s.s_value == kStateS);
    CHECK(s.v == 1);
    CHECK(s.y_state == 1);
    CHECK(s.outcome == 1.0);
  }
}

TEST_CASE("forced regimes fix the sensitive attribute") {
  const Instance inst = chain(0.5, {0.3, 0.7, 0.6, 0.4}, {0.9, 0.1, 0.2, 0.8});
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(11);
  int sprime = 0, s = 0;
  for (int i = 0; i < 10000; ++i) {
    sprime += sampler.draw(0, Regime::ForceSprime, rng).s_value == kStateSPrime;
    s += sampler.draw(0, Regime::ForceS, rng).s_value == kStateS;
  }
  CHECK(sprime == 10000);
  CHECK(s == 10000);
}

TEST_CASE("observational frequency of S concentrates at its prior") {
  const Instance inst = chain(0.5, {0.3, 0.7, 0.6, 0.4}, {0.9, 0.1, 0.2, 0.8});
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(12);
  std::vector<int> values;
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    sampler.draw_values(0, Regime::Observational, rng, values);
    hits += values[0] == kStateS;
  }
  CHECK(std::abs(static_cast<double>(hits) / n - 0.5) < 0.002);
}

TEST_CASE("sampling is reproducible for a fixed seed") {
  const Instance inst = random_instance(5);
  const Sampler sampler(inst.model, inst.arms);
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) {
    const Sample x = sampler.draw(i % inst.arm_count(), Regime::Observational, a);
    const Sample y = sampler.draw(i % inst.arm_count(), Regime::Observational, b);
    CHECK(x.v == y.v);
    CHECK(x.y_state == y.y_state);
    CHECK(x.v_parents == y.v_parents);
  }
}

TEST_CASE("exact outcome mean of a point-mass arm") {
  // Y copies V and the arm puts all mass on V = 1.
  const Instance inst = chain(0.5, {0.3, 0.7, 0.6, 0.4}, {1.0, 0.0, 0.0, 1.0}, {{0.0, 1.0, 0.0, 1.0}});
  CHECK(exact_outcome_mean(inst.model, inst.arms[0]) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("exact outcome mean of the synthetic mechanism with f = 0.5") {
  BinomialChainParams p;
  p.m = 4;
  p.f = {0.5, 0.5, 0.5, 0.5};
  p.arm_p = {{0.3, 0.6}, {0.7, 0.2}};
  const Instance inst = build_binomial_chain(p);
  for (const Arm& a : inst.arms) CHECK(exact_outcome_mean(inst.model, a) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("exact oracles match brute-force enumeration on random instances") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Instance inst = random_instance(seed);
    for (const Arm& a : inst.arms) {
      CHECK(exact_outcome_mean(inst.model, a) == doctest::Approx(brute_outcome_mean(inst.model, a)).epsilon(1e-12));
      for (Direction d : {Direction::SSPrime, Direction::SPrimeS})
        CHECK(std::abs(exact_fairness(inst.model, a, d) - brute_fairness(inst.model, a, d)) < 1e-12);
    }
  }
}

TEST_CASE("exact outcome mean agrees with Monte Carlo") {
  fcb::testing::RandomInstanceOptions opt;
  opt.max_nodes = 5;
  const Instance inst = random_instance(2024, opt);
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(3);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = sampler.draw(0, Regime::Observational, rng).outcome;
    sum += y;
    sq += y * y;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - exact_outcome_mean(inst.model, inst.arms[0])) < 3.0 * se);
}

TEST_CASE("exact fairness agrees with a Monte Carlo weighted mean") {
  fcb::testing::RandomInstanceOptions opt;
  opt.max_nodes = 4;
  const Instance inst = random_instance(77, opt);
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(4);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Sample s = sampler.draw(1, Regime::ForceSprime, rng);
    const double x = s.outcome * importance_weight_fairness(inst.model, s, inst.arms[1], inst.arms[0], Direction::SSPrime);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - exact_fairness(inst.model, inst.arms[0], Direction::SSPrime)) < 3.0 * se);
}

TEST_CASE("fairness is zero when the children of S ignore S") {
  const Instance inst = chain(0.4, {0.3, 0.7, 0.3, 0.7}, {0.9, 0.1, 0.2, 0.8}, {{0.3, 0.7, 0.3, 0.7}});
  CHECK(exact_fairness(inst.model, inst.arms[0], Direction::SSPrime) == 0.0);
  CHECK(exact_fairness(inst.model, inst.arms[0], Direction::SPrimeS) == 0.0);
}

TEST_CASE("fairness is zero when Y does not depend on the children of S") {
  // S -> A, B -> V -> Y with V's parent B independent of S.
  Instance inst;
  CausalModel& m = inst.model;
  m.nodes = {{"S", {"s", "s'"}, {}, {0.5, 0.5}},
             {"A", {"0", "1"}, {0}, {0.2, 0.8, 0.7, 0.3}},
             {"B", {"0", "1"}, {}, {0.4, 0.6}},
             {"V", {"0", "1"}, {2}, {0.5, 0.5, 0.1, 0.9}},
             {"Y", {"0", "1"}, {3}, {0.9, 0.1, 0.3, 0.7}}};
  m.sensitive = 0;
  m.intervention = 3;
  m.target = 4;
  m.target_values = {0.0, 1.0};
  inst.arms = {Arm{0, {0.5, 0.5, 0.1, 0.9}}};
  m.finalize();
  CHECK(std::abs(exact_fairness(m, inst.arms[0], Direction::SSPrime)) < 1e-15);
  CHECK(std::abs(exact_fairness(m, inst.arms[0], Direction::SPrimeS)) < 1e-15);
}

TEST_CASE("outcome importance weight") {
  const Instance inst = chain(0.5, {0.6, 0.4, 0.5, 0.5}, {0.9, 0.1, 0.2, 0.8},
                              {{0.6, 0.4, 0.5, 0.5}, {0.2, 0.8, 0.5, 0.5}});
  Sample s;
  s.s_value = kStateS;
  s.v_parents = {kStateS};
  s.v = 1;
  CHECK(importance_weight_outcome(inst.model, s, inst.arms[0], inst.arms[0]) == 1.0);
  CHECK(importance_weight_outcome(inst.model, s, inst.arms[0], inst.arms[1]) == doctest::Approx(2.0));
}

TEST_CASE("fairness importance weight") {
  // V is the only child of S; P(V=1 | s) = 0.6, P(V=1 | s') = 0.4 gives ratio 1.5.
  const Instance inst = chain(0.5, {0.4, 0.6, 0.6, 0.4}, {0.9, 0.1, 0.2, 0.8});
  Sample s;
  s.regime = Regime::ForceSprime;
  s.s_value = kStateSPrime;
  s.v_parents = {kStateSPrime};
  s.v = 1;
  s.schild = {{1, {}, 1}};
  CHECK(importance_weight_fairness(inst.model, s, inst.arms[0], inst.arms[0], Direction::SSPrime) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(importance_weight_fairness(inst.model, s, inst.arms[0], inst.arms[0], Direction::SPrimeS), Error);

  const Instance sym = chain(0.5, {0.4, 0.6, 0.4, 0.6}, {0.9, 0.1, 0.2, 0.8});
  CHECK(importance_weight_fairness(sym.model, s, sym.arms[0], sym.arms[0], Direction::SSPrime) == 0.0);
}

TEST_CASE("importance-sampling identities hold exactly under enumeration") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const Instance inst = random_instance(seed);
    const CausalModel& m = inst.model;
    for (const Arm& from : inst.arms) {
      for (const Arm& to : inst.arms) {
        double is = 0.0;
        enumerate_joint(m, from, -1, -1, [&](double p, const std::vector<int>& x) {
          const Sample s = make_sample(m, from.index, Regime::Observational, x);
          const double w = importance_weight_outcome(m, s, from, to);
          CHECK(std::isfinite(w));
          CHECK(w >= 0.0);
          is += p * s.outcome * w;
        });
        CHECK(std::abs(is - exact_outcome_mean(m, to)) < 1e-10);
        double fz = 0.0;
        enumerate_joint(m, from, kStateSPrime, -1, [&](double p, const std::vector<int>& x) {
          const Sample s = make_sample(m, from.index, Regime::ForceSprime, x);
          fz += p * s.outcome * importance_weight_fairness(m, s, from, to, Direction::SSPrime);
        });
        CHECK(std::abs(fz - exact_fairness(m, to, Direction::SSPrime)) < 1e-10);
      }
    }
  }
}

TEST_CASE("enumeration cap raises EnumerationTooLarge") {
  const Instance inst = random_instance(9);
  try {
    exact_outcome_mean(inst.model, inst.arms[0], 1);
    FAIL("expected EnumerationTooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EnumerationTooLarge);
  }
}
