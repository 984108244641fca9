#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fcb/bandit.hpp"
#include "fcb/error.hpp"
#include "fcb/generate.hpp"
#include "oracles.hpp"

using namespace fcb;

namespace {

EstimateVector estimates(std::vector<std::optional<double>> y, std::vector<std::optional<double>> ssp,
                         std::vector<std::optional<double>> sps) {
  EstimateVector e;
  e.y_hat = std::move(y);
  e.zeta_ssp_hat = std::move(ssp);
  e.zeta_sps_hat = std::move(sps);
  return e;
}

Instance chain(const std::vector<std::pair<double, double>>& arm_p, double E) {
  BinomialChainParams p;
  p.m = 4;
  p.f = {0.1, 0.4, 0.6, 0.9};
  p.arm_p = arm_p;
  p.fairness_E = E;
  return build_binomial_chain(p);
}

bool same_trace(const RunTrace& a, const RunTrace& b) {
  if (a.decision != b.decision || a.samples_spent != b.samples_spent || a.phases.size() != b.phases.size())
    return false;
  for (std::size_t i = 0; i < a.phases.size(); ++i) {
    const auto& x = a.phases[i];
    const auto& y = b.phases[i];
    if (x.remaining != y.remaining || x.fair != y.fair || x.counts.y != y.counts.y ||
        x.estimates.y_hat != y.estimates.y_hat || x.estimates.zeta_ssp_hat != y.estimates.zeta_ssp_hat)
      return false;
  }
  return true;
}

constexpr Algorithm kAll[] = {Algorithm::CsrV1, Algorithm::CsrV2, Algorithm::TsV1, Algorithm::TsV2};

}  // namespace

TEST_CASE("phase schedule") {
  CHECK(logbar(3) == doctest::Approx(11.0 / 6.0).epsilon(1e-15));
  CHECK(phase_count(10000) == 10);
  CHECK(phase_count(1) == 4);
  // 10 sqrt(T) = 2^k exactly: T = 4^k / 100.
  CHECK(phase_count(4096) == static_cast<int>(std::ceil(std::log2(640.0))));
  CHECK_THROWS_AS(phase_count(0), Error);
  for (std::int64_t T : {1, 7, 100, 997, 10000, 123457}) {
    const PhaseSchedule s = phase_schedule(T);
    CHECK(s.n == phase_count(T));
    CHECK(std::accumulate(s.tau.begin(), s.tau.end(), std::int64_t{0}) == T);
    for (int l = 2; l <= s.n; ++l)
      CHECK(s.tau[l - 1] == static_cast<std::int64_t>(std::floor(T / (l * s.logbar))));
  }
}

TEST_CASE("algorithm names round-trip") {
  for (Algorithm a : kAll) CHECK(parse_algorithm(to_string(a)) == a);
  CHECK_FALSE(parse_algorithm("csr"));
}

TEST_CASE("fair set uses strict margins") {
  // Phase 1: margin 3/2 with E = 2, so |zeta| < 0.5 is needed.
  const auto est = estimates({0.5, 0.5, 0.5, 0.5}, {0.49, 0.5, -0.49, 0.1}, {0.0, 0.0, 0.0, std::nullopt});
  const std::vector<int> R{0, 1, 2, 3};
  CHECK(fair_set(est, 1, 2.0, R) == std::vector<int>{0, 2});
  const std::vector<int> sub{1, 2};
  CHECK(fair_set(est, 1, 2.0, sub) == std::vector<int>{2});
}

TEST_CASE("elimination clauses and their boundaries") {
  // Phase 2: fairness margin 3/4, reward gap 5/4, E = 1.
  const std::vector<int> R{0, 1, 2, 3, 4};
  const auto est = estimates({2.0, 0.75, 0.7, 1.9, std::nullopt},
                             {0.0, 0.0, 0.0, 1.75, -1.8},
                             {0.0, 0.0, 0.0, 0.0, 0.0});
  const std::vector<int> F{0};
  std::vector<Elimination> log;
  const auto out = eliminate(est, F, 2, 1.0, R, &log);
  // Arm 1 sits exactly 5/4 below: kept. Arm 3 has 1.75 - 3/4 = 1, not above E: kept.
  CHECK(out == std::vector<int>{0, 1, 3});
  REQUIRE(log.size() == 2);
  CHECK(log[0].arm == 2);
  CHECK(log[0].reason == EliminationReason::SubOptimal);
  CHECK(log[1].arm == 4);
  CHECK(log[1].reason == EliminationReason::UnfairLow);
  CHECK(log[1].direction == Direction::SSPrime);

  const auto high = estimates({0.0, 0.0}, {1.76, 0.0}, {0.0, 0.0});
  std::vector<Elimination> log2;
  const std::vector<int> R2{0, 1};
  CHECK(eliminate(high, F, 2, 1.0, R2, &log2) == std::vector<int>{1});
  CHECK(log2[0].reason == EliminationReason::UnfairHigh);

  // Empty F skips the reward clause; switched-off clauses never fire.
  const std::vector<int> none;
  CHECK(eliminate(est, none, 2, 1.0, R) == std::vector<int>{0, 1, 2, 3});
  CHECK(eliminate(est, F, 2, 1.0, R, nullptr, false, true) == std::vector<int>{0, 1, 2, 3});
  CHECK(eliminate(est, F, 2, 1.0, R, nullptr, true, false) == std::vector<int>{0, 1, 3, 4});
}

TEST_CASE("a single arm is returned without further phases") {
  const Instance inst = chain({{0.5, 0.5}}, 1.0);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const Sampler sampler(inst.model, inst.arms);
  for (Algorithm a : kAll) {
    Rng rng(1);
    const RunTrace t = run_algorithm(a, inst, sampler, div, 1000, 1.0, 1.0, rng);
    CHECK(t.decision == 0);
    CHECK(t.phases.size() == 1);
  }
}

TEST_CASE("runs are deterministic given the seed and respect the horizon") {
  const Instance inst = chain({{0.5, 0.5}, {0.3, 0.7}, {0.6, 0.4}}, 1.0);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const Sampler sampler(inst.model, inst.arms);
  for (Algorithm a : kAll) {
    Rng r1(42), r2(42);
    const RunTrace t1 = run_algorithm(a, inst, sampler, div, 5000, 1.0, 1.0, r1);
    const RunTrace t2 = run_algorithm(a, inst, sampler, div, 5000, 1.0, 1.0, r2);
    CHECK(same_trace(t1, t2));
    CHECK(t1.samples_spent <= 5000);
    std::int64_t counted = 0;
    for (const auto& p : t1.phases) {
      CHECK(p.counts.total() == p.tau);
      counted += p.tau;
    }
    CHECK(counted == t1.samples_spent);
  }
}

TEST_CASE("remaining sets shrink and stay inside the previous set") {
  const Instance inst = chain({{0.5, 0.5}, {0.2, 0.3}, {0.7, 0.8}, {0.45, 0.55}}, 0.5);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const Sampler sampler(inst.model, inst.arms);
  for (Algorithm a : kAll)
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      const RunTrace t = run_algorithm(a, inst, sampler, div, 20000, 1.0, 0.5, rng);
      for (std::size_t i = 1; i < t.phases.size(); ++i) {
        const auto& prev = t.phases[i - 1].remaining;
        for (int k : t.phases[i].remaining) CHECK(std::find(prev.begin(), prev.end(), k) != prev.end());
      }
      for (const auto& p : t.phases)
        for (int k : p.fair)
          CHECK(std::find(p.remaining.begin(), p.remaining.end(), k) != p.remaining.end());
    }
}

TEST_CASE("phase counts give the promised normalizer") {
  // Z_k / tau >= v* - K / tau for every k in R.
  const Instance inst = chain({{0.5, 0.5}, {0.3, 0.7}, {0.6, 0.4}, {0.2, 0.2}}, 1.0);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const Sampler sampler(inst.model, inst.arms);
  Rng rng(9);
  const RunTrace t = run_algorithm(Algorithm::CsrV1, inst, sampler, div, 3000, 1.0, 1.0, rng);
  const int K = inst.arm_count();
  for (const auto& p : t.phases) {
    if (p.tau == 0) continue;
    const double tau = static_cast<double>(p.tau);
    SamplePool pool(K, inst.pool_forced_into_outcome);
    for (int j = 0; j < K; ++j) {
      for (std::int64_t c = 0; c < p.counts.y[j]; ++c) pool.add(sampler.draw(j, Regime::Observational, rng));
      for (std::int64_t c = 0; c < p.counts.s[j]; ++c) pool.add(sampler.draw(j, Regime::ForceS, rng));
      for (std::int64_t c = 0; c < p.counts.sp[j]; ++c) pool.add(sampler.draw(j, Regime::ForceSprime, rng));
    }
    for (int k : p.remaining) {
      CHECK(outcome_normalizer(pool, k, div.m) / tau >= p.allocation.v_star - K / tau - 1e-12);
      CHECK(fairness_normalizer(pool, k, div.d_ssp, Direction::SSPrime) / tau >=
            p.allocation.v_star - K / tau - 1e-12);
      CHECK(fairness_normalizer(pool, k, div.d_sps, Direction::SPrimeS) / tau >=
            p.allocation.v_star - K / tau - 1e-12);
    }
  }
}

TEST_CASE("v* grows as the active set shrinks") {
  const Instance inst = chain({{0.5, 0.5}, {0.3, 0.7}, {0.6, 0.4}, {0.2, 0.2}}, 1.0);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const std::vector<int> all{0, 1, 2, 3}, three{0, 1, 2}, one{2};
  const double a = v_star(inst, div, 1.0, all, 10000);
  const double b = v_star(inst, div, 1.0, three, 10000);
  const double c = v_star(inst, div, 1.0, one, 10000);
  CHECK(a <= b + 1e-12);
  CHECK(b <= c + 1e-12);
  CHECK(a > 0.0);
}

TEST_CASE("well separated instance is solved at a large horizon") {
  // Arm 2 puts most mass on high f values and is fair for E = 1.
  const Instance inst = chain({{0.5, 0.5}, {0.2, 0.2}, {0.8, 0.8}}, 1.0);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const Sampler sampler(inst.model, inst.arms);
  const auto oracle = exact_oracles(inst.model, inst.arms);
  REQUIRE(oracle[2].mu > oracle[0].mu);
  REQUIRE(oracle[2].fair(1.0));
  for (Algorithm a : kAll) {
    int correct = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      if (run_algorithm(a, inst, sampler, div, 20000, 1.0, 1.0, rng).decision == 2) ++correct;
    }
    CHECK(correct >= 8);
  }
}

TEST_CASE("an instance without fair arms yields no decision") {
  const Instance unfair = chain({{0.2, 0.8}, {0.1, 0.9}, {0.9, 0.1}}, 0.05);
  const auto oracle = exact_oracles(unfair.model, unfair.arms);
  for (const auto& o : oracle) REQUIRE_FALSE(o.fair(0.05));
  const DivergenceSet div = compute_divergences(unfair.model, unfair.arms);
  const Sampler sampler(unfair.model, unfair.arms);
  for (Algorithm a : {Algorithm::CsrV2, Algorithm::TsV2}) {
    int none = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      if (!run_algorithm(a, unfair, sampler, div, 20000, 1.0, 0.05, rng).decision) ++none;
    }
    CHECK(none >= 8);
  }
}

TEST_CASE("bound report brackets and limits") {
  const Instance inst = chain({{0.5, 0.5}, {0.2, 0.2}, {0.8, 0.8}}, 1.0);
  const DivergenceSet div = compute_divergences(inst.model, inst.arms);
  const auto oracle = exact_oracles(inst.model, inst.arms);
  const BoundReport r = bound_report(inst, oracle, div, 1.0, 10000, 1.0);
  REQUIRE(r.best_fair_arm == 2);
  for (int k = 0; k < 3; ++k) {
    if (k == 2) continue;
    const ArmBound& a = r.arms[k];
    CHECK(a.delta == doctest::Approx(oracle[2].mu - oracle[k].mu));
    REQUIRE(std::isfinite(a.so));
    const int l = static_cast<int>(a.so);
    CHECK(10.0 / std::ldexp(1.0, l) < a.delta);
    CHECK(a.delta < 10.0 / std::ldexp(1.0, l - 1));
    CHECK(std::find(a.rstar.begin(), a.rstar.end(), 2) != a.rstar.end());
  }
  CHECK(r.error_bound >= 0.0);
  CHECK(r.error_bound <= 1.0);
  // The bound is nonincreasing in T once it drops below one.
  const BoundReport far = bound_report(inst, oracle, div, 1.0, 100000000, 1.0);
  CHECK(far.error_bound <= r.error_bound);

  const Instance unfair = chain({{0.2, 0.8}, {0.1, 0.9}, {0.9, 0.1}}, 0.05);
  const auto uo = exact_oracles(unfair.model, unfair.arms);
  const DivergenceSet ud = compute_divergences(unfair.model, unfair.arms);
  const BoundReport nr = bound_report(unfair, uo, ud, 1.0, 10000, 0.05);
  CHECK_FALSE(nr.best_fair_arm);
  double xi = 1e9;
  for (const auto& o : uo) xi = std::min({xi, std::abs(std::abs(o.zeta_ssp) - 0.05), std::abs(std::abs(o.zeta_sps) - 0.05)});
  CHECK(nr.xi_star == doctest::Approx(xi));
  CHECK(nr.no_fair_probability_lower >= 0.0);
  CHECK(nr.no_fair_probability_lower <= 1.0);
}
