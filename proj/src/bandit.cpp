#include "fcb/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "fcb/error.hpp"

namespace fcb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double margin(int l) { return 3.0 / std::ldexp(1.0, l); }

// Index of the largest present Y-hat among `arms`, lowest index on ties.
std::optional<int> best_outcome(const EstimateVector& est, std::span<const int> arms) {
  std::optional<int> best;
  for (int k : arms) {
    if (!est.y_hat[k]) continue;
    if (!best || *est.y_hat[k] > *est.y_hat[*best] ||
        (*est.y_hat[k] == *est.y_hat[*best] && k < *best))
      best = k;
  }
  return best;
}

int argmax_or_first(const EstimateVector& est, std::span<const int> arms) {
  const auto best = best_outcome(est, arms);
  return best ? *best : *std::min_element(arms.begin(), arms.end());
}

class Runner {
 public:
  Runner(const Instance& instance, const Sampler& sampler, const DivergenceSet& div,
         const RunConfig& config, Rng& rng)
      : inst_(instance),
        sampler_(sampler),
        div_(div),
        config_(config),
        rng_(rng),
        cumulative_(instance.arm_count(), instance.pool_forced_into_outcome),
        extra_(instance_constraints(instance, config.T)) {
    if (instance.arm_count() < 1) throw Error(ErrorKind::Validation, "instance has no arms");
    if (div.arm_count() != instance.arm_count())
      throw Error(ErrorKind::Validation, "divergence matrices do not match the arm count");
  }

  // Allocates over R, pulls tau samples and estimates every arm of R.
  PhaseRecord phase(int stage, int l, std::int64_t tau, const std::vector<int>& R, bool use_y,
                    bool use_forced) {
    PhaseRecord rec;
    rec.stage = stage;
    rec.l = l;
    rec.tau = tau;
    rec.epsilon = std::ldexp(1.0, -(l - 1));
    rec.remaining = R;
    rec.allocation = allocate(R, use_y, use_forced);
    rec.counts = tau > 0 ? round_counts(rec.allocation, tau) : zero_counts();

    SamplePool phase_pool(inst_.arm_count(), inst_.pool_forced_into_outcome);
    const bool v2 = config_.variant == Variant::V2;
    for (int j = 0; j < inst_.arm_count(); ++j) {
      pull(j, Regime::Observational, rec.counts.y[j], phase_pool, inst_.arms[j].cost_pull);
      pull(j, Regime::ForceS, rec.counts.s[j], phase_pool, inst_.arms[j].cost_force_s);
      pull(j, Regime::ForceSprime, rec.counts.sp[j], phase_pool, inst_.arms[j].cost_force_sprime);
    }
    const SamplePool& pool = v2 ? cumulative_ : phase_pool;
    rec.estimates = estimate_all(inst_.model, pool, inst_.arms, rec.epsilon, div_, R);
    return rec;
  }

  RunTrace trace;

 private:
  PullCounts zero_counts() const {
    PullCounts c;
    c.y.assign(inst_.arm_count(), 0);
    c.s = c.y;
    c.sp = c.y;
    return c;
  }

  Allocation allocate(const std::vector<int>& R, bool use_y, bool use_forced) {
    const auto key = std::make_tuple(R, use_y, use_forced);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    AllocationProblem p = build_problem(div_, inst_.arms, config_.budget, R, extra_);
    p.use_y = use_y;
    p.use_s = use_forced;
    p.use_sp = use_forced;
    Allocation a = solve_maxmin(p);
    cache_.emplace(key, a);
    return a;
  }

  void pull(int arm, Regime regime, std::int64_t count, SamplePool& phase_pool, double cost) {
    for (std::int64_t t = 0; t < count; ++t) {
      const Sample s = sampler_.draw(arm, regime, rng_);
      phase_pool.add(s);
      if (config_.variant == Variant::V2) cumulative_.add(s);
    }
    trace.samples_spent += count;
    trace.cost_spent += cost * static_cast<double>(count);
  }

  const Instance& inst_;
  const Sampler& sampler_;
  const DivergenceSet& div_;
  const RunConfig& config_;
  Rng& rng_;
  SamplePool cumulative_;
  std::vector<LinearConstraint> extra_;
  std::map<std::tuple<std::vector<int>, bool, bool>, Allocation> cache_;
};

std::vector<int> all_arms(int K) {
  std::vector<int> R(K);
  for (int k = 0; k < K; ++k) R[k] = k;
  return R;
}

}  // namespace

int phase_count(std::int64_t T) {
  if (T < 1) throw Error(ErrorKind::Validation, "T must be positive");
  const double x = std::log2(10.0 * std::sqrt(static_cast<double>(T)));
  return std::max(1, static_cast<int>(std::ceil(x - 1e-12)));
}

double logbar(int n) {
  double s = 0.0;
  for (int i = 1; i <= n; ++i) s += 1.0 / i;
  return s;
}

PhaseSchedule phase_schedule(std::int64_t T) {
  PhaseSchedule s;
  s.n = phase_count(T);
  s.logbar = logbar(s.n);
  std::int64_t used = 0;
  for (int l = 1; l <= s.n; ++l) {
    const auto t = static_cast<std::int64_t>(std::floor(static_cast<double>(T) / (l * s.logbar)));
    s.tau.push_back(t);
    used += t;
  }
  s.tau[0] += T - used;
  return s;
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::CsrV1: return "csr-v1";
    case Algorithm::CsrV2: return "csr-v2";
    case Algorithm::TsV1: return "ts-v1";
    case Algorithm::TsV2: return "ts-v2";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::CsrV1, Algorithm::CsrV2, Algorithm::TsV1, Algorithm::TsV2})
    if (name == to_string(a)) return a;
  return std::nullopt;
}

const char* to_string(EliminationReason r) {
  switch (r) {
    case EliminationReason::SubOptimal: return "SubOptimal";
    case EliminationReason::UnfairHigh: return "UnfairHigh";
    case EliminationReason::UnfairLow: return "UnfairLow";
  }
  return "?";
}

std::vector<int> fair_set(const EstimateVector& est, int l, double E, std::span<const int> R) {
  const double d = margin(l);
  std::vector<int> F;
  for (int k : R) {
    const auto& a = est.zeta_ssp_hat[k];
    const auto& b = est.zeta_sps_hat[k];
    if (!a || !b) continue;
    if (*a + d < E && *a - d > -E && *b + d < E && *b - d > -E) F.push_back(k);
  }
  return F;
}

std::vector<int> eliminate(const EstimateVector& est, std::span<const int> F, int l, double E,
                           std::span<const int> R, std::vector<Elimination>* log,
                           bool check_reward, bool check_fairness) {
  const double d = margin(l);
  const auto h = check_reward ? best_outcome(est, F) : std::nullopt;
  const double gap = 5.0 / std::ldexp(1.0, l);
  std::vector<int> out;
  for (int k : R) {
    std::vector<Elimination> why;
    if (h && est.y_hat[k] && *est.y_hat[*h] > *est.y_hat[k] + gap)
      why.push_back({k, EliminationReason::SubOptimal, std::nullopt});
    if (check_fairness) {
      for (Direction dir : {Direction::SSPrime, Direction::SPrimeS}) {
        const auto& z = est.zeta(dir)[k];
        if (!z) continue;
        if (*z - d > E) why.push_back({k, EliminationReason::UnfairHigh, dir});
        if (*z + d < -E) why.push_back({k, EliminationReason::UnfairLow, dir});
      }
    }
    if (why.empty()) {
      out.push_back(k);
    } else if (log) {
      log->insert(log->end(), why.begin(), why.end());
    }
  }
  return out;
}

std::vector<LinearConstraint> instance_constraints(const Instance& instance, std::int64_t T) {
  std::vector<LinearConstraint> extra;
  if (instance.cheap_arm_constraint && instance.arm_count() > 1)
    extra.push_back(cheap_arm_constraint(instance.arm_count(), T));
  return extra;
}

double v_star(const Instance& instance, const DivergenceSet& div, double budget,
              std::span<const int> R, std::int64_t T) {
  const auto p = build_problem(div, instance.arms, budget, R, instance_constraints(instance, T));
  return solve_maxmin(p).v_star;
}

RunTrace run_csr(const Instance& instance, const Sampler& sampler, const DivergenceSet& div,
                 const RunConfig& config, Rng& rng) {
  Runner run(instance, sampler, div, config, rng);
  const PhaseSchedule sched = phase_schedule(config.T);
  std::vector<int> R = all_arms(instance.arm_count());
  std::optional<std::size_t> last_fair;  // phase index with the last nonempty F

  for (int l = 1; l <= sched.n; ++l) {
    PhaseRecord rec = run.phase(1, l, sched.tau[l - 1], R, true, true);
    rec.fair = fair_set(rec.estimates, l, config.fairness_E, R);
    if (R.size() == 1) {
      run.trace.phases.push_back(std::move(rec));
      run.trace.decision = R[0];
      return std::move(run.trace);
    }
    if (!rec.fair.empty()) {
      R = eliminate(rec.estimates, rec.fair, l, config.fairness_E, R, &rec.eliminated);
      last_fair = run.trace.phases.size();
    }
    run.trace.phases.push_back(std::move(rec));
    if (R.size() == 1) {
      run.trace.decision = R[0];
      return std::move(run.trace);
    }
  }
  if (last_fair) {
    const PhaseRecord& rec = run.trace.phases[*last_fair];
    run.trace.decision = argmax_or_first(rec.estimates, rec.fair);
  }
  return std::move(run.trace);
}

RunTrace run_two_stage(const Instance& instance, const Sampler& sampler, const DivergenceSet& div,
                       const RunConfig& config, Rng& rng) {
  Runner run(instance, sampler, div, config, rng);
  const std::int64_t T1 = config.T / 2;
  const std::int64_t T2 = config.T - T1;
  std::vector<int> R = all_arms(instance.arm_count());

  // Stage one: fairness only.
  const PhaseSchedule s1 = phase_schedule(std::max<std::int64_t>(T1, 1));
  bool any_fair = false;
  bool stopped_early = false;
  for (int l = 1; l <= s1.n; ++l) {
    PhaseRecord rec = run.phase(1, l, T1 > 0 ? s1.tau[l - 1] : 0, R, false, true);
    rec.fair = fair_set(rec.estimates, l, config.fairness_E, R);
    any_fair = any_fair || !rec.fair.empty();
    if (R.size() == 1) {
      run.trace.phases.push_back(std::move(rec));
      stopped_early = true;
      break;
    }
    R = eliminate(rec.estimates, rec.fair, l, config.fairness_E, R, &rec.eliminated, false, true);
    run.trace.phases.push_back(std::move(rec));
    if (R.empty()) return std::move(run.trace);
  }
  if (!stopped_early && !any_fair) return std::move(run.trace);
  if (R.size() == 1) {
    run.trace.decision = R[0];
    return std::move(run.trace);
  }

  // Stage two: reward only, over the survivors.
  const PhaseSchedule s2 = phase_schedule(std::max<std::int64_t>(T2, 1));
  for (int l = 1; l <= s2.n; ++l) {
    PhaseRecord rec = run.phase(2, l, s2.tau[l - 1], R, true, false);
    rec.fair = R;
    const std::vector<int> before = R;
    R = eliminate(rec.estimates, before, l, config.fairness_E, before, &rec.eliminated, true, false);
    run.trace.phases.push_back(std::move(rec));
    if (R.size() == 1) {
      run.trace.decision = R[0];
      return std::move(run.trace);
    }
  }
  run.trace.decision = argmax_or_first(run.trace.phases.back().estimates, R);
  return std::move(run.trace);
}

RunTrace run_algorithm(Algorithm algo, const Instance& instance, const Sampler& sampler,
                       const DivergenceSet& div, std::int64_t T, double budget, double E, Rng& rng) {
  RunConfig config;
  config.T = T;
  config.budget = budget;
  config.fairness_E = E;
  config.variant = (algo == Algorithm::CsrV1 || algo == Algorithm::TsV1) ? Variant::V1 : Variant::V2;
  if (algo == Algorithm::CsrV1 || algo == Algorithm::CsrV2)
    return run_csr(instance, sampler, div, config, rng);
  return run_two_stage(instance, sampler, div, config, rng);
}

// ---------------------------------------------------------------------------

namespace {

// l with hi / 2^l < x < hi / 2^{l-1}, searched over l >= 1; infinity otherwise.
double bracket_phase(double x, double hi) {
  if (!(x > 0.0)) return kInf;
  for (int l = 1; l < 1100; ++l) {
    const double lo_edge = hi / std::ldexp(1.0, l);
    const double hi_edge = hi / std::ldexp(1.0, l - 1);
    if (lo_edge < x && x < hi_edge) return l;
    if (x >= hi_edge) return kInf;
  }
  return kInf;
}

double fairness_phase(double zeta, double E) {
  return std::min(bracket_phase(zeta - E, 6.0), bracket_phase(-E - zeta, 6.0));
}

}  // namespace

BoundReport bound_report(const Instance& instance, std::span<const ArmOracle> oracle,
                         const DivergenceSet& div, double budget, std::int64_t T, double E) {
  const int K = instance.arm_count();
  if (static_cast<int>(oracle.size()) != K)
    throw Error(ErrorKind::Validation, "oracle values do not match the arm count");
  BoundReport rep;
  const int n = phase_count(T);
  const double lb = logbar(n);

  for (int k = 0; k < K; ++k)
    if (oracle[k].fair(E) && (!rep.best_fair_arm || oracle[k].mu > oracle[*rep.best_fair_arm].mu))
      rep.best_fair_arm = k;

  if (!rep.best_fair_arm) {
    double xi = kInf;
    for (const auto& o : oracle)
      xi = std::min({xi, std::abs(std::abs(o.zeta_ssp) - E), std::abs(std::abs(o.zeta_sps) - E)});
    rep.xi_star = xi;
    rep.v_star_all = v_star(instance, div, budget, all_arms(K), T);
    const double expo = -(xi * xi) * static_cast<double>(T) * rep.v_star_all * rep.v_star_all /
                        (32.0 * n * n * n * lb);
    rep.no_fair_probability_lower = std::clamp(1.0 - 4.0 * K * n * std::exp(expo), 0.0, 1.0);
    rep.error_bound = 1.0;
    return rep;
  }

  const int ks = *rep.best_fair_arm;
  const ArmOracle& best = oracle[ks];
  double l0 = 0.0;
  for (double z : {best.zeta_ssp, best.zeta_sps})
    for (double g : {z + E, E - z}) l0 = std::max(l0, std::ceil(std::log2(5.0 / g)));
  rep.l0 = l0;

  double gap_so = kInf, gap_sp = kInf, gap_s = kInf;
  rep.arms.resize(K);
  for (int k = 0; k < K; ++k) {
    ArmBound& a = rep.arms[k];
    const ArmOracle& o = oracle[k];
    a.delta = best.mu - o.mu;
    if (k == ks) {
      a.so = a.f_ssp = a.f_sps = a.rho = kInf;
      continue;
    }
    a.so = bracket_phase(a.delta, 10.0);
    a.f_ssp = fairness_phase(o.zeta_ssp, E);
    a.f_sps = fairness_phase(o.zeta_sps, E);
    a.rho = std::min({std::max(a.so, l0), a.f_ssp, a.f_sps});
    if (o.fair(E)) gap_so = std::min(gap_so, a.delta);
    if (std::abs(o.zeta_ssp) >= E)
      gap_sp = std::min({gap_sp, std::abs(o.zeta_ssp - E), std::abs(o.zeta_ssp + E)});
    if (std::abs(o.zeta_sps) >= E)
      gap_s = std::min({gap_s, std::abs(o.zeta_sps - E), std::abs(o.zeta_sps + E)});
  }
  double rho_star = 0.0;
  if (gap_so < kInf) rho_star = std::max(rho_star, std::log2(20.0 / gap_so));
  if (gap_sp < kInf) rho_star = std::max(rho_star, std::log2(12.0 / gap_sp));
  if (gap_s < kInf) rho_star = std::max(rho_star, std::log2(12.0 / gap_s));
  rep.rho_star = rho_star;

  double h_bar = 0.0;
  for (int k = 0; k < K; ++k) {
    if (k == ks) continue;
    ArmBound& a = rep.arms[k];
    for (int b = 0; b < K; ++b)
      if (b == ks || rep.arms[b].rho >= a.rho) a.rstar.push_back(b);
    a.v_star_rstar = v_star(instance, div, budget, a.rstar, T);
    const double h = std::isinf(a.rho)
                         ? kInf
                         : std::pow(a.rho, 3) / (std::exp2(-2.0 * a.rho) *
                                                 a.v_star_rstar * a.v_star_rstar);
    h_bar = std::max(h_bar, h);
  }
  rep.h_bar = h_bar;
  const double raw = 8.0 * K * K * rho_star * std::exp(-static_cast<double>(T) / (8.0 * h_bar * lb));
  rep.error_bound = std::clamp(std::isnan(raw) ? 1.0 : raw, 0.0, 1.0);
  return rep;
}

}  // namespace fcb
