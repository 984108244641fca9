#include "fcb/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcb/error.hpp"
#include "fcb/inference.hpp"

namespace fcb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& terms) {
  double hi = kNegInf;
  for (double t : terms) hi = std::max(hi, t);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

// Probability of each row of V's CPT (parent assignment).
std::vector<double> parent_row_distribution(const CausalModel& model, const Arm& arm,
                                            std::int64_t cap) {
  const int V = model.intervention;
  std::vector<double> out(model.row_count(V), 0.0);
  const auto& ps = model.nodes[V].parents;
  if (ps.empty()) {
    out[0] = 1.0;
    return out;
  }
  const Factor f = marginal(model, arm, Regime::Observational, ps, cap);
  for_each_assignment(model, f, [&](double p, std::span<const int> full) {
    out[model.row_index(V, full)] += p;
  });
  return out;
}

// Nodes a fairness weight reads: pa(V), V, ch(S), pa(ch(S)).
std::vector<int> weight_scope(const CausalModel& model) {
  std::vector<int> scope = model.nodes[model.intervention].parents;
  scope.push_back(model.intervention);
  for (int c : model.sensitive_children()) {
    scope.push_back(c);
    for (int p : model.nodes[c].parents) scope.push_back(p);
  }
  std::sort(scope.begin(), scope.end());
  scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
  return scope;
}

struct Atom {
  double p;
  Sample sample;
};

// Distribution of the weight-relevant observation under (arm, regime).
std::vector<Atom> weight_atoms(const CausalModel& model, const Arm& arm, Regime regime,
                               std::int64_t cap) {
  std::vector<Atom> atoms;
  const Factor f = marginal(model, arm, regime, weight_scope(model), cap);
  for_each_assignment(model, f, [&](double p, std::span<const int> full) {
    atoms.push_back({p, make_sample(model, arm.index, regime, full)});
  });
  return atoms;
}

double fairness_weight_any_regime(const CausalModel& model, const Sample& s, const Arm& from,
                                  const Arm& to, Direction direction) {
  return importance_weight_outcome(model, s, from, to) *
         (sensitive_ratio(model, s, to, direction) - 1.0);
}

// ln(1 + D_f1(P_i || P_j)) = ln sum_r p_r sum_v P_i(v|r) e^{P_i/P_j - 1}.
double log1p_divergence(const CausalModel& model, const std::vector<double>& rows,
                        const Arm& arm_i, const Arm& arm_j) {
  const int card = model.cardinality(model.intervention);
  std::vector<double> terms;
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    if (rows[r] <= 0) continue;
    const auto pi = arm_i.row(r, card);
    const auto pj = arm_j.row(r, card);
    for (int v = 0; v < card; ++v) {
      if (pi[v] <= 0 || pj[v] <= 0) continue;
      terms.push_back(std::log(rows[r]) + std::log(pi[v]) + pi[v] / pj[v] - 1.0);
    }
  }
  return log_sum_exp(terms);
}

double direct_divergence(const CausalModel& model, const std::vector<double>& rows,
                         const Arm& arm_i, const Arm& arm_j) {
  const int card = model.cardinality(model.intervention);
  double total = 0.0;
  bool overflow = false;
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    if (rows[r] <= 0) continue;
    const auto pi = arm_i.row(r, card);
    const auto pj = arm_j.row(r, card);
    double inner = 0.0;
    for (int v = 0; v < card; ++v) {
      if (pj[v] <= 0) continue;
      const double x = pi[v] / pj[v];
      if (x > 700.0) overflow = true;
      inner += pj[v] * f1(x);
    }
    total += rows[r] * inner;
  }
  if (overflow) return std::expm1(log1p_divergence(model, rows, arm_i, arm_j));
  return std::max(total, 0.0);
}

void check_mc(const DivergenceOptions& options) {
  if (options.monte_carlo && options.draws <= 0)
    throw Error(ErrorKind::Validation, "Monte Carlo divergence mode needs a positive draw count");
}

double quantile_from_atoms(std::vector<std::pair<double, double>> atoms, double eps) {
  // atoms: (value, probability). Smallest candidate x in {0} U values with
  // tail(x) = P(value > x) <= eps / 2.
  const double limit = eps / 2.0 + 1e-12;
  std::sort(atoms.begin(), atoms.end());
  double tail = 0.0;
  for (const auto& a : atoms) tail += a.second;
  if (tail <= limit) return 0.0;
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double x = atoms[i].first;
    while (i < atoms.size() && atoms[i].first == x) tail -= atoms[i++].second;
    if (tail <= limit) return std::max(x, 0.0);
  }
  return atoms.empty() ? 0.0 : atoms.back().first;
}

}  // namespace

double f1(double x) { return x * std::exp(x - 1.0) - 1.0; }

double conditional_f_divergence(const CausalModel& model, const Arm& arm_i, const Arm& arm_j) {
  return conditional_f_divergence(model, arm_i, arm_j, enumeration_cap());
}

double conditional_f_divergence(const CausalModel& model, const Arm& arm_i, const Arm& arm_j,
                                std::int64_t cap) {
  return direct_divergence(model, parent_row_distribution(model, arm_j, cap), arm_i, arm_j);
}

McEstimate conditional_f_divergence_mc(const CausalModel& model, const Arm& arm_i,
                                       const Arm& arm_j, std::int64_t draws, Rng& rng) {
  if (draws <= 0) throw Error(ErrorKind::Validation, "draw count must be positive");
  const std::vector<Arm> arms{arm_j};
  Sampler sampler(model, arms);
  const int V = model.intervention;
  const int card = model.cardinality(V);
  std::vector<int> values;
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t d = 0; d < draws; ++d) {
    sampler.draw_values(0, Regime::Observational, rng, values);
    const int r = model.row_index(V, values);
    const auto pi = arm_i.row(r, card);
    const auto pj = arm_j.row(r, card);
    double inner = 0.0;
    for (int v = 0; v < card; ++v)
      if (pj[v] > 0) inner += pj[v] * f1(pi[v] / pj[v]);
    sum += inner;
    sum_sq += inner * inner;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double var = draws > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

Matrix outcome_matrix(const CausalModel& model, std::span<const Arm> arms,
                      const DivergenceOptions& options) {
  check_mc(options);
  const int K = static_cast<int>(arms.size());
  Matrix m(K, K, 1.0);
  if (K == 0) return m;
  std::vector<double> rows;
  if (options.monte_carlo) {
    // Empirical pa(V) row frequencies stand in for the exact marginal.
    rows.assign(model.row_count(model.intervention), 0.0);
    Rng rng(options.seed);
    const std::vector<Arm> first{arms[0]};
    Sampler sampler(model, first);
    std::vector<int> values;
    for (std::int64_t d = 0; d < options.draws; ++d) {
      sampler.draw_values(0, Regime::Observational, rng, values);
      rows[model.row_index(model.intervention, values)] += 1.0 / static_cast<double>(options.draws);
    }
  } else {
    rows = parent_row_distribution(model, arms[0], enumeration_cap());
  }
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < K; ++j)
      if (k != j) m(k, j) = 1.0 + std::max(0.0, log1p_divergence(model, rows, arms[k], arms[j]));
  return m;
}

Matrix fairness_matrix(const CausalModel& model, std::span<const Arm> arms, Direction direction,
                       const DivergenceOptions& options) {
  check_mc(options);
  const int K = static_cast<int>(arms.size());
  Matrix d(K, K, 0.0);
  const std::int64_t cap = enumeration_cap();
  Rng rng(options.seed);
  for (int k = 0; k < K; ++k) {
    // (probability, sample) pairs from both forced regimes under arm k.
    std::vector<Atom> atoms;
    for (Regime regime : {Regime::ForceS, Regime::ForceSprime}) {
      if (options.monte_carlo) {
        Sampler sampler(model, arms);
        const double p = 1.0 / static_cast<double>(options.draws);
        for (std::int64_t t = 0; t < options.draws; ++t)
          atoms.push_back({p, sampler.draw(k, regime, rng)});
      } else {
        auto part = weight_atoms(model, arms[k], regime, cap);
        atoms.insert(atoms.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
      }
    }
    std::vector<double> terms(atoms.size());
    for (int j = 0; j < K; ++j) {
      for (std::size_t a = 0; a < atoms.size(); ++a)
        terms[a] = std::log(atoms[a].p) +
                   std::abs(fairness_weight_any_regime(model, atoms[a].sample, arms[j], arms[k], direction));
      d(k, j) = log_sum_exp(terms);
    }
  }
  return d;
}

double fairness_divergence(const CausalModel& model, const Arm& arm_k, const Arm& arm_j,
                           Direction direction) {
  std::vector<double> terms;
  for (Regime regime : {Regime::ForceS, Regime::ForceSprime})
    for (const Atom& a : weight_atoms(model, arm_k, regime, enumeration_cap()))
      terms.push_back(std::log(a.p) +
                      std::abs(fairness_weight_any_regime(model, a.sample, arm_j, arm_k, direction)));
  return log_sum_exp(terms);
}

DivergenceSet compute_divergences(const CausalModel& model, std::span<const Arm> arms,
                                  const DivergenceOptions& options) {
  DivergenceSet set;
  set.m = outcome_matrix(model, arms, options);
  set.d_ssp = fairness_matrix(model, arms, Direction::SSPrime, options);
  set.d_sps = fairness_matrix(model, arms, Direction::SPrimeS, options);
  return set;
}

double quantile_eta(const CausalModel& model, const Arm& arm_i, const Arm& arm_j, double eps) {
  const auto rows = parent_row_distribution(model, arm_i, enumeration_cap());
  const int card = model.cardinality(model.intervention);
  std::vector<std::pair<double, double>> atoms;
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    if (rows[r] <= 0) continue;
    const auto pi = arm_i.row(r, card);
    const auto pj = arm_j.row(r, card);
    for (int v = 0; v < card; ++v)
      if (pi[v] > 0) atoms.emplace_back(pi[v] / pj[v], rows[r] * pi[v]);
  }
  return quantile_from_atoms(std::move(atoms), eps);
}

double quantile_gamma(const CausalModel& model, const Arm& arm_i, const Arm& arm_j, double eps,
                      Direction direction) {
  std::vector<std::pair<double, double>> atoms;
  for (Regime regime : {Regime::ForceS, Regime::ForceSprime})
    for (const Atom& a : weight_atoms(model, arm_i, regime, enumeration_cap()))
      atoms.emplace_back(std::abs(fairness_weight_any_regime(model, a.sample, arm_j, arm_i, direction)), a.p);
  return quantile_from_atoms(std::move(atoms), eps);
}

}  // namespace fcb
