#include "fcb/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcb/causal.hpp"
#include "fcb/divergence.hpp"
#include "fcb/error.hpp"

namespace fcb {

namespace {

std::vector<std::string> numbered_states(int n, int first = 0) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::to_string(first + i));
  return out;
}

std::vector<double> binomial_arm_table(int m, double p_s, double p_sprime) {
  std::vector<double> table = binomial_pmf(m - 1, p_s);
  const auto second = binomial_pmf(m - 1, p_sprime);
  table.insert(table.end(), second.begin(), second.end());
  return table;
}

void set_costs(std::vector<Arm>& arms, bool cheap_arm_costs) {
  for (Arm& a : arms) {
    const double c = (cheap_arm_costs && a.index == 0) ? 0.0 : 1.0;
    a.cost_pull = a.cost_force_s = a.cost_force_sprime = c;
  }
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

double normal(Rng& rng) {
  // Box-Muller on the project's uniform draw keeps streams portable.
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

struct Candidate {
  Arm arm;
  ArmOracle oracle;
  double fairness_gap = 0.0;  // distance of max |zeta| from E
  bool fair = false;
};

enum class Fit { Below, Inside, Above };

// Classifies arm k's divergences from arm 0 against the bands.
Fit divergence_fit(const CausalModel& model, const Arm& arm, const Arm& base, const Band& m_band,
                   const Band& d_band) {
  const double m = 1.0 + std::log1p(conditional_f_divergence(model, arm, base));
  const double d1 = fairness_divergence(model, arm, base, Direction::SSPrime);
  const double d2 = fairness_divergence(model, arm, base, Direction::SPrimeS);
  if (m > m_band.hi || d1 > d_band.hi || d2 > d_band.hi) return Fit::Above;
  if (m < m_band.lo || d1 < d_band.lo || d2 < d_band.lo) return Fit::Below;
  return Fit::Inside;
}

std::optional<Candidate> classify(const CausalModel& model, Arm arm, double E, const Band& gap) {
  Candidate c;
  const std::vector<Arm> one{arm};
  c.oracle = exact_oracles(model, one).front();
  const double worst = std::max(std::abs(c.oracle.zeta_ssp), std::abs(c.oracle.zeta_sps));
  c.fair = worst < E;
  c.fairness_gap = std::abs(worst - E);
  if (c.fairness_gap < gap.lo || c.fairness_gap == 0.0) return std::nullopt;
  c.arm = std::move(arm);
  return c;
}

struct Selection {
  std::vector<int> fair;    // candidate positions, best first
  std::vector<int> unfair;
};

// Picks a fair subset whose best arm leads the runner-up by a gap inside the
// band. Position 0 is the base arm and must be kept.
std::optional<Selection> select(const std::vector<Candidate>& pool, int n_fair, int n_unfair,
                                const Band& reward_gap, const Band& fairness_gap) {
  std::vector<int> fair, unfair;
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) (pool[i].fair ? fair : unfair).push_back(i);
  const bool base_fair = pool[0].fair;
  if (static_cast<int>(fair.size()) < n_fair || static_cast<int>(unfair.size()) < n_unfair) return std::nullopt;
  if (base_fair ? n_fair == 0 : n_unfair == 0) return std::nullopt;

  Selection sel;
  // Ascending positions, so an unfair base arm is always kept.
  sel.unfair.assign(unfair.begin(), unfair.begin() + n_unfair);

  if (n_fair > 0) {
    std::sort(fair.begin(), fair.end(), [&](int a, int b) { return pool[a].oracle.mu > pool[b].oracle.mu; });
    bool found = false;
    for (int best : fair) {
      const double mu_b = pool[best].oracle.mu;
      std::vector<int> others;
      for (int i : fair)
        if (i != best && pool[i].oracle.mu <= mu_b - reward_gap.lo) others.push_back(i);
      if (base_fair && best != 0 && std::find(others.begin(), others.end(), 0) == others.end()) continue;
      if (static_cast<int>(others.size()) < n_fair - 1) continue;
      others.resize(n_fair - 1);
      if (base_fair && best != 0 && std::find(others.begin(), others.end(), 0) == others.end())
        others.back() = 0;
      if (!others.empty()) {
        double second = -1e300;
        for (int i : others) second = std::max(second, pool[i].oracle.mu);
        if (mu_b - second > reward_gap.hi) continue;
      }
      sel.fair.push_back(best);
      sel.fair.insert(sel.fair.end(), others.begin(), others.end());
      found = true;
      break;
    }
    if (!found) return std::nullopt;
  }

  double smallest = 1e300;
  for (int i : sel.fair) smallest = std::min(smallest, pool[i].fairness_gap);
  for (int i : sel.unfair) smallest = std::min(smallest, pool[i].fairness_gap);
  if (smallest > fairness_gap.hi) return std::nullopt;
  return sel;
}

void check_band(const Band& b, const char* name) {
  if (!(b.lo <= b.hi)) throw Error(ErrorKind::Validation, std::string(name) + " band has lo > hi");
}

}  // namespace

std::vector<double> binomial_pmf(int n, double p) {
  std::vector<double> out(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double lp = (k > 0 ? k * std::log(p) : 0.0) + (n - k > 0 ? (n - k) * std::log1p(-p) : 0.0);
    out[k] = std::exp(log_choose + lp);
  }
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& x : out) x /= sum;
  return out;
}

Instance build_binomial_chain(const BinomialChainParams& params) {
  const int m = params.m;
  if (m < 2) throw Error(ErrorKind::Validation, "V needs at least 2 states");
  if (static_cast<int>(params.f.size()) != m) throw Error(ErrorKind::Validation, "f needs one value per state of V");
  if (params.arm_p.empty()) throw Error(ErrorKind::Validation, "at least one arm is required");

  Instance inst;
  CausalModel& model = inst.model;
  model.nodes.resize(4);
  model.nodes[0] = {"S", {"s", "s'"}, {}, {params.p_sensitive, 1.0 - params.p_sensitive}};
  model.nodes[1] = {"V", numbered_states(m, 1), {0}, {}};
  model.nodes[2] = {"eps", {"0", "1"}, {}, {1.0 - params.epsilon_param, params.epsilon_param}};
  Node y{"Y", {}, {1, 2}, {}};
  for (int v = 0; v < m; ++v) y.states.push_back("f" + std::to_string(v + 1));
  for (int v = 0; v < m; ++v) y.states.push_back("1-f" + std::to_string(v + 1));
  // Row (v, eps): eps = 1 selects f(v), eps = 0 selects 1 - f(v).
  y.cpt.assign(static_cast<std::size_t>(2 * m) * 2 * m, 0.0);
  for (int v = 0; v < m; ++v) {
    y.cpt[static_cast<std::size_t>(v * 2 + 0) * 2 * m + m + v] = 1.0;
    y.cpt[static_cast<std::size_t>(v * 2 + 1) * 2 * m + v] = 1.0;
  }
  model.nodes[3] = std::move(y);
  model.sensitive = 0;
  model.intervention = 1;
  model.target = 3;
  for (double fv : params.f) model.target_values.push_back(fv);
  for (double fv : params.f) model.target_values.push_back(1.0 - fv);

  for (std::size_t k = 0; k < params.arm_p.size(); ++k) {
    Arm a;
    a.index = static_cast<int>(k);
    a.table = binomial_arm_table(m, params.arm_p[k].first, params.arm_p[k].second);
    inst.arms.push_back(std::move(a));
  }
  set_costs(inst.arms, params.cheap_arm_costs);
  model.nodes[1].cpt = inst.arms[0].table;
  inst.cheap_arm_constraint = params.cheap_arm_constraint;
  inst.fairness_E = params.fairness_E;

  require_valid(model, inst.arms);
  model.finalize();
  return inst;
}

Instance generate_synthetic(const SyntheticConfig& config) {
  if (config.K < 2) throw Error(ErrorKind::Validation, "K must be at least 2");
  if (config.m < 2) throw Error(ErrorKind::Validation, "m must be at least 2");
  if (config.n_unfair < 0 || config.n_unfair > config.K)
    throw Error(ErrorKind::Validation, "n_unfair must lie in [0, K]");
  const double limit = 30.0 * std::sqrt(static_cast<double>(config.K));
  const Band m_band = config.m_band.value_or(Band{1.0, limit});
  const Band d_band = config.d_band.value_or(Band{0.0, limit});
  check_band(config.reward_gap, "reward gap");
  check_band(config.fairness_gap, "fairness gap");
  check_band(m_band, "M");
  check_band(d_band, "D");

  Rng rng(config.seed);
  const int n_fair = config.K - config.n_unfair;
  int attempts = 0;

  while (attempts < config.max_attempts) {
    BinomialChainParams params;
    params.m = config.m;
    params.epsilon_param = config.epsilon_param;
    params.cheap_arm_constraint = config.cheap_arm_constraint;
    params.fairness_E = config.fairness_E;
    params.f.resize(config.m);
    for (double& x : params.f) x = uniform01(rng);
    std::sort(params.f.begin(), params.f.end());
    params.p_sensitive = uniform(rng, 0.4, 0.6);
    params.arm_p = {{uniform(rng, 0.3, 0.7), uniform(rng, 0.3, 0.7)}};
    const Instance base = build_binomial_chain(params);
    const CausalModel& model = base.model;
    ++attempts;

    std::vector<Candidate> pool;
    if (auto c = classify(model, base.arms[0], config.fairness_E, config.fairness_gap)) {
      pool.push_back(std::move(*c));
    } else {
      continue;
    }

    double spread = 0.5;
    const int budget_here = std::max(200, config.max_attempts / 10);
    for (int tries = 0; tries < budget_here && attempts < config.max_attempts; ++tries) {
      ++attempts;
      const auto [ps, psp] = params.arm_p[0];
      const double qs = logistic(logit(ps) + spread * normal(rng));
      const double qsp = logistic(logit(psp) + spread * normal(rng));
      Arm arm;
      arm.table = binomial_arm_table(config.m, qs, qsp);
      const Fit fit = divergence_fit(model, arm, base.arms[0], m_band, d_band);
      if (fit == Fit::Above) {
        spread = std::max(spread * 0.9, 1e-4);
        continue;
      }
      if (fit == Fit::Below) {
        spread = std::min(spread * 1.1, 20.0);
        continue;
      }
      if (auto c = classify(model, std::move(arm), config.fairness_E, config.fairness_gap))
        pool.push_back(std::move(*c));
      else
        continue;

      const auto sel = select(pool, n_fair, config.n_unfair, config.reward_gap, config.fairness_gap);
      if (!sel) continue;

      // Base arm first, then the rest in draw order.
      std::vector<int> chosen(sel->fair);
      chosen.insert(chosen.end(), sel->unfair.begin(), sel->unfair.end());
      std::sort(chosen.begin(), chosen.end());
      Instance inst = base;
      inst.arms.clear();
      for (int i : chosen) {
        Arm a = pool[i].arm;
        a.index = static_cast<int>(inst.arms.size());
        inst.arms.push_back(std::move(a));
      }
      set_costs(inst.arms, true);
      require_valid(inst.model, inst.arms);
      return inst;
    }
  }
  throw Error(ErrorKind::GenerationFailed,
              "no instance met the requested bands after " + std::to_string(config.max_attempts) + " attempts");
}

Instance build_network_experiment(const CausalModel& network, const NetworkExperimentConfig& config) {
  const auto lookup = [&](const std::string& name) {
    const int id = network.find(name);
    if (id < 0) throw Error(ErrorKind::NodeNotFound, "no node named \"" + name + "\"");
    return id;
  };
  const int S = lookup(config.sensitive);
  const int V = lookup(config.intervention);
  const int Y = lookup(config.target);
  if (network.cardinality(S) != 2)
    throw Error(ErrorKind::SensitiveNotBinary,
                config.sensitive + " has " + std::to_string(network.cardinality(S)) + " states");
  if (!network.nodes[S].parents.empty())
    throw Error(ErrorKind::Validation, config.sensitive + " has parents in the source network");
  if (config.arm_count < 1) throw Error(ErrorKind::Validation, "arm count must be positive");

  int positive = 0;
  if (config.target_positive_state) {
    const auto& states = network.nodes[Y].states;
    const auto it = std::find(states.begin(), states.end(), *config.target_positive_state);
    if (it == states.end())
      throw Error(ErrorKind::NodeNotFound, config.target + " has no state \"" + *config.target_positive_state + "\"");
    positive = static_cast<int>(it - states.begin());
  }

  // Nodes outside the ancestors of {S, V, Y} sum out of every quantity used.
  const std::vector<int> seeds{S, V, Y};
  const std::vector<int> keep = network.ancestral_closure(seeds);
  std::vector<int> remap(network.size(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) remap[keep[i]] = static_cast<int>(i);

  Instance inst;
  CausalModel& model = inst.model;
  for (int old : keep) {
    Node n = network.nodes[old];
    for (int& p : n.parents) p = remap[p];
    model.nodes.push_back(std::move(n));
  }
  model.sensitive = remap[S];
  model.intervention = remap[V];
  model.target = remap[Y];
  model.target_values.assign(model.cardinality(model.target), 0.0);
  model.target_values[positive] = 1.0;

  Rng rng(config.seed);
  const int card = model.cardinality(model.intervention);
  const int rows = model.row_count(model.intervention);
  for (int k = 0; k < config.arm_count; ++k) {
    Arm a;
    a.index = k;
    a.table.resize(static_cast<std::size_t>(rows) * card);
    for (int r = 0; r < rows; ++r) {
      // Normalized unit exponentials are uniform on the simplex.
      double sum = 0.0;
      for (int v = 0; v < card; ++v) {
        double u = uniform01(rng);
        while (u <= 0.0) u = uniform01(rng);
        const double e = -std::log(u);
        a.table[static_cast<std::size_t>(r) * card + v] = e;
        sum += e;
      }
      for (int v = 0; v < card; ++v) a.table[static_cast<std::size_t>(r) * card + v] /= sum;
    }
    inst.arms.push_back(std::move(a));
  }
  set_costs(inst.arms, config.cheap_arm_costs);
  inst.cheap_arm_constraint = config.cheap_arm_constraint;
  inst.fairness_E = config.fairness_E;

  require_valid(model, inst.arms);
  model.finalize();
  return inst;
}

}  // namespace fcb
