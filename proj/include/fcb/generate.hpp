#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fcb/model.hpp"

namespace fcb {

struct Band {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// S -> V -> Y <- eps. V has m states, P_k(V | S = x) is Binomial(m-1, p_{k,x})
/// shifted to {1..m}, and Y = f(V) when eps = 1, 1 - f(V) otherwise.
struct BinomialChainParams {
  int m = 2;
  std::vector<double> f;          // f(v) for v = 1..m
  double epsilon_param = 0.99;    // P(eps = 1)
  double p_sensitive = 0.5;       // P(S = s)
  std::vector<std::pair<double, double>> arm_p;  // (p_{k,s}, p_{k,s'})
  bool cheap_arm_costs = true;    // arm 0 costs 0, the others 1
  bool cheap_arm_constraint = true;
  std::optional<double> fairness_E;
};

Instance build_binomial_chain(const BinomialChainParams& params);

/// Binomial(n, p) pmf over {0..n}.
std::vector<double> binomial_pmf(int n, double p);

struct SyntheticConfig {
  int K = 30;
  int m = 20;
  std::uint64_t seed = 1;
  double epsilon_param = 0.99;
  double fairness_E = 2.0;
  int n_unfair = 0;
  // Gap between the best and second-best fair arm.
  Band reward_gap{0.01, 1.0};
  // Every arm's | |zeta| - E | is at least lo, and the smallest is at most hi.
  Band fairness_gap{0.0, 4.0};
  // Bands on M_k0 and on both D_k0 for k >= 1; default upper edge 30 sqrt(K).
  std::optional<Band> m_band;
  std::optional<Band> d_band;
  bool cheap_arm_constraint = true;
  int max_attempts = 10000;
};

/// Draws a binomial-chain instance meeting the configured oracle facts. Throws
/// Error(GenerationFailed) after max_attempts candidate arms.
Instance generate_synthetic(const SyntheticConfig& config);

struct NetworkExperimentConfig {
  std::string intervention;
  std::string sensitive;
  std::string target;
  // Target state encoded as 1; all others 0. Defaults to the first state.
  std::optional<std::string> target_positive_state;
  int arm_count = 10;
  std::uint64_t seed = 1;
  double fairness_E = 0.2;
  bool cheap_arm_costs = true;
  bool cheap_arm_constraint = true;
};

/// Restricts the network to the ancestors of {S, V, Y}, draws arm tables
/// uniformly from the simplex row by row, and encodes Y as 0/1. Throws
/// Error(NodeNotFound), Error(SensitiveNotBinary), or Error(Validation) when
/// the sensitive node has parents.
Instance build_network_experiment(const CausalModel& network, const NetworkExperimentConfig& config);

}  // namespace fcb
