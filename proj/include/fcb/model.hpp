#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fcb {

// The sensitive attribute is binary; state 0 is s and state 1 is s'.
inline constexpr int kStateS = 0;
inline constexpr int kStateSPrime = 1;

enum class Regime { Observational, ForceS, ForceSprime };

// SSPrime is zeta^{s,s'}: evidence generated with S = s', children of S
// reweighted as if S = s. SPrimeS swaps the roles.
enum class Direction { SSPrime, SPrimeS };

inline Regime conditioning_regime(Direction d) {
  return d == Direction::SSPrime ? Regime::ForceSprime : Regime::ForceS;
}

const char* to_string(Regime r);
const char* to_string(Direction d);

struct Node {
  std::string name;
  std::vector<std::string> states;
  std::vector<int> parents;
  // One row per parent assignment (first parent most significant), each row a
  // distribution over this node's states.
  std::vector<double> cpt;

  int cardinality() const { return static_cast<int>(states.size()); }
};

/// Finite discrete causal DAG with designated sensitive, intervention and
/// target nodes. Call finalize() after construction; it computes the derived
/// structure used by sampling and the weight functions.
class CausalModel {
 public:
  std::vector<Node> nodes;
  int sensitive = -1;
  int intervention = -1;
  int target = -1;
  // Numeric value in [0,1] of every target state.
  std::vector<double> target_values;

  int size() const { return static_cast<int>(nodes.size()); }
  int cardinality(int node) const { return nodes[node].cardinality(); }
  int find(std::string_view name) const;

  int row_count(int node) const;
  /// Row index of `node`'s CPT for the parent values taken from a full
  /// assignment indexed by node id.
  int row_index(int node, std::span<const int> full_values) const;
  /// Row index from parent values listed in parent order.
  int row_index_from_parents(int node, std::span<const int> parent_values) const;
  std::span<const double> row(int node, int r) const;

  std::optional<std::vector<int>> topological_order() const;
  std::vector<int> children(int node) const;
  /// Seeds plus all their ancestors, ascending.
  std::vector<int> ancestral_closure(std::span<const int> seeds) const;

  /// Computes the derived structure; throws Error(Validation) on a cycle or
  /// out-of-range role ids.
  void finalize();

  // Derived structure, valid after finalize().
  const std::vector<int>& topo() const { return topo_; }
  /// Children of S, ascending.
  const std::vector<int>& sensitive_children() const { return s_children_; }
  /// Position of S inside each sensitive child's parent list.
  const std::vector<int>& sensitive_slot() const { return s_slot_; }
  /// Nodes whose values a pull reveals: S, V, pa(V), ch(S), pa(ch(S)), Y.
  const std::vector<int>& exposed() const { return exposed_; }

 private:
  std::vector<int> topo_;
  std::vector<int> s_children_;
  std::vector<int> s_slot_;
  std::vector<int> exposed_;
};

/// One soft intervention on the intervention node V.
struct Arm {
  int index = 0;
  // Same layout as V's CPT.
  std::vector<double> table;
  double cost_pull = 0.0;
  double cost_force_s = 0.0;
  double cost_force_sprime = 0.0;

  std::span<const double> row(int r, int card) const {
    return {table.data() + static_cast<std::size_t>(r) * card,
            static_cast<std::size_t>(card)};
  }
};

struct ChildContext {
  int node = -1;
  // Values of pa(X) \ S in parent order.
  std::vector<int> others;
  int x = 0;
};

/// One pull's observation. Hidden nodes never appear here.
struct Sample {
  int arm = -1;
  Regime regime = Regime::Observational;
  int s_value = 0;
  // Values of pa(V) in parent order, and the realized V.
  std::vector<int> v_parents;
  int v = 0;
  std::vector<ChildContext> schild;
  int y_state = 0;
  double outcome = 0.0;
};

/// Builds the observation tuple of a pull from a full joint assignment. A
/// negative target entry leaves y_state at -1 and outcome at 0.
Sample make_sample(const CausalModel& model, int arm, Regime regime,
                   std::span<const int> full_values);

/// A model together with its arms and experiment flags: what instance files
/// hold.
struct Instance {
  CausalModel model;
  std::vector<Arm> arms;
  // Adds sum_{k != 0} (nu_Y + nu_s + nu_s')_k <= (1 - 1e-12) / sqrt(T).
  bool cheap_arm_constraint = false;
  bool pool_forced_into_outcome = false;
  std::optional<double> fairness_E;

  int arm_count() const { return static_cast<int>(arms.size()); }
};

}  // namespace fcb
