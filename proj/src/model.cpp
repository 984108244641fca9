#include "fcb/model.hpp"

#include <algorithm>
#include <queue>

#include "fcb/error.hpp"

namespace fcb {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::WrongRegime: return "WrongRegime";
    case ErrorKind::NoSamples: return "NoSamples";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::GenerationFailed: return "GenerationFailed";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Normalization: return "NormalizationError";
    case ErrorKind::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorKind::NodeNotFound: return "NodeNotFound";
    case ErrorKind::SensitiveNotBinary: return "SensitiveNotBinary";
  }
  return "Unknown";
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Observational: return "observational";
    case Regime::ForceS: return "force_s";
    case Regime::ForceSprime: return "force_sprime";
  }
  return "?";
}

const char* to_string(Direction d) {
  return d == Direction::SSPrime ? "s,s'" : "s',s";
}

int CausalModel::find(std::string_view name) const {
  for (int i = 0; i < size(); ++i)
    if (nodes[i].name == name) return i;
  return -1;
}

int CausalModel::row_count(int node) const {
  int rows = 1;
  for (int p : nodes[node].parents) rows *= cardinality(p);
  return rows;
}

int CausalModel::row_index(int node, std::span<const int> full_values) const {
  int r = 0;
  for (int p : nodes[node].parents) r = r * cardinality(p) + full_values[p];
  return r;
}

int CausalModel::row_index_from_parents(int node, std::span<const int> parent_values) const {
  const auto& ps = nodes[node].parents;
  int r = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) r = r * cardinality(ps[i]) + parent_values[i];
  return r;
}

std::span<const double> CausalModel::row(int node, int r) const {
  const int card = cardinality(node);
  return {nodes[node].cpt.data() + static_cast<std::size_t>(r) * card,
          static_cast<std::size_t>(card)};
}

std::optional<std::vector<int>> CausalModel::topological_order() const {
  const int n = size();
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    for (int p : nodes[i].parents) {
      if (p < 0 || p >= n) return std::nullopt;
      out[p].push_back(i);
      ++indegree[i];
    }
  }
  // Min-heap keeps the order deterministic and close to id order.
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (int c : out[u])
      if (--indegree[c] == 0) ready.push(c);
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

std::vector<int> CausalModel::children(int node) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    const auto& ps = nodes[i].parents;
    if (std::find(ps.begin(), ps.end(), node) != ps.end()) out.push_back(i);
  }
  return out;
}

std::vector<int> CausalModel::ancestral_closure(std::span<const int> seeds) const {
  std::vector<char> mark(size(), 0);
  std::vector<int> stack(seeds.begin(), seeds.end());
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (mark[u]) continue;
    mark[u] = 1;
    for (int p : nodes[u].parents) stack.push_back(p);
  }
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (mark[i]) out.push_back(i);
  return out;
}

void CausalModel::finalize() {
  const int n = size();
  auto in_range = [n](int id) { return id >= 0 && id < n; };
  if (!in_range(sensitive) || !in_range(intervention) || !in_range(target))
    throw Error(ErrorKind::Validation, "sensitive/intervention/target id out of range");
  auto order = topological_order();
  if (!order) throw Error(ErrorKind::Validation, "parent relation has a cycle");
  topo_ = std::move(*order);

  s_children_ = children(sensitive);
  s_slot_.clear();
  for (int c : s_children_) {
    const auto& ps = nodes[c].parents;
    s_slot_.push_back(static_cast<int>(std::find(ps.begin(), ps.end(), sensitive) - ps.begin()));
  }

  std::vector<int> ex{sensitive, intervention, target};
  for (int p : nodes[intervention].parents) ex.push_back(p);
  for (int c : s_children_) {
    ex.push_back(c);
    for (int p : nodes[c].parents) ex.push_back(p);
  }
  std::sort(ex.begin(), ex.end());
  ex.erase(std::unique(ex.begin(), ex.end()), ex.end());
  exposed_ = std::move(ex);
}

Sample make_sample(const CausalModel& model, int arm, Regime regime,
                   std::span<const int> full_values) {
  Sample s;
  s.arm = arm;
  s.regime = regime;
  s.s_value = full_values[model.sensitive];
  const int v = model.intervention;
  for (int p : model.nodes[v].parents) s.v_parents.push_back(full_values[p]);
  s.v = full_values[v];
  const auto& kids = model.sensitive_children();
  s.schild.resize(kids.size());
  for (std::size_t i = 0; i < kids.size(); ++i) {
    ChildContext& ctx = s.schild[i];
    ctx.node = kids[i];
    for (int p : model.nodes[kids[i]].parents)
      if (p != model.sensitive) ctx.others.push_back(full_values[p]);
    ctx.x = full_values[kids[i]];
  }
  s.y_state = full_values[model.target];
  s.outcome = s.y_state >= 0 ? model.target_values[s.y_state] : 0.0;
  return s;
}

}  // namespace fcb
