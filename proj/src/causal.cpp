#include "fcb/causal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fcb/error.hpp"
#include "fcb/inference.hpp"

namespace fcb {

namespace {

constexpr double kRowTolerance = 1e-9;

std::string row_label(const CausalModel& model, int node, int r) {
  return model.nodes[node].name + " row " + std::to_string(r);
}

}  // namespace

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::BadReference: return "BadReference";
    case ViolationKind::Cycle: return "Cycle";
    case ViolationKind::NegativeEntry: return "NegativeEntry";
    case ViolationKind::UnnormalizedRow: return "UnnormalizedRow";
    case ViolationKind::SensitiveHasParents: return "SensitiveHasParents";
    case ViolationKind::SensitiveNotBinary: return "SensitiveNotBinary";
    case ViolationKind::SupportMismatch: return "SupportMismatch";
    case ViolationKind::BadTargetEncoding: return "BadTargetEncoding";
    case ViolationKind::ArmShape: return "ArmShape";
    case ViolationKind::ArmUnnormalizedRow: return "ArmUnnormalizedRow";
    case ViolationKind::ArmZeroPattern: return "ArmZeroPattern";
    case ViolationKind::NegativeCost: return "NegativeCost";
  }
  return "?";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& v : violations) os << to_string(v.kind) << ": " << v.message << "\n";
  return os.str();
}

ValidationReport validate_model(const CausalModel& model, std::span<const Arm> arms) {
  ValidationReport report;
  auto add = [&report](ViolationKind k, std::string msg) {
    report.violations.push_back({k, std::move(msg)});
  };
  const int n = model.size();
  auto in_range = [n](int id) { return id >= 0 && id < n; };

  bool refs_ok = in_range(model.sensitive) && in_range(model.intervention) && in_range(model.target);
  if (!refs_ok) add(ViolationKind::BadReference, "sensitive/intervention/target id out of range");
  for (int i = 0; i < n; ++i) {
    if (model.nodes[i].cardinality() < 1) {
      add(ViolationKind::BadReference, model.nodes[i].name + " has an empty support");
      refs_ok = false;
    }
    for (int p : model.nodes[i].parents) {
      if (!in_range(p) || p == i) {
        add(ViolationKind::BadReference, model.nodes[i].name + " has an invalid parent id");
        refs_ok = false;
      }
    }
  }
  if (!refs_ok) return report;

  if (!model.topological_order()) add(ViolationKind::Cycle, "parent relation is not acyclic");

  for (int i = 0; i < n; ++i) {
    const int card = model.cardinality(i);
    const int rows = model.row_count(i);
    if (static_cast<long long>(model.nodes[i].cpt.size()) != static_cast<long long>(rows) * card) {
      add(ViolationKind::BadReference, model.nodes[i].name + " CPT has the wrong size");
      continue;
    }
    for (int r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (double p : model.row(i, r)) {
        if (p < 0.0 || !std::isfinite(p))
          add(ViolationKind::NegativeEntry, row_label(model, i, r) + " has a negative entry");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowTolerance) {
        std::ostringstream os;
        os << row_label(model, i, r) << " sums to " << sum;
        add(ViolationKind::UnnormalizedRow, os.str());
      }
    }
  }

  const int S = model.sensitive;
  if (!model.nodes[S].parents.empty())
    add(ViolationKind::SensitiveHasParents, model.nodes[S].name + " has parents");
  if (model.cardinality(S) != 2)
    add(ViolationKind::SensitiveNotBinary, model.nodes[S].name + " is not binary");

  const int Y = model.target;
  if (static_cast<int>(model.target_values.size()) != model.cardinality(Y)) {
    add(ViolationKind::BadTargetEncoding, "target encoding size does not match its support");
  } else {
    for (double y : model.target_values)
      if (!(y >= 0.0 && y <= 1.0))
        add(ViolationKind::BadTargetEncoding, "target encoding outside [0,1]");
  }

  // Arm tables.
  const int V = model.intervention;
  const int vcard = model.cardinality(V);
  const int vrows = model.row_count(V);
  bool arms_ok = true;
  for (const Arm& a : arms) {
    const std::string label = "arm " + std::to_string(a.index);
    if (static_cast<long long>(a.table.size()) != static_cast<long long>(vrows) * vcard) {
      add(ViolationKind::ArmShape, label + " table has the wrong size");
      arms_ok = false;
      continue;
    }
    for (int r = 0; r < vrows; ++r) {
      double sum = 0.0;
      for (double p : a.row(r, vcard)) {
        if (p < 0.0 || !std::isfinite(p))
          add(ViolationKind::ArmUnnormalizedRow, label + " row " + std::to_string(r) + " has a negative entry");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowTolerance)
        add(ViolationKind::ArmUnnormalizedRow, label + " row " + std::to_string(r) + " does not sum to 1");
    }
    if (a.cost_pull < 0 || a.cost_force_s < 0 || a.cost_force_sprime < 0)
      add(ViolationKind::NegativeCost, label + " has a negative cost");
  }
  if (arms_ok && arms.size() > 1) {
    for (std::size_t k = 1; k < arms.size(); ++k)
      for (std::size_t i = 0; i < arms[0].table.size(); ++i)
        if ((arms[0].table[i] > 0) != (arms[k].table[i] > 0)) {
          add(ViolationKind::ArmZeroPattern, "arm " + std::to_string(arms[k].index) +
                                                 " differs from arm " + std::to_string(arms[0].index) +
                                                 " in its zero pattern");
          break;
        }
  }

  // Children of S must have the same support under s and s'.
  if (model.cardinality(S) == 2) {
    for (int c : model.children(S)) {
      const auto& ps = model.nodes[c].parents;
      const int card = model.cardinality(c);
      const std::size_t slot = std::find(ps.begin(), ps.end(), S) - ps.begin();
      std::vector<int> pv(ps.size(), 0);
      const int rows = model.row_count(c);
      auto check_table = [&](auto&& row_of, const std::string& label) {
        for (int r = 0; r < rows; ++r) {
          // Decode r into parent values (first parent most significant).
          int rem = r;
          for (std::size_t k = ps.size(); k-- > 0;) {
            pv[k] = rem % model.cardinality(ps[k]);
            rem /= model.cardinality(ps[k]);
          }
          if (pv[slot] != kStateS) continue;
          pv[slot] = kStateSPrime;
          const int r2 = model.row_index_from_parents(c, pv);
          auto a = row_of(r);
          auto b = row_of(r2);
          for (int x = 0; x < card; ++x)
            if ((a[x] > 0) != (b[x] > 0)) {
              add(ViolationKind::SupportMismatch,
                  label + " state " + std::to_string(x) + " has different support under s and s'");
              return;
            }
        }
      };
      if (c == V) {
        if (!arms_ok) continue;
        for (const Arm& a : arms)
          check_table([&](int r) { return a.row(r, card); },
                      model.nodes[c].name + " (arm " + std::to_string(a.index) + ")");
      } else if (static_cast<long long>(model.nodes[c].cpt.size()) ==
                 static_cast<long long>(rows) * card) {
        check_table([&](int r) { return model.row(c, r); }, model.nodes[c].name);
      }
    }
  }
  return report;
}

void require_valid(const CausalModel& model, std::span<const Arm> arms) {
  const auto report = validate_model(model, arms);
  if (!report.ok()) throw Error(ErrorKind::Validation, report.summary());
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> cumulative_rows(std::span<const double> table, int card) {
  std::vector<double> out(table.begin(), table.end());
  const std::size_t rows = card ? table.size() / card : 0;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data() + r * card;
    int last = -1;
    double acc = 0.0;
    for (int x = 0; x < card; ++x) {
      if (row[x] > 0) last = x;
      acc += row[x];
      row[x] = acc;
    }
    for (int x = std::max(last, 0); x < card; ++x) row[x] = 1.0;
  }
  return out;
}

}  // namespace

Sampler::Sampler(const CausalModel& model, std::span<const Arm> arms) : model_(&model) {
  for (const Node& n : model.nodes) node_cdf_.push_back(cumulative_rows(n.cpt, n.cardinality()));
  const int vcard = model.cardinality(model.intervention);
  for (const Arm& a : arms) arm_cdf_.push_back(cumulative_rows(a.table, vcard));
}

int Sampler::pick(std::span<const double> cumulative, Rng& rng) const {
  const double u = uniform01(rng);
  const int n = static_cast<int>(cumulative.size());
  for (int x = 0; x < n - 1; ++x)
    if (u < cumulative[x]) return x;
  return n - 1;
}

void Sampler::draw_values(int arm, Regime regime, Rng& rng, std::vector<int>& values) const {
  const CausalModel& m = *model_;
  values.assign(m.size(), 0);
  for (int node : m.topo()) {
    if (node == m.sensitive && regime != Regime::Observational) {
      values[node] = regime == Regime::ForceS ? kStateS : kStateSPrime;
      continue;
    }
    const int card = m.cardinality(node);
    const int r = m.row_index(node, values);
    const auto& cdf = node == m.intervention ? arm_cdf_[arm] : node_cdf_[node];
    values[node] = pick({cdf.data() + static_cast<std::size_t>(r) * card, static_cast<std::size_t>(card)}, rng);
  }
}

Sample Sampler::draw(int arm, Regime regime, Rng& rng) const {
  std::vector<int> values;
  draw_values(arm, regime, rng, values);
  return make_sample(*model_, arm, regime, values);
}

// ---------------------------------------------------------------------------

double importance_weight_outcome(const CausalModel& model, const Sample& sample,
                                 const Arm& from, const Arm& to) {
  const int card = model.cardinality(model.intervention);
  const int r = model.row_index_from_parents(model.intervention, sample.v_parents);
  const double den = from.row(r, card)[sample.v];
  if (den <= 0.0) throw Error(ErrorKind::ZeroDenominator, "sampling arm gives the observed V zero probability");
  return to.row(r, card)[sample.v] / den;
}

double sensitive_ratio(const CausalModel& model, const Sample& sample, const Arm& to,
                       Direction direction) {
  const int num_state = direction == Direction::SSPrime ? kStateS : kStateSPrime;
  const int den_state = direction == Direction::SSPrime ? kStateSPrime : kStateS;
  const auto& slots = model.sensitive_slot();
  double ratio = 1.0;
  std::vector<int> pv;
  for (std::size_t i = 0; i < sample.schild.size(); ++i) {
    const ChildContext& ctx = sample.schild[i];
    const int slot = slots[i];
    pv.assign(ctx.others.begin(), ctx.others.end());
    pv.insert(pv.begin() + slot, num_state);
    const int r_num = model.row_index_from_parents(ctx.node, pv);
    pv[slot] = den_state;
    const int r_den = model.row_index_from_parents(ctx.node, pv);
    const int card = model.cardinality(ctx.node);
    const bool is_v = ctx.node == model.intervention;
    const double num = is_v ? to.row(r_num, card)[ctx.x] : model.row(ctx.node, r_num)[ctx.x];
    const double den = is_v ? to.row(r_den, card)[ctx.x] : model.row(ctx.node, r_den)[ctx.x];
    if (den <= 0.0) throw Error(ErrorKind::ZeroDenominator, "child of S has zero probability under the conditioning attribute");
    ratio *= num / den;
  }
  return ratio;
}

double importance_weight_fairness(const CausalModel& model, const Sample& sample,
                                  const Arm& from, const Arm& to, Direction direction) {
  if (sample.regime != conditioning_regime(direction))
    throw Error(ErrorKind::WrongRegime, std::string("fairness weight for direction ") + to_string(direction) +
                                            " needs a " + to_string(conditioning_regime(direction)) + " sample");
  return importance_weight_outcome(model, sample, from, to) *
         (sensitive_ratio(model, sample, to, direction) - 1.0);
}

double exact_outcome_mean(const CausalModel& model, const Arm& arm) {
  return exact_outcome_mean(model, arm, enumeration_cap());
}

double exact_outcome_mean(const CausalModel& model, const Arm& arm, std::int64_t cap) {
  const int y = model.target;
  const Factor f = marginal(model, arm, Regime::Observational, std::span<const int>(&y, 1), cap);
  double mu = 0.0;
  for (int s = 0; s < f.size(); ++s) mu += f.values[s] * model.target_values[s];
  return mu;
}

double exact_fairness(const CausalModel& model, const Arm& arm, Direction direction) {
  return exact_fairness(model, arm, direction, enumeration_cap());
}

double exact_fairness(const CausalModel& model, const Arm& arm, Direction direction,
                      std::int64_t cap) {
  const Regime regime = conditioning_regime(direction);
  const Factor f = marginal(model, arm, regime, model.exposed(), cap);
  double zeta = 0.0;
  for_each_assignment(model, f, [&](double p, std::span<const int> full) {
    const Sample s = make_sample(model, arm.index, regime, full);
    zeta += p * s.outcome * (sensitive_ratio(model, s, arm, direction) - 1.0);
  });
  return zeta;
}

bool ArmOracle::fair(double E) const {
  return std::abs(zeta_ssp) < E && std::abs(zeta_sps) < E;
}

std::vector<ArmOracle> exact_oracles(const CausalModel& model, std::span<const Arm> arms) {
  std::vector<ArmOracle> out;
  for (const Arm& a : arms)
    out.push_back({exact_outcome_mean(model, a), exact_fairness(model, a, Direction::SSPrime),
                   exact_fairness(model, a, Direction::SPrimeS)});
  return out;
}

}  // namespace fcb
