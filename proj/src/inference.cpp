#include "fcb/inference.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <string>

#include "fcb/error.hpp"

namespace fcb {

std::int64_t enumeration_cap() {
  if (const char* env = std::getenv("FCB_ENUM_CAP")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return kDefaultEnumerationCap;
}

void Factor::decode(std::int64_t index, std::vector<int>& states) const {
  states.resize(vars.size());
  for (std::size_t k = vars.size(); k-- > 0;) {
    states[k] = static_cast<int>(index % card[k]);
    index /= card[k];
  }
}

namespace {

std::int64_t product_size(const std::vector<int>& card) {
  std::int64_t n = 1;
  for (int c : card) {
    if (n > std::numeric_limits<std::int64_t>::max() / c) return std::numeric_limits<std::int64_t>::max();
    n *= c;
  }
  return n;
}

// Stride of each of `vars` inside factor f (0 when absent).
std::vector<std::int64_t> strides_in(const Factor& f, const std::vector<int>& vars) {
  std::vector<std::int64_t> own(f.vars.size());
  std::int64_t s = 1;
  for (std::size_t k = f.vars.size(); k-- > 0;) {
    own[k] = s;
    s *= f.card[k];
  }
  std::vector<std::int64_t> out(vars.size(), 0);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    auto it = std::lower_bound(f.vars.begin(), f.vars.end(), vars[i]);
    if (it != f.vars.end() && *it == vars[i]) out[i] = own[it - f.vars.begin()];
  }
  return out;
}

void check_cap(std::int64_t size, std::int64_t cap) {
  if (size > cap)
    throw Error(ErrorKind::EnumerationTooLarge,
                "exact inference needs a table of " + std::to_string(size) +
                    " entries, above the cap of " + std::to_string(cap));
}

Factor node_factor(const CausalModel& model, const Arm& arm, Regime regime, int node) {
  const Node& n = model.nodes[node];
  Factor f;
  f.vars = n.parents;
  f.vars.push_back(node);
  std::sort(f.vars.begin(), f.vars.end());
  for (int v : f.vars) f.card.push_back(model.cardinality(v));
  f.values.assign(product_size(f.card), 0.0);

  const bool forced = node == model.sensitive && regime != Regime::Observational;
  const int forced_state = regime == Regime::ForceS ? kStateS : kStateSPrime;
  std::vector<int> full(model.size(), 0);
  std::vector<int> states;
  for (std::int64_t i = 0; i < f.size(); ++i) {
    f.decode(i, states);
    for (std::size_t k = 0; k < f.vars.size(); ++k) full[f.vars[k]] = states[k];
    const int x = full[node];
    if (forced) {
      f.values[i] = x == forced_state ? 1.0 : 0.0;
      continue;
    }
    const int r = model.row_index(node, full);
    f.values[i] = node == model.intervention
                      ? arm.row(r, n.cardinality())[x]
                      : model.row(node, r)[x];
  }
  return f;
}

}  // namespace

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(out.vars));
  for (int v : out.vars) {
    auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
    out.card.push_back(ia != a.vars.end() && *ia == v
                           ? a.card[ia - a.vars.begin()]
                           : b.card[std::lower_bound(b.vars.begin(), b.vars.end(), v) - b.vars.begin()]);
  }
  out.values.resize(product_size(out.card));
  const auto sa = strides_in(a, out.vars);
  const auto sb = strides_in(b, out.vars);
  const std::size_t d = out.vars.size();
  std::vector<int> state(d, 0);
  std::int64_t ia = 0, ib = 0;
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out.values[i] = a.values[ia] * b.values[ib];
    // Odometer increment, last variable fastest.
    for (std::size_t k = d; k-- > 0;) {
      if (++state[k] < out.card[k]) {
        ia += sa[k];
        ib += sb[k];
        break;
      }
      state[k] = 0;
      ia -= sa[k] * (out.card[k] - 1);
      ib -= sb[k] * (out.card[k] - 1);
    }
  }
  return out;
}

Factor sum_out(const Factor& f, int var) {
  auto it = std::lower_bound(f.vars.begin(), f.vars.end(), var);
  if (it == f.vars.end() || *it != var) return f;
  const std::size_t pos = it - f.vars.begin();
  Factor out;
  out.vars = f.vars;
  out.card = f.card;
  out.vars.erase(out.vars.begin() + pos);
  out.card.erase(out.card.begin() + pos);
  std::int64_t inner = 1;
  for (std::size_t k = pos + 1; k < f.card.size(); ++k) inner *= f.card[k];
  const int c = f.card[pos];
  const std::int64_t outer = f.size() / (inner * c);
  out.values.assign(outer * inner, 0.0);
  for (std::int64_t o = 0; o < outer; ++o)
    for (int x = 0; x < c; ++x)
      for (std::int64_t in = 0; in < inner; ++in)
        out.values[o * inner + in] += f.values[(o * c + x) * inner + in];
  return out;
}

Factor marginal(const CausalModel& model, const Arm& arm, Regime regime,
                std::span<const int> query, std::int64_t cap) {
  std::vector<int> q(query.begin(), query.end());
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());

  std::vector<int> qcard;
  for (int v : q) qcard.push_back(model.cardinality(v));
  check_cap(product_size(qcard), cap);

  const std::vector<int> relevant = model.ancestral_closure(q);
  std::vector<Factor> factors;
  for (int node : relevant) {
    Factor f = node_factor(model, arm, regime, node);
    check_cap(f.size(), cap);
    factors.push_back(std::move(f));
  }

  std::vector<int> pending;
  std::set_difference(relevant.begin(), relevant.end(), q.begin(), q.end(),
                      std::back_inserter(pending));

  while (!pending.empty()) {
    // Greedy min-size elimination.
    std::size_t best = 0;
    std::int64_t best_size = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 0; i < pending.size(); ++i) {
      std::vector<int> scope;
      for (const Factor& f : factors)
        if (std::binary_search(f.vars.begin(), f.vars.end(), pending[i]))
          scope.insert(scope.end(), f.vars.begin(), f.vars.end());
      std::sort(scope.begin(), scope.end());
      scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
      std::vector<int> card;
      for (int v : scope) card.push_back(model.cardinality(v));
      const std::int64_t size = product_size(card);
      if (size < best_size) {
        best_size = size;
        best = i;
      }
    }
    check_cap(best_size, cap);
    const int var = pending[best];
    pending.erase(pending.begin() + best);

    Factor joint{{}, {}, {1.0}};
    std::vector<Factor> rest;
    for (Factor& f : factors) {
      if (std::binary_search(f.vars.begin(), f.vars.end(), var))
        joint = multiply(joint, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(joint, var));
    factors = std::move(rest);
  }

  Factor result{{}, {}, {1.0}};
  for (const Factor& f : factors) {
    result = multiply(result, f);
    check_cap(result.size(), cap);
  }
  return result;
}

}  // namespace fcb
