#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcb/model.hpp"

namespace fcb {

/// Default cap on the size of any table built during exact inference. The
/// FCB_ENUM_CAP environment variable overrides it.
inline constexpr std::int64_t kDefaultEnumerationCap = 10'000'000;

std::int64_t enumeration_cap();

/// Dense table over a set of discrete variables, last variable fastest.
struct Factor {
  std::vector<int> vars;  // ascending node ids
  std::vector<int> card;
  std::vector<double> values;

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  /// Decodes a flat index into per-variable states, aligned with `vars`.
  void decode(std::int64_t index, std::vector<int>& states) const;
};

Factor multiply(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, int var);

/// Exact marginal distribution over `query` (any order; the result's vars are
/// ascending) of the joint under `arm` and `regime`, by variable elimination
/// over the ancestral closure of the query. Throws
/// Error(EnumerationTooLarge) when an intermediate table would exceed `cap`.
Factor marginal(const CausalModel& model, const Arm& arm, Regime regime,
                std::span<const int> query, std::int64_t cap);

/// Calls fn(probability, full_values) for every query assignment with nonzero
/// probability; entries of full_values outside the query are -1.
template <class Fn>
void for_each_assignment(const CausalModel& model, const Factor& f, Fn&& fn) {
  std::vector<int> states;
  std::vector<int> full(model.size(), -1);
  for (std::int64_t i = 0; i < f.size(); ++i) {
    const double p = f.values[i];
    if (p <= 0.0) continue;
    f.decode(i, states);
    for (std::size_t k = 0; k < f.vars.size(); ++k) full[f.vars[k]] = states[k];
    fn(p, std::span<const int>(full));
  }
}

}  // namespace fcb
