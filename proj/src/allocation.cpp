#include "fcb/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcb/error.hpp"

namespace fcb {

namespace {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : cols_(cols), t_(rows, std::vector<double>(cols + 1, 0.0)), basis_(rows, 0) {}

  std::vector<double>& row(std::size_t i) { return t_[i]; }
  double rhs(std::size_t i) const { return t_[i][cols_]; }
  std::size_t rows() const { return t_.size(); }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    auto& pr = t_[r];
    const double p = pr[c];
    for (double& v : pr) v /= p;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (i == r) continue;
      const double f = t_[i][c];
      if (f == 0.0) continue;
      auto& ri = t_[i];
      for (std::size_t j = 0; j <= cols_; ++j) ri[j] -= f * pr[j];
      ri[c] = 0.0;
    }
    basis_[r] = c;
  }

  // Maximizes cost . x over columns with allowed[c]; returns the optimum.
  double maximize(const std::vector<double>& cost, const std::vector<char>& allowed, double tol) {
    constexpr int kStallLimit = 50;
    constexpr long kMaxIterations = 200000;
    int stalled = 0;
    bool bland = false;
    for (long iter = 0; iter < kMaxIterations; ++iter) {
      // Reduced costs d_j = c_j - c_B . column_j.
      std::size_t enter = cols_;
      double best = tol;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (!allowed[j]) continue;
        double d = cost[j];
        for (std::size_t i = 0; i < t_.size(); ++i) d -= cost[basis_[i]] * t_[i][j];
        if (d > best) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter == cols_) break;

      std::size_t leave = t_.size();
      double ratio = 0.0;
      for (std::size_t i = 0; i < t_.size(); ++i) {
        const double a = t_[i][enter];
        if (a <= tol) continue;
        const double q = t_[i][cols_] / a;
        if (leave == t_.size() || q < ratio - 1e-15 ||
            (q <= ratio + 1e-15 && basis_[i] < basis_[leave])) {
          leave = i;
          ratio = q;
        }
      }
      if (leave == t_.size()) throw Error(ErrorKind::Infeasible, "linear program is unbounded");
      if (ratio <= tol) {
        if (++stalled > kStallLimit) bland = true;
      } else {
        stalled = 0;
      }
      pivot(leave, enter);
    }
    double value = 0.0;
    for (std::size_t i = 0; i < t_.size(); ++i) value += cost[basis_[i]] * t_[i][cols_];
    return value;
  }

 private:
  std::size_t cols_;
  std::vector<std::vector<double>> t_;
  std::vector<std::size_t> basis_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double tol) {
  const std::size_t n = lp.objective.size();
  const std::size_t m_ub = lp.a_ub.size();
  const std::size_t m_eq = lp.a_eq.size();
  const std::size_t m = m_ub + m_eq;

  // Columns: originals, one slack per inequality, then artificials.
  std::vector<char> needs_art(m, 0);
  for (std::size_t i = 0; i < m_ub; ++i) needs_art[i] = lp.b_ub[i] < 0;
  for (std::size_t i = 0; i < m_eq; ++i) needs_art[m_ub + i] = 1;
  const std::size_t n_art = std::count(needs_art.begin(), needs_art.end(), 1);
  const std::size_t cols = n + m_ub + n_art;

  Tableau tab(m, cols);
  std::size_t art = n + m_ub;
  for (std::size_t i = 0; i < m; ++i) {
    auto& r = tab.row(i);
    const bool ub = i < m_ub;
    const auto& a = ub ? lp.a_ub[i] : lp.a_eq[i - m_ub];
    const double b = ub ? lp.b_ub[i] : lp.b_eq[i - m_ub];
    const double sign = b < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) r[j] = sign * a[j];
    if (ub) r[n + i] = sign;
    r[cols] = sign * b;
    if (needs_art[i]) {
      r[art] = 1.0;
      tab.basis()[i] = art++;
    } else {
      tab.basis()[i] = n + i;
    }
  }

  std::vector<char> allowed(cols, 1);
  if (n_art > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = n + m_ub; j < cols; ++j) phase1[j] = -1.0;
    const double infeas = -tab.maximize(phase1, allowed, tol);
    if (infeas > tol) throw Error(ErrorKind::Infeasible, "linear program has no feasible point");
    // Move remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis()[i] < n + m_ub) continue;
      for (std::size_t j = 0; j < n + m_ub; ++j) {
        if (std::abs(tab.row(i)[j]) > tol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
    for (std::size_t j = n + m_ub; j < cols; ++j) allowed[j] = 0;
  }

  std::vector<double> cost(cols, 0.0);
  std::copy(lp.objective.begin(), lp.objective.end(), cost.begin());
  LpSolution sol;
  sol.value = tab.maximize(cost, allowed, tol);
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (tab.basis()[i] < n) sol.x[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
  return sol;
}

LinearConstraint cheap_arm_constraint(int arm_count, std::int64_t T) {
  LinearConstraint c;
  c.coef.assign(3 * static_cast<std::size_t>(arm_count), 1.0);
  for (int g = 0; g < 3; ++g) c.coef[static_cast<std::size_t>(g) * arm_count] = 0.0;
  c.rhs = (1.0 - 1e-12) / std::sqrt(static_cast<double>(T));
  return c;
}

AllocationProblem build_problem(const DivergenceSet& div, std::span<const Arm> arms,
                                double budget, std::span<const int> active,
                                std::vector<LinearConstraint> extra) {
  const int K = div.arm_count();
  if (static_cast<int>(arms.size()) != K)
    throw Error(ErrorKind::Validation, "arm count does not match the divergence matrices");
  AllocationProblem p;
  p.recip_m = Matrix(K, K);
  p.recip_dsps = Matrix(K, K);
  p.recip_dssp = Matrix(K, K);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < K; ++j) {
      p.recip_m(k, j) = 1.0 / div.m(k, j);
      p.recip_dsps(k, j) = 1.0 / div.d_sps(k, j);
      p.recip_dssp(k, j) = 1.0 / div.d_ssp(k, j);
    }
  for (const Arm& a : arms) {
    p.cost_y.push_back(a.cost_pull);
    p.cost_s.push_back(a.cost_force_s);
    p.cost_sp.push_back(a.cost_force_sprime);
  }
  p.budget = budget;
  p.active.assign(active.begin(), active.end());
  p.extra = std::move(extra);
  return p;
}

Allocation solve_maxmin(const AllocationProblem& p) {
  const int K = p.arm_count();
  if (p.active.empty()) throw Error(ErrorKind::Validation, "allocation needs at least one active arm");
  const bool use[3] = {p.use_y, p.use_s, p.use_sp};
  const Matrix* mats[3] = {&p.recip_m, &p.recip_dsps, &p.recip_dssp};
  const std::vector<double>* costs[3] = {&p.cost_y, &p.cost_s, &p.cost_sp};

  // LP columns: enabled regime blocks of K, then t.
  std::vector<int> block_col(3, -1);
  int n = 0;
  for (int g = 0; g < 3; ++g)
    if (use[g]) {
      block_col[g] = n;
      n += K;
    }
  if (n == 0) throw Error(ErrorKind::Validation, "allocation needs at least one enabled regime");
  const int t_col = n++;

  LinearProgram lp;
  lp.objective.assign(n, 0.0);
  lp.objective[t_col] = 1.0;
  for (int k : p.active) {
    for (int g = 0; g < 3; ++g) {
      if (!use[g]) continue;
      std::vector<double> row(n, 0.0);
      row[t_col] = 1.0;
      for (int j = 0; j < K; ++j) row[block_col[g] + j] = -(*mats[g])(k, j);
      lp.a_ub.push_back(std::move(row));
      lp.b_ub.push_back(0.0);
    }
  }
  std::vector<double> budget_row(n, 0.0), simplex_row(n, 0.0);
  for (int g = 0; g < 3; ++g) {
    if (!use[g]) continue;
    for (int j = 0; j < K; ++j) {
      budget_row[block_col[g] + j] = (*costs[g])[j];
      simplex_row[block_col[g] + j] = 1.0;
    }
  }
  lp.a_ub.push_back(budget_row);
  lp.b_ub.push_back(p.budget);
  for (const LinearConstraint& c : p.extra) {
    if (static_cast<int>(c.coef.size()) != 3 * K)
      throw Error(ErrorKind::Validation, "extra constraint has the wrong length");
    std::vector<double> row(n, 0.0);
    for (int g = 0; g < 3; ++g)
      if (use[g])
        for (int j = 0; j < K; ++j) row[block_col[g] + j] = c.coef[static_cast<std::size_t>(g) * K + j];
    lp.a_ub.push_back(std::move(row));
    lp.b_ub.push_back(c.rhs);
  }
  lp.a_eq.push_back(simplex_row);
  lp.b_eq.push_back(1.0);

  const LpSolution sol = solve_lp(lp);
  Allocation out;
  std::vector<double>* dst[3] = {&out.nu_y, &out.nu_s, &out.nu_sp};
  for (int g = 0; g < 3; ++g) {
    dst[g]->assign(K, 0.0);
    if (use[g])
      for (int j = 0; j < K; ++j) (*dst[g])[j] = sol.x[block_col[g] + j];
  }
  out.v_star = sol.value;
  return out;
}

std::int64_t PullCounts::total() const {
  return std::accumulate(y.begin(), y.end(), std::int64_t{0}) +
         std::accumulate(s.begin(), s.end(), std::int64_t{0}) +
         std::accumulate(sp.begin(), sp.end(), std::int64_t{0});
}

PullCounts round_counts(const Allocation& a, std::int64_t tau) {
  const std::size_t K = a.nu_y.size();
  std::vector<double> f;
  f.reserve(3 * K);
  for (const auto* v : {&a.nu_y, &a.nu_s, &a.nu_sp})
    for (double x : *v) f.push_back(std::max(0.0, x));
  const double sum = std::accumulate(f.begin(), f.end(), 0.0);
  if (sum <= 0.0) throw Error(ErrorKind::Validation, "allocation fractions are all zero");

  std::vector<std::int64_t> c(f.size());
  std::vector<double> rem(f.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = f[i] / sum * static_cast<double>(tau);
    c[i] = static_cast<std::int64_t>(std::floor(x));
    rem[i] = x - static_cast<double>(c[i]);
    assigned += c[i];
  }
  std::vector<std::size_t> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return rem[x] > rem[y]; });
  for (std::size_t r = 0; assigned < tau; r = (r + 1) % order.size()) {
    ++c[order[r]];
    ++assigned;
  }
  // Only reachable through floating-point excess; take from the smallest remainders.
  for (std::size_t r = order.size(); assigned > tau;) {
    r = r == 0 ? order.size() - 1 : r - 1;
    if (c[order[r]] > 0) {
      --c[order[r]];
      --assigned;
    }
  }

  PullCounts out;
  out.y.assign(c.begin(), c.begin() + K);
  out.s.assign(c.begin() + K, c.begin() + 2 * K);
  out.sp.assign(c.begin() + 2 * K, c.end());
  return out;
}

}  // namespace fcb
