#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcb/divergence.hpp"
#include "fcb/matrix.hpp"
#include "fcb/model.hpp"

namespace fcb {

/// maximize objective . x  s.t.  a_ub x <= b_ub,  a_eq x = b_eq,  x >= 0.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<std::vector<double>> a_ub;
  std::vector<double> b_ub;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
};

struct LpSolution {
  std::vector<double> x;
  double value = 0.0;
};

/// Two-phase dense simplex (Dantzig pricing, Bland's rule once progress
/// stalls). Throws Error(Infeasible) when the feasible region is empty.
LpSolution solve_lp(const LinearProgram& lp, double tol = 1e-9);

/// coef . [nu_y, nu_s, nu_sp] <= rhs, coef has 3K entries.
struct LinearConstraint {
  std::vector<double> coef;
  double rhs = 0.0;
};

/// sum_{k != 0} (nu_y + nu_s + nu_sp)_k <= (1 - 1e-12) / sqrt(T).
LinearConstraint cheap_arm_constraint(int arm_count, std::int64_t T);

struct AllocationProblem {
  Matrix recip_m;     // A, paired with nu_y
  Matrix recip_dsps;  // B = 1 / D^{s',s}, paired with nu_s
  Matrix recip_dssp;  // C = 1 / D^{s,s'}, paired with nu_sp
  std::vector<double> cost_y;
  std::vector<double> cost_s;
  std::vector<double> cost_sp;
  double budget = 0.0;
  std::vector<int> active;
  std::vector<LinearConstraint> extra;
  // A disabled regime gets no pulls and no rows in the min.
  bool use_y = true;
  bool use_s = true;
  bool use_sp = true;

  int arm_count() const { return recip_m.rows(); }
};

AllocationProblem build_problem(const DivergenceSet& div, std::span<const Arm> arms,
                                double budget, std::span<const int> active,
                                std::vector<LinearConstraint> extra = {});

struct Allocation {
  std::vector<double> nu_y;
  std::vector<double> nu_s;
  std::vector<double> nu_sp;
  double v_star = 0.0;
};

/// Max-min allocation via the epigraph LP. Throws Error(Infeasible).
Allocation solve_maxmin(const AllocationProblem& problem);

struct PullCounts {
  std::vector<std::int64_t> y;
  std::vector<std::int64_t> s;
  std::vector<std::int64_t> sp;

  std::int64_t total() const;
};

/// Largest-remainder rounding of the 3K fractions (order nu_y, nu_s, nu_sp;
/// ties go to the lowest position) so that the counts sum to tau.
PullCounts round_counts(const Allocation& allocation, std::int64_t tau);

}  // namespace fcb
