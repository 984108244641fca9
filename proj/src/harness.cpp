#include "fcb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "fcb/error.hpp"

namespace fcb {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Json optional_list(const std::vector<std::optional<double>>& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(x ? Json(*x) : Json(nullptr));
  return out;
}

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

struct RunOutcome {
  std::optional<int> decision;
  bool failed = false;
  double seconds = 0.0;
};

}  // namespace

OracleReport oracle_report(const Instance& instance, double E) {
  OracleReport rep;
  rep.E = E;
  rep.arms = exact_oracles(instance.model, instance.arms);
  const int K = static_cast<int>(rep.arms.size());
  for (int k = 0; k < K; ++k) {
    rep.fair.push_back(rep.arms[k].fair(E));
    if (rep.fair[k] && (!rep.best_fair_arm || rep.arms[k].mu > rep.arms[*rep.best_fair_arm].mu))
      rep.best_fair_arm = k;
  }
  if (rep.best_fair_arm) {
    const double best = rep.arms[*rep.best_fair_arm].mu;
    for (int k = 0; k < K; ++k) {
      rep.delta.push_back(best - rep.arms[k].mu);
      if (k != *rep.best_fair_arm && rep.fair[k] && std::abs(rep.delta[k]) <= 1e-12) rep.degenerate = true;
    }
  } else {
    double xi = std::numeric_limits<double>::infinity();
    for (const ArmOracle& o : rep.arms)
      xi = std::min({xi, std::abs(std::abs(o.zeta_ssp) - E), std::abs(std::abs(o.zeta_sps) - E)});
    if (K > 0) rep.xi_star = xi;
  }
  return rep;
}

Json to_json(const OracleReport& r) {
  Json j;
  j["E"] = r.E;
  Json arms = Json::array();
  for (std::size_t k = 0; k < r.arms.size(); ++k) {
    Json a;
    a["arm"] = k;
    a["mu"] = r.arms[k].mu;
    a["zeta_ssp"] = r.arms[k].zeta_ssp;
    a["zeta_sps"] = r.arms[k].zeta_sps;
    a["fair"] = static_cast<bool>(r.fair[k]);
    a["fairness_gap"] = r.E - std::max(std::abs(r.arms[k].zeta_ssp), std::abs(r.arms[k].zeta_sps));
    if (!r.delta.empty()) a["delta"] = r.delta[k];
    arms.push_back(a);
  }
  j["arms"] = arms;
  j["best_fair_arm"] = r.best_fair_arm ? Json(*r.best_fair_arm) : Json(nullptr);
  j["degenerate"] = r.degenerate;
  j["xi_star"] = r.xi_star ? Json(*r.xi_star) : Json(nullptr);
  return j;
}

std::uint64_t run_seed(std::uint64_t base, std::size_t horizon_index, std::size_t run_index,
                       Algorithm algo) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ horizon_index);
  h = splitmix64(h ^ run_index);
  return splitmix64(h ^ static_cast<std::uint64_t>(algo));
}

ErrorCurve run_sweep(const Instance& instance, const DivergenceSet& div, const OracleReport& truth,
                     const SweepConfig& config) {
  if (config.runs < 1) throw Error(ErrorKind::Validation, "runs must be positive");
  for (std::int64_t T : config.horizons)
    if (T < 1) throw Error(ErrorKind::Validation, "horizons must be positive");

  const std::size_t H = config.horizons.size(), A = config.algorithms.size();
  const std::size_t R = static_cast<std::size_t>(config.runs);
  const std::size_t jobs = H * A * R;
  std::vector<RunOutcome> results(jobs);
  const Sampler sampler(instance.model, instance.arms);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < jobs;) {
      const std::size_t h = job / (A * R), a = (job / R) % A, r = job % R;
      const Algorithm algo = config.algorithms[a];
      Rng rng(run_seed(config.base_seed, h, r, algo));
      const auto start = std::chrono::steady_clock::now();
      RunOutcome& out = results[job];
      try {
        out.decision = run_algorithm(algo, instance, sampler, div, config.horizons[h], config.budget,
                                     config.fairness_E, rng)
                           .decision;
      } catch (const std::exception&) {
        out.failed = true;
      }
      out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const int width = std::max(1, std::min<int>(config.threads, static_cast<int>(jobs)));
  std::vector<std::thread> pool;
  for (int t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ErrorCurve curve;
  curve.instance_digest = instance_digest(instance);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t a = 0; a < A; ++a) {
      ErrorRow row;
      row.T = config.horizons[h];
      row.algorithm = config.algorithms[a];
      row.runs = config.runs;
      row.base_seed = config.base_seed;
      for (std::size_t r = 0; r < R; ++r) {
        const RunOutcome& o = results[(h * A + a) * R + r];
        row.wall_time += o.seconds;
        if (o.failed) {
          ++row.failures;
          ++row.misidentifications;
          continue;
        }
        if (!o.decision) ++row.no_fair_arm;
        if (o.decision != truth.best_fair_arm) ++row.misidentifications;
      }
      row.error_rate = static_cast<double>(row.misidentifications) / row.runs;
      curve.rows.push_back(row);
    }
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const ErrorCurve& curve) {
  out << "T,algorithm,runs,misidentifications,no_fair_arm,failures,error_rate,wall_time,base_seed,"
         "instance_digest\n";
  for (const ErrorRow& r : curve.rows) {
    out << r.T << ',' << to_string(r.algorithm) << ',' << r.runs << ',' << r.misidentifications << ','
        << r.no_fair_arm << ',' << r.failures << ',' << r.error_rate << ',' << r.wall_time << ','
        << r.base_seed << ',' << curve.instance_digest << '\n';
  }
}

Json to_json(const ErrorCurve& curve) {
  Json j;
  j["instance_digest"] = curve.instance_digest;
  Json rows = Json::array();
  for (const ErrorRow& r : curve.rows) {
    rows.push_back({{"T", r.T},
                    {"algorithm", to_string(r.algorithm)},
                    {"runs", r.runs},
                    {"misidentifications", r.misidentifications},
                    {"no_fair_arm", r.no_fair_arm},
                    {"failures", r.failures},
                    {"error_rate", r.error_rate},
                    {"wall_time", r.wall_time},
                    {"base_seed", r.base_seed}});
  }
  j["rows"] = rows;
  return j;
}

Json to_json(const PhaseRecord& p) {
  Json j;
  j["stage"] = p.stage;
  j["l"] = p.l;
  j["epsilon"] = p.epsilon;
  j["tau"] = p.tau;
  j["remaining"] = p.remaining;
  j["fair"] = p.fair;
  j["allocation"] = {{"nu_y", p.allocation.nu_y},
                     {"nu_s", p.allocation.nu_s},
                     {"nu_sp", p.allocation.nu_sp},
                     {"v_star", p.allocation.v_star}};
  j["counts"] = {{"y", p.counts.y}, {"s", p.counts.s}, {"sp", p.counts.sp}};
  j["estimates"] = {{"y_hat", optional_list(p.estimates.y_hat)},
                    {"zeta_ssp_hat", optional_list(p.estimates.zeta_ssp_hat)},
                    {"zeta_sps_hat", optional_list(p.estimates.zeta_sps_hat)}};
  Json elim = Json::array();
  for (const Elimination& e : p.eliminated) {
    Json x{{"arm", e.arm}, {"reason", to_string(e.reason)}};
    if (e.direction) x["direction"] = to_string(*e.direction);
    elim.push_back(x);
  }
  j["eliminated"] = elim;
  return j;
}

Json to_json(const RunTrace& trace) {
  Json j;
  Json phases = Json::array();
  for (const PhaseRecord& p : trace.phases) phases.push_back(to_json(p));
  j["phases"] = phases;
  j["decision"] = trace.decision ? Json(*trace.decision) : Json("NoFairArm");
  j["samples_spent"] = trace.samples_spent;
  j["cost_spent"] = trace.cost_spent;
  return j;
}

Json to_json(const DivergenceSet& div) {
  return {{"m", matrix_json(div.m)}, {"d_ssp", matrix_json(div.d_ssp)}, {"d_sps", matrix_json(div.d_sps)}};
}

}  // namespace fcb
