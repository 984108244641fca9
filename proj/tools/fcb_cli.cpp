#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fcb/bandit.hpp"
#include "fcb/bif.hpp"
#include "fcb/divergence.hpp"
#include "fcb/error.hpp"
#include "fcb/generate.hpp"
#include "fcb/harness.hpp"
#include "fcb/instance_io.hpp"

namespace {

using namespace fcb;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Infeasible:
    case ErrorKind::GenerationFailed:
      return 3;
    case ErrorKind::EnumerationTooLarge:
    case ErrorKind::NoSamples:
      return 1;
    default:
      return 2;
  }
}

void emit(const Json& doc, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << "\n";
  } else {
    write_text_file(path, doc.dump(2) + "\n");
  }
}

double resolve_E(const Instance& inst, const std::optional<double>& flag) {
  if (flag) return *flag;
  if (inst.fairness_E) return *inst.fairness_E;
  throw Error(ErrorKind::Validation, "no fairness threshold: pass --fairness-eps or set fairness_E in the instance");
}

Algorithm algorithm_from(const std::string& name) {
  if (auto a = parse_algorithm(name)) return *a;
  throw Error(ErrorKind::Validation, "unknown algorithm \"" + name + "\"");
}

DivergenceSet divergences_for(const Instance& inst, std::int64_t mc_draws, std::uint64_t seed) {
  DivergenceOptions opt;
  if (mc_draws > 0) {
    opt.monte_carlo = true;
    opt.draws = mc_draws;
    opt.seed = seed;
  }
  return compute_divergences(inst.model, inst.arms, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best fair arm identification in causal bandits"};
  app.require_subcommand(1);

  // gen
  std::string gen_config, gen_out = "-";
  auto* gen = app.add_subcommand("gen", "Generate a synthetic instance from a generator config");
  gen->add_option("--config", gen_config, "Generator config JSON")->required();
  gen->add_option("--out", gen_out, "Instance file to write");

  // bif-import
  std::string bif_path, bif_out = "-", bif_v, bif_s, bif_y;
  std::optional<std::string> bif_positive;
  int bif_arms = 10;
  std::uint64_t bif_seed = 1;
  double bif_E = 0.2;
  bool bif_no_cheap = false;
  auto* bif = app.add_subcommand("bif-import", "Read a BIF network; with roles set, build an instance");
  bif->add_option("--bif", bif_path, "BIF file")->required();
  bif->add_option("--out", bif_out, "Output file");
  bif->add_option("--intervention", bif_v, "Intervention node");
  bif->add_option("--sensitive", bif_s, "Sensitive node");
  bif->add_option("--target", bif_y, "Target node");
  bif->add_option("--positive-state", bif_positive, "Target state encoded as 1 (default: first state)");
  bif->add_option("--arms", bif_arms, "Number of random arms");
  bif->add_option("--seed", bif_seed, "Seed for the arm tables");
  bif->add_option("--fairness-eps", bif_E, "Fairness threshold E stored in the instance");
  bif->add_flag("--uniform-costs", bif_no_cheap, "Give every arm cost 1 and drop the cheap-arm constraint");

  // oracle
  std::string oracle_inst, oracle_out = "-";
  std::optional<double> oracle_E;
  auto* oracle = app.add_subcommand("oracle", "Exact arm means, fairness gaps and the best fair arm");
  oracle->add_option("--instance", oracle_inst, "Instance file")->required();
  oracle->add_option("--fairness-eps", oracle_E, "Fairness threshold E");
  oracle->add_option("--out", oracle_out, "JSON report file");

  // divergence
  std::string div_inst, div_prefix;
  std::int64_t div_draws = 0;
  std::uint64_t div_seed = 0;
  auto* divc = app.add_subcommand("divergence", "Cutoff matrices M, D^{s,s'}, D^{s',s}");
  divc->add_option("--instance", div_inst, "Instance file")->required();
  divc->add_option("--out-prefix", div_prefix, "Write <prefix>_m.csv, <prefix>_d_ssp.csv, <prefix>_d_sps.csv");
  divc->add_option("--mc-draws", div_draws, "Monte Carlo draws (0 = exact)");
  divc->add_option("--seed", div_seed, "Monte Carlo seed");

  // allocate
  std::string alloc_inst, alloc_out = "-";
  double alloc_budget = 1.0;
  std::int64_t alloc_T = 0;
  std::vector<int> alloc_arms;
  std::string alloc_div;
  auto* alloc = app.add_subcommand("allocate", "Solve the max-min allocation LP");
  alloc->add_option("--instance", alloc_inst, "Instance file")->required();
  alloc->add_option("--budget", alloc_budget, "Average cost per pull");
  alloc->add_option("--T", alloc_T, "Horizon for the cheap-arm constraint (0 = none)");
  alloc->add_option("--arms", alloc_arms, "Active arms (default: all)")->delimiter(',');
  alloc->add_option("--divergence-prefix", alloc_div,
                    "Read <prefix>_m.csv, <prefix>_d_ssp.csv, <prefix>_d_sps.csv instead of computing them");
  alloc->add_option("--out", alloc_out, "JSON output file");

  // run
  std::string run_inst, run_algo = "csr-v2", run_trace;
  std::int64_t run_T = 10000;
  double run_budget = 1.0;
  std::optional<double> run_E;
  std::uint64_t run_seed_v = 0;
  auto* run = app.add_subcommand("run", "One seeded run of an algorithm");
  run->add_option("--instance", run_inst, "Instance file")->required();
  run->add_option("--algo", run_algo, "csr-v1, csr-v2, ts-v1 or ts-v2");
  run->add_option("--T", run_T, "Number of pulls");
  run->add_option("--budget", run_budget, "Average cost per pull");
  run->add_option("--fairness-eps", run_E, "Fairness threshold E");
  run->add_option("--seed", run_seed_v, "Run seed");
  run->add_option("--trace", run_trace, "Write the per-phase trace as JSON lines");

  // sweep
  std::string sw_inst, sw_csv, sw_json;
  std::vector<std::int64_t> sw_T;
  std::vector<std::string> sw_algos{"csr-v1", "csr-v2", "ts-v1", "ts-v2"};
  int sw_runs = 100, sw_threads = 1;
  double sw_budget = 1.0;
  std::optional<double> sw_E;
  std::uint64_t sw_seed = 0;
  auto* sweep = app.add_subcommand("sweep", "Error rate over a grid of horizons and algorithms");
  sweep->add_option("--instance", sw_inst, "Instance file")->required();
  sweep->add_option("--T", sw_T, "Horizons")->required()->delimiter(',');
  sweep->add_option("--algos", sw_algos, "Algorithms")->delimiter(',');
  sweep->add_option("--runs", sw_runs, "Runs per grid point");
  sweep->add_option("--threads", sw_threads, "Worker threads");
  sweep->add_option("--budget", sw_budget, "Average cost per pull");
  sweep->add_option("--fairness-eps", sw_E, "Fairness threshold E");
  sweep->add_option("--seed", sw_seed, "Base seed");
  sweep->add_option("--csv", sw_csv, "CSV output (default stdout)");
  sweep->add_option("--json", sw_json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      Json doc;
      try {
        doc = Json::parse(read_text_file(gen_config));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Parse, gen_config + ": " + e.what());
      }
      const Instance inst = generate_synthetic(synthetic_config_from_json(doc));
      emit(instance_to_json(inst), gen_out);
    } else if (*bif) {
      const BifNetwork net = load_bif(bif_path);
      for (const auto& w : net.warnings) std::cerr << "warning: " << w << "\n";
      if (bif_v.empty() && bif_s.empty() && bif_y.empty()) {
        Json nodes = Json::array();
        for (const Node& n : net.model.nodes) {
          Json parents = Json::array();
          for (int p : n.parents) parents.push_back(net.model.nodes[p].name);
          nodes.push_back({{"id", n.name}, {"states", n.states}, {"parents", parents}});
        }
        emit({{"network", net.name}, {"node_count", net.model.size()}, {"edge_count", net.edge_count()},
              {"nodes", nodes}},
             bif_out);
      } else {
        if (bif_v.empty() || bif_s.empty() || bif_y.empty())
          throw Error(ErrorKind::Validation, "--intervention, --sensitive and --target go together");
        NetworkExperimentConfig cfg;
        cfg.intervention = bif_v;
        cfg.sensitive = bif_s;
        cfg.target = bif_y;
        cfg.target_positive_state = bif_positive;
        cfg.arm_count = bif_arms;
        cfg.seed = bif_seed;
        cfg.fairness_E = bif_E;
        cfg.cheap_arm_costs = !bif_no_cheap;
        cfg.cheap_arm_constraint = !bif_no_cheap;
        emit(instance_to_json(build_network_experiment(net.model, cfg)), bif_out);
      }
    } else if (*oracle) {
      const Instance inst = load_instance(oracle_inst);
      Json doc = to_json(oracle_report(inst, resolve_E(inst, oracle_E)));
      doc["instance_digest"] = instance_digest(inst);
      emit(doc, oracle_out);
    } else if (*divc) {
      const Instance inst = load_instance(div_inst);
      const DivergenceSet div = divergences_for(inst, div_draws, div_seed);
      if (!div_prefix.empty()) {
        const std::pair<const char*, const Matrix*> parts[] = {
            {"_m.csv", &div.m}, {"_d_ssp.csv", &div.d_ssp}, {"_d_sps.csv", &div.d_sps}};
        for (const auto& [suffix, mat] : parts) {
          std::ostringstream os;
          write_matrix_csv(os, *mat);
          write_text_file(div_prefix + suffix, os.str());
        }
      }
      Json doc = to_json(div);
      doc["monte_carlo_draws"] = div_draws;
      for (const auto& [name, mat] : {std::pair{"m", &div.m}, {"d_ssp", &div.d_ssp}, {"d_sps", &div.d_sps}}) {
        const auto& v = mat->data();
        if (v.empty()) continue;
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        doc["summary"][name] = {{"min", *lo}, {"max", *hi}};
      }
      emit(doc, "-");
    } else if (*alloc) {
      const Instance inst = load_instance(alloc_inst);
      DivergenceSet div;
      if (alloc_div.empty()) {
        div = compute_divergences(inst.model, inst.arms);
      } else {
        const auto read = [&](const char* suffix) {
          std::istringstream in(read_text_file(alloc_div + suffix));
          Matrix m = read_matrix_csv(in);
          if (m.rows() != inst.arm_count() || m.cols() != inst.arm_count())
            throw Error(ErrorKind::Validation, alloc_div + suffix + " does not match the arm count");
          return m;
        };
        div.m = read("_m.csv");
        div.d_ssp = read("_d_ssp.csv");
        div.d_sps = read("_d_sps.csv");
      }
      std::vector<int> active = alloc_arms;
      if (active.empty())
        for (int k = 0; k < inst.arm_count(); ++k) active.push_back(k);
      std::vector<LinearConstraint> extra;
      if (alloc_T > 0) extra = instance_constraints(inst, alloc_T);
      const Allocation a = solve_maxmin(build_problem(div, inst.arms, alloc_budget, active, extra));
      emit({{"nu_y", a.nu_y}, {"nu_s", a.nu_s}, {"nu_sp", a.nu_sp}, {"v_star", a.v_star}}, alloc_out);
    } else if (*run) {
      const Instance inst = load_instance(run_inst);
      const Algorithm algo = algorithm_from(run_algo);
      const DivergenceSet div = compute_divergences(inst.model, inst.arms);
      const Sampler sampler(inst.model, inst.arms);
      Rng rng(run_seed_v);
      const RunTrace trace = run_algorithm(algo, inst, sampler, div, run_T, run_budget, resolve_E(inst, run_E), rng);
      if (!run_trace.empty()) {
        // One JSON object per phase, then the decision record.
        std::string lines;
        for (const PhaseRecord& p : trace.phases) lines += to_json(p).dump() + "\n";
        Json last = to_json(trace);
        last.erase("phases");
        write_text_file(run_trace, lines + last.dump() + "\n");
      }
      emit({{"algorithm", to_string(algo)},
            {"T", run_T},
            {"seed", run_seed_v},
            {"decision", trace.decision ? Json(*trace.decision) : Json("NoFairArm")},
            {"samples_spent", trace.samples_spent},
            {"cost_spent", trace.cost_spent}},
           "-");
    } else if (*sweep) {
      const Instance inst = load_instance(sw_inst);
      SweepConfig cfg;
      cfg.horizons = sw_T;
      cfg.runs = sw_runs;
      for (const auto& name : sw_algos) cfg.algorithms.push_back(algorithm_from(name));
      cfg.base_seed = sw_seed;
      cfg.threads = sw_threads;
      cfg.budget = sw_budget;
      cfg.fairness_E = resolve_E(inst, sw_E);
      const DivergenceSet div = compute_divergences(inst.model, inst.arms);
      const OracleReport truth = oracle_report(inst, cfg.fairness_E);
      const ErrorCurve curve = run_sweep(inst, div, truth, cfg);
      if (sw_csv.empty()) {
        write_curve_csv(std::cout, curve);
      } else {
        std::ofstream out(sw_csv);
        if (!out) throw Error(ErrorKind::Validation, "cannot write " + sw_csv);
        write_curve_csv(out, curve);
      }
      if (!sw_json.empty()) write_text_file(sw_json, to_json(curve).dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
