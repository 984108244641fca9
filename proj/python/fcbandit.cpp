// Python bindings. Structured results cross the boundary as plain dicts and
// lists built from the same JSON documents the CLI writes.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "fcb/bandit.hpp"
#include "fcb/bif.hpp"
#include "fcb/error.hpp"
#include "fcb/generate.hpp"
#include "fcb/harness.hpp"
#include "fcb/instance_io.hpp"

namespace py = pybind11;
using namespace fcb;

namespace {

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

double resolve_E(const Instance& inst, std::optional<double> E) {
  if (E) return *E;
  if (inst.fairness_E) return *inst.fairness_E;
  throw Error(ErrorKind::Validation, "no fairness threshold: pass E or set fairness_E in the instance");
}

std::vector<int> all_arms(const Instance& inst) {
  std::vector<int> R(inst.arm_count());
  for (int k = 0; k < inst.arm_count(); ++k) R[k] = k;
  return R;
}

Algorithm algorithm_from(const std::string& name) {
  if (auto a = parse_algorithm(name)) return *a;
  throw Error(ErrorKind::Validation, "unknown algorithm \"" + name + "\"");
}

}  // namespace

PYBIND11_MODULE(fcbandit, mod) {
  mod.doc() = "Best fair arm identification in causal bandits";

  static py::exception<Error> error(mod, "FcbError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(e.what());
    }
  });

  py::class_<Instance>(mod, "Instance")
      .def_static("load", &load_instance, py::arg("path"))
      .def_static("from_dict", [](const py::object& doc) { return instance_from_json(from_py(doc)); }, py::arg("doc"))
      .def("to_dict", [](const Instance& inst) { return to_py(instance_to_json(inst)); })
      .def("save", [](const Instance& inst, const std::string& path) { save_instance(path, inst); }, py::arg("path"))
      .def_property_readonly("arm_count", &Instance::arm_count)
      .def_property_readonly("node_count", [](const Instance& inst) { return inst.model.size(); })
      .def_property_readonly("fairness_E", [](const Instance& inst) { return inst.fairness_E; })
      .def_property_readonly("digest", [](const Instance& inst) { return instance_digest(inst); });

  mod.def(
      "generate_synthetic",
      [](const py::object& config) { return generate_synthetic(synthetic_config_from_json(from_py(config))); },
      py::arg("config") = py::dict(), "Synthetic instance from a generator config dict.");

  mod.def(
      "bif_summary",
      [](const std::string& path) {
        const BifNetwork net = load_bif(path);
        Json nodes = Json::array();
        for (const Node& n : net.model.nodes) nodes.push_back(n.name);
        return to_py({{"network", net.name},
                      {"node_count", net.model.size()},
                      {"edge_count", net.edge_count()},
                      {"nodes", nodes},
                      {"warnings", net.warnings}});
      },
      py::arg("path"));

  mod.def(
      "network_experiment",
      [](const std::string& path, const std::string& intervention, const std::string& sensitive,
         const std::string& target, int arms, std::uint64_t seed, double E,
         std::optional<std::string> positive_state, bool uniform_costs) {
        NetworkExperimentConfig c;
        c.intervention = intervention;
        c.sensitive = sensitive;
        c.target = target;
        c.arm_count = arms;
        c.seed = seed;
        c.fairness_E = E;
        c.target_positive_state = std::move(positive_state);
        c.cheap_arm_costs = !uniform_costs;
        c.cheap_arm_constraint = !uniform_costs;
        return build_network_experiment(load_bif(path).model, c);
      },
      py::arg("bif_path"), py::arg("intervention"), py::arg("sensitive"), py::arg("target"),
      py::arg("arms") = 10, py::arg("seed") = 1, py::arg("E") = 0.2, py::arg("positive_state") = py::none(),
      py::arg("uniform_costs") = false);

  mod.def(
      "oracle",
      [](const Instance& inst, std::optional<double> E) { return to_py(to_json(oracle_report(inst, resolve_E(inst, E)))); },
      py::arg("instance"), py::arg("E") = py::none());

  mod.def(
      "divergences",
      [](const Instance& inst) { return to_py(to_json(compute_divergences(inst.model, inst.arms))); },
      py::arg("instance"));

  mod.def(
      "allocate",
      [](const Instance& inst, double budget, std::optional<std::int64_t> T, std::optional<std::vector<int>> arms) {
        const DivergenceSet div = compute_divergences(inst.model, inst.arms);
        const std::vector<int> active = arms ? *arms : all_arms(inst);
        std::vector<LinearConstraint> extra;
        if (T) extra = instance_constraints(inst, *T);
        const Allocation a = solve_maxmin(build_problem(div, inst.arms, budget, active, extra));
        return to_py({{"nu_y", a.nu_y}, {"nu_s", a.nu_s}, {"nu_sp", a.nu_sp}, {"v_star", a.v_star}});
      },
      py::arg("instance"), py::arg("budget") = 1.0, py::arg("T") = py::none(), py::arg("arms") = py::none());

  mod.def(
      "run",
      [](const Instance& inst, const std::string& algorithm, std::int64_t T, double budget, std::optional<double> E,
         std::uint64_t seed) {
        const DivergenceSet div = compute_divergences(inst.model, inst.arms);
        const Sampler sampler(inst.model, inst.arms);
        Rng rng(seed);
        RunTrace trace;
        {
          py::gil_scoped_release release;
          trace = run_algorithm(algorithm_from(algorithm), inst, sampler, div, T, budget, resolve_E(inst, E), rng);
        }
        return to_py(to_json(trace));
      },
      py::arg("instance"), py::arg("algorithm") = "csr-v2", py::arg("T") = 10000, py::arg("budget") = 1.0,
      py::arg("E") = py::none(), py::arg("seed") = 0);

  mod.def(
      "sweep",
      [](const Instance& inst, std::vector<std::int64_t> horizons, std::vector<std::string> algorithms, int runs,
         double budget, std::optional<double> E, std::uint64_t seed, int threads) {
        SweepConfig cfg;
        cfg.horizons = std::move(horizons);
        for (const auto& a : algorithms) cfg.algorithms.push_back(algorithm_from(a));
        cfg.runs = runs;
        cfg.budget = budget;
        cfg.fairness_E = resolve_E(inst, E);
        cfg.base_seed = seed;
        cfg.threads = threads;
        const DivergenceSet div = compute_divergences(inst.model, inst.arms);
        const OracleReport truth = oracle_report(inst, cfg.fairness_E);
        ErrorCurve curve;
        {
          py::gil_scoped_release release;
          curve = run_sweep(inst, div, truth, cfg);
        }
        return to_py(to_json(curve));
      },
      py::arg("instance"), py::arg("horizons"),
      py::arg("algorithms") = std::vector<std::string>{"csr-v1", "csr-v2", "ts-v1", "ts-v2"}, py::arg("runs") = 100,
      py::arg("budget") = 1.0, py::arg("E") = py::none(), py::arg("seed") = 0, py::arg("threads") = 1);
}
