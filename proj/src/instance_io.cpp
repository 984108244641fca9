#include "fcb/instance_io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fcb/causal.hpp"
#include "fcb/error.hpp"

namespace fcb {

namespace {

Json rows_of(std::span<const double> table, int card) {
  Json rows = Json::array();
  for (std::size_t r = 0; card > 0 && r < table.size() / card; ++r)
    rows.push_back(std::vector<double>(table.begin() + r * card, table.begin() + (r + 1) * card));
  return rows;
}

std::vector<double> flatten_rows(const Json& rows, const std::string& what) {
  if (!rows.is_array()) throw Error(ErrorKind::Validation, what + " must be an array of rows");
  std::vector<double> out;
  for (const Json& row : rows) {
    if (!row.is_array()) throw Error(ErrorKind::Validation, what + " rows must be arrays");
    for (const Json& x : row) {
      if (!x.is_number()) throw Error(ErrorKind::Validation, what + " entries must be numbers");
      out.push_back(x.get<double>());
    }
  }
  return out;
}

const Json& field(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::Validation, std::string("missing field \"") + key + "\"");
  return *it;
}

int node_id(const CausalModel& model, const Json& ref) {
  if (!ref.is_string()) throw Error(ErrorKind::Validation, "node references must be names");
  const int id = model.find(ref.get<std::string>());
  if (id < 0) throw Error(ErrorKind::NodeNotFound, "unknown node \"" + ref.get<std::string>() + "\"");
  return id;
}

}  // namespace

Json instance_to_json(const Instance& inst) {
  const CausalModel& m = inst.model;
  Json doc;
  doc["version"] = "v1";
  Json nodes = Json::array();
  for (int i = 0; i < m.size(); ++i) {
    const Node& n = m.nodes[i];
    Json j;
    j["id"] = n.name;
    j["states"] = n.states;
    Json parents = Json::array();
    for (int p : n.parents) parents.push_back(m.nodes[p].name);
    j["parents"] = parents;
    j["cpt"] = rows_of(n.cpt, n.cardinality());
    if (i == m.target) j["values"] = m.target_values;
    nodes.push_back(j);
  }
  doc["nodes"] = nodes;
  doc["sensitive"] = m.nodes[m.sensitive].name;
  doc["intervention"] = m.nodes[m.intervention].name;
  doc["target"] = m.nodes[m.target].name;
  Json arms = Json::array();
  const int vcard = m.cardinality(m.intervention);
  for (const Arm& a : inst.arms) {
    Json j;
    j["table"] = rows_of(a.table, vcard);
    j["cost_pull"] = a.cost_pull;
    j["cost_force_s"] = a.cost_force_s;
    j["cost_force_sprime"] = a.cost_force_sprime;
    arms.push_back(j);
  }
  doc["arms"] = arms;
  doc["cheap_arm_constraint"] = inst.cheap_arm_constraint;
  doc["pool_forced_into_outcome"] = inst.pool_forced_into_outcome;
  doc["fairness_E"] = inst.fairness_E ? Json(*inst.fairness_E) : Json(nullptr);
  return doc;
}

namespace {

Instance parse_instance(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::Parse, "instance document must be a JSON object");
  const Json& version = field(doc, "version");
  if (version != "v1") throw Error(ErrorKind::Validation, "unsupported instance version " + version.dump());

  Instance inst;
  CausalModel& m = inst.model;
  const Json& nodes = field(doc, "nodes");
  if (!nodes.is_array() || nodes.empty()) throw Error(ErrorKind::Validation, "\"nodes\" must be a nonempty array");
  for (const Json& jn : nodes) {
    Node n;
    n.name = field(jn, "id").get<std::string>();
    const Json& states = field(jn, "states");
    if (states.is_number_integer()) {
      for (int s = 0; s < states.get<int>(); ++s) n.states.push_back(std::to_string(s));
    } else {
      n.states = states.get<std::vector<std::string>>();
    }
    if (m.find(n.name) >= 0) throw Error(ErrorKind::Validation, "duplicate node \"" + n.name + "\"");
    m.nodes.push_back(std::move(n));
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Json& jn = nodes[i];
    Node& n = m.nodes[i];
    if (auto it = jn.find("parents"); it != jn.end())
      for (const Json& p : *it) n.parents.push_back(node_id(m, p));
    n.cpt = flatten_rows(field(jn, "cpt"), "cpt of " + n.name);
  }
  m.sensitive = node_id(m, field(doc, "sensitive"));
  m.intervention = node_id(m, field(doc, "intervention"));
  m.target = node_id(m, field(doc, "target"));
  const Json& target_node = nodes[m.target];
  if (auto it = target_node.find("values"); it != target_node.end()) {
    m.target_values = it->get<std::vector<double>>();
  } else {
    throw Error(ErrorKind::Validation, "target node needs \"values\"");
  }

  const Json& arms = field(doc, "arms");
  if (!arms.is_array()) throw Error(ErrorKind::Validation, "\"arms\" must be an array");
  for (std::size_t k = 0; k < arms.size(); ++k) {
    Arm a;
    a.index = static_cast<int>(k);
    a.table = flatten_rows(field(arms[k], "table"), "arm table");
    a.cost_pull = arms[k].value("cost_pull", 0.0);
    a.cost_force_s = arms[k].value("cost_force_s", a.cost_pull);
    a.cost_force_sprime = arms[k].value("cost_force_sprime", a.cost_pull);
    inst.arms.push_back(std::move(a));
  }
  inst.cheap_arm_constraint = doc.value("cheap_arm_constraint", false);
  inst.pool_forced_into_outcome = doc.value("pool_forced_into_outcome", false);
  if (auto it = doc.find("fairness_E"); it != doc.end() && it->is_number())
    inst.fairness_E = it->get<double>();

  require_valid(m, inst.arms);
  m.finalize();
  return inst;
}

}  // namespace

Instance instance_from_json(const Json& doc) {
  try {
    return parse_instance(doc);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("malformed instance: ") + e.what());
  }
}

Instance load_instance(const std::string& path) {
  const std::string text = read_text_file(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  return instance_from_json(doc);
}

void save_instance(const std::string& path, const Instance& instance) {
  write_text_file(path, instance_to_json(instance).dump(2) + "\n");
}

std::string instance_digest(const Instance& instance) {
  const std::string text = instance_to_json(instance).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << "\n";
  }
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("bad matrix entry \"" + cell + "\"", line_no, 1);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged matrix row", line_no, 1);
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()));
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

namespace {

Band band_from(const Json& j, const char* name) {
  if (!j.is_array() || j.size() != 2)
    throw Error(ErrorKind::Validation, std::string(name) + " must be a [lo, hi] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

SyntheticConfig synthetic_config_from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::Validation, "generator config must be a JSON object");
  SyntheticConfig c;
  try {
    c.K = doc.value("K", c.K);
    c.m = doc.value("m", c.m);
    c.seed = doc.value("seed", c.seed);
    c.epsilon_param = doc.value("epsilon_param", c.epsilon_param);
    c.fairness_E = doc.value("fairness_E", c.fairness_E);
    c.n_unfair = doc.value("n_unfair", c.n_unfair);
    c.cheap_arm_constraint = doc.value("cheap_arm_constraint", c.cheap_arm_constraint);
    c.max_attempts = doc.value("max_attempts", c.max_attempts);
    if (doc.contains("reward_gap")) c.reward_gap = band_from(doc["reward_gap"], "reward_gap");
    if (doc.contains("fairness_gap")) c.fairness_gap = band_from(doc["fairness_gap"], "fairness_gap");
    if (doc.contains("m_band")) c.m_band = band_from(doc["m_band"], "m_band");
    if (doc.contains("d_band")) c.d_band = band_from(doc["d_band"], "d_band");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("malformed generator config: ") + e.what());
  }
  return c;
}

Json to_json(const SyntheticConfig& c) {
  Json j{{"K", c.K},
         {"m", c.m},
         {"seed", c.seed},
         {"epsilon_param", c.epsilon_param},
         {"fairness_E", c.fairness_E},
         {"n_unfair", c.n_unfair},
         {"reward_gap", {c.reward_gap.lo, c.reward_gap.hi}},
         {"fairness_gap", {c.fairness_gap.lo, c.fairness_gap.hi}},
         {"cheap_arm_constraint", c.cheap_arm_constraint},
         {"max_attempts", c.max_attempts}};
  if (c.m_band) j["m_band"] = {c.m_band->lo, c.m_band->hi};
  if (c.d_band) j["d_band"] = {c.d_band->lo, c.d_band->hi};
  return j;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path);
  out << text;
}

}  // namespace fcb
