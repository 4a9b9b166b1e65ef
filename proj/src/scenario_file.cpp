#include "hoclbf/scenario_file.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "hoclbf/errors.hpp"

namespace hoclbf {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ConfigError("missing or non-numeric '" + key + "' in " + where);
  return obj[key].get<double>();
}

Eigen::VectorXd number_array(const json& v, const std::string& where) {
  if (v.is_number()) {
    Eigen::VectorXd out(1);
    out[0] = v.get<double>();
    return out;
  }
  if (!v.is_array()) throw ConfigError(where + " must be a number or array");
  Eigen::VectorXd out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where + " entries must be numbers");
    out[static_cast<long>(i)] = v[i].get<double>();
  }
  return out;
}

std::vector<double> double_vector(const json& v, const std::string& where) {
  Eigen::VectorXd e = number_array(v, where);
  return std::vector<double>(e.data(), e.data() + e.size());
}

struct SystemSpec {
  AffineSystem system;
  std::vector<std::string> state_vars;
};

SystemSpec make_system(const json& sysj, const Eigen::VectorXd& u_min,
                       const Eigen::VectorXd& u_max) {
  check_keys(sysj, "system", {"builtin", "v"});
  if (!sysj.contains("builtin") || !sysj["builtin"].is_string())
    throw ConfigError("system.builtin must name a registered system");
  const std::string name = sysj["builtin"].get<std::string>();

  if (name == "unicycle") {
    const double v = sysj.contains("v") ? require_number(sysj, "v", "system") : 1.0;
    if (u_min.size() != 1) throw ConfigError("unicycle has one control (angular speed)");
    auto drift = [v]<class Span>(Span x) {
      using T = std::decay_t<decltype(x[0])>;
      return std::vector<T>{v * cos(x[2]), v * sin(x[2]), T(0.0)};
    };
    auto input = [](const Eigen::VectorXd&) {
      Eigen::MatrixXd g(3, 1);
      g << 0.0, 0.0, 1.0;
      return g;
    };
    return {AffineSystem::make(3, 1, drift, input, u_min, u_max), {"x", "y", "theta"}};
  }
  if (name == "single-integrator") {
    if (sysj.contains("v")) throw ConfigError("single-integrator takes no 'v'");
    if (u_min.size() != 2) throw ConfigError("single-integrator has two controls");
    auto drift = []<class Span>(Span x) {
      using T = std::decay_t<decltype(x[0])>;
      (void)x;
      return std::vector<T>{T(0.0), T(0.0)};
    };
    auto input = [](const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Identity(2, 2).eval();
    };
    return {AffineSystem::make(2, 2, drift, input, u_min, u_max), {"x", "y"}};
  }
  if (name == "double-integrator") {
    if (sysj.contains("v")) throw ConfigError("double-integrator takes no 'v'");
    if (u_min.size() != 2) throw ConfigError("double-integrator has two controls");
    auto drift = []<class Span>(Span x) {
      using T = std::decay_t<decltype(x[0])>;
      return std::vector<T>{x[2], x[3], T(0.0), T(0.0)};
    };
    auto input = [](const Eigen::VectorXd&) {
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 2);
      g(2, 0) = 1.0;
      g(3, 1) = 1.0;
      return g;
    };
    return {AffineSystem::make(4, 2, drift, input, u_min, u_max),
            {"x", "y", "vx", "vy"}};
  }
  throw ConfigError("unknown builtin system '" + name + "'");
}

}  // namespace

Scenario load_scenario_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  check_keys(j, "scenario",
             {"schema", "name", "system", "x0", "u_min", "u_max", "predicates", "formula",
              "tasks", "T", "dt", "integrator", "seed", "scheduler"});
  if (!j.contains("schema") || !j["schema"].is_number_integer() ||
      j["schema"].get<int>() != 1)
    throw ConfigError("scenario requires \"schema\": 1");

  Scenario sc;
  sc.name = j.value("name", std::string("scenario"));
  if (!j.contains("system")) throw ConfigError("missing 'system'");
  const Eigen::VectorXd u_min = number_array(j.at("u_min"), "u_min");
  const Eigen::VectorXd u_max = number_array(j.at("u_max"), "u_max");
  SystemSpec spec = make_system(j["system"], u_min, u_max);
  sc.system = spec.system;
  sc.state_vars = spec.state_vars;

  sc.x0 = number_array(j.at("x0"), "x0");
  if (sc.x0.size() != sc.system.state_dim())
    throw ConfigError("x0 dimension does not match the system");

  sc.T = require_number(j, "T", "scenario");
  sc.dt = j.contains("dt") ? require_number(j, "dt", "scenario") : 0.1;
  if (sc.T <= 0.0 || sc.dt <= 0.0) throw ConfigError("T and dt must be positive");
  if (j.contains("integrator")) {
    const std::string m = j["integrator"].get<std::string>();
    if (m == "rk4") sc.integrator = Integrator::RK4;
    else if (m == "rk45") sc.integrator = Integrator::RK45;
    else throw ConfigError("integrator must be rk4 or rk45");
  }
  if (j.contains("seed")) sc.seed = j["seed"].get<unsigned>();

  // Named predicate expressions; `pi` is predeclared.
  ParseContext ctx;
  ctx.state_vars = sc.state_vars;
  ctx.named_predicates["pi"] = expr_const(M_PI);
  if (j.contains("predicates")) {
    if (!j["predicates"].is_object()) throw ConfigError("'predicates' must be an object");
    for (auto it = j["predicates"].begin(); it != j["predicates"].end(); ++it) {
      if (!it.value().is_string())
        throw ConfigError("predicate '" + it.key() + "' must be an expression string");
      try {
        ctx.named_predicates[it.key()] =
            parse_expression(it.value().get<std::string>(), ctx.state_vars,
                             ctx.named_predicates);
      } catch (const SyntaxError& e) {
        throw ConfigError("predicate '" + it.key() + "': " + e.what());
      }
    }
  }

  if (j.contains("formula")) {
    if (!j["formula"].is_string()) throw ConfigError("'formula' must be a string");
    const std::string text = j["formula"].get<std::string>();
    if (text.empty()) throw ConfigError("'formula' must not be empty");
    sc.formula = parse(text, ctx);
  }

  int explicit_counter = 0;
  if (j.contains("tasks")) {
    if (!j["tasks"].is_array()) throw ConfigError("'tasks' must be an array");
    for (const auto& tj : j["tasks"]) {
      check_keys(tj, "task", {"id", "kind", "interval", "predicate", "chain"});
      AtomicTask task;
      task.id = tj.value("id", "task" + std::to_string(explicit_counter++));
      const std::string kind = tj.at("kind").get<std::string>();
      if (kind == "G") task.kind = TaskKind::G;
      else if (kind == "F") task.kind = TaskKind::F;
      else throw ConfigError("task kind must be G or F");
      if (!tj.contains("interval") || !tj["interval"].is_array() ||
          tj["interval"].size() != 2)
        throw ConfigError("task interval must be [t_a, t_b]");
      task.t_a = tj["interval"][0].get<double>();
      task.t_b = tj["interval"][1].get<double>();
      if (task.t_a < 0.0 || task.t_b < task.t_a)
        throw BadInterval("task interval must satisfy 0 <= t_a <= t_b");
      const std::string pred = tj.at("predicate").get<std::string>();
      ExprPtr expr;
      if (auto it = ctx.named_predicates.find(pred); it != ctx.named_predicates.end()) {
        expr = it->second;
        task.pred_text = pred;
      } else {
        expr = parse_expression(pred, ctx.state_vars, ctx.named_predicates);
        task.pred_text = pred;
      }
      task.pred_expr = expr;
      task.predicate = expr_to_field(expr);
      if (tj.contains("chain")) {
        const auto& cj = tj["chain"];
        check_keys(cj, "task.chain", {"p", "q", "forms"});
        ExplicitChain ec;
        ec.p = double_vector(cj.at("p"), "chain.p");
        ec.q = double_vector(cj.at("q"), "chain.q");
        if (ec.p.size() != ec.q.size() || ec.p.empty())
          throw ConfigError("chain.p and chain.q must be equal-length, non-empty");
        if (cj.contains("forms")) {
          for (const auto& f : cj["forms"]) {
            const std::string s = f.get<std::string>();
            if (s == "plain") ec.forms.push_back(PowerForm::PlainPower);
            else if (s == "signed") ec.forms.push_back(PowerForm::SignedPower);
            else throw ConfigError("chain form must be plain or signed");
          }
          if (ec.forms.size() != ec.p.size())
            throw ConfigError("chain.forms length mismatch");
        }
        sc.explicit_chains[task.id] = std::move(ec);
      }
      sc.tasks.push_back(std::move(task));
    }
  }
  if (!sc.formula && sc.tasks.empty())
    throw ConfigError("scenario needs a 'formula' or a non-empty 'tasks' list");

  if (j.contains("scheduler")) {
    const auto& sj = j["scheduler"];
    check_keys(sj, "scheduler",
               {"H", "q_class1", "q_class2", "p_class2", "safety_factor", "slack_weight",
                "switch", "eps_switch", "violation_tol", "relative_degree",
                "class2_gains"});
    SchedulerConfig& cfg = sc.scheduler;
    if (sj.contains("H")) cfg.horizon = require_number(sj, "H", "scheduler");
    if (sj.contains("q_class1")) cfg.default_q_class1 = sj["q_class1"].get<double>();
    if (sj.contains("q_class2")) cfg.default_q_class2 = sj["q_class2"].get<double>();
    if (sj.contains("p_class2")) cfg.default_p_class2 = sj["p_class2"].get<double>();
    if (sj.contains("safety_factor"))
      cfg.budget_safety_factor = sj["safety_factor"].get<double>();
    if (sj.contains("slack_weight")) cfg.slack_weight = sj["slack_weight"].get<double>();
    if (sj.contains("switch")) cfg.enable_switch = sj["switch"].get<bool>();
    if (sj.contains("eps_switch")) cfg.eps_switch = sj["eps_switch"].get<double>();
    if (sj.contains("violation_tol"))
      cfg.violation_tol = sj["violation_tol"].get<double>();
    if (cfg.horizon <= 0.0) throw ConfigError("scheduler.H must be positive");
    if (!(cfg.default_q_class1 > 0.0 && cfg.default_q_class1 < 1.0))
      throw ConfigError("scheduler.q_class1 must lie in (0,1)");
    if (cfg.default_q_class2 < 1.0) throw ConfigError("scheduler.q_class2 must be >= 1");
    if (!(cfg.budget_safety_factor > 0.0 && cfg.budget_safety_factor < 1.0))
      throw ConfigError("scheduler.safety_factor must lie in (0,1)");
    if (cfg.slack_weight <= 0.0) throw ConfigError("scheduler.slack_weight must be > 0");

    // Keys name either a bound predicate (applies to every task using it,
    // resolved after decomposition) or a task id directly.
    auto remap = [&](const json& obj, auto&& store) {
      for (auto it = obj.begin(); it != obj.end(); ++it) store(it.key(), it.value());
    };
    std::vector<AtomicTask> all_tasks = sc.tasks;
    if (sc.formula) {
      Decomposition d = decompose(*sc.formula, sc.x0);
      all_tasks.insert(all_tasks.end(), d.tasks.begin(), d.tasks.end());
    }
    auto ids_for_key = [&](const std::string& key) {
      std::vector<std::string> ids;
      auto named = ctx.named_predicates.find(key);
      for (const auto& t : all_tasks) {
        if ((named != ctx.named_predicates.end() && t.pred_expr == named->second) ||
            t.id == key)
          ids.push_back(t.id);
      }
      if (ids.empty())
        throw ConfigError("scheduler key '" + key +
                          "' matches no task (by predicate name or task id)");
      return ids;
    };
    if (sj.contains("relative_degree")) {
      remap(sj["relative_degree"], [&](const std::string& k, const json& v) {
        for (const auto& id : ids_for_key(k)) cfg.relative_degree[id] = v.get<int>();
      });
    }
    if (sj.contains("class2_gains")) {
      remap(sj["class2_gains"], [&](const std::string& k, const json& v) {
        for (const auto& id : ids_for_key(k))
          cfg.class2_gains[id] = double_vector(v, "class2_gains");
      });
    }
  }
  return sc;
}

// ------------------------------------------------------------
// Builtin scenarios: the three studies plus the full run.
// ------------------------------------------------------------

namespace {

const char* kCaseStudyFull = R"json({
  "schema": 1,
  "name": "casestudy-full",
  "system": {"builtin": "unicycle", "v": 1.732},
  "x0": [0.0, -7.7, 0.7853981633974483],
  "u_min": -0.9,
  "u_max": 0.9,
  "predicates": {
    "b1": "16 - x^2 - y^2",
    "b2": "(pi/12)^2 - (theta - 5*pi/4)^2",
    "b3": "16 - (x + 10)^2 - (y + 10)^2",
    "b4": "(x + 8)^2 + (y + 4)^2 - 4",
    "b5": "(x + 10)^2 + (y + 10)^2 - 9"
  },
  "formula": "((b1 >= 0) => G[0,5](b1 >= 0)) && ((b1 < 0) => G[4,5](b1 >= 0)) && F[7,9](b2 >= 0) && G[21,32](b3 >= 0) && G[0,32](b4 >= 0) && G[0,32](b5 >= 0)",
  "T": 32.0,
  "dt": 0.1,
  "scheduler": {
    "H": 10.0,
    "q_class1": 0.3333333333333333,
    "q_class2": 1.0,
    "p_class2": 0.4,
    "safety_factor": 0.9,
    "slack_weight": 1000.0,
    "switch": true,
    "relative_degree": {"b2": 1},
    "class2_gains": {"b4": [1.3, 1.3], "b5": [1.3, 1.3]}
  }
})json";

const char* kClass1FiniteTime = R"json({
  "schema": 1,
  "name": "class1-finite-time",
  "system": {"builtin": "unicycle", "v": 1.732},
  "x0": [0.0, -7.7, 0.7853981633974483],
  "u_min": -0.6,
  "u_max": 0.6,
  "predicates": {"b1": "16 - x^2 - y^2"},
  "tasks": [
    {"id": "phi3", "kind": "G", "interval": [4.0, 30.0], "predicate": "b1",
     "chain": {"p": [5.0, 0.14], "q": [0.3333333333333333, 0.3333333333333333]}}
  ],
  "T": 30.0,
  "dt": 0.1,
  "scheduler": {"H": 30.0, "switch": true}
})json";

const char* kClass2Linear = R"json({
  "schema": 1,
  "name": "class2-linear",
  "system": {"builtin": "unicycle", "v": 1.732},
  "x0": [0.0, -7.7, 0.7853981633974483],
  "u_min": -0.6,
  "u_max": 0.6,
  "predicates": {"b1": "16 - x^2 - y^2"},
  "tasks": [
    {"id": "phi3", "kind": "G", "interval": [4.0, 30.0], "predicate": "b1",
     "chain": {"p": [5.0, 0.14], "q": [1.0, 1.0]}}
  ],
  "T": 30.0,
  "dt": 0.1,
  "scheduler": {"H": 30.0, "switch": true}
})json";

const char* kClass2Quadratic = R"json({
  "schema": 1,
  "name": "class2-quadratic",
  "system": {"builtin": "unicycle", "v": 1.732},
  "x0": [0.0, -7.7, 0.7853981633974483],
  "u_min": -0.6,
  "u_max": 0.6,
  "predicates": {"b1": "16 - x^2 - y^2"},
  "tasks": [
    {"id": "phi3", "kind": "G", "interval": [4.0, 30.0], "predicate": "b1",
     "chain": {"p": [5.0, 0.14], "q": [1.0, 2.0]}}
  ],
  "T": 30.0,
  "dt": 0.1,
  "scheduler": {"H": 30.0, "switch": true}
})json";

const char* kChattering = R"json({
  "schema": 1,
  "name": "chattering",
  "system": {"builtin": "unicycle", "v": 1.732},
  "x0": [0.0, -3.7, 0.0],
  "u_min": -0.6,
  "u_max": 0.6,
  "predicates": {"b1": "16 - x^2 - y^2"},
  "tasks": [
    {"id": "safety", "kind": "G", "interval": [0.0, 80.0], "predicate": "b1",
     "chain": {"p": [6.0, 0.14], "q": [0.3333333333333333, 0.3333333333333333]}}
  ],
  "T": 80.0,
  "dt": 0.25,
  "scheduler": {"H": 80.0, "switch": false}
})json";

const char* kChatteringSwitch = R"json({
  "schema": 1,
  "name": "chattering-switch",
  "system": {"builtin": "unicycle", "v": 1.732},
  "x0": [0.0, -3.7, 0.0],
  "u_min": -0.6,
  "u_max": 0.6,
  "predicates": {"b1": "16 - x^2 - y^2"},
  "tasks": [
    {"id": "safety", "kind": "G", "interval": [0.0, 80.0], "predicate": "b1",
     "chain": {"p": [6.0, 0.14], "q": [0.3333333333333333, 0.3333333333333333]}}
  ],
  "T": 80.0,
  "dt": 0.25,
  "scheduler": {"H": 80.0, "switch": true}
})json";

const std::vector<std::pair<std::string, const char*>>& builtin_table() {
  static const std::vector<std::pair<std::string, const char*>> table = {
      {"casestudy-full", kCaseStudyFull},
      {"class1-finite-time", kClass1FiniteTime},
      {"class2-linear", kClass2Linear},
      {"class2-quadratic", kClass2Quadratic},
      {"chattering", kChattering},
      {"chattering-switch", kChatteringSwitch},
  };
  return table;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : builtin_table()) names.push_back(name);
  return names;
}

bool is_builtin_scenario(const std::string& name) {
  for (const auto& [n, text] : builtin_table())
    if (n == name) return true;
  return false;
}

std::string builtin_scenario_json(const std::string& name) {
  for (const auto& [n, text] : builtin_table())
    if (n == name) return text;
  throw ConfigError("unknown builtin scenario '" + name + "'");
}

Scenario load_scenario(const std::string& path_or_name) {
  if (is_builtin_scenario(path_or_name))
    return load_scenario_json(builtin_scenario_json(path_or_name));
  std::ifstream in(path_or_name);
  if (!in) throw ConfigError("cannot open scenario file '" + path_or_name + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario_json(buf.str());
}

}  // namespace hoclbf
