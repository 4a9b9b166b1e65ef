#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "hoclbf/errors.hpp"
#include "hoclbf/scenario_file.hpp"
#include "hoclbf/sim.hpp"
#include "hoclbf/trace_io.hpp"

namespace {

using namespace hoclbf;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

int cmd_run(const std::string& target, const std::string& out_dir, double dt_override,
            double horizon_override, long seed_override) {
  Scenario sc = load_scenario(target);
  if (dt_override > 0.0) sc.dt = dt_override;
  if (horizon_override > 0.0) sc.T = horizon_override;
  if (seed_override >= 0) sc.seed = static_cast<unsigned>(seed_override);

  RunRecord rec = run(sc);

  std::filesystem::create_directories(out_dir);
  const std::string trace_path = out_dir + "/" + sc.name + "_trace.csv";
  const std::string events_path = out_dir + "/" + sc.name + "_events.log";
  write_trace_csv(rec, trace_path);
  write_event_log(rec, events_path);

  std::cout << "trace: " << trace_path << "\n";
  std::cout << "events: " << events_path << "\n";
  std::cout << "qp: " << rec.qp_solves << " solves, " << rec.qp_infeasible
            << " infeasible\n";
  if (!rec.stl_evaluated) {
    std::cout << "STL: NOT-EVALUATED\n";
    return 0;
  }
  std::cout << "STL: " << (rec.stl_satisfied ? "SATISFIED" : "VIOLATED") << "\n";
  return rec.stl_satisfied ? 0 : 2;
}

int cmd_describe(const std::string& target) {
  Scenario sc = load_scenario(target);

  std::vector<AtomicTask> tasks = sc.tasks;
  if (sc.formula) {
    Decomposition d = decompose(*sc.formula, sc.x0);
    tasks.insert(tasks.end(), d.tasks.begin(), d.tasks.end());
  }
  Scheduler sched(sc.system, sc.scheduler, tasks, sc.explicit_chains);
  sched.resolve_degrees(sc.x0);

  std::cout << "scenario: " << sc.name << "\n";
  std::cout << "state:";
  for (const auto& v : sc.state_vars) std::cout << ' ' << v;
  std::cout << "  (n=" << sc.system.state_dim() << ", q=" << sc.system.control_dim()
            << ")\n";
  std::cout << "T=" << fmt(sc.T) << " dt=" << fmt(sc.dt) << " H="
            << fmt(sc.scheduler.horizon) << "\n";
  if (sc.formula) std::cout << "formula horizon: " << fmt(horizon(*sc.formula)) << "\n";
  std::cout << "tasks:\n";
  std::printf("  %-6s %-4s %-12s %-9s %-2s %-7s %-18s %s\n", "id", "kind", "interval",
              "deadline", "m", "class", "p", "q");
  for (const auto& rt : sched.runtimes()) {
    const AtomicTask& t = rt.task;
    BarrierChain chain = sched.preview_chain(rt, 0.0, sc.x0);
    std::string interval = "[" + fmt(t.t_a) + ", " + fmt(t.t_b) + "]";
    std::string deadline = t.deadline() <= 0.0 ? "-" : fmt(t.deadline());
    std::string p_text, q_text;
    for (int i = 1; i <= chain.degree(); ++i) {
      if (i > 1) {
        p_text += ", ";
        q_text += ", ";
      }
      p_text += fmt(chain.level(i).p);
      q_text += fmt(chain.level(i).q);
    }
    const char* cls = chain.mode() == ChainMode::Class1 ? "Class1" : "Class2";
    std::printf("  %-6s %-4s %-12s %-9s %-2d %-7s %-18s %s\n", t.id.c_str(),
                t.kind == TaskKind::G ? "G" : "F", interval.c_str(), deadline.c_str(),
                rt.m, cls, p_text.c_str(), q_text.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STL-constrained control synthesis via barrier-chain QPs"};
  app.require_subcommand(1);

  std::string target, out_dir = ".";
  double dt_override = -1.0, horizon_override = -1.0;
  long seed_override = -1;

  CLI::App* run_cmd = app.add_subcommand("run", "simulate a scenario and export traces");
  run_cmd->add_option("scenario", target, "scenario file or builtin name")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--dt", dt_override, "control period override (s)");
  run_cmd->add_option("--horizon", horizon_override, "simulation horizon override (s)");
  run_cmd->add_option("--seed", seed_override, "seed override");

  CLI::App* describe_cmd =
      app.add_subcommand("describe", "print the decomposed task table of a scenario");
  describe_cmd->add_option("scenario", target, "scenario file or builtin name")
      ->required();

  CLI::App* list_cmd = app.add_subcommand("list-builtin", "list builtin scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed())
      return cmd_run(target, out_dir, dt_override, horizon_override, seed_override);
    if (describe_cmd->parsed()) return cmd_describe(target);
    if (list_cmd->parsed()) {
      for (const auto& name : hoclbf::builtin_scenario_names()) std::cout << name << "\n";
      return 0;
    }
  } catch (const hoclbf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
