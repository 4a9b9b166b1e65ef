#pragma once

#include <string>
#include <vector>

#include "hoclbf/sim.hpp"

namespace hoclbf {

// Per-sample export of a run: t, state, control, per-task psi levels and
// slacks, then the semicolon-joined active task ids. Numbers are written in
// shortest round-trip form; inactive/absent cells are empty.
void write_trace_csv(const RunRecord& rec, const std::string& path);

void write_event_log(const RunRecord& rec, const std::string& path);

struct TraceTable {
  std::vector<std::string> columns;           // without the active_tasks column
  std::vector<std::vector<double>> rows;      // NaN for empty cells
  std::vector<std::string> active;            // active_tasks column
};

TraceTable read_trace_csv(const std::string& path);

}  // namespace hoclbf
