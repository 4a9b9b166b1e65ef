#include "hoclbf/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hoclbf/errors.hpp"

namespace hoclbf {

namespace {

std::string cell(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

void write_trace_csv(const RunRecord& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace file '" + path + "'");

  const size_t samples = rec.trajectory.times.size();
  const int q = samples > 1 ? static_cast<int>(rec.trajectory.controls.front().size()) : 0;

  out << "t";
  for (const auto& v : rec.state_vars) out << ',' << v;
  for (int j = 0; j < q; ++j) out << ",u" << j;
  for (const auto& tt : rec.task_traces) {
    for (int lvl = 0; lvl < tt.m; ++lvl) out << ",psi" << lvl << '[' << tt.id << ']';
    out << ",slack[" << tt.id << ']';
  }
  out << ",active_tasks\r\n";

  for (size_t k = 0; k < samples; ++k) {
    out << cell(rec.trajectory.times[k]);
    const Eigen::VectorXd& x = rec.trajectory.states[k];
    for (long j = 0; j < x.size(); ++j) out << ',' << cell(x[j]);
    for (int j = 0; j < q; ++j) {
      if (k < rec.trajectory.controls.size())
        out << ',' << cell(rec.trajectory.controls[k][j]);
      else
        out << ',';
    }
    std::string active;
    for (const auto& tt : rec.task_traces) {
      const Eigen::VectorXd& psis = tt.psi[k];
      for (int lvl = 0; lvl < tt.m; ++lvl)
        out << ',' << cell(lvl < psis.size() ? psis[lvl] : std::nan(""));
      out << ',' << cell(tt.slack[k]);
      if (!std::isnan(psis[0])) {
        if (!active.empty()) active += ';';
        active += tt.id;
      }
    }
    out << ',' << active << "\r\n";
  }
}

void write_event_log(const RunRecord& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write event log '" + path + "'");
  for (const auto& line : rec.events) out << line << '\n';
}

TraceTable read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trace file '" + path + "'");
  TraceTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(cur);
    if (header) {
      table.columns.assign(fields.begin(), fields.end() - 1);
      header = false;
      continue;
    }
    std::vector<double> row;
    for (size_t i = 0; i + 1 < fields.size(); ++i) {
      if (fields[i].empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        double v = 0.0;
        auto [p, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v);
        if (ec != std::errc{} || p != fields[i].data() + fields[i].size())
          throw ConfigError("bad numeric cell '" + fields[i] + "' in " + path);
        row.push_back(v);
      }
    }
    table.rows.push_back(std::move(row));
    table.active.push_back(fields.back());
  }
  return table;
}

}  // namespace hoclbf
