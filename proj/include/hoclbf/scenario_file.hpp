#pragma once

#include <string>
#include <vector>

#include "hoclbf/sim.hpp"

namespace hoclbf {

// Loads a scenario from its JSON text (schema version 1). Unknown keys are
// rejected; see the README for the field reference.
Scenario load_scenario_json(const std::string& json_text);

// Loads from a file path, or from the builtin registry when `path_or_name`
// names a builtin scenario.
Scenario load_scenario(const std::string& path_or_name);

std::vector<std::string> builtin_scenario_names();
bool is_builtin_scenario(const std::string& name);
std::string builtin_scenario_json(const std::string& name);

}  // namespace hoclbf
