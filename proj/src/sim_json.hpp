#pragma once

#include "blockhouse/sim.hpp"
#include "json.hpp"

namespace blockhouse::sim {

nlohmann::json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);

}  // namespace blockhouse::sim
