#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meerr/simulate.hpp"

namespace meerr {

// Outcome of reading a scenario document. On failure `errors` holds one
// entry per problem, each prefixed with the JSON path of the offending
// field ("population.rho", "estimators[0].omega", ...).
struct ParsedConfig {
    bool ok = false;
    std::vector<std::string> errors;
    SimulationScenario scenario;
};

// Parses a scenario document of the form
//   {
//     "population": { "mu0": ..., "mu": [...], "c0": ..., "c": [...],
//                     "c0_err": ..., "c_err": [...],
//                     "rho0": [...], "rho": [[...], ...] },
//     "estimators": [ { "id": "M1", "omega": [...] }, ... ],
//     "simulation": { "n": ..., "replications": ..., "seed": ...,
//                     "distribution": "gaussian" | "lognormal" }
//   }
// Unknown keys are rejected so typos cannot silently change a study.
ParsedConfig parse_config(const nlohmann::json& doc);

// Same, starting from raw text; malformed JSON becomes a single error.
ParsedConfig parse_config_text(const std::string& text);

// Inverse of parse_config: parse_config(emit_config(s)) reproduces s
// exactly, including every floating-point value.
nlohmann::json emit_config(const SimulationScenario& scenario);

}  // namespace meerr
