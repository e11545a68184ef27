#pragma once

#include <string>

#include "nwa/lp_format.hpp"
#include "nwa/model.hpp"

namespace nwa {

/// Result of an external solve, mapped back onto model ids.
struct ExternalResult {
    SolStatus status = SolStatus::Error;
    double objective = 0.0;
    std::vector<double> var_values;  // by model variable id
    std::vector<double> row_duals;   // by model constraint id (0 when absent)
};

/// Writes `<workdir>/model.lp`, runs `command model.lp solution.txt` with the
/// working directory set to `workdir`, and parses the produced solution
/// document. Throws std::runtime_error on launch failure or unparsable
/// output; solver-reported infeasible/unbounded comes back as a status.
ExternalResult solve_external(const Model& model, const std::string& command,
                              const std::string& workdir);

}  // namespace nwa
