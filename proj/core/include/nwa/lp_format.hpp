#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "nwa/model.hpp"

namespace nwa {

/// Writes the model in the project's LP interchange format:
/// `Minimize` / `Subject To` / `Bounds` / `Binary` / `End` sections,
/// one constraint per line, coefficients with 17 significant digits.
std::string emit_model_file(const Model& model);

/// Parses text produced by emit_model_file (or a compatible writer)
/// back into a model. Throws std::runtime_error on malformed input.
Model parse_model_file(const std::string& text);

enum class SolStatus { Optimal, Infeasible, Unbounded, LimitHit, Error };

/// Solver interchange document: status, objective, primal values by
/// variable name, dual values by constraint name.
struct SolutionDoc {
    SolStatus status = SolStatus::Error;
    double objective = 0.0;
    std::map<std::string, double> primal;
    std::map<std::string, double> dual;
};

std::string emit_solution_doc(const SolutionDoc& doc);
SolutionDoc parse_solution_doc(const std::string& text);

std::string to_string(SolStatus s);

}  // namespace nwa
