#include "nwa/external_solver.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nwa {

namespace fs = std::filesystem;

ExternalResult solve_external(const Model& model, const std::string& command,
                              const std::string& workdir) {
    if (command.empty()) throw std::runtime_error("external solver: empty command");
    fs::create_directories(workdir);
    const fs::path model_path = fs::path(workdir) / "model.lp";
    const fs::path sol_path = fs::path(workdir) / "solution.txt";

    {
        std::ofstream out(model_path);
        if (!out) throw std::runtime_error("external solver: cannot write " + model_path.string());
        out << emit_model_file(model);
    }
    std::error_code ec;
    fs::remove(sol_path, ec);

    std::string cmdline = "cd '" + workdir + "' && " + command + " model.lp solution.txt";
    int rc = std::system(cmdline.c_str());
    if (rc != 0)
        throw std::runtime_error("external solver: command failed (exit " + std::to_string(rc) +
                                 "): " + command);
    std::ifstream in(sol_path);
    if (!in)
        throw std::runtime_error("external solver: no solution document at " + sol_path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    SolutionDoc doc = parse_solution_doc(buf.str());

    ExternalResult res;
    res.status = doc.status;
    res.objective = doc.objective;
    res.var_values.assign(model.num_variables(), 0.0);
    res.row_duals.assign(model.num_constraints(), 0.0);
    for (const auto& [name, value] : doc.primal) {
        VarId v = model.find_variable(name);
        if (v < 0) throw std::runtime_error("external solver: unknown variable in output: " + name);
        res.var_values[v] = value;
    }
    for (const auto& [name, value] : doc.dual) {
        ConId c = model.find_constraint(name);
        if (c < 0)
            throw std::runtime_error("external solver: unknown constraint in output: " + name);
        res.row_duals[c] = value;
    }
    return res;
}

}  // namespace nwa
