#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "renewalq/cli/config.hpp"

namespace renewalq::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitTolerance = 4,
};

/// States at every grid time.
struct Solution {
  std::vector<double> times;
  std::vector<ComplexMatrix> states;
};

Solution run_solver(const RunConfig& config, SolverChoice solver, int threads);

/// time, r_ij_re, r_ij_im (row-major over i, j), then one column per
/// observable; 17 significant digits.
void write_csv(std::ostream& out, const RunConfig& config, const Solution& solution);

std::string format_double(double x);

int cmd_simulate(const std::filesystem::path& config_path,
                 const std::optional<std::filesystem::path>& out_path, int threads,
                 std::ostream& out, std::ostream& err);

int cmd_compare(const std::filesystem::path& config_path, const std::string& solver_a,
                const std::string& solver_b, double tol, int threads, std::ostream& out,
                std::ostream& err);

int cmd_validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

}  // namespace renewalq::cli
