// Command-line front end: simulate, compare, validate.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "renewalq/cli/commands.hpp"
#include "renewalq/parallel.hpp"

int main(int argc, char** argv) {
  namespace rc = renewalq::cli;
  CLI::App app{"Collisional and Lindblad dynamics driven by renewal processes"};
  app.require_subcommand(1);

  int threads = renewalq::default_thread_count();

  std::string sim_config;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Run the configured solver and emit CSV");
  simulate->add_option("config", sim_config, "JSON run configuration")->required();
  simulate->add_option("--out", sim_out, "Write CSV here instead of standard output");
  simulate->add_option("--threads", threads, "Monte Carlo workers (default RENEWALQ_THREADS)")
      ->check(CLI::PositiveNumber);

  std::string cmp_config;
  std::string solver_a;
  std::string solver_b;
  double tol = 1e-3;
  auto* compare = app.add_subcommand("compare", "Trace distance between two solvers");
  compare->add_option("config", cmp_config, "JSON run configuration")->required();
  compare->add_option("solverA", solver_a, "First solver")->required();
  compare->add_option("solverB", solver_b, "Second solver")->required();
  compare->add_option("--tol", tol, "Exit 4 unless max distance is below this");
  compare->add_option("--threads", threads, "Monte Carlo workers (default RENEWALQ_THREADS)")
      ->check(CLI::PositiveNumber);

  std::string val_config;
  auto* validate = app.add_subcommand("validate", "Check every ingredient of the model");
  validate->add_option("config", val_config, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rc::kExitOk : rc::kExitConfig;
  }

  if (simulate->parsed()) {
    const std::optional<std::filesystem::path> out =
        sim_out.empty() ? std::nullopt : std::optional<std::filesystem::path>(sim_out);
    return rc::cmd_simulate(sim_config, out, threads, std::cout, std::cerr);
  }
  if (compare->parsed()) {
    return rc::cmd_compare(cmp_config, solver_a, solver_b, tol, threads, std::cout, std::cerr);
  }
  return rc::cmd_validate(val_config, std::cout, std::cerr);
}
