#pragma once

// JSON run configuration. Matrices are nested arrays of rows whose entries
// are [re, im] pairs (plain numbers are read as real).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "renewalq/collisional.hpp"
#include "renewalq/lindblad_traj.hpp"

namespace renewalq::cli {

/// Malformed or invalid configuration; what() names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverChoice { series, volterra, laplace, mc, dyson, mc_lindblad, expm };

std::optional<SolverChoice> parse_solver(const std::string& name);
std::string solver_name(SolverChoice s);

struct FamilyDescription {
  enum class Kind { identity, semigroup, tabulated } kind = Kind::identity;
  ComplexMatrix hamiltonian;
  std::vector<ComplexMatrix> jump_operators;
  double step = 0.0;
  std::vector<ComplexMatrix> nodes;  // superoperator matrices
};

struct WaitDescription {
  enum class Kind { exponential, erlang, tabulated } kind = Kind::exponential;
  double rate = 1.0;
  int shape = 1;
  double step = 0.0;
  std::vector<double> values;
};

/// Model ingredients as written, before any physical validation.
struct CollisionalDescription {
  FamilyDescription family;
  ComplexMatrix collision;  // superoperator matrix
  WaitDescription wait;
};

struct LindbladDescription {
  ComplexMatrix hamiltonian;
  std::vector<ComplexMatrix> jump_operators;
};

struct Observable {
  std::string name;
  ComplexMatrix matrix;
};

struct McSettings {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  Direction direction = Direction::reverse;
};

/// Parsed configuration; matrices have the right shapes but are not yet
/// checked for Hermiticity, positivity or complete positivity.
struct ConfigDocument {
  int dim = 0;
  std::variant<LindbladDescription, CollisionalDescription> model;
  ComplexMatrix initial_state;
  SolverChoice solver = SolverChoice::volterra;
  double t_max = 1.0;
  int steps = 100;
  std::optional<int> n_max;
  McSettings mc;
  std::vector<Observable> observables;
  bool density_entries = true;
};

ConfigDocument parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
/// Reads and parses; syntax errors report line and column.
ConfigDocument read_config(const std::filesystem::path& path);

using Model = std::variant<LindbladGenerator, CollisionalModel>;

/// Fully validated configuration ready to run.
struct RunConfig {
  Model model;
  DensityMatrix initial_state;
  SolverChoice solver;
  SolverGrid grid;
  std::optional<int> n_max;
  McSettings mc;
  std::vector<Observable> observables;
  bool density_entries;
};

/// Every matrix is validated; throws ConfigError naming the field.
RunConfig validate_config(const ConfigDocument& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Throws ConfigError when solver `s` cannot run on `model`.
void require_applicable(const Model& model, SolverChoice s);

LindbladGenerator build_generator(const ComplexMatrix& hamiltonian,
                                  const std::vector<ComplexMatrix>& jump_operators,
                                  const std::string& field);
IntercollisionFamily build_family(const FamilyDescription& desc, int dim, bool checked);
WaitingTime build_wait(const WaitDescription& desc);

}  // namespace renewalq::cli
