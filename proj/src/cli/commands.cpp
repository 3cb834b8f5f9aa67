#include "renewalq/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "renewalq/errors.hpp"

namespace renewalq::cli {

namespace {

constexpr double kDysonTailTolerance = 1e-8;
constexpr int kDysonMaxOrder = 40;
constexpr int kValidationSamples = 5;

int dyson_order(const LindbladGenerator& gen, double t) {
  for (int n = 0; n < kDysonMaxOrder; ++n) {
    if (jump_count_tail_bound(gen, t, n) < kDysonTailTolerance) return n;
  }
  return kDysonMaxOrder;
}

std::vector<ComplexMatrix> semigroup_states(const ComplexMatrix& generator,
                                            const ComplexMatrix& rho0,
                                            const std::vector<double>& times) {
  const ComplexVector v0 = vectorize(rho0).vec;
  std::vector<ComplexMatrix> out;
  out.reserve(times.size());
  for (const double t : times) out.push_back(devectorize(ComplexVector(mat_exp(t * generator) * v0)));
  return out;
}

Solution solve_lindblad(const LindbladGenerator& gen, const RunConfig& cfg, SolverChoice solver,
                        int threads) {
  Solution s{cfg.grid.times(), {}};
  const DensityMatrix& rho0 = cfg.initial_state;
  switch (solver) {
    case SolverChoice::expm:
      s.states = semigroup_states(liouvillian(gen).matrix(), rho0.matrix(), s.times);
      break;
    case SolverChoice::dyson: {
      const int order = cfg.n_max.value_or(dyson_order(gen, cfg.grid.t_max()));
      const auto expansion =
          dyson_expand(gen, rho0.matrix(), cfg.grid.t_max(), order, cfg.grid.steps() + 1);
      for (std::size_t i = 0; i < s.times.size(); ++i) s.states.push_back(expansion.state(i));
      break;
    }
    case SolverChoice::mc_lindblad:
      s.states = mc_average_series(gen, rho0, s.times, cfg.mc.samples, cfg.mc.seed, threads);
      break;
    default:
      throw ConfigError("solver: '" + solver_name(solver) + "' needs a collisional model");
  }
  return s;
}

Solution solve_collisional(const CollisionalModel& model, const RunConfig& cfg,
                           SolverChoice solver, int threads) {
  const ComplexMatrix& rho0 = cfg.initial_state.matrix();
  switch (solver) {
    case SolverChoice::series: {
      StateSeries r = series_solve(model, rho0, cfg.grid, cfg.n_max);
      return {std::move(r.times), std::move(r.states)};
    }
    case SolverChoice::volterra: {
      StateSeries r = volterra_solve(model, rho0, cfg.grid);
      return {std::move(r.times), std::move(r.states)};
    }
    case SolverChoice::laplace: {
      Solution s{cfg.grid.times(), {}};
      s.states = laplace_solve(model, rho0, s.times);
      return s;
    }
    case SolverChoice::mc: {
      Solution s{cfg.grid.times(), {}};
      s.states = mc_collisional_series(model, rho0, s.times, cfg.mc.samples, cfg.mc.seed,
                                       cfg.mc.direction, threads);
      return s;
    }
    case SolverChoice::expm: {
      Solution s{cfg.grid.times(), {}};
      s.states = semigroup_states(markov_limit_generator(model).matrix(), rho0, s.times);
      return s;
    }
    default:
      throw ConfigError("solver: '" + solver_name(solver) + "' needs a lindblad model");
  }
}

struct Checks {
  std::ostream& out;
  int failures = 0;

  void report(bool pass, const std::string& name, const std::string& detail) {
    out << (pass ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) out << ": " << detail;
    out << '\n';
    if (!pass) ++failures;
  }

  void cptp(const std::string& name, const CptpReport& rep) {
    std::ostringstream d;
    d << "min Choi eigenvalue " << format_double(rep.min_choi_eigenvalue) << ", TP defect "
      << format_double(rep.tp_defect);
    report(rep.is_cp && rep.is_tp, name, d.str());
  }
};

std::vector<int> validation_nodes(int steps) {
  std::vector<int> nodes;
  for (int k = 1; k <= kValidationSamples; ++k) {
    const int n = static_cast<int>(std::lround(static_cast<double>(k) * steps / kValidationSamples));
    if (nodes.empty() || nodes.back() != n) nodes.push_back(n);
  }
  return nodes;
}

void validate_common(const ConfigDocument& doc, Checks& checks) {
  try {
    DensityMatrix rho(doc.initial_state, 1e-8);
    checks.report(true, "initial_state", "valid density matrix");
  } catch (const InputError& e) {
    checks.report(false, "initial_state", e.what());
  }
  for (const auto& o : doc.observables) {
    const double defect = hermiticity_defect(o.matrix);
    checks.report(defect <= 1e-10 * std::max(1.0, o.matrix.cwiseAbs().maxCoeff()),
                  "observable " + o.name + " hermitian", "defect " + format_double(defect));
  }
}

void validate_collisional(const ConfigDocument& doc, const CollisionalDescription& desc,
                          const SolverGrid& grid, Checks& checks) {
  const int dim = doc.dim;
  const Superoperator e(dim, desc.collision);
  checks.cptp("collision CPTP", certify_cptp(e, kCollisionalCptpTolerance));

  const IntercollisionFamily family = build_family(desc.family, dim, false);
  if (const auto* tab = std::get_if<IntercollisionFamily::Tabulated>(&family.kind())) {
    const double start = (tab->nodes.front() - ComplexMatrix::Identity(dim * dim, dim * dim))
                             .cwiseAbs()
                             .maxCoeff();
    checks.report(start <= kCollisionalCptpTolerance, "family F(0) = identity",
                  "deviation " + format_double(start));
    for (std::size_t k = 0; k < tab->nodes.size(); ++k) {
      checks.cptp("family node " + std::to_string(k) + " CPTP",
                  certify_cptp(Superoperator(dim, tab->nodes[k]), kCollisionalCptpTolerance));
    }
  } else {
    for (const int n : validation_nodes(grid.steps())) {
      const double t = grid.time(n);
      checks.cptp("family F(" + format_double(t) + ") CPTP",
                  certify_cptp(Superoperator(dim, family.at(t)), kCollisionalCptpTolerance));
    }
  }

  std::optional<WaitingTime> wait;
  try {
    wait.emplace(build_wait(desc.wait));
    const double defect = desc.wait.kind == WaitDescription::Kind::tabulated
                              ? tabulated_normalization_defect(desc.wait.step, desc.wait.values)
                              : 0.0;
    checks.report(true, "wait normalization", "defect " + format_double(defect));
  } catch (const ConfigError& err) {
    checks.report(false, "wait normalization", err.what());
  }
  if (wait) {
    const double g0 = wait->survival(0.0);
    checks.report(std::abs(g0 - 1.0) <= 1e-12, "wait g(0) = 1", "g(0) = " + format_double(g0));
  }

  if (!wait) {
    checks.report(false, "dynamics CPTP", "skipped: waiting time is invalid");
    return;
  }
  SolverKind kind = SolverKind::volterra;
  if (doc.solver == SolverChoice::series) kind = SolverKind::series;
  if (doc.solver == SolverChoice::laplace) kind = SolverKind::laplace;
  const CollisionalModel model = CollisionalModel::unchecked(family, e, *wait);
  std::vector<double> times;
  for (const int n : validation_nodes(grid.steps())) times.push_back(grid.time(n));
  try {
    const auto reports = cptp_certify_dynamics(model, kind, grid, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      checks.cptp("dynamics Phi(" + format_double(times[k]) + ") CPTP", reports[k]);
    }
  } catch (const std::exception& err) {
    checks.report(false, "dynamics CPTP", err.what());
  }
}

void validate_lindblad(const LindbladDescription& desc, const SolverGrid& grid, Checks& checks) {
  const LindbladGenerator gen = build_generator(desc.hamiltonian, desc.jump_operators, "model");
  checks.report(true, "generator", "hermitian Hamiltonian");
  const ComplexMatrix l = liouvillian(gen).matrix();
  for (const int n : validation_nodes(grid.steps())) {
    const double t = grid.time(n);
    checks.cptp("semigroup exp(" + format_double(t) + " L) CPTP",
                certify_cptp(Superoperator(gen.dim(), mat_exp(t * l)), kCollisionalCptpTolerance));
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Solution run_solver(const RunConfig& config, SolverChoice solver, int threads) {
  require_applicable(config.model, solver);
  if (const auto* gen = std::get_if<LindbladGenerator>(&config.model)) {
    return solve_lindblad(*gen, config, solver, threads);
  }
  return solve_collisional(std::get<CollisionalModel>(config.model), config, solver, threads);
}

void write_csv(std::ostream& out, const RunConfig& config, const Solution& solution) {
  const int d = config.initial_state.dim();
  out << "time";
  if (config.density_entries) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        out << ",r_" << i << j << "_re,r_" << i << j << "_im";
      }
    }
  }
  for (const auto& o : config.observables) out << ',' << o.name;
  out << '\n';
  for (std::size_t k = 0; k < solution.times.size(); ++k) {
    const ComplexMatrix& rho = solution.states[k];
    out << format_double(solution.times[k]);
    if (config.density_entries) {
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          out << ',' << format_double(rho(i, j).real()) << ',' << format_double(rho(i, j).imag());
        }
      }
    }
    for (const auto& o : config.observables) {
      out << ',' << format_double((o.matrix * rho).trace().real());
    }
    out << '\n';
  }
}

int cmd_simulate(const std::filesystem::path& config_path,
                 const std::optional<std::filesystem::path>& out_path, int threads,
                 std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> config;
  try {
    config.emplace(load_run_config(config_path));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  Solution solution;
  try {
    solution = run_solver(*config, config->solver, threads);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
  if (out_path) {
    std::ofstream file(*out_path, std::ios::binary);
    if (!file) {
      err << "cannot open output file '" << out_path->string() << "'\n";
      return kExitConfig;
    }
    write_csv(file, *config, solution);
  } else {
    write_csv(out, *config, solution);
  }
  return kExitOk;
}

int cmd_compare(const std::filesystem::path& config_path, const std::string& solver_a,
                const std::string& solver_b, double tol, int threads, std::ostream& out,
                std::ostream& err) {
  std::optional<RunConfig> config;
  std::optional<SolverChoice> a = parse_solver(solver_a);
  std::optional<SolverChoice> b = parse_solver(solver_b);
  try {
    if (!a) throw ConfigError("solverA: unknown solver '" + solver_a + "'");
    if (!b) throw ConfigError("solverB: unknown solver '" + solver_b + "'");
    if (!(tol > 0.0)) throw ConfigError("--tol: must be positive");
    config.emplace(load_run_config(config_path));
    require_applicable(config->model, *a);
    require_applicable(config->model, *b);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  Solution sa;
  Solution sb;
  try {
    sa = run_solver(*config, *a, threads);
    sb = run_solver(*config, *b, threads);
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
  double worst = 0.0;
  out << "time,trace_distance\n";
  for (std::size_t k = 0; k < sa.times.size(); ++k) {
    const double dist = trace_norm_distance(sa.states[k], sb.states[k]);
    worst = std::max(worst, dist);
    out << format_double(sa.times[k]) << ',' << format_double(dist) << '\n';
  }
  out << "max_distance=" << format_double(worst) << '\n';
  return worst < tol ? kExitOk : kExitTolerance;
}

int cmd_validate(const std::filesystem::path& config_path, std::ostream& out,
                 std::ostream& err) {
  std::optional<ConfigDocument> doc;
  try {
    doc.emplace(read_config(config_path));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  Checks checks{out};
  try {
    const SolverGrid grid(doc->t_max, doc->steps);
    validate_common(*doc, checks);
    if (const auto* lind = std::get_if<LindbladDescription>(&doc->model)) {
      validate_lindblad(*lind, grid, checks);
    } else {
      validate_collisional(*doc, std::get<CollisionalDescription>(doc->model), grid, checks);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (checks.failures == 0) {
    out << "all checks passed\n";
    return kExitOk;
  }
  out << checks.failures << " check(s) failed\n";
  return kExitTolerance;
}

}  // namespace renewalq::cli
