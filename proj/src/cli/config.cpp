#include "renewalq/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "renewalq/errors.hpp"

namespace renewalq::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

const json* optional_member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(field, "must be finite");
  return x;
}

double positive(const json& v, const std::string& field) {
  const double x = number(v, field);
  if (!(x > 0.0)) fail(field, "must be positive");
  return x;
}

long long integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<long long>();
}

std::string string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

Complex entry(const json& v, const std::string& field) {
  if (v.is_number()) return {number(v, field), 0.0};
  if (v.is_array() && v.size() == 2) return {number(v[0], field), number(v[1], field)};
  fail(field, "expected a number or an [re, im] pair");
}

ComplexMatrix matrix(const json& v, const std::string& field, int rows = -1) {
  if (!v.is_array() || v.empty()) fail(field, "expected a non-empty array of rows");
  const auto n = static_cast<int>(v.size());
  if (!v[0].is_array()) fail(field, "expected a non-empty array of rows");
  const auto m = static_cast<int>(v[0].size());
  ComplexMatrix out(n, m);
  for (int i = 0; i < n; ++i) {
    const std::string row = field + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != m) fail(row, "ragged matrix row");
    for (int j = 0; j < m; ++j) out(i, j) = entry(v[i][j], row + "[" + std::to_string(j) + "]");
  }
  if (n != m) fail(field, "matrix must be square");
  if (rows >= 0 && n != rows) {
    fail(field, "expected a " + std::to_string(rows) + "x" + std::to_string(rows) + " matrix");
  }
  return out;
}

std::vector<ComplexMatrix> matrix_list(const json& v, const std::string& field, int rows) {
  if (!v.is_array()) fail(field, "expected an array of matrices");
  std::vector<ComplexMatrix> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.push_back(matrix(v[k], field + "[" + std::to_string(k) + "]", rows));
  }
  return out;
}

FamilyDescription parse_family(const json& v, const std::string& path, int dim) {
  FamilyDescription desc;
  const std::string type = string(member(v, "type", path), join(path, "type"));
  if (type == "identity") {
    desc.kind = FamilyDescription::Kind::identity;
  } else if (type == "semigroup") {
    desc.kind = FamilyDescription::Kind::semigroup;
    const json* h = optional_member(v, "hamiltonian", path);
    desc.hamiltonian =
        h ? matrix(*h, join(path, "hamiltonian"), dim) : ComplexMatrix::Zero(dim, dim);
    if (const json* ops = optional_member(v, "jump_operators", path)) {
      desc.jump_operators = matrix_list(*ops, join(path, "jump_operators"), dim);
    }
  } else if (type == "tabulated") {
    desc.kind = FamilyDescription::Kind::tabulated;
    desc.step = positive(member(v, "step", path), join(path, "step"));
    desc.nodes = matrix_list(member(v, "nodes", path), join(path, "nodes"), dim * dim);
    if (desc.nodes.size() < 2) fail(join(path, "nodes"), "need at least two nodes");
  } else {
    fail(join(path, "type"), "unknown family type '" + type + "'");
  }
  return desc;
}

ComplexMatrix parse_collision(const json& v, const std::string& path, int dim) {
  const std::string type = string(member(v, "type", path), join(path, "type"));
  if (type == "identity") return Superoperator::identity(dim).matrix();
  if (type == "kraus") {
    const auto ops = matrix_list(member(v, "operators", path), join(path, "operators"), dim);
    if (ops.empty()) fail(join(path, "operators"), "need at least one Kraus operator");
    return Superoperator::from_kraus(ops).matrix();
  }
  if (type == "superoperator") {
    return matrix(member(v, "matrix", path), join(path, "matrix"), dim * dim);
  }
  fail(join(path, "type"), "unknown collision type '" + type + "'");
}

WaitDescription parse_wait(const json& v, const std::string& path,
                           const std::filesystem::path& base_dir) {
  WaitDescription desc;
  const std::string type = string(member(v, "type", path), join(path, "type"));
  if (type == "exponential") {
    desc.kind = WaitDescription::Kind::exponential;
    desc.rate = positive(member(v, "rate", path), join(path, "rate"));
  } else if (type == "erlang") {
    desc.kind = WaitDescription::Kind::erlang;
    const long long shape = integer(member(v, "shape", path), join(path, "shape"));
    if (shape < 1 || shape > 1000) fail(join(path, "shape"), "must be an integer in [1, 1000]");
    desc.shape = static_cast<int>(shape);
    desc.rate = positive(member(v, "rate", path), join(path, "rate"));
  } else if (type == "tabulated") {
    desc.kind = WaitDescription::Kind::tabulated;
    if (const json* csv = optional_member(v, "csv", path)) {
      std::filesystem::path file = string(*csv, join(path, "csv"));
      if (file.is_relative()) file = base_dir / file;
      try {
        WaitingTimeTable table = read_waiting_time_csv(file.string());
        desc.step = table.step;
        desc.values = std::move(table.values);
      } catch (const InputError& e) {
        fail(join(path, "csv"), e.what());
      }
    } else {
      desc.step = positive(member(v, "step", path), join(path, "step"));
      const json& vals = member(v, "values", path);
      if (!vals.is_array() || vals.size() < 2) {
        fail(join(path, "values"), "expected an array of at least two numbers");
      }
      for (std::size_t k = 0; k < vals.size(); ++k) {
        desc.values.push_back(number(vals[k], join(path, "values") + "[" + std::to_string(k) + "]"));
      }
    }
  } else {
    fail(join(path, "type"), "unknown wait type '" + type + "'");
  }
  return desc;
}

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::optional<SolverChoice> parse_solver(const std::string& name) {
  if (name == "series") return SolverChoice::series;
  if (name == "volterra") return SolverChoice::volterra;
  if (name == "laplace") return SolverChoice::laplace;
  if (name == "mc") return SolverChoice::mc;
  if (name == "dyson") return SolverChoice::dyson;
  if (name == "mc-lindblad") return SolverChoice::mc_lindblad;
  if (name == "expm") return SolverChoice::expm;
  return std::nullopt;
}

std::string solver_name(SolverChoice s) {
  switch (s) {
    case SolverChoice::series: return "series";
    case SolverChoice::volterra: return "volterra";
    case SolverChoice::laplace: return "laplace";
    case SolverChoice::mc: return "mc";
    case SolverChoice::dyson: return "dyson";
    case SolverChoice::mc_lindblad: return "mc-lindblad";
    case SolverChoice::expm: return "expm";
  }
  return "?";
}

ConfigDocument parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) fail("(root)", "expected a JSON object");
  ConfigDocument out;

  out.initial_state = matrix(member(doc, "initial_state", ""), "initial_state");
  out.dim = static_cast<int>(out.initial_state.rows());
  const int dim = out.dim;

  const json& model = member(doc, "model", "");
  const std::string type = string(member(model, "type", "model"), "model.type");
  if (type == "lindblad") {
    LindbladDescription desc;
    const json* h = optional_member(model, "hamiltonian", "model");
    desc.hamiltonian = h ? matrix(*h, "model.hamiltonian", dim) : ComplexMatrix::Zero(dim, dim);
    if (const json* ops = optional_member(model, "jump_operators", "model")) {
      desc.jump_operators = matrix_list(*ops, "model.jump_operators", dim);
    }
    out.model = std::move(desc);
  } else if (type == "collisional") {
    CollisionalDescription desc;
    desc.family = parse_family(member(model, "family", "model"), "model.family", dim);
    desc.collision = parse_collision(member(model, "collision", "model"), "model.collision", dim);
    desc.wait = parse_wait(member(model, "wait", "model"), "model.wait", base_dir);
    out.model = std::move(desc);
  } else {
    fail("model.type", "expected 'lindblad' or 'collisional', got '" + type + "'");
  }

  const std::string solver = string(member(doc, "solver", ""), "solver");
  const auto choice = parse_solver(solver);
  if (!choice) fail("solver", "unknown solver '" + solver + "'");
  out.solver = *choice;

  const json& grid = member(doc, "grid", "");
  out.t_max = positive(member(grid, "t_max", "grid"), "grid.t_max");
  const long long steps = integer(member(grid, "steps", "grid"), "grid.steps");
  if (steps < 2 || steps > 10'000'000) fail("grid.steps", "must be an integer >= 2");
  out.steps = static_cast<int>(steps);

  if (const json* series = optional_member(doc, "series", "")) {
    if (const json* n = optional_member(*series, "n_max", "series")) {
      const long long n_max = integer(*n, "series.n_max");
      if (n_max < 0 || n_max > 10000) fail("series.n_max", "must be in [0, 10000]");
      out.n_max = static_cast<int>(n_max);
    }
  }

  if (const json* mc = optional_member(doc, "mc", "")) {
    if (const json* v = optional_member(*mc, "samples", "mc")) {
      const long long n = integer(*v, "mc.samples");
      if (n < 1) fail("mc.samples", "must be >= 1");
      out.mc.samples = static_cast<std::size_t>(n);
    }
    if (const json* v = optional_member(*mc, "seed", "mc")) {
      if (!v->is_number_unsigned()) fail("mc.seed", "expected a non-negative integer");
      out.mc.seed = v->get<std::uint64_t>();
    }
    if (const json* v = optional_member(*mc, "direction", "mc")) {
      const std::string dir = string(*v, "mc.direction");
      if (dir == "reverse") {
        out.mc.direction = Direction::reverse;
      } else if (dir == "forward") {
        out.mc.direction = Direction::forward;
      } else {
        fail("mc.direction", "expected 'forward' or 'reverse'");
      }
    }
  }

  if (const json* outputs = optional_member(doc, "outputs", "")) {
    if (const json* v = optional_member(*outputs, "density_entries", "outputs")) {
      if (!v->is_boolean()) fail("outputs.density_entries", "expected a boolean");
      out.density_entries = v->get<bool>();
    }
    if (const json* obs = optional_member(*outputs, "observables", "outputs")) {
      if (!obs->is_array()) fail("outputs.observables", "expected an array");
      for (std::size_t k = 0; k < obs->size(); ++k) {
        const std::string path = "outputs.observables[" + std::to_string(k) + "]";
        Observable o;
        o.name = string(member((*obs)[k], "name", path), path + ".name");
        if (o.name.empty() || o.name.find_first_of(",\"\n") != std::string::npos) {
          fail(path + ".name", "must be non-empty without commas, quotes or newlines");
        }
        o.matrix = matrix(member((*obs)[k], "matrix", path), path + ".matrix", dim);
        out.observables.push_back(std::move(o));
      }
    }
  }
  if (!out.density_entries && out.observables.empty()) {
    fail("outputs", "nothing to emit: enable density_entries or name an observable");
  }
  return out;
}

ConfigDocument read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte);
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON syntax error");
  }
  return parse_config(doc, path.parent_path());
}

LindbladGenerator build_generator(const ComplexMatrix& hamiltonian,
                                  const std::vector<ComplexMatrix>& jump_operators,
                                  const std::string& field) {
  try {
    return LindbladGenerator(hamiltonian, jump_operators, 1e-10);
  } catch (const InputError& e) {
    fail(field, e.what());
  }
}

IntercollisionFamily build_family(const FamilyDescription& desc, int dim, bool checked) {
  try {
    switch (desc.kind) {
      case FamilyDescription::Kind::identity:
        return IntercollisionFamily::identity(dim);
      case FamilyDescription::Kind::semigroup:
        return IntercollisionFamily::semigroup(
            build_generator(desc.hamiltonian, desc.jump_operators, "model.family"));
      case FamilyDescription::Kind::tabulated: {
        std::vector<Superoperator> nodes;
        for (const auto& m : desc.nodes) nodes.emplace_back(dim, m);
        return checked ? IntercollisionFamily::tabulated(desc.step, nodes)
                       : IntercollisionFamily::tabulated_unchecked(desc.step, nodes);
      }
    }
  } catch (const InputError& e) {
    fail("model.family", e.what());
  }
  fail("model.family", "unknown family");
}

WaitingTime build_wait(const WaitDescription& desc) {
  try {
    switch (desc.kind) {
      case WaitDescription::Kind::exponential: return WaitingTime::exponential(desc.rate);
      case WaitDescription::Kind::erlang: return WaitingTime::erlang(desc.shape, desc.rate);
      case WaitDescription::Kind::tabulated: return WaitingTime::tabulated(desc.step, desc.values);
    }
  } catch (const InputError& e) {
    fail("model.wait", e.what());
  }
  fail("model.wait", "unknown wait");
}

RunConfig validate_config(const ConfigDocument& doc) {
  const int dim = doc.dim;
  std::optional<DensityMatrix> rho0;
  try {
    rho0.emplace(doc.initial_state, 1e-8);
  } catch (const InputError& e) {
    fail("initial_state", e.what());
  }

  for (std::size_t k = 0; k < doc.observables.size(); ++k) {
    const auto& m = doc.observables[k].matrix;
    if (hermiticity_defect(m) > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
      fail("outputs.observables[" + std::to_string(k) + "].matrix", "not Hermitian");
    }
  }

  std::optional<SolverGrid> grid;
  try {
    grid.emplace(doc.t_max, doc.steps);
  } catch (const InputError& e) {
    fail("grid", e.what());
  }

  const SolverChoice s = doc.solver;
  if (const auto* lind = std::get_if<LindbladDescription>(&doc.model)) {
    Model model = build_generator(lind->hamiltonian, lind->jump_operators, "model");
    require_applicable(model, s);
    return RunConfig{std::move(model), *rho0, s, *grid, doc.n_max, doc.mc, doc.observables,
                     doc.density_entries};
  }

  const auto& col = std::get<CollisionalDescription>(doc.model);
  IntercollisionFamily family = build_family(col.family, dim, true);
  const Superoperator e(dim, col.collision);
  const CptpReport rep = certify_cptp(e, kCollisionalCptpTolerance);
  if (!rep.is_cp || !rep.is_tp) {
    std::ostringstream msg;
    msg << "collision map is not CPTP (min Choi eigenvalue " << rep.min_choi_eigenvalue
        << ", TP defect " << rep.tp_defect << ")";
    fail("model.collision", msg.str());
  }
  Model model = CollisionalModel(std::move(family), e, build_wait(col.wait));
  require_applicable(model, s);
  return RunConfig{std::move(model), *rho0, s, *grid, doc.n_max, doc.mc, doc.observables,
                   doc.density_entries};
}

void require_applicable(const Model& model, SolverChoice s) {
  if (std::holds_alternative<LindbladGenerator>(model)) {
    if (s != SolverChoice::expm && s != SolverChoice::dyson && s != SolverChoice::mc_lindblad) {
      fail("solver", "'" + solver_name(s) + "' needs a collisional model");
    }
    return;
  }
  const auto& m = std::get<CollisionalModel>(model);
  if (s == SolverChoice::dyson || s == SolverChoice::mc_lindblad) {
    fail("solver", "'" + solver_name(s) + "' needs a lindblad model");
  }
  if (s == SolverChoice::expm && (!m.wait().is_exponential() || !m.family().is_semigroup())) {
    fail("solver", "'expm' on a collisional model needs an exponential wait and a semigroup family");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return validate_config(read_config(path));
}

}  // namespace renewalq::cli
