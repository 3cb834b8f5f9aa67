#include "renewalq/collisional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "renewalq/errors.hpp"
#include "renewalq/parallel.hpp"

namespace renewalq {

namespace {

constexpr double kImplicitRcondFloor = 1e-12;
constexpr double kResolventRcondFloor = 1e-13;
constexpr double kQuadratureTailTolerance = 1e-6;
constexpr int kMaxSeriesOrder = 200;

ComplexMatrix eye(int n) { return ComplexMatrix::Identity(n, n); }

void require_state_dim(const CollisionalModel& model, const ComplexMatrix& rho0) {
  if (rho0.rows() != model.dim() || rho0.cols() != model.dim()) {
    throw InputError("initial state dimension does not match the model");
  }
}

// Waiting-time and family tables on the grid t_m = m h, m = 0..steps.
struct GridTables {
  double h;
  std::vector<double> f;
  std::vector<double> g;
  std::vector<ComplexMatrix> family;
};

GridTables tabulate(const CollisionalModel& model, double h, int steps) {
  GridTables tab{h, {}, {}, model.family().on_grid(h, steps + 1)};
  tab.f.resize(steps + 1);
  tab.g.resize(steps + 1);
  for (int m = 0; m <= steps; ++m) {
    tab.f[m] = model.wait().pdf(m * h);
    tab.g[m] = model.wait().survival(m * h);
  }
  return tab;
}

// Series on a block of column-stacked initial states (d^2 x c).
std::vector<ComplexMatrix> series_block(const CollisionalModel& model, const ComplexMatrix& v0,
                                        const SolverGrid& grid, int n_max) {
  const int n = grid.steps();
  const GridTables tab = tabulate(model, grid.step(), n);
  const ComplexMatrix& e = model.collision().matrix();

  std::vector<ComplexMatrix> term(n + 1), total(n + 1), pushed(n + 1);
  for (int i = 0; i <= n; ++i) {
    term[i] = tab.g[i] * (tab.family[i] * v0);
    total[i] = term[i];
  }
  std::vector<ComplexMatrix> kernel(n + 1);
  for (int m = 0; m <= n; ++m) kernel[m] = tab.f[m] * tab.family[m];

  const ComplexMatrix zero = ComplexMatrix::Zero(v0.rows(), v0.cols());
  for (int order = 1; order <= n_max; ++order) {
    for (int j = 0; j <= n; ++j) pushed[j].noalias() = e * term[j];
    term[0] = zero;
    for (int i = 1; i <= n; ++i) {
      ComplexMatrix acc = 0.5 * (kernel[i] * pushed[0] + kernel[0] * pushed[i]);
      for (int j = 1; j < i; ++j) acc.noalias() += kernel[i - j] * pushed[j];
      term[i] = grid.step() * acc;
    }
    for (int i = 0; i <= n; ++i) total[i] += term[i];
  }
  return total;
}

std::vector<ComplexMatrix> volterra_block(const CollisionalModel& model, const ComplexMatrix& v0,
                                          const SolverGrid& grid) {
  const int n = grid.steps();
  const double h = grid.step();
  const GridTables tab = tabulate(model, h, n);
  const ComplexMatrix& e = model.collision().matrix();
  const int d2 = static_cast<int>(e.rows());

  std::vector<ComplexMatrix> kernel(n + 1);
  for (int m = 0; m <= n; ++m) kernel[m] = tab.f[m] * (tab.family[m] * e);

  const Eigen::PartialPivLU<ComplexMatrix> lu(eye(d2) - 0.5 * h * kernel[0]);
  if (!(lu.rcond() > kImplicitRcondFloor)) {
    throw StepSizeError("implicit Volterra step is singular; use a finer grid");
  }

  std::vector<ComplexMatrix> out(n + 1);
  out[0] = v0;
  for (int i = 1; i <= n; ++i) {
    ComplexMatrix rhs = 0.5 * kernel[i] * v0;
    for (int j = 1; j < i; ++j) rhs.noalias() += kernel[i - j] * out[j];
    rhs *= h;
    rhs.noalias() += tab.g[i] * (tab.family[i] * v0);
    out[i] = lu.solve(rhs);
  }
  return out;
}

StateSeries to_series(const SolverGrid& grid, const std::vector<ComplexMatrix>& block) {
  StateSeries s;
  s.times = grid.times();
  s.states.reserve(block.size());
  for (const auto& v : block) s.states.push_back(devectorize(ComplexVector(v.col(0))));
  return s;
}

// Transforms of the hat functions of a piecewise-linear interpolant with
// step h, scaled by 1/h; z = u h. Exact for any u, unlike the trapezoid rule
// once |u| h is not small.
// Interior node: (2 cosh z - 2) / z^2 = (sinh(z/2) / (z/2))^2.
Complex interior_hat(Complex z) {
  const Complex w = 0.5 * z;
  const Complex sinhc = std::abs(w) < 1e-3 ? 1.0 + w * w / 6.0 + w * w * w * w / 120.0
                                           : std::sinh(w) / w;
  return sinhc * sinhc;
}

// Left end node: (z - 1 + e^{-z}) / z^2. The right end node is first_hat(-z)
// times e^{-u T}.
Complex first_hat(Complex z) {
  if (std::abs(z) < 1e-3) return 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0;
  return (z - 1.0 + std::exp(-z)) / (z * z);
}

// Evaluates f^F and g^F, caching what does not depend on u. Tabulated
// ingredients are transformed as the piecewise-linear interpolant of the
// node products.
class TransformEvaluator {
 public:
  explicit TransformEvaluator(const CollisionalModel& model) : model_(model) {
    const auto* semigroup = std::get_if<IntercollisionFamily::Semigroup>(&model.family().kind());
    if (semigroup != nullptr && model.wait().has_closed_laplace()) {
      closed_ = true;
      m0_ = semigroup->liouvillian;
      return;
    }
    double step = 0.0;
    int nodes = 0;
    if (const auto* tab = std::get_if<IntercollisionFamily::Tabulated>(&model.family().kind())) {
      step = tab->step;
      nodes = static_cast<int>(tab->nodes.size());
    } else {
      const auto& wt = std::get<TabulatedWait>(model.wait().kind());
      step = wt.step;
      nodes = static_cast<int>(wt.values.size());
    }
    const double t_end = step * (nodes - 1);
    if (model.wait().survival(t_end) > kQuadratureTailTolerance) {
      throw UnsupportedError(
          "quadrature transforms need the waiting time to be exhausted within the tabulation");
    }
    tables_ = tabulate(model, step, nodes - 1);
  }

  bool is_closed() const { return closed_; }

  IntercollisionTransforms operator()(Complex u) const {
    const int d2 = model_.dim() * model_.dim();
    if (closed_) return closed_form(u, d2);
    IntercollisionTransforms out{ComplexMatrix::Zero(d2, d2), ComplexMatrix::Zero(d2, d2)};
    const int last = static_cast<int>(tables_.f.size()) - 1;
    const double h = tables_.h;
    const Complex z = u * h;
    const Complex interior = h * interior_hat(z);
    for (int m = 0; m <= last; ++m) {
      Complex w;
      if (m == 0) {
        w = h * first_hat(z);
      } else {
        w = std::exp(-u * (m * h)) * (m == last ? h * first_hat(-z) : interior);
      }
      out.f_hat_F += (w * tables_.f[m]) * tables_.family[m];
      out.g_hat_F += (w * tables_.g[m]) * tables_.family[m];
    }
    if (!out.f_hat_F.allFinite() || !out.g_hat_F.allFinite()) {
      throw ContourError("transform quadrature overflowed at a contour node");
    }
    return out;
  }

 private:
  IntercollisionTransforms closed_form(Complex u, int d2) const {
    double rate = 0.0;
    int shape = 1;
    if (const auto* ex = std::get_if<ExponentialWait>(&model_.wait().kind())) {
      rate = ex->rate;
    } else {
      const auto& er = std::get<ErlangWait>(model_.wait().kind());
      rate = er.rate;
      shape = er.shape;
    }
    const Eigen::PartialPivLU<ComplexMatrix> lu((u + rate) * eye(d2) - m0_);
    if (!(lu.rcond() > kResolventRcondFloor)) {
      throw ContourError("resolvent singular at a contour node; rescale the contour");
    }
    const ComplexMatrix inv = lu.inverse();
    IntercollisionTransforms out{ComplexMatrix::Zero(d2, d2), ComplexMatrix::Zero(d2, d2)};
    ComplexMatrix power = inv;
    double rate_power = 1.0;  // rate^{j-1}
    for (int j = 1; j <= shape; ++j) {
      out.g_hat_F += rate_power * power;
      if (j == shape) out.f_hat_F = (rate_power * rate) * power;
      if (j < shape) {
        power = power * inv;
        rate_power *= rate;
      }
    }
    return out;
  }

  const CollisionalModel& model_;
  bool closed_ = false;
  ComplexMatrix m0_;
  GridTables tables_;
};

ComplexMatrix resolvent_block(const CollisionalModel& model, const TransformEvaluator& transforms,
                              const ComplexMatrix& v0, Complex u,
                              IntercollisionTransforms* keep = nullptr) {
  IntercollisionTransforms tr = transforms(u);
  const int d2 = static_cast<int>(v0.rows());
  const Eigen::PartialPivLU<ComplexMatrix> lu(eye(d2) - tr.f_hat_F * model.collision().matrix());
  if (!(lu.rcond() > kResolventRcondFloor)) {
    throw ContourError("resolvent singular at a contour node; rescale the contour");
  }
  ComplexMatrix out = lu.solve(tr.g_hat_F * v0);
  if (keep != nullptr) *keep = std::move(tr);
  return out;
}

ComplexMatrix laplace_block_at(const CollisionalModel& model, const TransformEvaluator& transforms,
                               const ComplexMatrix& v0, double t,
                               const LaplaceInversionConfig& config) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("laplace_solve: t must be >= 0");
  if (t == 0.0) return v0;
  const auto rows = v0.rows();
  const auto cols = v0.cols();
  auto flat = [&](Complex u) -> ComplexVector {
    const ComplexMatrix r = resolvent_block(model, transforms, v0, u);
    return Eigen::Map<const ComplexVector>(r.data(), r.size());
  };
  InversionMethod method = config.method;
  if (method == InversionMethod::automatic) {
    method = transforms.is_closed() ? InversionMethod::talbot : InversionMethod::de_hoog;
  }
  const ComplexVector inv = method == InversionMethod::talbot ? talbot_invert(flat, t, config)
                                                              : de_hoog_invert(flat, t, config);
  return Eigen::Map<const ComplexMatrix>(inv.data(), rows, cols);
}

int grid_node(const SolverGrid& grid, double t) {
  const double s = t / grid.step();
  const double k = std::round(s);
  if (k < 0 || k > grid.steps() || std::abs(s - k) > 1e-9 * std::max(1.0, k)) {
    throw InputError("sample time is not a node of the solver grid");
  }
  return static_cast<int>(k);
}

}  // namespace

IntercollisionFamily IntercollisionFamily::semigroup(const LindbladGenerator& gen) {
  return IntercollisionFamily(gen.dim(), Semigroup{gen, liouvillian(gen).matrix()});
}

IntercollisionFamily IntercollisionFamily::identity(int dim) {
  if (dim < 1) throw InputError("family dimension must be positive");
  return semigroup(LindbladGenerator(ComplexMatrix::Zero(dim, dim), {}));
}

IntercollisionFamily IntercollisionFamily::tabulated_unchecked(
    double step, const std::vector<Superoperator>& nodes) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InputError("family step must be positive");
  if (nodes.size() < 2) throw InputError("tabulated family needs at least two nodes");
  const int dim = nodes.front().dim();
  std::vector<ComplexMatrix> mats;
  mats.reserve(nodes.size());
  for (const auto& s : nodes) {
    if (s.dim() != dim) throw InputError("tabulated family nodes differ in dimension");
    mats.push_back(s.matrix());
  }
  return IntercollisionFamily(dim, Tabulated{step, std::move(mats)});
}

IntercollisionFamily IntercollisionFamily::tabulated(double step,
                                                     const std::vector<Superoperator>& nodes) {
  IntercollisionFamily family = tabulated_unchecked(step, nodes);
  for (const auto& s : nodes) {
    const CptpReport rep = certify_cptp(s, kCollisionalCptpTolerance);
    if (!rep.is_cp || !rep.is_tp) throw InputError("tabulated family node is not CPTP");
  }
  const int d2 = family.dim() * family.dim();
  if ((nodes.front().matrix() - eye(d2)).cwiseAbs().maxCoeff() > kCollisionalCptpTolerance) {
    throw InputError("tabulated family must start at the identity map");
  }
  return family;
}

ComplexMatrix IntercollisionFamily::at(double t) const {
  if (!(t >= 0.0)) throw InputError("family evaluated at negative time");
  if (const auto* sg = std::get_if<Semigroup>(&kind_)) {
    if (sg->liouvillian.isZero(0.0)) return eye(dim_ * dim_);
    return mat_exp(t * sg->liouvillian);
  }
  const auto& tab = std::get<Tabulated>(kind_);
  const double s = t / tab.step;
  const auto last = tab.nodes.size() - 1;
  if (s >= static_cast<double>(last)) return tab.nodes.back();
  const auto k = static_cast<std::size_t>(s);
  const double frac = s - static_cast<double>(k);
  return (1.0 - frac) * tab.nodes[k] + frac * tab.nodes[k + 1];
}

ComplexMatrix IntercollisionFamily::derivative(double t) const {
  if (!(t >= 0.0)) throw InputError("family evaluated at negative time");
  if (const auto* sg = std::get_if<Semigroup>(&kind_)) return sg->liouvillian * at(t);
  const auto& tab = std::get<Tabulated>(kind_);
  const auto last = static_cast<double>(tab.nodes.size() - 1);
  const double s = t / tab.step;
  const int d2 = dim_ * dim_;
  if (s >= last) return ComplexMatrix::Zero(d2, d2);
  const double k = std::round(s);
  const auto idx = static_cast<std::size_t>(k);
  if (std::abs(s - k) <= 1e-9 * std::max(1.0, k)) {
    if (idx == 0) return (tab.nodes[1] - tab.nodes[0]) / tab.step;
    return (tab.nodes[idx + 1] - tab.nodes[idx - 1]) / (2.0 * tab.step);
  }
  const auto lo = static_cast<std::size_t>(s);
  return (tab.nodes[lo + 1] - tab.nodes[lo]) / tab.step;
}

std::vector<ComplexMatrix> IntercollisionFamily::on_grid(double h, int nodes) const {
  std::vector<ComplexMatrix> out;
  out.reserve(nodes);
  for (int k = 0; k < nodes; ++k) out.push_back(at(k * h));
  return out;
}

CollisionalModel::CollisionalModel(IntercollisionFamily family, Superoperator collision,
                                   WaitingTime wait)
    : CollisionalModel(std::move(family), std::move(collision), std::move(wait), true) {}

CollisionalModel CollisionalModel::unchecked(IntercollisionFamily family, Superoperator collision,
                                             WaitingTime wait) {
  return CollisionalModel(std::move(family), std::move(collision), std::move(wait), false);
}

CollisionalModel::CollisionalModel(IntercollisionFamily family, Superoperator collision,
                                   WaitingTime wait, bool check)
    : family_(std::move(family)), collision_(std::move(collision)), wait_(std::move(wait)) {
  if (collision_.dim() != family_.dim()) {
    throw InputError("collision map and family differ in dimension");
  }
  if (check) {
    const CptpReport rep = certify_cptp(collision_, kCollisionalCptpTolerance);
    if (!rep.is_cp || !rep.is_tp) throw InputError("collision map is not CPTP");
  }
}

SolverGrid::SolverGrid(double t_max, int steps) : t_max_(t_max), steps_(steps) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InputError("grid t_max must be positive");
  if (steps < 2) throw InputError("grid needs at least 2 steps");
}

std::vector<double> SolverGrid::times() const {
  std::vector<double> t(steps_ + 1);
  for (int i = 0; i <= steps_; ++i) t[i] = time(i);
  return t;
}

int auto_series_order(const WaitingTime& wait, double t_max, double tail_tol) {
  for (int n = 0; n < kMaxSeriesOrder; ++n) {
    if (wait.count_tail(t_max, n) < tail_tol) return n;
  }
  return kMaxSeriesOrder;
}

StateSeries series_solve(const CollisionalModel& model, const ComplexMatrix& rho0,
                         const SolverGrid& grid, std::optional<int> n_max) {
  require_state_dim(model, rho0);
  const int order = n_max.value_or(auto_series_order(model.wait(), grid.t_max()));
  if (order < 0) throw InputError("series order must be non-negative");
  return to_series(grid, series_block(model, vectorize(rho0).vec, grid, order));
}

StateSeries volterra_solve(const CollisionalModel& model, const ComplexMatrix& rho0,
                           const SolverGrid& grid) {
  require_state_dim(model, rho0);
  return to_series(grid, volterra_block(model, vectorize(rho0).vec, grid));
}

IntercollisionTransforms intercollision_transforms(const CollisionalModel& model, Complex u) {
  return TransformEvaluator(model)(u);
}

Resolvent laplace_resolvent(const CollisionalModel& model, const ComplexMatrix& rho0, Complex u) {
  require_state_dim(model, rho0);
  const TransformEvaluator transforms(model);
  Resolvent out;
  const ComplexMatrix r = resolvent_block(model, transforms, vectorize(rho0).vec, u,
                                          &out.transforms);
  out.rho_hat = r.col(0);
  return out;
}

std::vector<ComplexMatrix> laplace_solve(const CollisionalModel& model, const ComplexMatrix& rho0,
                                         std::span<const double> t_values,
                                         const LaplaceInversionConfig& config) {
  require_state_dim(model, rho0);
  const TransformEvaluator transforms(model);
  const ComplexMatrix v0 = vectorize(rho0).vec;
  std::vector<ComplexMatrix> out;
  out.reserve(t_values.size());
  for (const double t : t_values) {
    const ComplexMatrix v = laplace_block_at(model, transforms, v0, t, config);
    out.push_back(devectorize(ComplexVector(v.col(0))));
  }
  return out;
}

double fint_residual(const CollisionalModel& model, const StateSeries& solution) {
  const auto& states = solution.states;
  const auto& times = solution.times;
  if (states.size() != times.size()) throw InputError("solution times and states differ in size");
  if (states.size() < 11) throw InputError("fint_residual needs at least 10 grid steps");
  const int n = static_cast<int>(states.size()) - 1;
  const double h = times[1] - times[0];
  if (!(h > 0.0) || std::abs(times[0]) > 1e-12) throw InputError("solution grid must start at 0");
  for (int i = 1; i <= n; ++i) {
    if (std::abs(times[i] - i * h) > 1e-9 * std::max(1.0, times[i])) {
      throw InputError("solution grid must be uniform");
    }
  }
  const GridTables tab = tabulate(model, h, n);
  const ComplexMatrix& e = model.collision().matrix();

  std::vector<ComplexVector> v(n + 1), pushed(n + 1);
  for (int i = 0; i <= n; ++i) {
    require_state_dim(model, states[i]);
    v[i] = vectorize(states[i]).vec;
    pushed[i] = e * v[i];
  }
  std::vector<ComplexMatrix> kernel(n + 1);
  for (int m = 0; m <= n; ++m) kernel[m] = tab.f[m] * tab.family[m];
  const double f0 = tab.f[0];

  double worst = 0.0;
  for (int i = 1; i < n; ++i) {
    const ComplexVector lhs = (v[i + 1] - v[i - 1]) / (2.0 * h);
    ComplexVector rhs = f0 * pushed[i];
    for (int j = 0; j < i; ++j) {
      rhs.noalias() += (kernel[i - j] - kernel[i - j - 1]) * (0.5 * (pushed[j] + pushed[j + 1]));
    }
    const ComplexMatrix source =
        -tab.f[i] * tab.family[i] + tab.g[i] * model.family().derivative(i * h);
    rhs.noalias() += source * v[0];
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

namespace {

ComplexVector collisional_sample(const CollisionalModel& model, const ComplexVector& v0, double t,
                                 RandomStream& stream, Direction direction) {
  const Trajectory traj = sample_renewal(model.wait(), t, stream, direction);
  const ComplexMatrix& e = model.collision().matrix();
  ComplexVector v = v0;
  double prev = 0.0;
  for (const double tk : traj.jump_times()) {
    v = e * (model.family().at(tk - prev) * v);
    prev = tk;
  }
  return model.family().at(t - prev) * v;
}

}  // namespace

ComplexMatrix mc_collisional(const CollisionalModel& model, const ComplexMatrix& rho0, double t,
                             std::size_t n_samples, std::uint64_t seed, Direction direction,
                             int threads) {
  const double times[] = {t};
  return mc_collisional_series(model, rho0, times, n_samples, seed, direction, threads).front();
}

std::vector<ComplexMatrix> mc_collisional_series(const CollisionalModel& model,
                                                 const ComplexMatrix& rho0,
                                                 std::span<const double> times,
                                                 std::size_t n_samples, std::uint64_t seed,
                                                 Direction direction, int threads) {
  require_state_dim(model, rho0);
  if (n_samples < 1) throw InputError("mc_collisional needs at least one sample");
  const ComplexVector v0 = vectorize(rho0).vec;
  std::vector<ComplexMatrix> out;
  out.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("mc_collisional: t must be >= 0");
    const auto substream = static_cast<std::uint32_t>(times.size() == 1 ? 0 : k);
    const ComplexVector mean = ordered_mean<ComplexVector>(
        n_samples, threads, ComplexVector::Zero(v0.size()), [&](std::size_t i) {
          CounterStream stream(seed, i, substream);
          return collisional_sample(model, v0, t, stream, direction);
        });
    out.push_back(devectorize(mean));
  }
  return out;
}

Superoperator markov_limit_generator(const CollisionalModel& model) {
  const auto* ex = std::get_if<ExponentialWait>(&model.wait().kind());
  if (ex == nullptr) throw UnsupportedError("Markov limit requires an exponential waiting time");
  const auto* sg = std::get_if<IntercollisionFamily::Semigroup>(&model.family().kind());
  if (sg == nullptr) throw UnsupportedError("Markov limit requires a semigroup family");
  const int d = model.dim();
  return Superoperator(
      d, sg->liouvillian + ex->rate * (model.collision().matrix() - eye(d * d)));
}

std::vector<CptpReport> cptp_certify_dynamics(const CollisionalModel& model, SolverKind solver,
                                              const SolverGrid& grid,
                                              std::span<const double> sample_times) {
  const int d = model.dim();
  const ComplexMatrix units = eye(d * d);  // column j*d + i is vec |i><j|
  std::vector<ComplexMatrix> propagators;
  propagators.reserve(sample_times.size());
  if (solver == SolverKind::laplace) {
    const TransformEvaluator transforms(model);
    for (const double t : sample_times) {
      propagators.push_back(laplace_block_at(model, transforms, units, t, {}));
    }
  } else {
    std::vector<int> nodes;
    for (const double t : sample_times) nodes.push_back(grid_node(grid, t));
    const auto block = solver == SolverKind::series
                           ? series_block(model, units, grid,
                                          auto_series_order(model.wait(), grid.t_max()))
                           : volterra_block(model, units, grid);
    for (const int k : nodes) propagators.push_back(block[k]);
  }
  std::vector<CptpReport> reports;
  reports.reserve(propagators.size());
  for (auto& phi : propagators) {
    CptpReport rep = certify_cptp(Superoperator(d, std::move(phi)), kCollisionalCptpTolerance);
    rep.is_tp = rep.tp_defect <= 1e-6;
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace renewalq
