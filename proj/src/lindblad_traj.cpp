#include "renewalq/lindblad_traj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "renewalq/errors.hpp"
#include "renewalq/parallel.hpp"

namespace renewalq {

namespace {

constexpr double kBisectionTolerance = 1e-12;
constexpr int kBisectionMaxIterations = 200;

void require_grid(int grid_points) {
  if (grid_points < 2) throw InputError("grid_points must be at least 2");
}

void require_time(double t, const char* what) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw InputError(std::string(what) + ": time must be finite and non-negative");
  }
}

// Trapezoid weight of node j on [0, i*h] (zero-length interval has no mass).
inline double trapezoid_weight(int j, int i, double h) {
  if (i == 0) return 0.0;
  return (j == 0 || j == i) ? 0.5 * h : h;
}

double real_trace(const ComplexMatrix& a) { return a.trace().real(); }

}  // namespace

PoissonReference::PoissonReference(double rate) : rate_(rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw InputError("PoissonReference: rate must be positive");
  }
}

double PoissonReference::weight(std::size_t n, double t) const {
  return std::exp(static_cast<double>(n) * std::log(rate_) - rate_ * t);
}

JumpChain::JumpChain(const LindbladGenerator& gen) : gen_(gen), jump_(jump_superop(gen)) {}

JumpChain::JumpChain(const LindbladGenerator& gen, double step, int nodes)
    : gen_(gen), jump_(jump_superop(gen)), step_(step) {
  if (!(step > 0.0) || nodes < 1) throw InputError("JumpChain: invalid cache grid");
  table_.reserve(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) table_.push_back(mat_exp((k * step) * gen_.no_jump_generator()));
}

ComplexMatrix JumpChain::relaxation_factor(double tau) const {
  if (!table_.empty()) {
    const double x = tau / step_;
    const double k = std::round(x);
    if (k >= 0.0 && k < static_cast<double>(table_.size()) &&
        std::abs(x - k) <= 1e-9 * std::max(1.0, k)) {
      return table_[static_cast<std::size_t>(k)];
    }
  }
  if (!(tau >= 0.0)) throw InputError("relaxation: negative time");
  return mat_exp(tau * gen_.no_jump_generator());
}

ComplexMatrix JumpChain::relax(const ComplexMatrix& sigma, double tau) const {
  const ComplexMatrix a = relaxation_factor(tau);
  return a * sigma * a.adjoint();
}

ComplexMatrix JumpChain::jump(const ComplexMatrix& sigma) const {
  ComplexMatrix out = ComplexMatrix::Zero(sigma.rows(), sigma.cols());
  for (const auto& l : gen_.jump_ops()) out += l * sigma * l.adjoint();
  return out;
}

ComplexMatrix JumpChain::propagate(const ComplexMatrix& rho0, const Trajectory& traj) const {
  ComplexMatrix sigma = rho0;
  double prev = 0.0;
  for (double tk : traj.jump_times()) {
    sigma = jump(relax(sigma, tk - prev));
    prev = tk;
  }
  return relax(sigma, traj.horizon() - prev);
}

double survival_probability(const LindbladGenerator& gen, const DensityMatrix& rho0, double t) {
  require_time(t, "survival_probability");
  const ComplexMatrix a = relaxation_factor(gen, t);
  return real_trace(a * rho0.matrix() * a.adjoint());
}

double exclusive_density(const JumpChain& chain, const ComplexMatrix& rho0,
                         const Trajectory& traj) {
  return real_trace(chain.propagate(rho0, traj));
}

double exclusive_density(const LindbladGenerator& gen, const DensityMatrix& rho0,
                         const Trajectory& traj) {
  return exclusive_density(JumpChain(gen), rho0.matrix(), traj);
}

ComplexMatrix DysonExpansion::state(std::size_t node) const {
  ComplexMatrix sum = terms.front().at(node);
  for (std::size_t n = 1; n < terms.size(); ++n) sum += terms[n].at(node);
  return sum;
}

DysonExpansion dyson_expand(const LindbladGenerator& gen, const ComplexMatrix& rho0, double t,
                            int n_max, int grid_points) {
  require_time(t, "dyson_solve");
  require_grid(grid_points);
  if (n_max < 0) throw InputError("dyson_solve: n_max must be non-negative");
  if (rho0.rows() != gen.dim() || rho0.cols() != gen.dim()) {
    throw InputError("dyson_solve: initial state dimension mismatch");
  }
  const int nodes = grid_points;
  const double h = t / (nodes - 1);

  std::vector<ComplexMatrix> factors(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) factors[k] = mat_exp((k * h) * gen.no_jump_generator());
  const JumpChain chain(gen);

  DysonExpansion out;
  out.step = h;
  out.terms.resize(static_cast<std::size_t>(n_max) + 1);
  auto& zeroth = out.terms[0];
  zeroth.resize(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) zeroth[i] = factors[i] * rho0 * factors[i].adjoint();

  std::vector<ComplexMatrix> jumped(static_cast<std::size_t>(nodes));
  for (int n = 1; n <= n_max; ++n) {
    const auto& prev = out.terms[n - 1];
    for (int j = 0; j < nodes; ++j) jumped[j] = chain.jump(prev[j]);
    auto& cur = out.terms[n];
    cur.assign(static_cast<std::size_t>(nodes), ComplexMatrix::Zero(gen.dim(), gen.dim()));
    for (int i = 1; i < nodes; ++i) {
      ComplexMatrix acc = ComplexMatrix::Zero(gen.dim(), gen.dim());
      for (int j = 0; j <= i; ++j) {
        const ComplexMatrix& a = factors[i - j];
        acc.noalias() += trapezoid_weight(j, i, h) * (a * jumped[j] * a.adjoint());
      }
      cur[i] = std::move(acc);
    }
  }
  return out;
}

ComplexMatrix dyson_solve(const LindbladGenerator& gen, const DensityMatrix& rho0, double t,
                          int n_max, int grid_points) {
  return dyson_expand(gen, rho0.matrix(), t, n_max, grid_points).final_state();
}

std::vector<double> trajectory_masses(const LindbladGenerator& gen, const DensityMatrix& rho0,
                                      double t, int n_max, int grid_points) {
  const auto expansion = dyson_expand(gen, rho0.matrix(), t, n_max, grid_points);
  std::vector<double> masses;
  masses.reserve(expansion.terms.size());
  for (const auto& term : expansion.terms) masses.push_back(real_trace(term.back()));
  return masses;
}

double jump_count_tail_bound(const LindbladGenerator& gen, double t, int n_max) {
  require_time(t, "jump_count_tail_bound");
  const ComplexMatrix rate = gen.total_jump_rate();
  const double max_rate = std::max(0.0, hermitian_eigenvalues(rate).maxCoeff());
  const double mu = max_rate * t;
  // 1 - sum_{j <= n_max} Poisson(j; mu), summed from the tail side for accuracy.
  double term = std::exp(-mu);
  double head = 0.0;
  for (int j = 0; j <= n_max; ++j) {
    head += term;
    term *= mu / (j + 1);
  }
  double tail = 0.0;
  for (int j = n_max + 1; term > 1e-300 && j < n_max + 10000; ++j) {
    tail += term;
    term *= mu / (j + 1);
  }
  return std::max(tail, 1.0 - head);
}

Demixture physprob_decompose(const JumpChain& chain, const DensityMatrix& rho0,
                             const Trajectory& traj) {
  // Compose the normalized maps R~ and J~; the product of the normalization
  // constants is the trajectory weight.
  ComplexMatrix sigma = rho0.matrix();
  double weight = 1.0;
  auto renormalize = [&](ComplexMatrix img) {
    const double tr = real_trace(img);
    if (!(std::abs(tr) > kNullTraceTolerance)) {
      throw NullOutcome("physprob_decompose: trajectory has zero weight");
    }
    weight *= tr;
    sigma = img / tr;
  };
  double prev = 0.0;
  for (double tk : traj.jump_times()) {
    renormalize(chain.relax(sigma, tk - prev));
    renormalize(chain.jump(sigma));
    prev = tk;
  }
  renormalize(chain.relax(sigma, traj.horizon() - prev));
  if (!(weight > kNullTraceTolerance)) {
    throw NullOutcome("physprob_decompose: trajectory has zero weight");
  }
  return Demixture{TrajectoryWeight{weight},
                   DensityMatrix(0.5 * (sigma + sigma.adjoint()), rho0.tolerance())};
}

Demixture physprob_decompose(const LindbladGenerator& gen, const DensityMatrix& rho0,
                             const Trajectory& traj) {
  return physprob_decompose(JumpChain(gen), rho0, traj);
}

std::vector<ComplexMatrix> reassemble_demixture(const LindbladGenerator& gen,
                                                const DensityMatrix& rho0, double t,
                                                int n_max, int grid_points) {
  require_time(t, "reassemble_demixture");
  require_grid(grid_points);
  if (n_max < 0 || n_max > 2) {
    throw InputError("reassemble_demixture: trajectory quadrature supports n_max <= 2");
  }
  const int nodes = grid_points;
  const double h = t / (nodes - 1);
  const int d = gen.dim();
  const JumpChain chain = t > 0.0 ? JumpChain(gen, h, nodes) : JumpChain(gen);

  auto contribution = [&](const Trajectory& traj) -> ComplexMatrix {
    if (exclusive_density(chain, rho0.matrix(), traj) <= kNullTraceTolerance) {
      return ComplexMatrix::Zero(d, d);
    }
    const auto dm = physprob_decompose(chain, rho0, traj);
    return dm.weight.value * dm.state.matrix();
  };

  std::vector<ComplexMatrix> orders;
  orders.push_back(contribution(Trajectory(t)));
  const int last = nodes - 1;
  if (n_max >= 1) {
    ComplexMatrix sum = ComplexMatrix::Zero(d, d);
    for (int j = 0; j <= last; ++j) {
      const double w = trapezoid_weight(j, last, h);
      if (w != 0.0) sum += w * contribution(Trajectory(t, {j * h}));
    }
    orders.push_back(std::move(sum));
  }
  if (n_max >= 2) {
    ComplexMatrix sum = ComplexMatrix::Zero(d, d);
    for (int j2 = 1; j2 <= last; ++j2) {
      const double w2 = trapezoid_weight(j2, last, h);
      for (int j1 = 0; j1 <= j2; ++j1) {
        const double w = w2 * trapezoid_weight(j1, j2, h);
        if (w != 0.0) sum += w * contribution(Trajectory(t, {j1 * h, j2 * h}));
      }
    }
    orders.push_back(std::move(sum));
  }
  return orders;
}

namespace {

double survival_from(const JumpChain& chain, const ComplexMatrix& sigma, double tau) {
  return real_trace(chain.relax(sigma, tau));
}

ComplexMatrix normalized(const ComplexMatrix& a) {
  const double tr = real_trace(a);
  if (!(std::abs(tr) > kNullTraceTolerance)) {
    throw NullOutcome("sampler: conditional state has zero trace");
  }
  return a / tr;
}

// Advances one sampled trajectory to checkpoints.back(), storing the
// conditional state at each checkpoint into `out` and jump times into `jumps`.
void run_sampler(const JumpChain& chain, const ComplexMatrix& rho0,
                 const std::vector<double>& checkpoints, RandomStream& stream,
                 std::vector<ComplexMatrix>& out, std::vector<double>& jumps) {
  const double horizon = checkpoints.back();
  ComplexMatrix sigma = rho0;
  double s = 0.0;
  std::size_t next_cp = 0;
  out.resize(checkpoints.size());
  auto flush_until = [&](double limit, bool inclusive) {
    while (next_cp < checkpoints.size() &&
           (checkpoints[next_cp] < limit || (inclusive && checkpoints[next_cp] <= limit))) {
      out[next_cp] = normalized(chain.relax(sigma, checkpoints[next_cp] - s));
      ++next_cp;
    }
  };
  for (;;) {
    const double u = stream.uniform();
    const double span = horizon - s;
    if (survival_from(chain, sigma, span) > u) {
      flush_until(horizon, true);
      return;
    }
    // Survival is non-increasing in tau: bisect for Tr R(tau) sigma = u.
    double lo = 0.0;
    double hi = span;
    double tau = 0.5 * (lo + hi);
    for (int it = 0; it < kBisectionMaxIterations; ++it) {
      tau = 0.5 * (lo + hi);
      const double sv = survival_from(chain, sigma, tau);
      if (std::abs(sv - u) <= kBisectionTolerance) break;
      if (sv > u) {
        lo = tau;
      } else {
        hi = tau;
      }
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
    }
    flush_until(s + tau, false);
    sigma = normalized(chain.jump(chain.relax(sigma, tau)));
    s += tau;
    jumps.push_back(s);
  }
}

void require_checkpoints(const std::vector<double>& checkpoints) {
  if (checkpoints.empty()) throw InputError("sampler: no checkpoints");
  double prev = 0.0;
  for (double c : checkpoints) {
    if (!(c >= prev) || !std::isfinite(c)) {
      throw InputError("sampler: checkpoints must be non-negative and non-decreasing");
    }
    prev = c;
  }
}

}  // namespace

SampledTrajectory sample_trajectory(const JumpChain& chain, const DensityMatrix& rho0, double t,
                                    RandomStream& stream) {
  require_time(t, "sample_trajectory");
  std::vector<ComplexMatrix> out;
  std::vector<double> jumps;
  run_sampler(chain, rho0.matrix(), {t}, stream, out, jumps);
  const ComplexMatrix& s = out.front();
  return SampledTrajectory{Trajectory(t, std::move(jumps)),
                           DensityMatrix(0.5 * (s + s.adjoint()), rho0.tolerance())};
}

SampledTrajectory sample_trajectory(const LindbladGenerator& gen, const DensityMatrix& rho0,
                                    double t, RandomStream& stream) {
  return sample_trajectory(JumpChain(gen), rho0, t, stream);
}

std::vector<ComplexMatrix> sample_path(const JumpChain& chain, const DensityMatrix& rho0,
                                       const std::vector<double>& checkpoints,
                                       RandomStream& stream) {
  require_checkpoints(checkpoints);
  std::vector<ComplexMatrix> out;
  std::vector<double> jumps;
  run_sampler(chain, rho0.matrix(), checkpoints, stream, out, jumps);
  return out;
}

DensityMatrix mc_average(const LindbladGenerator& gen, const DensityMatrix& rho0, double t,
                         std::size_t n_samples, std::uint64_t seed, int threads) {
  require_time(t, "mc_average");
  if (n_samples < 1) throw InputError("mc_average: n_samples must be at least 1");
  const JumpChain chain(gen);
  const ComplexMatrix zero = ComplexMatrix::Zero(gen.dim(), gen.dim());
  const ComplexMatrix mean = ordered_mean(n_samples, threads, zero, [&](std::size_t i) {
    CounterStream stream(seed, i);
    std::vector<ComplexMatrix> out;
    std::vector<double> jumps;
    run_sampler(chain, rho0.matrix(), {t}, stream, out, jumps);
    return out.front();
  });
  return DensityMatrix(0.5 * (mean + mean.adjoint()), std::max(rho0.tolerance(), 1e-9));
}

std::vector<ComplexMatrix> mc_average_series(const LindbladGenerator& gen,
                                             const DensityMatrix& rho0,
                                             const std::vector<double>& times,
                                             std::size_t n_samples, std::uint64_t seed,
                                             int threads) {
  require_checkpoints(times);
  if (n_samples < 1) throw InputError("mc_average: n_samples must be at least 1");
  const JumpChain chain(gen);
  const int d = gen.dim();
  const auto m = static_cast<Eigen::Index>(times.size());
  const ComplexMatrix zero = ComplexMatrix::Zero(d, d * m);
  const ComplexMatrix mean = ordered_mean(n_samples, threads, zero, [&](std::size_t i) {
    CounterStream stream(seed, i);
    std::vector<ComplexMatrix> out;
    std::vector<double> jumps;
    run_sampler(chain, rho0.matrix(), times, stream, out, jumps);
    ComplexMatrix stacked(d, d * m);
    for (Eigen::Index k = 0; k < m; ++k) stacked.middleCols(k * d, d) = out[k];
    return stacked;
  });
  std::vector<ComplexMatrix> series;
  series.reserve(times.size());
  for (Eigen::Index k = 0; k < m; ++k) series.emplace_back(mean.middleCols(k * d, d));
  return series;
}

ComplexMatrix poisson_unnormalized(const LindbladGenerator& gen, const DensityMatrix& rho0,
                                   const Trajectory& traj, const PoissonReference& ref) {
  const double n = static_cast<double>(traj.jumps());
  const double scale = std::exp(ref.rate() * traj.horizon() - n * std::log(ref.rate()));
  return scale * JumpChain(gen).propagate(rho0.matrix(), traj);
}

RenewalReduction::RenewalReduction(JumpChain chain, DensityMatrix fixed_state, double step,
                                   int points)
    : chain_(std::move(chain)), fixed_state_(std::move(fixed_state)), step_(step) {
  if (!(step > 0.0) || points < 2) throw InputError("RenewalReduction: invalid grid");
  w0_.reserve(static_cast<std::size_t>(points));
  w_.reserve(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    w0_.push_back(w0(k * step));
    w_.push_back(w(k * step));
  }
}

double RenewalReduction::w0(double t) const {
  return real_trace(chain_.relax(fixed_state_.matrix(), t));
}

double RenewalReduction::w(double t) const {
  return real_trace(chain_.jump(chain_.relax(fixed_state_.matrix(), t)));
}

double RenewalReduction::product_density(const Trajectory& traj) const {
  double prod = 1.0;
  double prev = 0.0;
  for (double tk : traj.jump_times()) {
    prod *= w(tk - prev);
    prev = tk;
  }
  return prod * w0(traj.horizon() - prev);
}

double RenewalReduction::chain_density(const Trajectory& traj) const {
  return exclusive_density(chain_, fixed_state_.matrix(), traj);
}

double RenewalReduction::derivative_identity_error(int points, double delta) const {
  if (points < 1) throw InputError("derivative_identity_error: need at least one point");
  const double t_max = step_ * static_cast<double>(w0_.size() - 1);
  double worst = 0.0;
  for (int k = 1; k <= points; ++k) {
    const double t = t_max * k / (points + 1);
    const double dw0 = (w0(t + delta) - w0(t - delta)) / (2.0 * delta);
    worst = std::max(worst, std::abs(dw0 + w(t)));
  }
  return worst;
}

double RenewalReduction::product_form_error(int n_trajectories, int max_jumps,
                                            std::uint64_t seed) const {
  const double t_max = step_ * static_cast<double>(w0_.size() - 1);
  double worst = 0.0;
  for (int i = 0; i < n_trajectories; ++i) {
    CounterStream stream(seed, static_cast<std::uint64_t>(i));
    const double horizon = t_max * stream.uniform();
    const int n = static_cast<int>(stream.uniform() * (max_jumps + 1));
    std::vector<double> times;
    for (int k = 0; k < n; ++k) times.push_back(horizon * stream.uniform());
    std::sort(times.begin(), times.end());
    const Trajectory traj(horizon, std::move(times));
    worst = std::max(worst, std::abs(product_density(traj) - chain_density(traj)));
  }
  return worst;
}

std::optional<RenewalReduction> renewal_reduction(const LindbladGenerator& gen, double tol,
                                                  RenewalReductionOptions options) {
  if (!(options.t_max > 0.0) || options.points < 2) {
    throw InputError("renewal_reduction: invalid tabulation grid");
  }
  JumpChain chain(gen);
  auto fixed = fixed_output_detect(chain.jump_map(), tol);
  if (!fixed) return std::nullopt;
  return RenewalReduction(std::move(chain), std::move(*fixed),
                          options.t_max / (options.points - 1), options.points);
}

}  // namespace renewalq
