#pragma once

// Trajectory representation of Lindblad dynamics.
//
// A trajectory is a list of jump times t_1 <= ... <= t_n within [0, t]. Its
// unnormalized state is the chain
//   R(t - t_n) J ... J R(t_2 - t_1) J R(t_1) rho0,
// whose trace is the exclusive probability density pi^n_t(t_1, ..., t_n).

#include <cstdint>
#include <optional>
#include <vector>

#include "renewalq/channels.hpp"
#include "renewalq/random.hpp"
#include "renewalq/trajectory.hpp"

namespace renewalq {

/// pi^0 for n = 0 (a probability), pi^n for n >= 1 (a density in n times).
struct TrajectoryWeight {
  double value = 0.0;
};

class PoissonReference {
 public:
  explicit PoissonReference(double rate);
  double rate() const { return rate_; }
  /// lambda^n exp(-lambda t).
  double weight(std::size_t n, double t) const;

 private:
  double rate_;
};

/// Evaluates jump chains for one generator, optionally with e^{kh R} cached
/// for k = 0..nodes-1 so that grid-aligned chains avoid matrix exponentials.
class JumpChain {
 public:
  explicit JumpChain(const LindbladGenerator& gen);
  JumpChain(const LindbladGenerator& gen, double step, int nodes);

  const LindbladGenerator& generator() const { return gen_; }
  const Superoperator& jump_map() const { return jump_; }

  /// e^{tau R}.
  ComplexMatrix relaxation_factor(double tau) const;
  /// R(tau) sigma.
  ComplexMatrix relax(const ComplexMatrix& sigma, double tau) const;
  /// J sigma.
  ComplexMatrix jump(const ComplexMatrix& sigma) const;
  /// Unnormalized chain for `traj` started from rho0.
  ComplexMatrix propagate(const ComplexMatrix& rho0, const Trajectory& traj) const;

 private:
  LindbladGenerator gen_;
  Superoperator jump_;
  double step_ = 0.0;
  std::vector<ComplexMatrix> table_;
};

/// pi^0_t(t) = Tr R(t) rho0.
double survival_probability(const LindbladGenerator& gen, const DensityMatrix& rho0, double t);

double exclusive_density(const LindbladGenerator& gen, const DensityMatrix& rho0,
                         const Trajectory& traj);
double exclusive_density(const JumpChain& chain, const ComplexMatrix& rho0,
                         const Trajectory& traj);

/// Dyson terms on a uniform grid of `grid_points` nodes over [0, t]:
/// terms[n][i] is the n-jump contribution at time i*h, obtained by iterated
/// trapezoid convolution term_n(t) = int_0^t R(t-s) J term_{n-1}(s) ds.
struct DysonExpansion {
  double step = 0.0;
  std::vector<std::vector<ComplexMatrix>> terms;

  /// Sum over orders at grid node i.
  ComplexMatrix state(std::size_t node) const;
  ComplexMatrix final_state() const { return state(terms.front().size() - 1); }
};

DysonExpansion dyson_expand(const LindbladGenerator& gen, const ComplexMatrix& rho0, double t,
                            int n_max, int grid_points);
/// Truncated Dyson series at time t.
ComplexMatrix dyson_solve(const LindbladGenerator& gen, const DensityMatrix& rho0, double t,
                          int n_max, int grid_points);

/// Integrated trajectory-space masses: element n is int pi^n over the ordered
/// simplex (element 0 is pi^0). Same quadrature as dyson_expand.
std::vector<double> trajectory_masses(const LindbladGenerator& gen, const DensityMatrix& rho0,
                                      double t, int n_max, int grid_points);

/// Upper bound on P(more than n_max jumps before t): the jump intensity never
/// exceeds ||sum_k L_k^dag L_k||, so the count is dominated by a Poisson law.
double jump_count_tail_bound(const LindbladGenerator& gen, double t, int n_max);

struct Demixture {
  TrajectoryWeight weight;
  DensityMatrix state;
};

/// (pi^n, normalized conditional state); throws NullOutcome for a trajectory
/// of vanishing weight.
Demixture physprob_decompose(const LindbladGenerator& gen, const DensityMatrix& rho0,
                             const Trajectory& traj);
Demixture physprob_decompose(const JumpChain& chain, const DensityMatrix& rho0,
                             const Trajectory& traj);

/// Per-order sums of weight * conditional state over the iterated-trapezoid
/// trajectory grid (n_max <= 2). Null-weight trajectories contribute zero.
std::vector<ComplexMatrix> reassemble_demixture(const LindbladGenerator& gen,
                                                const DensityMatrix& rho0, double t,
                                                int n_max, int grid_points);

struct SampledTrajectory {
  Trajectory trajectory;
  DensityMatrix state;
};

/// Sequential survival-inversion sampler: from the current state sigma at time
/// s draw u, find tau with Tr R(tau) sigma = u by bisection; jump if s + tau
/// falls before the horizon.
SampledTrajectory sample_trajectory(const LindbladGenerator& gen, const DensityMatrix& rho0,
                                    double t, RandomStream& stream);
SampledTrajectory sample_trajectory(const JumpChain& chain, const DensityMatrix& rho0, double t,
                                    RandomStream& stream);

/// Conditional states of one sampled trajectory at increasing checkpoint
/// times (the last checkpoint is the horizon).
std::vector<ComplexMatrix> sample_path(const JumpChain& chain, const DensityMatrix& rho0,
                                       const std::vector<double>& checkpoints,
                                       RandomStream& stream);

/// Mean conditional state over n_samples trajectories; trajectory i uses
/// CounterStream(seed, i). Bit-identical for any thread count.
DensityMatrix mc_average(const LindbladGenerator& gen, const DensityMatrix& rho0, double t,
                         std::size_t n_samples, std::uint64_t seed, int threads = 1);
std::vector<ComplexMatrix> mc_average_series(const LindbladGenerator& gen,
                                             const DensityMatrix& rho0,
                                             const std::vector<double>& times,
                                             std::size_t n_samples, std::uint64_t seed,
                                             int threads = 1);

/// lambda^{-n} e^{lambda t} times the unnormalized chain.
ComplexMatrix poisson_unnormalized(const LindbladGenerator& gen, const DensityMatrix& rho0,
                                   const Trajectory& traj, const PoissonReference& ref);

/// Fixed-output jump: J sigma = rho_bar Tr(J sigma). Then started from
/// rho_bar the densities factor as w0(t - t_n) ... w(t_2 - t_1) w(t_1) with
/// w0(t) = Tr R(t) rho_bar and w(t) = Tr J R(t) rho_bar.
class RenewalReduction {
 public:
  RenewalReduction(JumpChain chain, DensityMatrix fixed_state, double step, int points);

  const DensityMatrix& fixed_state() const { return fixed_state_; }
  double step() const { return step_; }
  const std::vector<double>& w0_table() const { return w0_; }
  const std::vector<double>& w_table() const { return w_; }

  double w0(double t) const;
  double w(double t) const;
  /// w0(t - t_n) w(t_n - t_{n-1}) ... w(t_1).
  double product_density(const Trajectory& traj) const;
  /// Chain density started from rho_bar, for comparison.
  double chain_density(const Trajectory& traj) const;
  /// max |(w0(t+d) - w0(t-d)) / 2d + w(t)| over `points` interior nodes.
  double derivative_identity_error(int points, double delta = 1e-5) const;
  /// max |product_density - chain_density| over random trajectories.
  double product_form_error(int n_trajectories, int max_jumps, std::uint64_t seed) const;

 private:
  JumpChain chain_;
  DensityMatrix fixed_state_;
  double step_;
  std::vector<double> w0_;
  std::vector<double> w_;
};

struct RenewalReductionOptions {
  double t_max = 10.0;
  int points = 1001;
};

/// Absent unless the jump map is fixed-output.
std::optional<RenewalReduction> renewal_reduction(const LindbladGenerator& gen,
                                                  double tol = kFixedOutputTolerance,
                                                  RenewalReductionOptions options = {});

}  // namespace renewalq
