#pragma once

// Collisional model driven by a renewal process.
//
// Between collisions the system evolves with a CPTP family F(t); at each
// renewal the collision map E acts. With waiting-time density f and survival
// g the averaged state is
//   rho(t) = g(t) F(t) rho0 + int_0^t f(t - s) F(t - s) E rho(s) ds.
// Interval ordering: g weighs the first interval, f every later one.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "renewalq/channels.hpp"
#include "renewalq/renewal.hpp"
#include "renewalq/laplace_inversion.hpp"

namespace renewalq {

inline constexpr double kCollisionalCptpTolerance = 1e-8;

class IntercollisionFamily {
 public:
  struct Semigroup {
    LindbladGenerator generator;
    ComplexMatrix liouvillian;  // M0
  };
  /// F at t_k = k * step; linear interpolation in between; held at the last
  /// node beyond the table.
  struct Tabulated {
    double step;
    std::vector<ComplexMatrix> nodes;
  };

  static IntercollisionFamily semigroup(const LindbladGenerator& gen);
  /// F(t) = identity for all t (the zero generator).
  static IntercollisionFamily identity(int dim);
  /// Requires F(0) = identity and every node CPTP within 1e-8.
  static IntercollisionFamily tabulated(double step, const std::vector<Superoperator>& nodes);
  /// Shape checks only; for diagnostics and negative controls.
  static IntercollisionFamily tabulated_unchecked(double step,
                                                  const std::vector<Superoperator>& nodes);

  int dim() const { return dim_; }
  bool is_semigroup() const { return std::holds_alternative<Semigroup>(kind_); }
  const std::variant<Semigroup, Tabulated>& kind() const { return kind_; }

  /// d^2 x d^2 matrix of F(t), t >= 0.
  ComplexMatrix at(double t) const;
  /// dF/dt: M0 F(t) for a semigroup, central node differences for a table.
  ComplexMatrix derivative(double t) const;
  /// F(k h) for k = 0..nodes-1.
  std::vector<ComplexMatrix> on_grid(double h, int nodes) const;

 private:
  IntercollisionFamily(int dim, std::variant<Semigroup, Tabulated> kind)
      : dim_(dim), kind_(std::move(kind)) {}
  int dim_;
  std::variant<Semigroup, Tabulated> kind_;
};

class CollisionalModel {
 public:
  /// Requires consistent dimensions and E CPTP within 1e-8.
  CollisionalModel(IntercollisionFamily family, Superoperator collision, WaitingTime wait);
  /// Skips the CPTP check on E; dimensions are still checked. For negative
  /// controls only.
  static CollisionalModel unchecked(IntercollisionFamily family, Superoperator collision,
                                    WaitingTime wait);

  int dim() const { return family_.dim(); }
  const IntercollisionFamily& family() const { return family_; }
  const Superoperator& collision() const { return collision_; }
  const WaitingTime& wait() const { return wait_; }

 private:
  CollisionalModel(IntercollisionFamily family, Superoperator collision, WaitingTime wait,
                   bool check);
  IntercollisionFamily family_;
  Superoperator collision_;
  WaitingTime wait_;
};

class SolverGrid {
 public:
  /// t_max > 0, steps >= 2.
  SolverGrid(double t_max, int steps);
  double t_max() const { return t_max_; }
  int steps() const { return steps_; }
  double step() const { return t_max_ / steps_; }
  double time(int i) const { return t_max_ * i / steps_; }
  std::vector<double> times() const;

 private:
  double t_max_;
  int steps_;
};

/// States at the grid nodes 0..steps. Solver outputs are raw operators:
/// Hermitian and unit-trace only up to discretization error.
struct StateSeries {
  std::vector<double> times;
  std::vector<ComplexMatrix> states;
};

/// Smallest n with wait.count_tail(t_max, n) < tail_tol.
int auto_series_order(const WaitingTime& wait, double t_max, double tail_tol = 1e-8);

/// Truncated trajectory series; n_max defaults to auto_series_order.
StateSeries series_solve(const CollisionalModel& model, const ComplexMatrix& rho0,
                         const SolverGrid& grid, std::optional<int> n_max = std::nullopt);

/// Trapezoid march of the Volterra equation with a direct implicit solve.
StateSeries volterra_solve(const CollisionalModel& model, const ComplexMatrix& rho0,
                           const SolverGrid& grid);

/// Transforms of f F and g F at u.
struct IntercollisionTransforms {
  ComplexMatrix f_hat_F;
  ComplexMatrix g_hat_F;
};
IntercollisionTransforms intercollision_transforms(const CollisionalModel& model, Complex u);

struct Resolvent {
  ComplexVector rho_hat;  // vec of the transformed state
  IntercollisionTransforms transforms;
};
/// rho^(u) = [I - f^F(u) E]^{-1} g^F(u) rho0.
Resolvent laplace_resolvent(const CollisionalModel& model, const ComplexMatrix& rho0, Complex u);

/// Closed-form transforms (semigroup family with an exponential or Erlang
/// wait) are inverted by Talbot; quadrature transforms of tabulated
/// ingredients by de Hoog, unless config.method says otherwise.
std::vector<ComplexMatrix> laplace_solve(const CollisionalModel& model, const ComplexMatrix& rho0,
                                         std::span<const double> t_values,
                                         const LaplaceInversionConfig& config = {});

/// Max over interior nodes of the Frobenius norm of the differentiated
/// integral equation's residual; solution.states[0] is rho(0).
double fint_residual(const CollisionalModel& model, const StateSeries& solution);

/// Mean over sampled renewal trajectories; sample i uses CounterStream(seed, i).
ComplexMatrix mc_collisional(const CollisionalModel& model, const ComplexMatrix& rho0, double t,
                             std::size_t n_samples, std::uint64_t seed, Direction direction,
                             int threads = 1);
/// Independent estimates at each time; time k uses substream k.
std::vector<ComplexMatrix> mc_collisional_series(const CollisionalModel& model,
                                                 const ComplexMatrix& rho0,
                                                 std::span<const double> times,
                                                 std::size_t n_samples, std::uint64_t seed,
                                                 Direction direction, int threads = 1);

/// M0 + lambda (E - I); requires an exponential wait and a semigroup family.
Superoperator markov_limit_generator(const CollisionalModel& model);

enum class SolverKind { series, volterra, laplace };

/// Propagator Phi(t) assembled from the evolution of every matrix unit, with
/// CP judged at -1e-8 and TP at 1e-6. Series and Volterra sample times must
/// be grid nodes.
std::vector<CptpReport> cptp_certify_dynamics(const CollisionalModel& model, SolverKind solver,
                                              const SolverGrid& grid,
                                              std::span<const double> sample_times);

}  // namespace renewalq
