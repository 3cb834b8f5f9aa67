#pragma once

// Waiting-time distributions and the renewal processes they generate.

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "renewalq/qmatrix.hpp"
#include "renewalq/random.hpp"
#include "renewalq/trajectory.hpp"

namespace renewalq {

inline constexpr double kTabulatedNormalizationTolerance = 1e-6;

struct ExponentialWait {
  double rate;
};

struct ErlangWait {
  int shape;
  double rate;
};

/// f on the uniform grid t_i = i * step, linearly interpolated, zero beyond
/// the last node. `survival_nodes` holds 1 - running trapezoid of f.
struct TabulatedWait {
  double step;
  std::vector<double> values;
  std::vector<double> survival_nodes;

  double t_end() const { return step * static_cast<double>(values.size() - 1); }
};

class WaitingTime {
 public:
  using Kind = std::variant<ExponentialWait, ErlangWait, TabulatedWait>;

  static WaitingTime exponential(double rate);
  static WaitingTime erlang(int shape, double rate);
  /// Rejects negative values or a trapezoid integral off by more than 1e-6.
  static WaitingTime tabulated(double step, std::vector<double> values);

  const Kind& kind() const { return kind_; }
  bool is_exponential() const { return std::holds_alternative<ExponentialWait>(kind_); }
  bool has_closed_laplace() const { return !std::holds_alternative<TabulatedWait>(kind_); }

  double pdf(double t) const;
  /// g(t) = 1 - int_0^t f.
  double survival(double t) const;
  double pdf_at_zero() const { return pdf(0.0); }
  /// f^(u); throws InputError where the transform integral diverges.
  Complex laplace_pdf(Complex u) const;
  /// One waiting time; +infinity for the residual mass of a tabulation.
  double sample(RandomStream& stream) const;

  /// P(more than n renewals in [0, t]) = P(first n + 1 waits sum to <= t).
  double count_tail(double t, int n) const;

  std::string describe() const;

 private:
  explicit WaitingTime(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// |trapezoid integral of values - 1|.
double tabulated_normalization_defect(double step, std::span<const double> values);

struct WaitingTimeTable {
  double step;
  std::vector<double> values;
};

/// Raw rows of a waiting-time CSV, without the normalization check.
WaitingTimeTable read_waiting_time_csv(const std::string& path);

/// Two-column CSV (t, f) with t uniform and starting at 0; an optional
/// non-numeric header line is skipped.
WaitingTime load_waiting_time_csv(const std::string& path);

double survival(const WaitingTime& wt, double t);
Complex laplace_pdf(const WaitingTime& wt, Complex u);

enum class Direction {
  /// Waits accumulate from 0: density f(t_1) f(t_2 - t_1) ... g(t - t_n).
  forward,
  /// Waits accumulate backward from the horizon: density
  /// f(t - t_n) ... f(t_2 - t_1) g(t_1), the ordering used by the
  /// collisional solvers.
  reverse,
};

Trajectory sample_renewal(const WaitingTime& wt, double t, RandomStream& stream,
                          Direction direction);

/// p_n = f(t - t_n) ... f(t_2 - t_1) g(t_1); p_0 = g(t).
double pn_density(const WaitingTime& wt, const Trajectory& traj);

/// int p_n over the ordered simplex for n = 0..n_max, by iterated trapezoid
/// convolution on `grid_points` nodes.
std::vector<double> pn_masses(const WaitingTime& wt, double t, int n_max, int grid_points);

/// Count-tail by direct convolution quadrature (valid for every kind).
double count_tail_quadrature(const WaitingTime& wt, double t, int n, int grid_points);

}  // namespace renewalq
