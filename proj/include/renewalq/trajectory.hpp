#pragma once

#include <cstddef>
#include <vector>

namespace renewalq {

/// Jump (or collision) times within a horizon.
class Trajectory {
 public:
  /// Requires 0 <= t_1 <= ... <= t_n <= horizon (boundary coincidences are
  /// allowed so that closed quadrature grids can be enumerated). Unordered or
  /// out-of-range times throw InputError.
  Trajectory(double horizon, std::vector<double> jump_times = {});

  double horizon() const { return horizon_; }
  const std::vector<double>& jump_times() const { return jump_times_; }
  std::size_t jumps() const { return jump_times_.size(); }

 private:
  double horizon_;
  std::vector<double> jump_times_;
};

}  // namespace renewalq
