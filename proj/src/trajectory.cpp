#include "renewalq/trajectory.hpp"

#include <cmath>

#include "renewalq/errors.hpp"

namespace renewalq {

Trajectory::Trajectory(double horizon, std::vector<double> jump_times)
    : horizon_(horizon), jump_times_(std::move(jump_times)) {
  if (!(horizon_ >= 0.0) || !std::isfinite(horizon_)) {
    throw InputError("Trajectory: horizon must be finite and non-negative");
  }
  double prev = 0.0;
  for (double tk : jump_times_) {
    if (!std::isfinite(tk) || tk < prev) {
      throw InputError("Trajectory: jump times must be ordered within [0, horizon]");
    }
    prev = tk;
  }
  if (prev > horizon_) throw InputError("Trajectory: jump time beyond horizon");
}

}  // namespace renewalq
