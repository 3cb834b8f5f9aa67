#include <cmath>
#include <numbers>

#include "doctest.h"
#include "renewalq/errors.hpp"
#include "renewalq/lindblad_traj.hpp"
#include "support.hpp"

using namespace renewalq;
using namespace renewalq::testing;

namespace {

const DensityMatrix kExcited = DensityMatrix::basis(2, 1);
const DensityMatrix kGround = DensityMatrix::basis(2, 0);

ComplexMatrix exact(const LindbladGenerator& gen, const ComplexMatrix& rho0, double t) {
  return devectorize(ComplexVector(mat_exp(t * liouvillian(gen).matrix()) * vectorize(rho0).vec));
}

// Replays a fixed list of uniforms.
class ScriptedStream final : public RandomStream {
 public:
  explicit ScriptedStream(std::vector<double> values) : values_(std::move(values)) {}
  double uniform() override { return values_.at(next_++); }

 private:
  std::vector<double> values_;
  std::size_t next_ = 0;
};

}  // namespace

TEST_CASE("trajectory validation") {
  CHECK_NOTHROW(Trajectory(2.0, {0.5, 1.0}));
  CHECK_THROWS_AS(Trajectory(2.0, {1.0, 0.5}), InputError);
  CHECK_THROWS_AS(Trajectory(2.0, {2.5}), InputError);
  CHECK_THROWS_AS(Trajectory(2.0, {-0.1}), InputError);
  CHECK_THROWS_AS(Trajectory(-1.0), InputError);
}

TEST_CASE("survival_probability") {
  const LindbladGenerator ad = amplitude_damping();
  CHECK(std::abs(survival_probability(ad, kExcited, std::log(2.0)) - 0.5) < 1e-14);
  Gen gen(31);
  const LindbladGenerator g = gen.generator(3, 2, 1.0);
  CHECK(std::abs(survival_probability(g, DensityMatrix(gen.density(3)), 0.0) - 1.0) < 1e-14);
  for (const double t : {0.0, 0.7, 3.0, 40.0}) {
    CHECK(std::abs(survival_probability(ad, kGround, t) - 1.0) < 1e-14);
  }
  CHECK_THROWS_AS(survival_probability(ad, kExcited, -1.0), InputError);
}

TEST_CASE("exclusive_density") {
  const LindbladGenerator ad = amplitude_damping();
  CHECK(std::abs(exclusive_density(ad, kExcited, Trajectory(2.0, {0.5})) - std::exp(-0.5)) <
        1e-14);
  CHECK(std::abs(exclusive_density(ad, kExcited, Trajectory(2.0, {0.3, 0.7}))) < 1e-15);
  CHECK(std::abs(exclusive_density(ad, kExcited, Trajectory(1.3)) -
                 survival_probability(ad, kExcited, 1.3)) < 1e-15);
}

TEST_CASE("exclusive densities depend on the initial state") {
  const LindbladGenerator ad = amplitude_damping();
  const Trajectory one(1.0, {0.4});
  const double from_excited = exclusive_density(ad, kExcited, one);
  const double from_plus = exclusive_density(ad, DensityMatrix(plus_state()), one);
  CHECK(std::abs(from_excited - from_plus) > 1e-3);
}

TEST_CASE("dyson_solve") {
  const LindbladGenerator ad = amplitude_damping();
  const ComplexMatrix zeroth = dyson_solve(ad, kExcited, 1.0, 0, 101);
  CHECK(max_abs(zeroth - relaxation_semigroup(ad, 1.0).apply(kExcited.matrix())) < 1e-15);

  const ComplexMatrix r = dyson_solve(ad, kExcited, 1.0, 2, 2001);
  CHECK(trace_norm_distance(r, exact(ad, kExcited, 1.0)) < 1e-6);
  CHECK(std::abs(r(1, 1).real() - std::exp(-1.0)) < 1e-6);
  CHECK(std::abs(r(0, 0).real() - (1.0 - std::exp(-1.0))) < 1e-6);

  const LindbladGenerator rot(sigma_z(), {});
  for (const int n : {0, 1, 3}) {
    CHECK(max_abs(dyson_solve(rot, DensityMatrix(plus_state()), 2.0, n, 51) -
                  exact(rot, plus_state(), 2.0)) < 1e-14);
  }
}

TEST_CASE("dyson trace approaches one from below") {
  Gen gen(32);
  const LindbladGenerator g = gen.generator(2, 2, 1.0);
  const DensityMatrix rho0(gen.density(2));
  double prev = 0.0;
  for (int n = 0; n <= 5; ++n) {
    const double tr = dyson_solve(g, rho0, 1.0, n, 401).trace().real();
    CHECK(tr >= prev - 1e-12);
    CHECK(tr <= 1.0 + 1e-6);
    prev = tr;
  }
  CHECK(prev > 1.0 - jump_count_tail_bound(g, 1.0, 5) - 1e-6);
}

TEST_CASE("trajectory masses sum to one up to the jump-count tail") {
  const auto ad = trajectory_masses(amplitude_damping(), kExcited, 1.0, 2, 2001);
  const double total_ad = ad[0] + ad[1] + ad[2];
  CHECK(std::abs(ad[2]) < 1e-15);
  CHECK(std::abs(total_ad - 1.0) < 1e-6);

  Gen gen(33);
  for (int trial = 0; trial < 5; ++trial) {
    const LindbladGenerator g = gen.generator(2, gen.integer(1, 3), 0.3);
    const DensityMatrix rho0(gen.density(2));
    const auto m = trajectory_masses(g, rho0, 1.0, 4, 401);
    double total = 0.0;
    for (const double x : m) {
      CHECK(x >= -1e-12);
      total += x;
    }
    CHECK(total <= 1.0 + 1e-6);
    CHECK(total >= 1.0 - jump_count_tail_bound(g, 1.0, 4) - 1e-6);
  }
}

TEST_CASE("physprob_decompose") {
  const LindbladGenerator ad = amplitude_damping();
  const Demixture one = physprob_decompose(ad, kExcited, Trajectory(2.0, {0.5}));
  CHECK(std::abs(one.weight.value - std::exp(-0.5)) < 1e-14);
  CHECK(max_abs(one.state.matrix() - kGround.matrix()) < 1e-14);

  const Demixture none = physprob_decompose(ad, kExcited, Trajectory(1.0));
  CHECK(std::abs(none.weight.value - std::exp(-1.0)) < 1e-14);
  CHECK(max_abs(none.state.matrix() - kExcited.matrix()) < 1e-14);

  CHECK_THROWS_AS(physprob_decompose(ad, kExcited, Trajectory(2.0, {0.3, 0.7})), NullOutcome);
}

TEST_CASE("weight times state equals the unnormalized chain") {
  Gen gen(34);
  for (int trial = 0; trial < 30; ++trial) {
    const LindbladGenerator g = gen.generator(2, gen.integer(1, 3), gen.uniform(0.2, 2.0));
    const DensityMatrix rho0(gen.density(2));
    double a = gen.uniform(0, 2);
    double b = gen.uniform(0, 2);
    if (a > b) std::swap(a, b);
    const Trajectory traj(2.0, {a, b});
    const Demixture dm = physprob_decompose(g, rho0, traj);
    const ComplexMatrix chain = JumpChain(g).propagate(rho0.matrix(), traj);
    CHECK(max_abs(dm.weight.value * dm.state.matrix() - chain) < 1e-12);
    CHECK(std::abs(dm.weight.value - exclusive_density(g, rho0, traj)) < 1e-12);
  }
}

TEST_CASE("reassembled demixture reproduces the Dyson terms") {
  Gen gen(35);
  const LindbladGenerator g = gen.generator(2, 2, 1.0);
  const DensityMatrix rho0(gen.density(2));
  const int points = 201;
  const auto orders = reassemble_demixture(g, rho0, 1.0, 2, points);
  const DysonExpansion dyson = dyson_expand(g, rho0.matrix(), 1.0, 2, points);
  for (int n = 0; n <= 2; ++n) {
    CHECK(max_abs(orders[n] - dyson.terms[n].back()) < 1e-10);
  }
}

TEST_CASE("poisson reference reweighting") {
  const LindbladGenerator ad = amplitude_damping();
  const PoissonReference ref(2.0);
  const ComplexMatrix zeroth = poisson_unnormalized(ad, kExcited, Trajectory(1.0), ref);
  CHECK(max_abs(ref.weight(0, 1.0) * zeroth -
                relaxation_semigroup(ad, 1.0).apply(kExcited.matrix())) < 1e-14);

  const ComplexMatrix one = poisson_unnormalized(ad, kExcited, Trajectory(1.0, {0.5}), ref);
  const double expected = 0.5 * std::exp(2.0) * std::exp(-0.5);
  CHECK(std::abs(one(0, 0).real() - expected) < 1e-12);
  CHECK(max_abs(ref.weight(1, 1.0) * one - std::exp(-0.5) * kGround.matrix()) < 1e-14);
  CHECK_THROWS_AS(PoissonReference(0.0), InputError);
}

TEST_CASE("poisson-reweighted trajectory quadrature equals the Dyson series") {
  const LindbladGenerator ad = amplitude_damping();
  const PoissonReference ref(1.5);
  const double t = 1.0;
  const int points = 201;
  const double h = t / (points - 1);
  auto w = [&](int j, int last) { return (j == 0 || j == last) ? 0.5 * h : h; };
  ComplexMatrix sum = ref.weight(0, t) * poisson_unnormalized(ad, kExcited, Trajectory(t), ref);
  for (int j = 0; j < points; ++j) {
    sum += w(j, points - 1) * ref.weight(1, t) *
           poisson_unnormalized(ad, kExcited, Trajectory(t, {j * h}), ref);
  }
  for (int j2 = 1; j2 < points; ++j2) {
    for (int j1 = 0; j1 <= j2; ++j1) {
      sum += w(j2, points - 1) * w(j1, j2) * ref.weight(2, t) *
             poisson_unnormalized(ad, kExcited, Trajectory(t, {j1 * h, j2 * h}), ref);
    }
  }
  CHECK(max_abs(sum - dyson_solve(ad, kExcited, t, 2, points)) < 1e-6);
}

TEST_CASE("sample_trajectory") {
  const LindbladGenerator ad = amplitude_damping();
  CounterStream s(3, 0);
  for (int k = 0; k < 20; ++k) {
    const SampledTrajectory r = sample_trajectory(ad, kGround, 5.0, s);
    CHECK(r.trajectory.jumps() == 0);
    CHECK(max_abs(r.state.matrix() - kGround.matrix()) < 1e-14);
  }

  ScriptedStream scripted({0.5, 0.5});
  const SampledTrajectory r = sample_trajectory(ad, kExcited, 5.0, scripted);
  REQUIRE(r.trajectory.jumps() == 1);
  CHECK(std::abs(r.trajectory.jump_times()[0] - std::log(2.0)) < 1e-9);
  CHECK(max_abs(r.state.matrix() - kGround.matrix()) < 1e-14);
}

TEST_CASE("sampled jump-count frequency matches the exclusive probabilities") {
  const LindbladGenerator ad = amplitude_damping();
  const JumpChain chain(ad);
  const int n = 100000;
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    CounterStream s(17, static_cast<std::uint64_t>(i));
    ones += sample_trajectory(chain, kExcited, 1.0, s).trajectory.jumps() == 1 ? 1 : 0;
  }
  const double p = 1.0 - std::exp(-1.0);
  CHECK(std::abs(static_cast<double>(ones) / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("mc_average") {
  const LindbladGenerator ad = amplitude_damping();
  CHECK(max_abs(mc_average(ad, kGround, 2.0, 1, 5).matrix() - kGround.matrix()) < 1e-14);

  const LindbladGenerator rot(sigma_z(), {});
  CHECK(max_abs(mc_average(rot, DensityMatrix(plus_state()), 1.3, 17, 5).matrix() -
                exact(rot, plus_state(), 1.3)) < 1e-13);

  const DensityMatrix one = mc_average(ad, kExcited, 1.0, 20000, 99, 1);
  const DensityMatrix many = mc_average(ad, kExcited, 1.0, 20000, 99, 4);
  CHECK(one.matrix() == many.matrix());
  CHECK(trace_norm_distance(one.matrix(), exact(ad, kExcited.matrix(), 1.0)) < 2e-2);
}

TEST_CASE("mc_average_series tracks the exact solution") {
  Gen gen(36);
  const LindbladGenerator g = gen.generator(2, 2, 1.0);
  const DensityMatrix rho0(gen.density(2));
  const std::vector<double> times{0.0, 0.5, 1.0, 2.0};
  const auto states = mc_average_series(g, rho0, times, 20000, 4, 2);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(trace_norm_distance(states[k], exact(g, rho0.matrix(), times[k])) < 2e-2);
  }
}

TEST_CASE("renewal reduction") {
  const auto ad = renewal_reduction(amplitude_damping());
  REQUIRE(ad.has_value());
  CHECK(max_abs(ad->fixed_state().matrix() - kGround.matrix()) < 1e-12);
  for (const double v : ad->w0_table()) CHECK(std::abs(v - 1.0) < 1e-12);
  for (const double v : ad->w_table()) CHECK(std::abs(v) < 1e-12);

  const LindbladGenerator deph(ComplexMatrix::Zero(2, 2), {sigma_z()});
  CHECK_FALSE(renewal_reduction(deph).has_value());

  // L_k = c_k |k><phi| gives J sigma = <phi|sigma|phi> sum |c_k|^2 |k><k|.
  const ComplexVector phi = (ComplexVector(2) << 0.6, Complex(0, 0.8)).finished();
  std::vector<ComplexMatrix> ops;
  for (int k = 0; k < 2; ++k) {
    ops.push_back(0.9 * ComplexVector::Unit(2, k) * phi.adjoint());
  }
  const LindbladGenerator fixed(0.4 * sigma_x(), ops);
  const auto red = renewal_reduction(fixed);
  REQUIRE(red.has_value());
  CHECK(max_abs(red->fixed_state().matrix() - 0.5 * identity(2)) < 1e-10);
  for (std::size_t k = 0; k < red->w_table().size(); k += 50) CHECK(red->w_table()[k] > 0.0);
  CHECK(red->w0(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t k = 1; k < red->w0_table().size(); ++k) {
    CHECK(red->w0_table()[k] <= red->w0_table()[k - 1] + 1e-15);
  }
  CHECK(red->product_form_error(200, 4, 8) < 1e-8);
  CHECK(red->derivative_identity_error(50) < 1e-6);
}
