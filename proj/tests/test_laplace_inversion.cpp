#include <cmath>
#include <vector>

#include "doctest.h"
#include "renewalq/errors.hpp"
#include "renewalq/laplace_inversion.hpp"

using namespace renewalq;

namespace {

// Originals: e^{-t}, t e^{-2t}, e^{it} (complex valued), 1/2, and zero.
ComplexVector transforms(Complex s) {
  ComplexVector v(5);
  v << 1.0 / (s + 1.0), 1.0 / ((s + 2.0) * (s + 2.0)), 1.0 / (s - Complex(0.0, 1.0)), 0.5 / s,
      0.0;
  return v;
}

ComplexVector originals(double t) {
  ComplexVector v(5);
  v << std::exp(-t), t * std::exp(-2.0 * t), std::exp(Complex(0.0, t)), 0.5, 0.0;
  return v;
}

}  // namespace

TEST_CASE("Talbot inverts rational transforms") {
  for (const double t : {0.05, 0.5, 1.0, 3.0, 10.0}) {
    const ComplexVector got = talbot_invert(transforms, t);
    CHECK((got - originals(t)).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(talbot_invert(transforms, 0.0), InputError);
  CHECK_THROWS_AS(talbot_invert(transforms, 1.0, {.nodes = 7}), InputError);
}

TEST_CASE("de Hoog inverts rational transforms") {
  for (const double t : {0.05, 0.5, 1.0, 3.0, 10.0}) {
    const ComplexVector got = de_hoog_invert(transforms, t);
    CHECK((got - originals(t)).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(de_hoog_invert(transforms, -1.0), InputError);
  CHECK_THROWS_AS(de_hoog_invert(transforms, 1.0, {.de_hoog_terms = 2}), InputError);
}

TEST_CASE("de Hoog handles a delayed original") {
  // Ramp min(t, 1): the transform (1 - e^{-s}) / s^2 grows like e^{|Re s|} on the left.
  auto ramp = [](Complex s) {
    ComplexVector v(1);
    v << (1.0 - std::exp(-s)) / (s * s);
    return v;
  };
  for (const double t : {0.3, 0.6, 2.0, 5.0}) {
    CHECK(std::abs(de_hoog_invert(ramp, t)(0) - std::min(t, 1.0)) < 5e-4);
  }
  CHECK(std::abs(de_hoog_invert(ramp, 5.0)(0) - 1.0) < 1e-6);
}
