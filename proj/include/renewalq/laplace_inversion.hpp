#pragma once

// Numerical inversion of vector-valued Laplace transforms.
//
// Fixed Talbot (Abate & Valko) suits transforms that continue analytically
// into Re s < 0 with moderate growth, e.g. rational closed forms. The de Hoog,
// Knight & Stokes accelerated Fourier series only samples Re s = gamma > 0
// and so also handles transforms of tabulated, compactly supported originals,
// which grow exponentially to the left.

#include <functional>

#include "renewalq/qmatrix.hpp"

namespace renewalq {

enum class InversionMethod {
  automatic,  // the caller picks by transform kind
  talbot,
  de_hoog,
};

struct LaplaceInversionConfig {
  /// Talbot contour nodes M; the contour is s(theta) = r theta (cot theta + i)
  /// with r = 2M / (5t).
  int nodes = 32;
  InversionMethod method = InversionMethod::automatic;
  /// de Hoog series uses 2M + 1 abscissae gamma + i k pi / T with T = 2t.
  int de_hoog_terms = 20;
  /// Target discretization error of the de Hoog series; sets gamma.
  double de_hoog_tolerance = 1e-12;
};

/// Inverts an entrywise vector-valued transform at t > 0. The original may
/// be complex valued: both halves of the contour are evaluated.
ComplexVector talbot_invert(const std::function<ComplexVector(Complex)>& transform, double t,
                            const LaplaceInversionConfig& config = {});

/// Same contract as talbot_invert; every abscissa has Re s > 0. Transforms
/// are evaluated at 2M + 1 points and their conjugates.
ComplexVector de_hoog_invert(const std::function<ComplexVector(Complex)>& transform, double t,
                             const LaplaceInversionConfig& config = {});

}  // namespace renewalq
