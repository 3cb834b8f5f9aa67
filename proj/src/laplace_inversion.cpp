#include "renewalq/laplace_inversion.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "renewalq/errors.hpp"

namespace renewalq {

namespace {

// Original at t of a real function whose transform is a[k] = F(gamma + i k pi / T),
// k = 0..2M. Quotient-difference table, continued fraction and remainder
// estimate as in de Hoog, Knight & Stokes (1982).
double de_hoog_series(const std::vector<Complex>& a, double t, double period, double gamma) {
  const int np = static_cast<int>(a.size());
  const int m = (np - 1) / 2;
  const double scale = std::exp(gamma * t) / period;
  const Complex z = std::exp(Complex(0.0, std::numbers::pi * t / period));

  bool all_zero = true;
  for (const Complex& v : a) all_zero = all_zero && v == Complex(0.0);
  if (all_zero) return 0.0;

  std::vector<std::vector<Complex>> e(np, std::vector<Complex>(m + 1, Complex(0.0)));
  std::vector<std::vector<Complex>> q(2 * m, std::vector<Complex>(m, Complex(0.0)));
  q[0][0] = a[1] / (0.5 * a[0]);
  for (int i = 1; i < 2 * m; ++i) q[i][0] = a[i + 1] / a[i];
  for (int r = 1; r <= m; ++r) {
    const int rows = 2 * (m - r) + 1;
    for (int i = 0; i < rows; ++i) e[i][r] = q[i + 1][r - 1] - q[i][r - 1] + e[i + 1][r - 1];
    if (r < m) {
      for (int i = 0; i < rows; ++i) q[i][r] = q[i + 1][r - 1] * e[i + 1][r] / e[i][r];
    }
  }
  std::vector<Complex> d(np);
  d[0] = 0.5 * a[0];
  for (int r = 1; r <= m; ++r) {
    d[2 * r - 1] = -q[0][r - 1];
    d[2 * r] = -e[0][r];
  }
  std::vector<Complex> num(np + 1, Complex(0.0));
  std::vector<Complex> den(np + 1, Complex(1.0));
  num[1] = d[0];
  for (int i = 1; i < 2 * m; ++i) {
    num[i + 1] = num[i] + d[i] * num[i - 1] * z;
    den[i + 1] = den[i] + d[i] * den[i - 1] * z;
  }
  const Complex brem = 0.5 * (1.0 + (d[2 * m - 1] - d[2 * m]) * z);
  const Complex rem = brem * (std::sqrt(1.0 + d[2 * m] * z / brem) - 1.0);
  num[np] = num[2 * m] + rem * num[2 * m - 1];
  den[np] = den[2 * m] + rem * den[2 * m - 1];
  const double accelerated = scale * (num[np] / den[np]).real();
  if (std::isfinite(accelerated)) return accelerated;

  // Degenerate quotient-difference table: plain trapezoid Fourier sum.
  Complex zk(1.0);
  double plain = 0.5 * a[0].real();
  for (int k = 1; k < np; ++k) {
    zk *= z;
    plain += (a[k] * zk).real();
  }
  return scale * plain;
}

}  // namespace

ComplexVector talbot_invert(const std::function<ComplexVector(Complex)>& transform, double t,
                            const LaplaceInversionConfig& config) {
  if (config.nodes < 8) throw InputError("Talbot inversion: at least 8 nodes required");
  if (!(t > 0.0) || !std::isfinite(t)) throw InputError("Talbot inversion: t must be positive");
  const int m = config.nodes;
  const double r = 2.0 * m / (5.0 * t);
  const Complex i(0.0, 1.0);

  ComplexVector sum = 0.5 * std::exp(r * t) * transform(Complex(r, 0.0));
  for (int k = 1; k < m; ++k) {
    const double theta = k * std::numbers::pi / m;
    const double cot = 1.0 / std::tan(theta);
    const double sigma = theta + (theta * cot - 1.0) * cot;
    const Complex s(r * theta * cot, r * theta);
    const Complex upper = std::exp(t * s) * (1.0 + i * sigma);
    const Complex lower = std::exp(t * std::conj(s)) * (1.0 - i * sigma);
    sum += 0.5 * (upper * transform(s) + lower * transform(std::conj(s)));
  }
  ComplexVector out = (r / m) * sum;
  if (!out.allFinite()) throw ContourError("Talbot inversion produced non-finite values");
  return out;
}

ComplexVector de_hoog_invert(const std::function<ComplexVector(Complex)>& transform, double t,
                             const LaplaceInversionConfig& config) {
  if (config.de_hoog_terms < 4) throw InputError("de Hoog inversion: at least 4 terms required");
  if (!(config.de_hoog_tolerance > 0.0 && config.de_hoog_tolerance < 1.0)) {
    throw InputError("de Hoog inversion: tolerance must lie in (0, 1)");
  }
  if (!(t > 0.0) || !std::isfinite(t)) throw InputError("de Hoog inversion: t must be positive");
  const int np = 2 * config.de_hoog_terms + 1;
  const double period = 2.0 * t;
  const double gamma = -std::log(config.de_hoog_tolerance) / (2.0 * period);

  std::vector<ComplexVector> upper;
  std::vector<ComplexVector> lower;
  upper.reserve(np);
  lower.reserve(np);
  for (int k = 0; k < np; ++k) {
    const Complex s(gamma, std::numbers::pi * k / period);
    upper.push_back(transform(s));
    lower.push_back(transform(std::conj(s)));
  }
  const auto n = upper.front().size();
  ComplexVector out(n);
  std::vector<Complex> re(np);
  std::vector<Complex> im(np);
  const Complex i(0.0, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    // Transforms of the real and imaginary parts of the original.
    for (int k = 0; k < np; ++k) {
      const Complex a = upper[k](j);
      const Complex b = std::conj(lower[k](j));
      re[k] = 0.5 * (a + b);
      im[k] = (a - b) / (2.0 * i);
    }
    out(j) = Complex(de_hoog_series(re, t, period, gamma), de_hoog_series(im, t, period, gamma));
  }
  if (!out.allFinite()) throw ContourError("de Hoog inversion produced non-finite values");
  return out;
}

}  // namespace renewalq
