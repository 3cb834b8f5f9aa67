#pragma once

// Fixtures and hand-rolled generators shared by the test binaries.

#include <cmath>
#include <random>
#include <vector>

#include "renewalq/channels.hpp"

namespace renewalq::testing {

inline ComplexMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
  ComplexMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline ComplexMatrix sigma_x() { return mat2(0, 1, 1, 0); }
inline ComplexMatrix sigma_y() { return mat2(0, Complex(0, -1), Complex(0, 1), 0); }
inline ComplexMatrix sigma_z() { return mat2(1, 0, 0, -1); }
/// |0><1|.
inline ComplexMatrix sigma_minus() { return mat2(0, 1, 0, 0); }
inline ComplexMatrix hadamard() {
  const double h = 1.0 / std::sqrt(2.0);
  return mat2(h, h, h, -h);
}
inline ComplexMatrix plus_state() { return mat2(0.5, 0.5, 0.5, 0.5); }

inline LindbladGenerator amplitude_damping(double gamma = 1.0) {
  return LindbladGenerator(ComplexMatrix::Zero(2, 2), {std::sqrt(gamma) * sigma_minus()});
}

/// sigma -> p sigma + (1 - p) sigma_z sigma sigma_z.
inline Superoperator dephasing(double p = 0.5) {
  return Superoperator::sandwich(identity(2), identity(2)) * Complex(p) +
         Superoperator::sandwich(sigma_z(), sigma_z()) * Complex(1.0 - p);
}

inline Superoperator conjugation(const ComplexMatrix& u) {
  return Superoperator::sandwich(u, u.adjoint());
}

/// sigma -> sigma^T.
inline Superoperator transpose_map(int d) {
  ComplexMatrix t = ComplexMatrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) t(j * d + i, i * d + j) = 1.0;
  }
  return Superoperator(d, t);
}

class Gen {
 public:
  explicit Gen(unsigned long long seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double normal() { return std::normal_distribution<double>()(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  ComplexMatrix matrix(int rows, int cols) {
    ComplexMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = Complex(normal(), normal());
    }
    return m;
  }
  ComplexMatrix hermitian(int d) {
    const ComplexMatrix a = matrix(d, d);
    return 0.5 * (a + a.adjoint());
  }
  /// Full-rank Wishart state.
  ComplexMatrix density(int d) {
    const ComplexMatrix a = matrix(d, d);
    ComplexMatrix rho = a * a.adjoint();
    return rho / rho.trace().real();
  }
  /// Random generator whose total jump rate has operator norm <= max_rate.
  LindbladGenerator generator(int d, int jumps, double max_rate) {
    std::vector<ComplexMatrix> ops;
    ComplexMatrix total = ComplexMatrix::Zero(d, d);
    for (int k = 0; k < jumps; ++k) {
      ops.push_back(matrix(d, d));
      total += ops.back().adjoint() * ops.back();
    }
    const double norm = hermitian_eigenvalues(total).maxCoeff();
    const double scale = std::sqrt(max_rate / norm);
    for (auto& op : ops) op *= scale;
    return LindbladGenerator(hermitian(d), ops);
  }

 private:
  std::mt19937_64 rng_;
};

inline double max_abs(const ComplexMatrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace renewalq::testing
