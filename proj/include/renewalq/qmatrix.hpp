#pragma once

// Dense complex linear algebra at small dimension.
//
// Vectorization uses column stacking throughout the library, so that
// vec(A X B) = (B^T kron A) vec(X).

#include <complex>

#include <Eigen/Dense>

namespace renewalq {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kDefaultTolerance = 1e-10;

/// Column-stacked operator: column j of the matrix occupies slots
/// j*dim ... j*dim + dim - 1.
struct VectorizedOperator {
  int dim = 0;
  ComplexVector vec;
};

VectorizedOperator vectorize(const ComplexMatrix& a);
ComplexMatrix devectorize(const VectorizedOperator& v);
/// Throws InputError when the length is not a perfect square.
ComplexMatrix devectorize(const ComplexVector& v);

/// e^a by scaling and squaring with a Pade approximant.
ComplexMatrix mat_exp(const ComplexMatrix& a);

ComplexMatrix identity(int dim);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
/// |i><j| on a dim-dimensional space.
ComplexMatrix matrix_unit(int dim, int i, int j);
/// |psi><psi| for an (unnormalized) state vector.
ComplexMatrix projector(const ComplexVector& psi);

/// max |a_ij - conj(a_ji)|.
double hermiticity_defect(const ComplexMatrix& a);
bool all_finite(const ComplexMatrix& a);

/// Eigenvalues of the Hermitian part of `a`, ascending. Throws InputError if
/// `a` deviates from Hermitian by more than tol * max(1, max|a_ij|).
Eigen::VectorXd hermitian_eigenvalues(const ComplexMatrix& a,
                                      double tol = kDefaultTolerance);
double min_eigenvalue_hermitian(const ComplexMatrix& a,
                                double tol = kDefaultTolerance);

/// Hermitian, positive semidefinite, unit-trace matrix.
class DensityMatrix {
 public:
  /// Validates all three invariants against `tol`; throws InputError.
  explicit DensityMatrix(ComplexMatrix mat, double tol = kDefaultTolerance);

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix pure(const ComplexVector& psi);
  /// |k><k|.
  static DensityMatrix basis(int dim, int k);
  static DensityMatrix maximally_mixed(int dim);

  int dim() const { return static_cast<int>(mat_.rows()); }
  double tolerance() const { return tol_; }
  const ComplexMatrix& matrix() const { return mat_; }
  operator const ComplexMatrix&() const { return mat_; }  // NOLINT
  Complex operator()(int i, int j) const { return mat_(i, j); }

 private:
  ComplexMatrix mat_;
  double tol_;
};

/// 1/2 sum |eigenvalues(r1 - r2)|.
double trace_distance(const DensityMatrix& r1, const DensityMatrix& r2);

/// Trace-norm distance between the Hermitian parts of two operators of equal
/// size. Used for solver outputs that are only approximately normalized.
double trace_norm_distance(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace renewalq
