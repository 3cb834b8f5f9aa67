#include "renewalq/qmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "renewalq/errors.hpp"

namespace renewalq {

namespace {

void require_square(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InputError(std::string(what) + ": matrix must be square and non-empty");
  }
}

}  // namespace

VectorizedOperator vectorize(const ComplexMatrix& a) {
  require_square(a, "vectorize");
  const auto d = a.rows();
  VectorizedOperator v{static_cast<int>(d), ComplexVector(d * d)};
  // Eigen storage is column-major, which is exactly column stacking.
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) v.vec(j * d + i) = a(i, j);
  }
  return v;
}

ComplexMatrix devectorize(const VectorizedOperator& v) {
  if (v.dim < 1 || v.vec.size() != static_cast<Eigen::Index>(v.dim) * v.dim) {
    throw InputError("devectorize: length does not match dim^2");
  }
  const int d = v.dim;
  ComplexMatrix a(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) a(i, j) = v.vec(j * d + i);
  }
  return a;
}

ComplexMatrix devectorize(const ComplexVector& v) {
  const auto n = v.size();
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (n == 0 || d * d != n) {
    throw InputError("devectorize: length " + std::to_string(n) + " is not a perfect square");
  }
  return devectorize(VectorizedOperator{static_cast<int>(d), v});
}

ComplexMatrix mat_exp(const ComplexMatrix& a) {
  require_square(a, "mat_exp");
  if (!all_finite(a)) throw InputError("mat_exp: non-finite entries");
  return a.exp();
}

ComplexMatrix identity(int dim) { return ComplexMatrix::Identity(dim, dim); }

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

ComplexMatrix matrix_unit(int dim, int i, int j) {
  ComplexMatrix e = ComplexMatrix::Zero(dim, dim);
  e(i, j) = 1.0;
  return e;
}

ComplexMatrix projector(const ComplexVector& psi) { return psi * psi.adjoint(); }

double hermiticity_defect(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) return INFINITY;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

bool all_finite(const ComplexMatrix& a) {
  return a.real().allFinite() && a.imag().allFinite();
}

Eigen::VectorXd hermitian_eigenvalues(const ComplexMatrix& a, double tol) {
  require_square(a, "hermitian_eigenvalues");
  if (!all_finite(a)) throw InputError("hermitian_eigenvalues: non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (hermiticity_defect(a) > tol * scale) {
    throw InputError("hermitian_eigenvalues: matrix is not Hermitian within tolerance");
  }
  const ComplexMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double min_eigenvalue_hermitian(const ComplexMatrix& a, double tol) {
  return hermitian_eigenvalues(a, tol).minCoeff();
}

DensityMatrix::DensityMatrix(ComplexMatrix mat, double tol) : mat_(std::move(mat)), tol_(tol) {
  require_square(mat_, "DensityMatrix");
  if (!all_finite(mat_)) throw InputError("DensityMatrix: non-finite entries");
  if (hermiticity_defect(mat_) > tol_) throw InputError("DensityMatrix: not Hermitian");
  if (std::abs(mat_.trace() - Complex(1.0)) > tol_) {
    throw InputError("DensityMatrix: trace differs from one");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (mat_ + mat_.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -tol_) {
    throw InputError("DensityMatrix: not positive semidefinite");
  }
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
  const double n2 = psi.squaredNorm();
  if (!(n2 > 0.0)) throw InputError("DensityMatrix::pure: zero vector");
  return DensityMatrix(projector(psi) / n2);
}

DensityMatrix DensityMatrix::basis(int dim, int k) {
  if (k < 0 || k >= dim) throw InputError("DensityMatrix::basis: index out of range");
  return DensityMatrix(matrix_unit(dim, k, k));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 1) throw InputError("DensityMatrix::maximally_mixed: dim < 1");
  return DensityMatrix(identity(dim) / static_cast<double>(dim));
}

double trace_norm_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError("trace distance: dimension mismatch");
  }
  const ComplexMatrix diff = a - b;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (diff + diff.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& r1, const DensityMatrix& r2) {
  return trace_norm_distance(r1.matrix(), r2.matrix());
}

}  // namespace renewalq
