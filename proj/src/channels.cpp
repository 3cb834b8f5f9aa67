#include "renewalq/channels.hpp"

#include <algorithm>
#include <cmath>

#include "renewalq/errors.hpp"

namespace renewalq {

LindbladGenerator::LindbladGenerator(ComplexMatrix hamiltonian,
                                     std::vector<ComplexMatrix> jump_ops, double tol)
    : hamiltonian_(std::move(hamiltonian)), jump_ops_(std::move(jump_ops)) {
  if (hamiltonian_.rows() == 0 || hamiltonian_.rows() != hamiltonian_.cols()) {
    throw InputError("LindbladGenerator: Hamiltonian must be square and non-empty");
  }
  if (!all_finite(hamiltonian_)) throw InputError("LindbladGenerator: non-finite Hamiltonian");
  const double scale = std::max(1.0, hamiltonian_.cwiseAbs().maxCoeff());
  if (hermiticity_defect(hamiltonian_) > tol * scale) {
    throw InputError("LindbladGenerator: Hamiltonian is not Hermitian");
  }
  const auto d = hamiltonian_.rows();
  for (const auto& l : jump_ops_) {
    if (l.rows() != d || l.cols() != d) {
      throw InputError("LindbladGenerator: jump operator dimension mismatch");
    }
    if (!all_finite(l)) throw InputError("LindbladGenerator: non-finite jump operator");
  }
  no_jump_ = Complex(0.0, -1.0) * hamiltonian_ - 0.5 * total_jump_rate();
}

ComplexMatrix LindbladGenerator::total_jump_rate() const {
  ComplexMatrix sum = ComplexMatrix::Zero(dim(), dim());
  for (const auto& l : jump_ops_) sum += l.adjoint() * l;
  return sum;
}

Superoperator::Superoperator(int dim, ComplexMatrix mat) : dim_(dim), mat_(std::move(mat)) {
  const Eigen::Index n = static_cast<Eigen::Index>(dim) * dim;
  if (dim < 1 || mat_.rows() != n || mat_.cols() != n) {
    throw InputError("Superoperator: matrix must be dim^2 x dim^2");
  }
}

Superoperator Superoperator::identity(int dim) {
  return Superoperator(dim, renewalq::identity(dim * dim));
}

Superoperator Superoperator::zero(int dim) {
  return Superoperator(dim, ComplexMatrix::Zero(dim * dim, dim * dim));
}

Superoperator Superoperator::sandwich(const ComplexMatrix& a, const ComplexMatrix& b) {
  // vec(A X B) = (B^T kron A) vec(X)
  return Superoperator(static_cast<int>(a.rows()), kron(b.transpose(), a));
}

Superoperator Superoperator::from_kraus(const std::vector<ComplexMatrix>& kraus) {
  if (kraus.empty()) throw InputError("Superoperator::from_kraus: empty Kraus list");
  const int d = static_cast<int>(kraus.front().rows());
  ComplexMatrix m = ComplexMatrix::Zero(d * d, d * d);
  for (const auto& k : kraus) {
    if (k.rows() != d || k.cols() != d) {
      throw InputError("Superoperator::from_kraus: Kraus operator dimension mismatch");
    }
    m += kron(k.conjugate(), k);
  }
  return Superoperator(d, std::move(m));
}

ComplexMatrix Superoperator::apply(const ComplexMatrix& sigma) const {
  if (sigma.rows() != dim_ || sigma.cols() != dim_) {
    throw InputError("Superoperator::apply: operator dimension mismatch");
  }
  return devectorize(VectorizedOperator{dim_, mat_ * vectorize(sigma).vec});
}

Superoperator Superoperator::operator*(const Superoperator& rhs) const {
  return Superoperator(dim_, mat_ * rhs.mat_);
}
Superoperator Superoperator::operator+(const Superoperator& rhs) const {
  return Superoperator(dim_, mat_ + rhs.mat_);
}
Superoperator Superoperator::operator-(const Superoperator& rhs) const {
  return Superoperator(dim_, mat_ - rhs.mat_);
}
Superoperator Superoperator::operator*(Complex s) const { return Superoperator(dim_, mat_ * s); }

Superoperator jump_superop(const LindbladGenerator& gen) {
  const int d = gen.dim();
  ComplexMatrix m = ComplexMatrix::Zero(d * d, d * d);
  for (const auto& l : gen.jump_ops()) m += kron(l.conjugate(), l);
  return Superoperator(d, std::move(m));
}

Superoperator no_jump_liouvillian(const LindbladGenerator& gen) {
  const int d = gen.dim();
  const ComplexMatrix& r = gen.no_jump_generator();
  const ComplexMatrix id = identity(d);
  // R sigma -> I kron R ; sigma R^dag -> conj(R) kron I
  return Superoperator(d, kron(id, r) + kron(r.conjugate(), id));
}

Superoperator liouvillian(const LindbladGenerator& gen) {
  return no_jump_liouvillian(gen) + jump_superop(gen);
}

ComplexMatrix relaxation_factor(const LindbladGenerator& gen, double t) {
  if (!(t >= 0.0)) throw InputError("relaxation_semigroup: negative time");
  return mat_exp(t * gen.no_jump_generator());
}

Superoperator relaxation_semigroup(const LindbladGenerator& gen, double t) {
  const ComplexMatrix a = relaxation_factor(gen, t);
  return Superoperator::sandwich(a, a.adjoint());
}

ComplexMatrix normalized_image(const Superoperator& s, const ComplexMatrix& sigma,
                               double null_tol) {
  const ComplexMatrix image = s.apply(sigma);
  const Complex tr = image.trace();
  if (!(std::abs(tr) > null_tol)) {
    throw NullOutcome("normalize_apply: image has zero trace");
  }
  return image / tr;
}

DensityMatrix normalize_apply(const Superoperator& s, const DensityMatrix& sigma,
                              double null_tol) {
  ComplexMatrix out = normalized_image(s, sigma.matrix(), null_tol);
  out = 0.5 * (out + out.adjoint());
  return DensityMatrix(std::move(out), sigma.tolerance());
}

ComplexMatrix choi(const Superoperator& s) {
  const int d = s.dim();
  ComplexMatrix c = ComplexMatrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      // s(|i><j|) is column (j*d + i) of the superoperator matrix.
      const ComplexMatrix img = devectorize(ComplexVector(s.matrix().col(j * d + i)));
      c += kron(img, matrix_unit(d, i, j));
    }
  }
  return c;
}

CptpReport certify_cptp(const Superoperator& s, double tol) {
  const int d = s.dim();
  const ComplexMatrix c = choi(s);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (c + c.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  CptpReport rep;
  rep.min_choi_eigenvalue = solver.eigenvalues().minCoeff();
  // Trace preservation: Tr s(|i><j|) = delta_ij.
  double defect = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Complex tr = 0.0;
      for (int k = 0; k < d; ++k) tr += s.matrix()(k * d + k, j * d + i);
      defect = std::max(defect, std::abs(tr - Complex(i == j ? 1.0 : 0.0)));
    }
  }
  rep.tp_defect = defect;
  rep.is_cp = rep.min_choi_eigenvalue >= -tol;
  rep.is_tp = rep.tp_defect <= tol;
  return rep;
}

std::optional<DensityMatrix> fixed_output_detect(const Superoperator& j, double tol) {
  Eigen::JacobiSVD<ComplexMatrix> svd(j.matrix(), Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0)) return std::nullopt;
  if (sv.size() > 1 && sv(1) / sv(0) > tol) return std::nullopt;
  ComplexMatrix range = devectorize(ComplexVector(svd.matrixU().col(0)));
  const Complex tr = range.trace();
  if (std::abs(tr) <= kNullTraceTolerance) return std::nullopt;
  range /= tr;
  range = 0.5 * (range + range.adjoint());
  try {
    return DensityMatrix(std::move(range));
  } catch (const InputError&) {
    return std::nullopt;
  }
}

}  // namespace renewalq
