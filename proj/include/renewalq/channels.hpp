#pragma once

// Superoperators of a Lindblad generator and their certification.
//
// With R = -iH - 1/2 sum_k L_k^dag L_k the generator splits as
//   L rho = R rho + rho R^dag + J rho,    J rho = sum_k L_k rho L_k^dag,
// and R(t) sigma = e^{tR} sigma e^{tR^dag} is the no-jump semigroup.
// hbar = 1 everywhere.

#include <optional>
#include <vector>

#include "renewalq/qmatrix.hpp"

namespace renewalq {

inline constexpr double kNullTraceTolerance = 1e-14;
inline constexpr double kFixedOutputTolerance = 1e-10;

class LindbladGenerator {
 public:
  /// Throws InputError for a non-Hermitian Hamiltonian or mismatched shapes.
  LindbladGenerator(ComplexMatrix hamiltonian, std::vector<ComplexMatrix> jump_ops,
                    double tol = kDefaultTolerance);

  int dim() const { return static_cast<int>(hamiltonian_.rows()); }
  const ComplexMatrix& hamiltonian() const { return hamiltonian_; }
  const std::vector<ComplexMatrix>& jump_ops() const { return jump_ops_; }

  /// R = -iH - 1/2 sum L_k^dag L_k.
  const ComplexMatrix& no_jump_generator() const { return no_jump_; }
  /// sum_k L_k^dag L_k.
  ComplexMatrix total_jump_rate() const;

 private:
  ComplexMatrix hamiltonian_;
  std::vector<ComplexMatrix> jump_ops_;
  ComplexMatrix no_jump_;
};

/// Linear map on d x d operators stored as its d^2 x d^2 matrix acting on
/// column-stacked operators.
class Superoperator {
 public:
  Superoperator(int dim, ComplexMatrix mat);

  static Superoperator identity(int dim);
  static Superoperator zero(int dim);
  /// sigma -> sum_k K_k sigma K_k^dag.
  static Superoperator from_kraus(const std::vector<ComplexMatrix>& kraus);
  /// sigma -> A sigma B.
  static Superoperator sandwich(const ComplexMatrix& a, const ComplexMatrix& b);

  int dim() const { return dim_; }
  const ComplexMatrix& matrix() const { return mat_; }

  ComplexMatrix apply(const ComplexMatrix& sigma) const;
  ComplexVector apply(const ComplexVector& vec_sigma) const { return mat_ * vec_sigma; }

  Superoperator operator*(const Superoperator& rhs) const;
  Superoperator operator+(const Superoperator& rhs) const;
  Superoperator operator-(const Superoperator& rhs) const;
  Superoperator operator*(Complex s) const;

 private:
  int dim_;
  ComplexMatrix mat_;
};

struct CptpReport {
  bool is_tp = false;
  bool is_cp = false;
  double min_choi_eigenvalue = 0.0;
  double tp_defect = 0.0;
};

Superoperator liouvillian(const LindbladGenerator& gen);
Superoperator jump_superop(const LindbladGenerator& gen);
/// sigma -> R sigma + sigma R^dag.
Superoperator no_jump_liouvillian(const LindbladGenerator& gen);
/// sigma -> e^{tR} sigma e^{tR^dag}; throws InputError for t < 0.
Superoperator relaxation_semigroup(const LindbladGenerator& gen, double t);
/// e^{tR} itself (the d x d factor of relaxation_semigroup).
ComplexMatrix relaxation_factor(const LindbladGenerator& gen, double t);

/// s(sigma) / Tr s(sigma). Throws NullOutcome if |Tr s(sigma)| <= null_tol.
/// Accepts any operator so that homogeneity can be exercised on mu * sigma.
ComplexMatrix normalized_image(const Superoperator& s, const ComplexMatrix& sigma,
                               double null_tol = kNullTraceTolerance);
DensityMatrix normalize_apply(const Superoperator& s, const DensityMatrix& sigma,
                              double null_tol = kNullTraceTolerance);

/// C = sum_ij s(|i><j|) kron |i><j|.
ComplexMatrix choi(const Superoperator& s);
CptpReport certify_cptp(const Superoperator& s, double tol);

/// Returns rho_bar when s has numerical rank one (sigma_2 / sigma_1 <= tol)
/// with range spanned by a density matrix, i.e. J sigma = rho_bar Tr(J sigma).
std::optional<DensityMatrix> fixed_output_detect(const Superoperator& j,
                                                 double tol = kFixedOutputTolerance);

}  // namespace renewalq
