#pragma once

#include <Eigen/Dense>

namespace csmusic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Default relative rank tolerance: singular values sigma <= tol * sigma_max are
// treated as zero. The factor 32 over the usual max(dim)*eps guards the rank
// decisions that chains of projector computations depend on.
double default_rank_tol(Eigen::Index rows, Eigen::Index cols);

// A matrix with orthonormal columns spanning some subspace of R^ambient.
// Orthonormality is validated at construction (||Q^T Q - I|| <= 1e-10).
// A zero-column matrix is a valid empty basis.
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Matrix columns);
  static OrthonormalBasis empty(Eigen::Index ambient_dim);

  Eigen::Index ambient_dim() const { return columns_.rows(); }
  Eigen::Index dim() const { return columns_.cols(); }
  const Matrix& columns() const { return columns_; }

  Vector project(const Vector& v) const;    // Q Q^T v
  Matrix project(const Matrix& m) const;
  Vector residual(const Vector& v) const;   // v - Q Q^T v
  Matrix residual(const Matrix& m) const;
  // ||v - Q Q^T v||^2, the quadratic form of the complementary projector.
  // Nonnegative by construction.
  double complement_quadform(const Vector& v) const;

  Matrix dense_projector() const;  // Q Q^T, for tests and projector distances

 private:
  struct unchecked_t {};
  OrthonormalBasis(Matrix columns, unchecked_t) : columns_(std::move(columns)) {}
  friend OrthonormalBasis orthonormal_basis(const Matrix&, double);
  friend OrthonormalBasis complement_basis(const OrthonormalBasis&);

  Matrix columns_;
};

// Orthogonal projector onto the span of a basis, stored implicitly as the
// basis itself (P = Q Q^T is never formed except by dense_projector()).
class Projector {
 public:
  explicit Projector(OrthonormalBasis basis) : basis_(std::move(basis)) {}

  const OrthonormalBasis& basis() const { return basis_; }
  Vector apply(const Vector& v) const;
  Vector complement_apply(const Vector& v) const;  // (I - P) v

 private:
  OrthonormalBasis basis_;
};

// Orthonormal basis of the numerical column space of M: the left singular
// vectors with sigma > tol * sigma_max. An all-zero M yields an empty basis.
OrthonormalBasis orthonormal_basis(const Matrix& m, double tol);
OrthonormalBasis orthonormal_basis(const Matrix& m);  // default tol

// Orthonormal basis of the orthogonal complement; concatenating both bases
// gives a square orthogonal matrix. Full basis in -> empty complement.
OrthonormalBasis complement_basis(const OrthonormalBasis& q);

// Number of singular values above tol * sigma_max; 0 for the zero matrix.
Eigen::Index numerical_rank(const Matrix& m, double tol);
Eigen::Index numerical_rank(const Matrix& m);

// Largest singular value.
double spectral_norm(const Matrix& m);

// Smallest singular value above tol * sigma_max; throws on the zero matrix.
double min_nonzero_singular(const Matrix& m, double tol);
double min_nonzero_singular(const Matrix& m);

// Spectral norm of P_a - P_b where P are the dense projectors of the bases.
// This is the observable the basis sign/rotation ambiguity cannot reach.
double projector_distance(const OrthonormalBasis& a, const OrthonormalBasis& b);

}  // namespace csmusic
