#include "csmusic/linalg.hpp"

#include <limits>
#include <stdexcept>

namespace csmusic {

namespace {

void require_finite(const Matrix& m, const char* where) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(where) + ": non-finite entries");
  }
}

Eigen::JacobiSVD<Matrix> thin_svd(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

Eigen::Index rank_from_singular_values(const Vector& sv, double tol) {
  if (sv.size() == 0) return 0;
  const double cutoff = tol * sv(0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cutoff && sv(r) > 0.0) ++r;
  return r;
}

}  // namespace

double default_rank_tol(Eigen::Index rows, Eigen::Index cols) {
  return 32.0 * static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon();
}

OrthonormalBasis::OrthonormalBasis(Matrix columns) : columns_(std::move(columns)) {
  if (columns_.cols() > columns_.rows()) {
    throw std::invalid_argument("OrthonormalBasis: more columns than ambient dim");
  }
  if (columns_.cols() > 0) {
    const Matrix gram = columns_.transpose() * columns_;
    const Matrix dev = gram - Matrix::Identity(columns_.cols(), columns_.cols());
    if (spectral_norm(dev) > 1e-10) {
      throw std::invalid_argument("OrthonormalBasis: columns not orthonormal");
    }
  }
}

OrthonormalBasis OrthonormalBasis::empty(Eigen::Index ambient_dim) {
  return OrthonormalBasis(Matrix(ambient_dim, 0), unchecked_t{});
}

Vector OrthonormalBasis::project(const Vector& v) const {
  if (v.size() != ambient_dim()) {
    throw std::invalid_argument("OrthonormalBasis::project: dimension mismatch");
  }
  if (dim() == 0) return Vector::Zero(ambient_dim());
  return columns_ * (columns_.transpose() * v);
}

Matrix OrthonormalBasis::project(const Matrix& m) const {
  if (m.rows() != ambient_dim()) {
    throw std::invalid_argument("OrthonormalBasis::project: dimension mismatch");
  }
  if (dim() == 0) return Matrix::Zero(m.rows(), m.cols());
  return columns_ * (columns_.transpose() * m);
}

Vector OrthonormalBasis::residual(const Vector& v) const {
  if (dim() == 0) return v;
  return v - project(v);
}

Matrix OrthonormalBasis::residual(const Matrix& m) const {
  if (dim() == 0) return m;
  return m - project(m);
}

double OrthonormalBasis::complement_quadform(const Vector& v) const {
  return residual(v).squaredNorm();
}

Matrix OrthonormalBasis::dense_projector() const {
  if (dim() == 0) return Matrix::Zero(ambient_dim(), ambient_dim());
  return columns_ * columns_.transpose();
}

Vector Projector::apply(const Vector& v) const { return basis_.project(v); }

Vector Projector::complement_apply(const Vector& v) const {
  return basis_.residual(v);
}

OrthonormalBasis orthonormal_basis(const Matrix& m, double tol) {
  require_finite(m, "orthonormal_basis");
  if (tol <= 0.0) throw std::invalid_argument("orthonormal_basis: tol must be > 0");
  if (m.cols() == 0 || m.isZero(0.0)) {
    return OrthonormalBasis::empty(m.rows());
  }
  const auto svd = thin_svd(m);
  const Eigen::Index r = rank_from_singular_values(svd.singularValues(), tol);
  return OrthonormalBasis(svd.matrixU().leftCols(r),
                          OrthonormalBasis::unchecked_t{});
}

OrthonormalBasis orthonormal_basis(const Matrix& m) {
  return orthonormal_basis(m, default_rank_tol(m.rows(), m.cols()));
}

OrthonormalBasis complement_basis(const OrthonormalBasis& q) {
  const Eigen::Index n = q.ambient_dim();
  const Eigen::Index d = q.dim();
  if (d == 0) {
    return OrthonormalBasis(Matrix::Identity(n, n),
                            OrthonormalBasis::unchecked_t{});
  }
  if (d == n) return OrthonormalBasis::empty(n);
  // The Householder Q factor is orthogonal and its leading d columns span
  // R(q), so the trailing columns span the complement.
  Eigen::HouseholderQR<Matrix> qr(q.columns());
  const Matrix full = qr.householderQ();
  return OrthonormalBasis(full.rightCols(n - d),
                          OrthonormalBasis::unchecked_t{});
}

Eigen::Index numerical_rank(const Matrix& m, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("numerical_rank: tol must be > 0");
  if (m.size() == 0 || m.isZero(0.0)) return 0;
  const Eigen::JacobiSVD<Matrix> svd(m);
  return rank_from_singular_values(svd.singularValues(), tol);
}

Eigen::Index numerical_rank(const Matrix& m) {
  return numerical_rank(m, default_rank_tol(m.rows(), m.cols()));
}

double spectral_norm(const Matrix& m) {
  require_finite(m, "spectral_norm");
  if (m.size() == 0 || m.isZero(0.0)) return 0.0;
  const Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double min_nonzero_singular(const Matrix& m, double tol) {
  if (tol <= 0.0) {
    throw std::invalid_argument("min_nonzero_singular: tol must be > 0");
  }
  if (m.size() == 0 || m.isZero(0.0)) {
    throw std::invalid_argument("min_nonzero_singular: no nonzero singular value");
  }
  const Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  const Eigen::Index r = rank_from_singular_values(sv, tol);
  if (r == 0) {
    throw std::invalid_argument("min_nonzero_singular: no nonzero singular value");
  }
  return sv(r - 1);
}

double min_nonzero_singular(const Matrix& m) {
  return min_nonzero_singular(m, default_rank_tol(m.rows(), m.cols()));
}

double projector_distance(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw std::invalid_argument("projector_distance: ambient dims differ");
  }
  return spectral_norm(a.dense_projector() - b.dense_projector());
}

}  // namespace csmusic
