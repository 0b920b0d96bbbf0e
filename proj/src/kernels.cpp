#include "csmusic/kernels.hpp"

#include <stdexcept>

namespace csmusic::kernels {

namespace {

// The single source of truth for each per-candidate value. Both the OpenMP
// and the serial drivers call these, which is what makes their outputs
// bit-identical.

double residual_metric_at(const SensingMatrix& a, const OrthonormalBasis& w,
                          int j, bool normalize) {
  Vector col = a.column(j);
  double v = w.complement_quadform(col);
  return normalize ? v / a.column_sq_norms()(j) : v;
}

double projected_metric_at(const SensingMatrix& a,
                           const OrthonormalBasis& basis_b,
                           const OrthonormalBasis& basis_pa, int j,
                           bool normalize) {
  Vector z = basis_b.residual(a.column(j));
  double v = basis_pa.complement_quadform(z);
  return normalize ? v / a.column_sq_norms()(j) : v;
}

struct LooValue {
  double value;
  bool rank_reduced;
};

LooValue leave_one_out_at(const SensingMatrix& a, const Matrix& block,
                          const std::vector<int>& space, int j,
                          double rank_tol, bool normalize) {
  Eigen::Index extra = 0;
  for (int s : space) extra += (s != j);
  Matrix concat(a.m(), block.cols() + extra);
  concat.leftCols(block.cols()) = block;
  Eigen::Index c = block.cols();
  for (int s : space)
    if (s != j) concat.col(c++) = a.column(s);

  OrthonormalBasis w = orthonormal_basis(concat, rank_tol);
  LooValue out;
  out.rank_reduced = w.dim() < concat.cols();
  out.value = residual_metric_at(a, w, j, normalize);
  return out;
}

double correlation_norm_at(const SensingMatrix& a, const Matrix& block,
                           int j) {
  return (block.transpose() * a.column(j)).norm();
}

void check_eval(const SensingMatrix& a, const std::vector<int>& eval) {
  for (int j : eval)
    if (j < 0 || j >= a.n())
      throw std::invalid_argument("kernel: candidate index out of range");
}

}  // namespace

Vector residual_metrics(const SensingMatrix& a, const OrthonormalBasis& w,
                        const std::vector<int>& eval, bool normalize) {
  check_eval(a, eval);
  const int count = static_cast<int>(eval.size());
  Vector out(count);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i)
    out(i) = residual_metric_at(a, w, eval[static_cast<size_t>(i)], normalize);
  return out;
}

Vector projected_metrics(const SensingMatrix& a, const OrthonormalBasis& basis_b,
                         const OrthonormalBasis& basis_pa,
                         const std::vector<int>& eval, bool normalize) {
  check_eval(a, eval);
  const int count = static_cast<int>(eval.size());
  Vector out(count);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i)
    out(i) = projected_metric_at(a, basis_b, basis_pa,
                                 eval[static_cast<size_t>(i)], normalize);
  return out;
}

LeaveOneOutResult leave_one_out_metrics(const SensingMatrix& a,
                                        const Matrix& block,
                                        const std::vector<int>& eval,
                                        const std::vector<int>& space,
                                        double rank_tol, bool normalize) {
  check_eval(a, eval);
  check_eval(a, space);
  if (block.rows() != a.m())
    throw std::invalid_argument("kernel: block row count mismatch");
  const int count = static_cast<int>(eval.size());
  LeaveOneOutResult out;
  out.values.resize(count);
  out.rank_reduced.assign(static_cast<size_t>(count), 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i) {
    LooValue v = leave_one_out_at(a, block, space, eval[static_cast<size_t>(i)],
                                  rank_tol, normalize);
    out.values(i) = v.value;
    out.rank_reduced[static_cast<size_t>(i)] = v.rank_reduced ? 1 : 0;
  }
  return out;
}

Vector correlation_norms(const SensingMatrix& a, const Matrix& block) {
  if (block.rows() != a.m())
    throw std::invalid_argument("kernel: block row count mismatch");
  const int count = a.n();
  Vector out(count);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < count; ++j) out(j) = correlation_norm_at(a, block, j);
  return out;
}

namespace serial {

Vector residual_metrics(const SensingMatrix& a, const OrthonormalBasis& w,
                        const std::vector<int>& eval, bool normalize) {
  check_eval(a, eval);
  const int count = static_cast<int>(eval.size());
  Vector out(count);
  for (int i = 0; i < count; ++i)
    out(i) = residual_metric_at(a, w, eval[static_cast<size_t>(i)], normalize);
  return out;
}

Vector projected_metrics(const SensingMatrix& a, const OrthonormalBasis& basis_b,
                         const OrthonormalBasis& basis_pa,
                         const std::vector<int>& eval, bool normalize) {
  check_eval(a, eval);
  const int count = static_cast<int>(eval.size());
  Vector out(count);
  for (int i = 0; i < count; ++i)
    out(i) = projected_metric_at(a, basis_b, basis_pa,
                                 eval[static_cast<size_t>(i)], normalize);
  return out;
}

LeaveOneOutResult leave_one_out_metrics(const SensingMatrix& a,
                                        const Matrix& block,
                                        const std::vector<int>& eval,
                                        const std::vector<int>& space,
                                        double rank_tol, bool normalize) {
  check_eval(a, eval);
  check_eval(a, space);
  if (block.rows() != a.m())
    throw std::invalid_argument("kernel: block row count mismatch");
  const int count = static_cast<int>(eval.size());
  LeaveOneOutResult out;
  out.values.resize(count);
  out.rank_reduced.assign(static_cast<size_t>(count), 0);
  for (int i = 0; i < count; ++i) {
    LooValue v = leave_one_out_at(a, block, space, eval[static_cast<size_t>(i)],
                                  rank_tol, normalize);
    out.values(i) = v.value;
    out.rank_reduced[static_cast<size_t>(i)] = v.rank_reduced ? 1 : 0;
  }
  return out;
}

Vector correlation_norms(const SensingMatrix& a, const Matrix& block) {
  if (block.rows() != a.m())
    throw std::invalid_argument("kernel: block row count mismatch");
  const int count = a.n();
  Vector out(count);
  for (int j = 0; j < count; ++j) out(j) = correlation_norm_at(a, block, j);
  return out;
}

}  // namespace serial

}  // namespace csmusic::kernels
