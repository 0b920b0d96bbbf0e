#pragma once

#include <vector>

#include "csmusic/linalg.hpp"
#include "csmusic/model.hpp"

// Per-candidate metric kernels. These are the hot loops of every recovery and
// tracking routine: independent quadratic forms over dictionary columns.
//
// Each kernel has two implementations with identical signatures: the default
// one parallelizes over candidates with OpenMP, and kernels::serial holds the
// plain-loop reference. Both call the same per-candidate function and write
// into disjoint slots, so their outputs are bit-identical for any thread
// count; the test suite and the kernel_bench tool hold them to that.

namespace csmusic::kernels {

// values[i] = ||a_j - W W^T a_j||^2 for j = eval[i], optionally divided by
// ||a_j||^2. With W spanning R(B) this is the MUSIC metric; with W spanning
// R([B A_S]) it is the subspace-augmented form used by support selection.
Vector residual_metrics(const SensingMatrix& a, const OrthonormalBasis& w,
                        const std::vector<int>& eval, bool normalize);

// Projected-complement route: z = a_j - Ub Ub^T a_j (component off the
// measurement space), then values[i] = ||z - V V^T z||^2 where V spans the
// projected partial-support columns. The quadratic form of
// P_{R(Q)} - P_{R(P_{R(Q)} A_partial)} evaluated without forming projectors.
Vector projected_metrics(const SensingMatrix& a, const OrthonormalBasis& basis_b,
                         const OrthonormalBasis& basis_pa,
                         const std::vector<int>& eval, bool normalize);

struct LeaveOneOutResult {
  Vector values;
  // rank_reduced[i] set when [block A_{space \ j}] lost numerical rank and the
  // metric was taken against the reduced space.
  std::vector<char> rank_reduced;
};

// values[i] = a_j^T P^perp_{R([block A_{space \ j}])} a_j for j = eval[i],
// computed as a residual norm against a fresh orthonormal basis per
// candidate. j need not belong to `space` (then nothing is removed).
LeaveOneOutResult leave_one_out_metrics(const SensingMatrix& a,
                                        const Matrix& block,
                                        const std::vector<int>& eval,
                                        const std::vector<int>& space,
                                        double rank_tol, bool normalize);

// values[j] = ||block^T a_j||_2 for every column j: the correlation scores
// driving S-OMP steps and 2-thresholding.
Vector correlation_norms(const SensingMatrix& a, const Matrix& block);

namespace serial {
Vector residual_metrics(const SensingMatrix& a, const OrthonormalBasis& w,
                        const std::vector<int>& eval, bool normalize);
Vector projected_metrics(const SensingMatrix& a, const OrthonormalBasis& basis_b,
                         const OrthonormalBasis& basis_pa,
                         const std::vector<int>& eval, bool normalize);
LeaveOneOutResult leave_one_out_metrics(const SensingMatrix& a,
                                        const Matrix& block,
                                        const std::vector<int>& eval,
                                        const std::vector<int>& space,
                                        double rank_tol, bool normalize);
Vector correlation_norms(const SensingMatrix& a, const Matrix& block);
}  // namespace serial

}  // namespace csmusic::kernels
