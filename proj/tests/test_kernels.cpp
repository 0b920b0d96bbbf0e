#include <doctest.h>

#include <numeric>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "csmusic/kernels.hpp"
#include "csmusic/linalg.hpp"
#include "csmusic/model.hpp"
#include "csmusic/rng.hpp"
#include "test_util.hpp"

using namespace csmusic;

namespace {

struct Workload {
  SensingMatrix a;
  OrthonormalBasis basis_b;
  OrthonormalBasis basis_pa;
  Matrix block;
  std::vector<int> eval;
  std::vector<int> space;
};

Workload make_workload(std::uint64_t seed) {
  auto a = generate_sensing(30, 80, seed);
  // A generic rank-4 block inside span{a_0..a_5}, like a canonicalized
  // measurement: not aligned with any single dictionary column.
  SplitMix64 g(seed + 1000);
  Matrix mix(6, 4);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) mix(i, j) = g.next_gaussian();
  Matrix block = a.data().leftCols(6) * mix;
  auto basis_b = orthonormal_basis(block);
  std::vector<int> space = {2, 5, 11, 40, 41, 42, 77};
  Matrix pa = basis_b.residual(a.columns(space));
  auto basis_pa = orthonormal_basis(pa);
  std::vector<int> eval(80);
  std::iota(eval.begin(), eval.end(), 0);
  return {std::move(a), std::move(basis_b), std::move(basis_pa),
          std::move(block), std::move(eval), std::move(space)};
}

void set_threads(int t) {
#ifdef _OPENMP
  omp_set_num_threads(t);
#else
  (void)t;
#endif
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference bit for bit") {
  auto w = make_workload(11);
  auto ref_res = kernels::serial::residual_metrics(w.a, w.basis_b, w.eval, true);
  auto ref_proj =
      kernels::serial::projected_metrics(w.a, w.basis_b, w.basis_pa, w.eval, true);
  auto ref_loo = kernels::serial::leave_one_out_metrics(
      w.a, w.block, w.eval, w.space, default_rank_tol(30, 11), true);
  auto ref_corr = kernels::serial::correlation_norms(w.a, w.block);

  for (int threads : {1, 2, 4, 7}) {
    CAPTURE(threads);
    set_threads(threads);
    CHECK(testutil::bits_equal(
        kernels::residual_metrics(w.a, w.basis_b, w.eval, true), ref_res));
    CHECK(testutil::bits_equal(
        kernels::projected_metrics(w.a, w.basis_b, w.basis_pa, w.eval, true),
        ref_proj));
    auto loo = kernels::leave_one_out_metrics(w.a, w.block, w.eval, w.space,
                                              default_rank_tol(30, 11), true);
    CHECK(testutil::bits_equal(loo.values, ref_loo.values));
    CHECK(loo.rank_reduced == ref_loo.rank_reduced);
    CHECK(testutil::bits_equal(kernels::correlation_norms(w.a, w.block),
                               ref_corr));
  }
  set_threads(1);
}

TEST_CASE("residual metric is the normalized squared residual") {
  auto w = make_workload(12);
  auto vals = kernels::residual_metrics(w.a, w.basis_b, w.eval, true);
  REQUIRE(vals.size() == 80);
  for (int i = 0; i < 80; ++i) {
    Vector col = w.a.column(i);
    double expect = w.basis_b.residual(col).squaredNorm() / col.squaredNorm();
    CHECK(vals(i) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(vals(i) >= 0.0);
  }
  // Columns inside the span score (numerically) zero.
  auto span_basis = orthonormal_basis(w.a.columns({0, 1, 2, 3, 4, 5}));
  auto in_span = kernels::residual_metrics(w.a, span_basis, {0, 1, 2, 3, 4, 5}, true);
  for (int i = 0; i < 6; ++i) CHECK(in_span(i) < 1e-20);

  auto raw = kernels::residual_metrics(w.a, w.basis_b, w.eval, false);
  for (int i = 0; i < 80; ++i) {
    double norm_sq = w.a.column_sq_norms()(i);
    CHECK(raw(i) == doctest::Approx(vals(i) * norm_sq).epsilon(1e-12));
  }
}

TEST_CASE("projected metric equals the dense projector difference") {
  auto w = make_workload(13);
  auto vals = kernels::projected_metrics(w.a, w.basis_b, w.basis_pa, w.eval, false);
  // Oracle: form P_perp(B) - P_{R(P_perp(B) A_S)} densely and take the form.
  Matrix p_perp = Matrix::Identity(30, 30) - w.basis_b.dense_projector();
  Matrix p_pa = w.basis_pa.dense_projector();
  Matrix op = p_perp - p_pa;
  for (int i = 0; i < 80; ++i) {
    Vector col = w.a.column(i);
    double expect = col.dot(op * col);
    CHECK(vals(i) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("leave-one-out metric removes one column at a time") {
  auto w = make_workload(14);
  auto res = kernels::leave_one_out_metrics(w.a, w.block, w.space, w.space,
                                            default_rank_tol(30, 11), false);
  REQUIRE(res.values.size() == static_cast<Eigen::Index>(w.space.size()));
  for (std::size_t i = 0; i < w.space.size(); ++i) {
    const int j = w.space[i];
    std::vector<int> rest;
    for (int s : w.space)
      if (s != j) rest.push_back(s);
    Matrix concat(30, w.block.cols() + static_cast<Eigen::Index>(rest.size()));
    concat << w.block, w.a.columns(rest);
    auto basis = orthonormal_basis(concat);
    Vector col = w.a.column(j);
    CHECK(res.values(static_cast<Eigen::Index>(i)) ==
          doctest::Approx(basis.residual(col).squaredNorm()).epsilon(1e-9));
    CHECK_FALSE(static_cast<bool>(res.rank_reduced[i]));
  }
}

TEST_CASE("leave-one-out flags rank collapse") {
  // Duplicate dictionary columns: dropping one leaves its twin, so the
  // concatenation keeps full rank; duplicating inside the block instead
  // makes [block A_space\j] rank deficient relative to its column count.
  Matrix raw = generate_sensing(10, 24, 5).data();
  raw.col(3) = raw.col(2);  // twin columns inside the candidate space
  auto a = SensingMatrix::from_matrix(raw);
  Matrix block = raw.leftCols(2);
  std::vector<int> space = {2, 3, 7};
  auto res = kernels::leave_one_out_metrics(a, block, space, space,
                                            default_rank_tol(10, 5), false);
  // Removing index 7 keeps both twins 2 and 3 in the space: rank drops.
  REQUIRE(res.values.size() == 3);
  CHECK(static_cast<bool>(res.rank_reduced[2]));
  CHECK_FALSE(static_cast<bool>(res.rank_reduced[0]));
  CHECK_FALSE(static_cast<bool>(res.rank_reduced[1]));
}

TEST_CASE("correlation norms match the direct computation") {
  auto w = make_workload(15);
  auto vals = kernels::correlation_norms(w.a, w.block);
  REQUIRE(vals.size() == 80);
  for (int j = 0; j < 80; ++j) {
    double expect = (w.block.transpose() * w.a.column(j)).norm();
    CHECK(vals(j) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("kernels reject out-of-range candidates") {
  auto w = make_workload(16);
  CHECK_THROWS_AS(kernels::residual_metrics(w.a, w.basis_b, {80}, true),
                  std::invalid_argument);
  CHECK_THROWS_AS(kernels::residual_metrics(w.a, w.basis_b, {-1}, true),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      kernels::projected_metrics(w.a, w.basis_b, w.basis_pa, {123}, true),
      std::invalid_argument);
  CHECK_THROWS_AS(
      kernels::leave_one_out_metrics(w.a, w.block, {99}, w.space, 1e-10, true),
      std::invalid_argument);
}
