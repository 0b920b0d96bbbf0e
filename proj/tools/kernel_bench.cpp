// Times the OpenMP kernel implementations against their serial references on
// a tracking-sized workload and checks that the outputs are bit-identical.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "csmusic/kernels.hpp"
#include "csmusic/model.hpp"
#include "csmusic/rng.hpp"

using namespace csmusic;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    double t0 = now_seconds();
    f();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

bool bits_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) != b(i)) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int m = 50, n = 900, r = 9, k = 24;
  int reps = 5;
  if (argc > 1) reps = std::max(1, std::atoi(argv[1]));

  SensingMatrix a = SensingMatrix::generate(m, n, 20260815);
  SplitMix64 rng(derive_stream(20260815, 7));
  Matrix amplitudes(k, r);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < r; ++j) amplitudes(i, j) = rng.next_gaussian();
  std::vector<int> support;
  for (int i = 0; i < k; ++i) support.push_back(i * (n / k));
  Matrix block = a.columns(support) * amplitudes;
  OrthonormalBasis basis = orthonormal_basis(block);

  std::vector<int> all(n);
  for (int j = 0; j < n; ++j) all[static_cast<size_t>(j)] = j;
  double tol = default_rank_tol(m, r + k);

#ifdef _OPENMP
  std::printf("openmp: enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif
  std::printf("workload: m=%d n=%d r=%d k=%d, best of %d reps\n\n", m, n, r, k,
              reps);
  std::printf("%-22s %12s %12s %9s %6s\n", "kernel", "serial (ms)",
              "openmp (ms)", "speedup", "bits");

  {
    Vector serial_out, parallel_out;
    double ts = time_best_of(
        reps, [&] { serial_out = kernels::serial::residual_metrics(a, basis, all, true); });
    double tp = time_best_of(
        reps, [&] { parallel_out = kernels::residual_metrics(a, basis, all, true); });
    std::printf("%-22s %12.3f %12.3f %8.2fx %6s\n", "residual_metrics",
                ts * 1e3, tp * 1e3, ts / tp,
                bits_equal(serial_out, parallel_out) ? "same" : "DIFF");
  }
  {
    OrthonormalBasis pa =
        orthonormal_basis(a.columns(std::vector<int>{3, 77, 200}));
    Vector serial_out, parallel_out;
    double ts = time_best_of(reps, [&] {
      serial_out = kernels::serial::projected_metrics(a, basis, pa, all, true);
    });
    double tp = time_best_of(reps, [&] {
      parallel_out = kernels::projected_metrics(a, basis, pa, all, true);
    });
    std::printf("%-22s %12.3f %12.3f %8.2fx %6s\n", "projected_metrics",
                ts * 1e3, tp * 1e3, ts / tp,
                bits_equal(serial_out, parallel_out) ? "same" : "DIFF");
  }
  {
    kernels::LeaveOneOutResult serial_out, parallel_out;
    double ts = time_best_of(reps, [&] {
      serial_out = kernels::serial::leave_one_out_metrics(a, block, support,
                                                          support, tol, true);
    });
    double tp = time_best_of(reps, [&] {
      parallel_out =
          kernels::leave_one_out_metrics(a, block, support, support, tol, true);
    });
    std::printf("%-22s %12.3f %12.3f %8.2fx %6s\n", "leave_one_out_metrics",
                ts * 1e3, tp * 1e3, ts / tp,
                bits_equal(serial_out.values, parallel_out.values) ? "same"
                                                                   : "DIFF");
  }
  {
    Vector serial_out, parallel_out;
    double ts = time_best_of(
        reps, [&] { serial_out = kernels::serial::correlation_norms(a, block); });
    double tp = time_best_of(
        reps, [&] { parallel_out = kernels::correlation_norms(a, block); });
    std::printf("%-22s %12.3f %12.3f %8.2fx %6s\n", "correlation_norms",
                ts * 1e3, tp * 1e3, ts / tp,
                bits_equal(serial_out, parallel_out) ? "same" : "DIFF");
  }
  return 0;
}
