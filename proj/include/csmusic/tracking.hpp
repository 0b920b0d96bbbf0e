#pragma once

#include <optional>
#include <string>
#include <vector>

#include "csmusic/model.hpp"
#include "csmusic/recovery.hpp"
#include "csmusic/support.hpp"

namespace csmusic {

enum class TrackerMode { noiseless, noisy_fixed_k, noisy_adaptive };

struct Thresholds {
  double eps1 = 0.0;  // deletion threshold
  double eps2 = 0.0;  // addition threshold
};

// eps1 = (1 - gamma(1 + alpha))/2 and eps2 = (1 - gamma)/2 with
// gamma = k_max/m, alpha = r/k_max; gamma(1 + alpha) simplifies to
// (k_max + r)/m, which keeps the arithmetic exact for nice ratios.
// Valid only while k_max + r < m.
Thresholds default_thresholds(int m, int k_max, int r);

struct TrackerConfig {
  TrackerMode mode = TrackerMode::noiseless;
  int k_max = 0;  // operator's prior sparsity bound (sets thresholds)
  int r = 0;      // nominal snapshot count per frame (sets thresholds)
  int fixed_k = 0;  // sparsity for noisy_fixed_k; 0 means |I0| at scene level
  // Unset thresholds fall back to default_thresholds(m, k_max, r).
  std::optional<double> eps1;
  std::optional<double> eps2;
  double zero_tol = 1e-8;   // noiseless zero test
  double nrank_tol = 0.1;   // relative residual for the nrank subset rule
  bool use_column_truncation = false;
  bool normalize = true;    // divide metrics by ||a_j||^2
};

struct TrackerDiagnostics {
  MetricVector deletion_metrics;   // zeta over I_prev
  MetricVector addition_metrics;   // eta over the addition candidates
  SupportSet i1;  // independent subset of I_prev (adaptive mode)
  SupportSet i2;  // independent subset of I(t)^a (adaptive mode)
  bool assumption_violated = false;        // deletion kept nothing
  bool pure_measurement_subspace = false;  // I1 empty despite prior support
  bool truncated = false;                  // column truncation engaged
  bool k_exceeded_kmax = false;            // |I(t)| > k_max, reported not cut
};

struct TrackerState {
  int t = 0;
  SupportSet support;
  int k_hat = 0;  // always |support|
  SupportSet last_deletion;  // I_prev minus I(t)
  SupportSet last_addition;  // I(t) minus I_prev
  TrackerDiagnostics diagnostics;
};

// One frame of the deterministic noiseless recursion: keep every prior index
// whose leave-one-out metric is <= zero_tol, then add every column whose
// generalized-MUSIC metric is <= zero_tol. The estimated sparsity is
// discovered, not supplied. Requires a canonical noiseless block and
// 2 k_max <= m.
TrackerState track_noiseless(const SensingMatrix& a,
                             const MeasurementBlock& b_t,
                             const SupportSet& i_prev,
                             const TrackerConfig& cfg);

// Ordering-based noisy recursion at known sparsity: keep the k - r prior
// indices with smallest zeta, add the r columns with smallest eta. Total.
TrackerState track_noisy_fixed_k(const SensingMatrix& a,
                                 const MeasurementBlock& y_t,
                                 const SupportSet& i_prev, int k,
                                 const TrackerConfig& cfg);

// Threshold-based noisy recursion with adaptive sparsity: numerical-rank
// subset selection (I1 from the prior support, I2 from the deletion
// survivors), deletion below eps1, addition below eps2.
TrackerState track_noisy_adaptive(const SensingMatrix& a,
                                  const MeasurementBlock& y_t,
                                  const SupportSet& i_prev,
                                  const TrackerConfig& cfg);

// Greedy ascending-index subset of `candidates` whose columns each raise the
// numerical rank of [base A_subset] by one, tested by the relative residual
// ||P^perp a_j|| > rel_tol ||a_j|| against the running basis.
std::vector<int> greedy_independent_subset(const SensingMatrix& a,
                                           const OrthonormalBasis& base,
                                           const std::vector<int>& candidates,
                                           double rel_tol);

struct SceneTrackResult {
  std::vector<TrackerState> states;  // states[t], t = 0..t_max
  std::vector<char> exact_match;     // against the timeline's ground truth
};

// Folds the per-frame tracker over frames 1..t_max, starting from i0
// (ground truth or a static recovery on an initial block). Frames are
// canonicalized before tracking.
SceneTrackResult track_scene(const SensingMatrix& a,
                             const SceneTimeline& timeline,
                             const SupportSet& i0, const TrackerConfig& cfg);

// One JSON object per frame.
std::string states_jsonl(const SceneTrackResult& result);
// Header: t,k_hat,exact_match,deleted,added
std::string states_csv(const SceneTrackResult& result);

}  // namespace csmusic
