#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csmusic/model.hpp"
#include "csmusic/support.hpp"

namespace csmusic {

enum class CsAlgo { somp, two_thresholding };

struct RecoveryConfig {
  int k = 1;
  CsAlgo cs_algo = CsAlgo::somp;
  double zero_tol = 1e-8;
  // Metrics are divided by ||a_j||^2 before ordering or zero-testing; turning
  // this off restores the raw quadratic forms (same noiseless zero set).
  bool normalize = true;
};

// One value per candidate index. Values are quadratic forms in orthogonal
// projectors: nonnegative up to rounding, clipped at zero.
struct MetricVector {
  std::vector<int> indices;
  Vector values;
  // Set per entry when the metric had to be taken against a numerically
  // rank-reduced subspace (degenerate column combination).
  std::vector<char> rank_reduced;

  double at(int index) const;  // value for a given candidate index
};

struct SupportEstimate {
  SupportSet support;
  bool degenerate = false;             // all-tie / zero-signal input
  bool rank_deficient_regime = false;  // rank(B) < k where r = k was intended
};

// Greedy simultaneous OMP: k rounds of argmax_j ||a_j^T R||_2 with R the
// residual of B against the selected columns (basis recomputed each round).
SupportSet somp(const SensingMatrix& a, const MeasurementBlock& b, int k);

// Indices of the k largest ||a_j^T B||_2; ties broken toward lower index.
SupportEstimate two_thresholding(const SensingMatrix& a,
                                 const MeasurementBlock& b, int k);

// Noise-subspace metric ||a_j - U U^T a_j||^2 / ||a_j||^2 over all columns,
// U spanning R(B). Ascending order; equals the generalized metric with an
// empty partial support.
MetricVector music_metric(const SensingMatrix& a, const MeasurementBlock& b,
                          bool normalize = true);

// Classical MUSIC: the k smallest noise-subspace metrics. Intended for
// rank(B) = k; rank(B) < k sets rank_deficient_regime instead of failing.
SupportEstimate music(const SensingMatrix& a, const MeasurementBlock& b, int k,
                      double zero_tol = 1e-8, bool normalize = true);

// Generalized MUSIC metric eta(j) for every j outside `partial`:
// the quadratic form of P_{R(Q)} - P_{R(P_{R(Q)} A_partial)}, evaluated as a
// double residual (off R(B), then off the projected partial columns).
// Throws when the projected partial columns are rank-deficient.
MetricVector gmusic_metric(const SensingMatrix& a, const MeasurementBlock& b,
                           const SupportSet& partial, bool normalize = true);

// Same quantity through the other algebraic route, as the quadratic form of
// P^perp_{R([B A_partial])}. The two agree to high accuracy; this form is the
// oracle for that identity and is also what the tracking recursion uses.
MetricVector gmusic_metric_concat(const SensingMatrix& a,
                                  const MeasurementBlock& b,
                                  const SupportSet& partial,
                                  bool normalize = true);

// zeta(j) = a_j^T P^perp_{R([B A_{I_k minus j}])} a_j for each j in i_k.
// Requires |i_k| <= m - rank(B); rank-deficient leave-one-out spaces are
// flagged per entry, not errors.
MetricVector support_selection_metric(const SensingMatrix& a,
                                      const MeasurementBlock& b,
                                      const SupportSet& i_k,
                                      bool normalize = true);

// Two-step recovery: CS step picks k - rank(B) indices, generalized MUSIC
// fills in the rest.
SupportEstimate csmusic(const SensingMatrix& a, const MeasurementBlock& b,
                        const RecoveryConfig& cfg);

// Three-step variant: CS step proposes k indices, the k - r with smallest
// zeta survive deletion, generalized MUSIC adds the final r.
SupportEstimate csmusic_optimized(const SensingMatrix& a,
                                  const MeasurementBlock& b,
                                  const RecoveryConfig& cfg);

// Smallest number of linearly dependent columns, by exhaustive search over
// subsets of size <= max_cols; nullopt when every such subset is independent.
// Guarded: throws when the subset count exceeds the combinatorial budget.
std::optional<int> spark_bruteforce(const SensingMatrix& a, int max_cols);

// {algorithm, k, r, support, metrics?, degenerate_flags} record.
nlohmann::json recovery_record(const std::string& algorithm, int k, int r,
                               const SupportEstimate& estimate,
                               const std::optional<MetricVector>& metrics);

}  // namespace csmusic
