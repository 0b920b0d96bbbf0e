#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "csmusic/linalg.hpp"
#include "csmusic/support.hpp"

namespace csmusic {

// The m x n measurement operator with cached squared column norms.
class SensingMatrix {
 public:
  // Entries i.i.d. N(0, 1/m), filled row by row from the seeded stream.
  static SensingMatrix generate(int m, int n, std::uint64_t seed);
  // Wrap an existing operator; requires m <= n and finite entries.
  static SensingMatrix from_matrix(Matrix a);

  int m() const { return static_cast<int>(data_.rows()); }
  int n() const { return static_cast<int>(data_.cols()); }
  const Matrix& data() const { return data_; }
  const Vector& column_sq_norms() const { return column_sq_norms_; }
  Vector column(int j) const { return data_.col(j); }
  // Gather A_S, columns in the set's ascending order.
  Matrix columns(const SupportSet& s) const;
  Matrix columns(const std::vector<int>& s) const;

 private:
  SensingMatrix(Matrix a);
  Matrix data_;
  Vector column_sq_norms_;
};

enum class BlockKind { noiseless, noisy };

// A (possibly noisy) m x r snapshot matrix. `canonical` marks blocks that went
// through the SVD dimension reduction and therefore have full column rank.
struct MeasurementBlock {
  Matrix data;
  BlockKind kind = BlockKind::noiseless;
  bool canonical = false;

  int m() const { return static_cast<int>(data.rows()); }
  int r() const { return static_cast<int>(data.cols()); }
};

// Ground-truth n x r signal whose nonzero rows sit exactly on `support`.
class JointSparseSignal {
 public:
  JointSparseSignal(Matrix data, SupportSet support);

  int n() const { return static_cast<int>(data_.rows()); }
  int r() const { return static_cast<int>(data_.cols()); }
  const Matrix& data() const { return data_; }
  const SupportSet& support() const { return support_; }

 private:
  Matrix data_;
  SupportSet support_;
};

// Support evolution modes. fixed_swap replaces exactly u indices per step;
// per_target_move walks each target on a grid with the given probability.
struct FixedSwap {
  int u = 0;
};
struct PerTargetMove {
  double prob = 0.0;
  int grid_w = 0;
  int grid_h = 0;
};
using ChangeMode = std::variant<FixedSwap, PerTargetMove>;

struct SceneParams {
  int m = 0;
  int n = 0;
  int r = 0;
  int k_init = 0;
  int t_max = 0;
  ChangeMode change_mode = FixedSwap{0};
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  // Optional per-frame sparsity schedule (size t_max + 1, front() == k_init).
  // Transitions enter max(u, k(t)-k(t-1), 0) fresh indices and retire
  // enough old ones to land on k(t); without a schedule exactly u swap.
  std::optional<std::vector<int>> k_schedule;

  // Throws std::invalid_argument on hard errors; returns soft warnings
  // (e.g. change counts too large for guaranteed tracking).
  std::vector<std::string> validate() const;

  static SceneParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  int k_at(int t) const;
};

struct SceneFrame {
  JointSparseSignal signal;
  MeasurementBlock measurement;
};

// Frames t = 0..t_max over one sensing matrix. Immutable after generation.
struct SceneTimeline {
  SensingMatrix sensing;
  std::vector<SceneFrame> frames;
  SceneParams params;

  const SupportSet& truth(int t) const { return frames[t].signal.support(); }
  // Writes params.json plus per-frame signal/measurement/support CSVs.
  void export_csv(const std::filesystem::path& dir) const;
};

SensingMatrix generate_sensing(int m, int n, std::uint64_t seed);
SceneTimeline generate_scene(const SceneParams& params);

// Y = B + N with N i.i.d. Gaussian rescaled so the Frobenius SNR is exact:
// 20 log10(||B||_F / ||N||_F) = snr_db. Infinite snr_db returns B unchanged.
MeasurementBlock add_noise(const MeasurementBlock& b, double snr_db,
                           std::uint64_t seed);

struct Canonicalized {
  MeasurementBlock block;
  std::optional<JointSparseSignal> signal;
};

// SVD dimension reduction to canonical form: the output block is Y * V_r with
// r the numerical rank of Y (optionally capped by max_rank when the operator
// knows the sparsity, e.g. a noisy resting block), full column rank, and the
// same column space. A provided signal is reduced by the same V_r and keeps
// its support.
Canonicalized canonicalize(const MeasurementBlock& y,
                           const std::optional<JointSparseSignal>& x,
                           double tol,
                           std::optional<int> max_rank = std::nullopt);
Canonicalized canonicalize(const MeasurementBlock& y,
                           std::optional<int> max_rank = std::nullopt);

struct SnrCheck {
  double snr_min = 0.0;  // sigma_min(B) / ||N||
  double bound = 0.0;    // 1 + 4 (kappa(B) + 1) / (1 - gamma (1 + alpha))
  bool satisfied = false;
};

// Minimum-SNR sufficiency check for the noisy tracking thresholds.
// Preconditions: B noiseless with full column rank, gamma * (1 + alpha) < 1.
SnrCheck snr_min_check(const MeasurementBlock& b, const Matrix& noise,
                       double gamma, double alpha);

// Stream ids used by scene generation (documented so single frames can be
// re-derived in isolation): sensing matrix, per-frame support/amplitudes,
// per-frame noise.
inline constexpr std::uint64_t kSensingStream = 1;
inline constexpr std::uint64_t kFrameStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;

}  // namespace csmusic
