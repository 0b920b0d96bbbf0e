#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "csmusic/model.hpp"
#include "csmusic/support.hpp"
#include "csmusic/tracking.hpp"

namespace csmusic::bench {

// Success means set equality, nothing weaker.
bool success(const SupportSet& estimated, const SupportSet& truth);

struct SweepSpec {
  int m = 0;
  int n = 0;
  int r = 0;
  std::vector<int> k_values;
  std::vector<int> change_counts;
  int t_max = 5;
  double snr_db = std::numeric_limits<double>::infinity();
  int trials = 500;
  std::uint64_t seed = 0;
  // Tracker modes: "noiseless", "noisy_fixed_k", "noisy_adaptive".
  std::vector<std::string> algorithms;

  void validate() const;  // throws std::invalid_argument before any trial
  static SweepSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SweepCell {
  std::string algorithm;
  int k = 0;
  int u = 0;
  int t = 0;
  double success_rate = 0.0;
  int trials = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  double wall_seconds = 0.0;
};

// Per trial: fresh sensing matrix and scene (per-trial seed derived from
// (seed, trial, k, u) so any cell can be re-run in isolation), initial support
// from the optimized recovery on frame 1, tracking over frames 2..t_max.
// Success is recorded per (algorithm, k, u, t); all listed algorithms see the
// same scenes. Deterministic for a fixed seed regardless of thread count.
SweepResult run_sweep(const SweepSpec& spec);

// Exact header: algorithm,k,u,t,success_rate,trials
std::string sweep_csv(const SweepResult& result);

struct GridSpec {
  int m = 0;
  int grid_w = 0;
  int grid_h = 0;  // ambient dimension n = grid_w * grid_h
  int k = 0;
  int r = 0;        // snapshots per tracked frame
  int r0 = 0;       // snapshots of the resting block at t = 0
  int t_max = 45;
  double snr_db = std::numeric_limits<double>::infinity();
  double move_prob = 0.0;
  int scene_seeds = 1;
  std::uint64_t seed = 0;
  std::vector<int> export_frames;

  void validate() const;
  static GridSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct GridFrame {
  int width = 0;
  int height = 0;
  int t = 0;
  SupportSet occupied;   // ground truth cells
  SupportSet estimated;  // algorithm output
  bool exact_match = false;
};

struct GridScene {
  std::uint64_t scene_seed = 0;
  std::vector<GridFrame> tracker;   // t = 1..t_max
  std::vector<GridFrame> baseline;  // per-frame MUSIC at known k
};

struct GridResult {
  std::vector<GridScene> scenes;
  double tracker_mean = 0.0;   // mean exact-match over all frames and seeds
  double baseline_mean = 0.0;
  double wall_seconds = 0.0;
};

// The moving-target experiment: per scene, a high-snapshot resting block
// (rank capped at k when noisy) initializes the support via the optimized
// recovery, then the known-k tracker and the per-frame MUSIC baseline run on
// identical data over t = 1..t_max.
GridResult run_grid_tracking(const GridSpec& spec);

// Header: algorithm,seed,t,exact_match,k_hat
std::string grid_csv(const GridResult& result);

// For the first scene: one portable graymap per exported frame for truth,
// tracker, and baseline, plus a JSON-lines log covering every scene/frame.
void write_grid_artifacts(const GridResult& result, const GridSpec& spec,
                          const std::filesystem::path& dir);

}  // namespace csmusic::bench
