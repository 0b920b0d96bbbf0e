#include "csmusic/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "csmusic/io.hpp"
#include "csmusic/recovery.hpp"
#include "csmusic/rng.hpp"

namespace csmusic::bench {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

TrackerMode mode_from_name(const std::string& name) {
  if (name == "noiseless") return TrackerMode::noiseless;
  if (name == "noisy_fixed_k") return TrackerMode::noisy_fixed_k;
  if (name == "noisy_adaptive") return TrackerMode::noisy_adaptive;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// Amplitude/noise streams for the resting block sit outside the tags the
// scene generator reserves (1..3).
constexpr std::uint64_t kRestingAmplitudeStream = 101;
constexpr std::uint64_t kRestingNoiseStream = 102;

}  // namespace

bool success(const SupportSet& estimated, const SupportSet& truth) {
  return estimated == truth;
}

void SweepSpec::validate() const {
  require(m > 0 && n > 0 && r > 0, "sweep: m, n, r must be positive");
  require(m < n, "sweep: require m < n");
  require(trials >= 1, "sweep: trials must be >= 1");
  require(t_max >= 1, "sweep: t_max must be >= 1");
  require(!k_values.empty(), "sweep: k_values must be nonempty");
  require(!change_counts.empty(), "sweep: change_counts must be nonempty");
  require(!algorithms.empty(), "sweep: algorithms must be nonempty");
  for (int k : k_values) {
    require(k < m, "sweep: k_values must all be < m");
    require(k >= r, "sweep: k_values must all be >= r (model requires k >= r)");
    require(k <= m - r,
            "sweep: k_values must satisfy k <= m - r for the initial recovery");
    for (int u : change_counts)
      require(u >= 0 && u <= std::min(k, n - k),
              "sweep: change count infeasible for some k");
  }
  for (const std::string& name : algorithms) {
    TrackerMode mode = mode_from_name(name);
    if (mode == TrackerMode::noiseless) {
      require(std::isinf(snr_db), "sweep: noiseless tracking needs infinite snr_db");
      for (int k : k_values)
        require(2 * k <= m, "sweep: noiseless tracking requires 2k <= m");
    }
    if (mode == TrackerMode::noisy_adaptive)
      for (int k : k_values)
        require(k + r < m,
                "sweep: adaptive thresholds require k + r < m");
  }
}

SweepSpec SweepSpec::from_json(const nlohmann::json& j) {
  SweepSpec s;
  s.m = j.at("m").get<int>();
  s.n = j.at("n").get<int>();
  s.r = j.at("r").get<int>();
  s.k_values = j.at("k_values").get<std::vector<int>>();
  s.change_counts = j.at("change_counts").get<std::vector<int>>();
  s.t_max = j.at("t_max").get<int>();
  const auto& snr = j.at("snr_db");
  s.snr_db = (snr.is_string() || snr.is_null())
                 ? std::numeric_limits<double>::infinity()
                 : snr.get<double>();
  s.trials = j.at("trials").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.algorithms = j.at("algorithms").get<std::vector<std::string>>();
  s.validate();
  return s;
}

nlohmann::json SweepSpec::to_json() const {
  nlohmann::json j;
  j["m"] = m;
  j["n"] = n;
  j["r"] = r;
  j["k_values"] = k_values;
  j["change_counts"] = change_counts;
  j["t_max"] = t_max;
  if (std::isinf(snr_db))
    j["snr_db"] = "inf";
  else
    j["snr_db"] = snr_db;
  j["trials"] = trials;
  j["seed"] = seed;
  j["algorithms"] = algorithms;
  return j;
}

namespace {

struct SweepJob {
  int k_idx;
  int u_idx;
  int trial;
};

// Runs one (k, u, trial) scene for every algorithm; out points at
// algorithms * t_max success slots laid out algorithm-major.
void run_sweep_job(const SweepSpec& spec, int k, int u, int trial, char* out) {
  std::uint64_t trial_seed =
      derive_stream(spec.seed, static_cast<std::uint64_t>(trial),
                    static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(u));
  SceneParams params;
  params.m = spec.m;
  params.n = spec.n;
  params.r = spec.r;
  params.k_init = k;
  params.t_max = spec.t_max;
  params.change_mode = FixedSwap{u};
  params.snr_db = spec.snr_db;
  params.seed = trial_seed;
  SceneTimeline scene = generate_scene(params);

  std::vector<MeasurementBlock> canonical;
  canonical.reserve(static_cast<size_t>(spec.t_max));
  for (int t = 1; t <= spec.t_max; ++t)
    canonical.push_back(canonicalize(scene.frames[static_cast<size_t>(t)].measurement).block);

  RecoveryConfig rec;
  rec.k = k;
  SupportEstimate init = csmusic_optimized(scene.sensing, canonical[0], rec);
  char init_success = success(init.support, scene.truth(1)) ? 1 : 0;

  for (size_t algo = 0; algo < spec.algorithms.size(); ++algo) {
    TrackerMode mode = mode_from_name(spec.algorithms[algo]);
    TrackerConfig cfg;
    cfg.mode = mode;
    cfg.k_max = k;
    cfg.r = spec.r;
    cfg.fixed_k = k;
    char* slots = out + algo * static_cast<size_t>(spec.t_max);
    slots[0] = init_success;
    SupportSet prev = init.support;
    for (int t = 2; t <= spec.t_max; ++t) {
      const MeasurementBlock& block = canonical[static_cast<size_t>(t - 1)];
      TrackerState st;
      switch (mode) {
        case TrackerMode::noiseless:
          st = track_noiseless(scene.sensing, block, prev, cfg);
          break;
        case TrackerMode::noisy_fixed_k:
          st = track_noisy_fixed_k(scene.sensing, block, prev, k, cfg);
          break;
        case TrackerMode::noisy_adaptive:
          st = track_noisy_adaptive(scene.sensing, block, prev, cfg);
          break;
      }
      slots[t - 1] = success(st.support, scene.truth(t)) ? 1 : 0;
      prev = st.support;
    }
  }
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  auto start = std::chrono::steady_clock::now();

  const int num_k = static_cast<int>(spec.k_values.size());
  const int num_u = static_cast<int>(spec.change_counts.size());
  const size_t num_algos = spec.algorithms.size();
  const size_t per_job = num_algos * static_cast<size_t>(spec.t_max);
  const int num_jobs = num_k * num_u * spec.trials;

  // One slot per (job, algorithm, t); filled independently, reduced in a
  // fixed order afterwards so the result is thread-count invariant.
  std::vector<char> slots(static_cast<size_t>(num_jobs) * per_job, 0);

#pragma omp parallel for schedule(dynamic)
  for (int job = 0; job < num_jobs; ++job) {
    int k_idx = job / (num_u * spec.trials);
    int rest = job % (num_u * spec.trials);
    int u_idx = rest / spec.trials;
    int trial = rest % spec.trials;
    run_sweep_job(spec, spec.k_values[static_cast<size_t>(k_idx)],
                  spec.change_counts[static_cast<size_t>(u_idx)], trial,
                  slots.data() + static_cast<size_t>(job) * per_job);
  }

  SweepResult result;
  for (size_t algo = 0; algo < num_algos; ++algo) {
    for (int k_idx = 0; k_idx < num_k; ++k_idx) {
      for (int u_idx = 0; u_idx < num_u; ++u_idx) {
        for (int t = 1; t <= spec.t_max; ++t) {
          int successes = 0;
          for (int trial = 0; trial < spec.trials; ++trial) {
            int job = (k_idx * num_u + u_idx) * spec.trials + trial;
            successes += slots[static_cast<size_t>(job) * per_job +
                               algo * static_cast<size_t>(spec.t_max) +
                               static_cast<size_t>(t - 1)];
          }
          SweepCell cell;
          cell.algorithm = spec.algorithms[algo];
          cell.k = spec.k_values[static_cast<size_t>(k_idx)];
          cell.u = spec.change_counts[static_cast<size_t>(u_idx)];
          cell.t = t;
          cell.success_rate = static_cast<double>(successes) / spec.trials;
          cell.trials = spec.trials;
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "algorithm,k,u,t,success_rate,trials\n";
  for (const SweepCell& c : result.cells) {
    out += c.algorithm + ',' + std::to_string(c.k) + ',' + std::to_string(c.u) +
           ',' + std::to_string(c.t) + ',' + io::format_double(c.success_rate) +
           ',' + std::to_string(c.trials) + '\n';
  }
  return out;
}

void GridSpec::validate() const {
  require(m > 0 && grid_w > 0 && grid_h > 0, "grid: dimensions must be positive");
  require(m < grid_w * grid_h, "grid: require m < grid_w * grid_h");
  require(r >= 1 && r0 >= 1, "grid: snapshot counts must be >= 1");
  require(k >= r, "grid: require k >= r");
  require(k < m, "grid: require k < m");
  require(k <= m - std::min(k, r0),
          "grid: initial recovery needs k <= m - rank of the resting block");
  require(t_max >= 1, "grid: t_max must be >= 1");
  require(move_prob >= 0.0 && move_prob <= 1.0, "grid: move_prob in [0, 1]");
  require(scene_seeds >= 1, "grid: scene_seeds must be >= 1");
  for (int t : export_frames)
    require(t >= 1 && t <= t_max, "grid: export frame outside 1..t_max");
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  GridSpec g;
  g.m = j.at("m").get<int>();
  g.grid_w = j.at("grid_w").get<int>();
  g.grid_h = j.at("grid_h").get<int>();
  g.k = j.at("k").get<int>();
  g.r = j.at("r").get<int>();
  g.r0 = j.at("r0").get<int>();
  g.t_max = j.at("t_max").get<int>();
  const auto& snr = j.at("snr_db");
  g.snr_db = (snr.is_string() || snr.is_null())
                 ? std::numeric_limits<double>::infinity()
                 : snr.get<double>();
  g.move_prob = j.at("move_prob").get<double>();
  g.scene_seeds = j.at("scene_seeds").get<int>();
  g.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("export_frames") && !j.at("export_frames").is_null())
    g.export_frames = j.at("export_frames").get<std::vector<int>>();
  g.validate();
  return g;
}

nlohmann::json GridSpec::to_json() const {
  nlohmann::json j;
  j["m"] = m;
  j["grid_w"] = grid_w;
  j["grid_h"] = grid_h;
  j["k"] = k;
  j["r"] = r;
  j["r0"] = r0;
  j["t_max"] = t_max;
  if (std::isinf(snr_db))
    j["snr_db"] = "inf";
  else
    j["snr_db"] = snr_db;
  j["move_prob"] = move_prob;
  j["scene_seeds"] = scene_seeds;
  j["seed"] = seed;
  j["export_frames"] = export_frames;
  return j;
}

namespace {

GridScene run_grid_scene(const GridSpec& spec, std::uint64_t scene_seed) {
  SceneParams params;
  params.m = spec.m;
  params.n = spec.grid_w * spec.grid_h;
  params.r = spec.r;
  params.k_init = spec.k;
  params.t_max = spec.t_max;
  params.change_mode = PerTargetMove{spec.move_prob, spec.grid_w, spec.grid_h};
  params.snr_db = spec.snr_db;
  params.seed = scene_seed;
  SceneTimeline scene = generate_scene(params);
  const SensingMatrix& a = scene.sensing;

  // Resting block: same t = 0 support, r0 snapshots. When noisy, its
  // numerical rank is full, so canonicalization caps the rank at k (the
  // operator-known sparsity) to recover the signal subspace.
  SplitMix64 amp_rng(derive_stream(scene_seed, kRestingAmplitudeStream));
  Matrix amplitudes(spec.k, spec.r0);
  for (int i = 0; i < spec.k; ++i)
    for (int j = 0; j < spec.r0; ++j) amplitudes(i, j) = amp_rng.next_gaussian();
  MeasurementBlock resting{a.columns(scene.truth(0)) * amplitudes,
                           BlockKind::noiseless, false};
  if (!std::isinf(spec.snr_db))
    resting = add_noise(resting, spec.snr_db,
                        derive_stream(scene_seed, kRestingNoiseStream));
  MeasurementBlock resting_canonical =
      canonicalize(resting, std::min(spec.k, spec.r0)).block;

  RecoveryConfig rec;
  rec.k = spec.k;
  SupportSet i0 = csmusic_optimized(a, resting_canonical, rec).support;

  TrackerConfig cfg;
  cfg.mode = TrackerMode::noisy_fixed_k;
  cfg.k_max = spec.k;
  cfg.r = spec.r;
  cfg.fixed_k = spec.k;

  GridScene out;
  out.scene_seed = scene_seed;
  SupportSet prev = i0;
  for (int t = 1; t <= spec.t_max; ++t) {
    MeasurementBlock block =
        canonicalize(scene.frames[static_cast<size_t>(t)].measurement).block;

    TrackerState st = track_noisy_fixed_k(a, block, prev, spec.k, cfg);
    prev = st.support;
    GridFrame tracked{spec.grid_w, spec.grid_h, t, scene.truth(t), st.support,
                      success(st.support, scene.truth(t))};
    out.tracker.push_back(std::move(tracked));

    SupportSet music_est = music(a, block, spec.k).support;
    GridFrame base{spec.grid_w, spec.grid_h, t, scene.truth(t), music_est,
                   success(music_est, scene.truth(t))};
    out.baseline.push_back(std::move(base));
  }
  return out;
}

}  // namespace

GridResult run_grid_tracking(const GridSpec& spec) {
  spec.validate();
  auto start = std::chrono::steady_clock::now();

  GridResult result;
  result.scenes.resize(static_cast<size_t>(spec.scene_seeds));
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < spec.scene_seeds; ++s) {
    std::uint64_t scene_seed =
        derive_stream(spec.seed, static_cast<std::uint64_t>(s));
    result.scenes[static_cast<size_t>(s)] = run_grid_scene(spec, scene_seed);
  }

  long long tracker_hits = 0, baseline_hits = 0, frames = 0;
  for (const GridScene& scene : result.scenes) {
    for (const GridFrame& f : scene.tracker) tracker_hits += f.exact_match;
    for (const GridFrame& f : scene.baseline) baseline_hits += f.exact_match;
    frames += static_cast<long long>(scene.tracker.size());
  }
  result.tracker_mean = frames ? static_cast<double>(tracker_hits) / frames : 0.0;
  result.baseline_mean =
      frames ? static_cast<double>(baseline_hits) / frames : 0.0;
  result.wall_seconds = seconds_since(start);
  return result;
}

std::string grid_csv(const GridResult& result) {
  std::string out = "algorithm,seed,t,exact_match,k_hat\n";
  for (size_t s = 0; s < result.scenes.size(); ++s) {
    const GridScene& scene = result.scenes[s];
    for (const GridFrame& f : scene.tracker)
      out += "tracker," + std::to_string(s) + ',' + std::to_string(f.t) + ',' +
             std::to_string(f.exact_match ? 1 : 0) + ',' +
             std::to_string(f.estimated.size()) + '\n';
    for (const GridFrame& f : scene.baseline)
      out += "music," + std::to_string(s) + ',' + std::to_string(f.t) + ',' +
             std::to_string(f.exact_match ? 1 : 0) + ',' +
             std::to_string(f.estimated.size()) + '\n';
  }
  return out;
}

namespace {

Matrix cells_to_image(const SupportSet& cells, int width, int height) {
  Matrix img = Matrix::Zero(height, width);
  for (int cell : cells) img(cell / width, cell % width) = 1.0;
  return img;
}

}  // namespace

void write_grid_artifacts(const GridResult& result, const GridSpec& spec,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_text_atomic(dir / "grid.csv", grid_csv(result));

  std::string log;
  for (size_t s = 0; s < result.scenes.size(); ++s) {
    const GridScene& scene = result.scenes[s];
    for (size_t i = 0; i < scene.tracker.size(); ++i) {
      nlohmann::json j;
      j["seed_index"] = s;
      j["t"] = scene.tracker[i].t;
      j["truth"] = scene.tracker[i].occupied.indices();
      j["tracker"] = scene.tracker[i].estimated.indices();
      j["music"] = scene.baseline[i].estimated.indices();
      j["tracker_exact"] = scene.tracker[i].exact_match;
      j["music_exact"] = scene.baseline[i].exact_match;
      log += j.dump();
      log += '\n';
    }
  }
  io::write_text_atomic(dir / "grid.jsonl", log);

  if (result.scenes.empty()) return;
  const GridScene& first = result.scenes.front();
  char name[64];
  for (int t : spec.export_frames) {
    const GridFrame& tracked = first.tracker[static_cast<size_t>(t - 1)];
    const GridFrame& base = first.baseline[static_cast<size_t>(t - 1)];
    std::snprintf(name, sizeof(name), "frame_%04d_truth.pgm", t);
    io::write_pgm(dir / name,
                  cells_to_image(tracked.occupied, spec.grid_w, spec.grid_h),
                  0.0, 1.0);
    std::snprintf(name, sizeof(name), "frame_%04d_tracker.pgm", t);
    io::write_pgm(dir / name,
                  cells_to_image(tracked.estimated, spec.grid_w, spec.grid_h),
                  0.0, 1.0);
    std::snprintf(name, sizeof(name), "frame_%04d_music.pgm", t);
    io::write_pgm(dir / name,
                  cells_to_image(base.estimated, spec.grid_w, spec.grid_h),
                  0.0, 1.0);
  }
}

}  // namespace csmusic::bench
