#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "csmusic/bench.hpp"
#include "csmusic/io.hpp"
#include "csmusic/model.hpp"
#include "csmusic/recovery.hpp"
#include "csmusic/tracking.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required) {
  cmd->add_option("--config", args.config_path, "JSON config file")
      ->required();
  auto* out = cmd->add_option("--out", args.out_dir, "output directory");
  if (out_required) out->required();
  cmd->add_option("--seed", args.seed,
                  "override (or supply) the config's seed");
  cmd->add_option("--threads", args.threads, "worker thread count");
}

json load_config(const CommonArgs& args) {
  std::ifstream in(args.config_path);
  if (!in)
    throw std::invalid_argument("cannot open config file '" + args.config_path +
                                "'");
  json j = json::parse(in);  // parse errors carry line/column info
  if (args.seed) j["seed"] = *args.seed;
  if (!j.contains("seed") && j.contains("scene") && args.seed)
    j["scene"]["seed"] = *args.seed;
  return j;
}

void apply_threads(const CommonArgs& args) {
#ifdef _OPENMP
  if (args.threads > 0) omp_set_num_threads(args.threads);
#else
  (void)args;
#endif
}

// Seeds are never wall-clock: the config must carry one unless --seed is given.
void require_seed(const json& j, const char* key = "seed") {
  if (!j.contains(key))
    throw std::invalid_argument(
        "missing required field 'seed' (supply it in the config or via --seed)");
}

csmusic::SceneParams scene_from(const json& j, const CommonArgs& args) {
  json scene = j;
  if (args.seed) scene["seed"] = *args.seed;
  require_seed(scene);
  return csmusic::SceneParams::from_json(scene);
}

int run_generate(const CommonArgs& args) {
  json j = load_config(args);
  csmusic::SceneParams params = scene_from(j, args);
  for (const std::string& w : params.validate())
    std::cerr << "warning: " << w << '\n';

  std::cerr << "generating scene (" << params.t_max + 1 << " frames)...\n";
  csmusic::SceneTimeline scene = csmusic::generate_scene(params);
  scene.export_csv(args.out_dir);

  json summary;
  summary["frames"] = scene.frames.size();
  summary["m"] = params.m;
  summary["n"] = params.n;
  summary["out"] = args.out_dir;
  std::cout << summary.dump() << '\n';
  return 0;
}

csmusic::RecoveryConfig recovery_config_from(const json& j, int default_k) {
  csmusic::RecoveryConfig cfg;
  cfg.k = j.value("k", default_k);
  std::string cs = j.value("cs_algo", std::string("somp"));
  if (cs == "somp")
    cfg.cs_algo = csmusic::CsAlgo::somp;
  else if (cs == "two_thresholding")
    cfg.cs_algo = csmusic::CsAlgo::two_thresholding;
  else
    throw std::invalid_argument("unknown cs_algo '" + cs + "'");
  cfg.zero_tol = j.value("zero_tol", 1e-8);
  cfg.normalize = j.value("normalize", true);
  return cfg;
}

int run_recover(const CommonArgs& args) {
  json j = load_config(args);
  csmusic::SceneParams params = scene_from(j.at("scene"), args);
  json rec = j.value("recovery", json::object());
  std::string algorithm = rec.value("algorithm", std::string("csmusic_optimized"));
  csmusic::RecoveryConfig cfg = recovery_config_from(rec, params.k_init);

  std::cerr << "recovering support on frame 0 (" << algorithm << ")...\n";
  csmusic::SceneTimeline scene = csmusic::generate_scene(params);
  csmusic::MeasurementBlock block =
      csmusic::canonicalize(scene.frames[0].measurement).block;
  const csmusic::SensingMatrix& a = scene.sensing;

  csmusic::SupportEstimate est;
  std::optional<csmusic::MetricVector> metrics;
  if (algorithm == "somp") {
    est.support = csmusic::somp(a, block, cfg.k);
  } else if (algorithm == "two_thresholding") {
    est = csmusic::two_thresholding(a, block, cfg.k);
  } else if (algorithm == "music") {
    est = csmusic::music(a, block, cfg.k, cfg.zero_tol, cfg.normalize);
    metrics = csmusic::music_metric(a, block, cfg.normalize);
  } else if (algorithm == "csmusic") {
    est = csmusic::csmusic(a, block, cfg);
  } else if (algorithm == "csmusic_optimized") {
    est = csmusic::csmusic_optimized(a, block, cfg);
  } else {
    throw std::invalid_argument("unknown recovery algorithm '" + algorithm +
                                "'");
  }

  json record = csmusic::recovery_record(algorithm, cfg.k, block.r(), est,
                                         metrics);
  record["truth"] = scene.truth(0).indices();
  record["exact"] = est.support == scene.truth(0);
  if (!args.out_dir.empty())
    csmusic::io::write_text_atomic(
        std::filesystem::path(args.out_dir) / "recovery.json",
        record.dump(2) + "\n");
  std::cout << record.dump() << '\n';
  return 0;
}

csmusic::TrackerConfig tracker_config_from(const json& j,
                                           const csmusic::SceneParams& params) {
  csmusic::TrackerConfig cfg;
  std::string mode = j.value("mode", std::string("noiseless"));
  if (mode == "noiseless")
    cfg.mode = csmusic::TrackerMode::noiseless;
  else if (mode == "noisy_fixed_k")
    cfg.mode = csmusic::TrackerMode::noisy_fixed_k;
  else if (mode == "noisy_adaptive")
    cfg.mode = csmusic::TrackerMode::noisy_adaptive;
  else
    throw std::invalid_argument("unknown tracker mode '" + mode + "'");

  int k_top = params.k_init;
  if (params.k_schedule)
    for (int k : *params.k_schedule) k_top = std::max(k_top, k);
  cfg.k_max = j.value("k_max", k_top);
  cfg.r = j.value("r", params.r);
  cfg.fixed_k = j.value("fixed_k", params.k_init);
  if (j.contains("eps1")) cfg.eps1 = j.at("eps1").get<double>();
  if (j.contains("eps2")) cfg.eps2 = j.at("eps2").get<double>();
  cfg.zero_tol = j.value("zero_tol", 1e-8);
  cfg.nrank_tol = j.value("nrank_tol", 0.1);
  cfg.use_column_truncation = j.value("use_column_truncation", false);
  cfg.normalize = j.value("normalize", true);
  return cfg;
}

int run_track(const CommonArgs& args) {
  json j = load_config(args);
  csmusic::SceneParams params = scene_from(j.at("scene"), args);
  csmusic::TrackerConfig cfg =
      tracker_config_from(j.value("tracker", json::object()), params);
  std::string init = j.value("init", std::string("csmusic"));

  std::cerr << "tracking " << params.t_max << " frames...\n";
  csmusic::SceneTimeline scene = csmusic::generate_scene(params);

  csmusic::SupportSet i0;
  if (init == "truth") {
    i0 = scene.truth(0);
  } else if (init == "csmusic") {
    csmusic::RecoveryConfig rec;
    rec.k = params.k_init;
    rec.zero_tol = cfg.zero_tol;
    rec.normalize = cfg.normalize;
    csmusic::MeasurementBlock block =
        csmusic::canonicalize(scene.frames[0].measurement).block;
    i0 = csmusic::csmusic_optimized(scene.sensing, block, rec).support;
  } else {
    throw std::invalid_argument("unknown init mode '" + init + "'");
  }

  csmusic::SceneTrackResult result =
      csmusic::track_scene(scene.sensing, scene, i0, cfg);
  std::filesystem::path out(args.out_dir);
  csmusic::io::write_text_atomic(out / "track.jsonl",
                                 csmusic::states_jsonl(result));
  csmusic::io::write_text_atomic(out / "track.csv", csmusic::states_csv(result));

  int exact = 0;
  for (char c : result.exact_match) exact += c;
  json summary;
  summary["frames"] = result.states.size();
  summary["exact_frames"] = exact;
  summary["out"] = args.out_dir;
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_sweep_cmd(const CommonArgs& args, std::optional<int> trials_override,
                  bool full) {
  json j = load_config(args);
  require_seed(j);
  if (full) j["trials"] = 5000;
  if (trials_override) j["trials"] = *trials_override;
  csmusic::bench::SweepSpec spec = csmusic::bench::SweepSpec::from_json(j);

  std::cerr << "sweep: " << spec.k_values.size() << " k-values x "
            << spec.change_counts.size() << " change counts x " << spec.trials
            << " trials...\n";
  csmusic::bench::SweepResult result = csmusic::bench::run_sweep(spec);

  std::filesystem::path out(args.out_dir);
  csmusic::io::write_text_atomic(out / "sweep.csv",
                                 csmusic::bench::sweep_csv(result));
  json meta;
  meta["spec"] = spec.to_json();
  meta["wall_seconds"] = result.wall_seconds;
  csmusic::io::write_text_atomic(out / "sweep_meta.json", meta.dump(2) + "\n");

  json summary;
  summary["cells"] = result.cells.size();
  summary["wall_seconds"] = result.wall_seconds;
  summary["out"] = args.out_dir;
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_grid(const CommonArgs& args) {
  json j = load_config(args);
  require_seed(j);
  csmusic::bench::GridSpec spec = csmusic::bench::GridSpec::from_json(j);

  std::cerr << "grid tracking: " << spec.scene_seeds << " scenes x "
            << spec.t_max << " frames...\n";
  csmusic::bench::GridResult result = csmusic::bench::run_grid_tracking(spec);
  csmusic::bench::write_grid_artifacts(result, spec, args.out_dir);

  json summary;
  summary["tracker_mean"] = result.tracker_mean;
  summary["baseline_mean"] = result.baseline_mean;
  summary["wall_seconds"] = result.wall_seconds;
  summary["out"] = args.out_dir;
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint-sparse recovery and dynamic support tracking"};
  app.require_subcommand(1);

  CommonArgs gen_args, rec_args, track_args, sweep_args, grid_args;
  std::optional<int> trials_override;
  bool full = false;

  CLI::App* gen = app.add_subcommand("generate", "generate a scene to CSV");
  add_common(gen, gen_args, true);
  CLI::App* rec = app.add_subcommand("recover", "single-block support recovery");
  add_common(rec, rec_args, false);
  CLI::App* track = app.add_subcommand("track", "track a scene's support");
  add_common(track, track_args, true);
  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo recovery-rate sweep");
  add_common(sweep, sweep_args, true);
  auto* trials_opt =
      sweep->add_option("--trials", trials_override, "override trial count");
  auto* full_opt = sweep->add_flag(
      "--full", full, "full-scale protocol (5000 trials)");
  trials_opt->excludes(full_opt);
  CLI::App* grid = app.add_subcommand("grid", "2D moving-target experiment");
  add_common(grid, grid_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*gen) {
      apply_threads(gen_args);
      return run_generate(gen_args);
    }
    if (*rec) {
      apply_threads(rec_args);
      return run_recover(rec_args);
    }
    if (*track) {
      apply_threads(track_args);
      return run_track(track_args);
    }
    if (*sweep) {
      apply_threads(sweep_args);
      return run_sweep_cmd(sweep_args, trials_override, full);
    }
    if (*grid) {
      apply_threads(grid_args);
      return run_grid(grid_args);
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
