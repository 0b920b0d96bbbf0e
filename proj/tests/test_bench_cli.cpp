#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "csmusic/bench.hpp"
#include "csmusic/model.hpp"
#include "csmusic/support.hpp"

using namespace csmusic;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() /
                 ("csmusic_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::string& args, const fs::path& scratch) {
  fs::path out_file = scratch / "stdout.txt";
  fs::path err_file = scratch / "stderr.txt";
  std::string cmd = std::string(CSMUSIC_CLI_PATH) + " " + args + " > " +
                    out_file.string() + " 2> " + err_file.string();
  int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_file);
  r.err = read_file(err_file);
  return r;
}

bench::SweepSpec small_sweep() {
  bench::SweepSpec spec;
  spec.m = 40;
  spec.n = 100;
  spec.r = 9;
  spec.k_values = {10};
  spec.change_counts = {0, 4};
  spec.t_max = 3;
  spec.trials = 6;
  spec.seed = 606;
  spec.algorithms = {"noiseless"};
  return spec;
}

json small_scene_json() {
  json scene;
  scene["m"] = 40;
  scene["n"] = 100;
  scene["r"] = 9;
  scene["k_init"] = 10;
  scene["t_max"] = 3;
  scene["change_mode"] = {{"type", "fixed_swap"}, {"u", 4}};
  scene["snr_db"] = "inf";
  scene["seed"] = 77;
  return scene;
}

}  // namespace

TEST_CASE("success demands exact set equality") {
  SupportSet truth(std::vector<int>{1, 5, 9});
  CHECK(bench::success(SupportSet(std::vector<int>{1, 5, 9}), truth));
  CHECK_FALSE(bench::success(SupportSet(std::vector<int>{1, 5}), truth));
  CHECK_FALSE(bench::success(SupportSet(std::vector<int>{1, 5, 9, 11}), truth));
  CHECK(bench::success(SupportSet(std::vector<int>{}),
                       SupportSet(std::vector<int>{})));
}

TEST_CASE("sweep spec validation rejects infeasible grids") {
  bench::SweepSpec spec = small_sweep();
  CHECK_NOTHROW(spec.validate());

  SUBCASE("k too large for m") {
    spec.k_values = {40};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("k below r") {
    spec.k_values = {5};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("k beyond the initial-recovery bound m - r") {
    spec.k_values = {32};
    spec.algorithms = {"noisy_fixed_k"};
    spec.snr_db = 40.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("change count infeasible") {
    spec.change_counts = {11};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("noiseless mode needs infinite snr") {
    spec.snr_db = 40.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("noiseless mode needs 2k <= m") {
    spec.k_values = {25};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("adaptive thresholds need k + r < m") {
    spec.algorithms = {"noisy_adaptive"};
    spec.k_values = {31};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("unknown algorithm") {
    spec.algorithms = {"magic"};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("empty trial budget") {
    spec.trials = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
}

TEST_CASE("sweep fills every cell and noiseless cells are perfect") {
  bench::SweepSpec spec = small_sweep();
  bench::SweepResult res = bench::run_sweep(spec);

  // algorithms x k x u x t cells, in a fixed order.
  REQUIRE(res.cells.size() == spec.k_values.size() *
                                  spec.change_counts.size() *
                                  static_cast<size_t>(spec.t_max));
  for (const bench::SweepCell& c : res.cells) {
    CHECK(c.trials == spec.trials);
    CHECK(c.success_rate >= 0.0);
    CHECK(c.success_rate <= 1.0);
    CHECK(c.t >= 1);
    CHECK(c.t <= spec.t_max);
    // Clean scenes deep inside the working regime: every trial succeeds.
    CHECK(c.success_rate == 1.0);
  }

  std::istringstream csv(bench::sweep_csv(res));
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "algorithm,k,u,t,success_rate,trials");
  size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == res.cells.size());
}

TEST_CASE("sweep results do not depend on the thread count") {
#ifdef _OPENMP
  bench::SweepSpec spec = small_sweep();
  spec.trials = 4;
  omp_set_num_threads(1);
  std::string serial = bench::sweep_csv(bench::run_sweep(spec));
  omp_set_num_threads(3);
  std::string parallel = bench::sweep_csv(bench::run_sweep(spec));
  omp_set_num_threads(1);
  CHECK(serial == parallel);
#endif
}

TEST_CASE("sweep spec json round trip") {
  bench::SweepSpec spec = small_sweep();
  spec.snr_db = 40.0;
  spec.algorithms = {"noisy_fixed_k", "noisy_adaptive"};
  bench::SweepSpec back = bench::SweepSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());

  json inf_spec = small_sweep().to_json();
  CHECK(inf_spec.at("snr_db") == "inf");
  CHECK(std::isinf(bench::SweepSpec::from_json(inf_spec).snr_db));
}

TEST_CASE("grid spec validation") {
  bench::GridSpec spec;
  spec.m = 25;
  spec.grid_w = 6;
  spec.grid_h = 6;
  spec.k = 6;
  spec.r = 4;
  spec.r0 = 10;
  spec.t_max = 3;
  spec.move_prob = 0.2;
  spec.scene_seeds = 2;
  spec.seed = 42;
  CHECK_NOTHROW(spec.validate());

  SUBCASE("ambient dimension must exceed m") {
    spec.grid_w = 5;
    spec.grid_h = 5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("initial recovery bound") {
    spec.k = 13;  // 13 > m - min(k, r0) = 25 - 10 is false; tighten r0
    spec.r0 = 13;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("export frames inside 1..t_max") {
    spec.export_frames = {0};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.export_frames = {4};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("move probability range") {
    spec.move_prob = 1.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
}

TEST_CASE("grid tracking smoke run with artifacts") {
  bench::GridSpec spec;
  spec.m = 25;
  spec.grid_w = 6;
  spec.grid_h = 6;
  spec.k = 6;
  spec.r = 4;
  spec.r0 = 10;
  spec.t_max = 3;
  spec.snr_db = std::numeric_limits<double>::infinity();
  spec.move_prob = 0.2;
  spec.scene_seeds = 2;
  spec.seed = 4242;
  spec.export_frames = {2};

  bench::GridResult res = bench::run_grid_tracking(spec);
  REQUIRE(res.scenes.size() == 2);
  for (const bench::GridScene& scene : res.scenes) {
    REQUIRE(scene.tracker.size() == 3);
    REQUIRE(scene.baseline.size() == 3);
    for (size_t i = 0; i < scene.tracker.size(); ++i) {
      const bench::GridFrame& f = scene.tracker[i];
      CHECK(f.t == static_cast<int>(i) + 1);
      CHECK(f.exact_match == (f.estimated == f.occupied));
      // Tracker and baseline see the same ground truth.
      CHECK(scene.baseline[i].occupied == f.occupied);
      CHECK(f.occupied.size() == 6);
    }
  }
  CHECK(res.tracker_mean >= 0.0);
  CHECK(res.tracker_mean <= 1.0);
  CHECK(res.baseline_mean >= 0.0);
  CHECK(res.baseline_mean <= 1.0);

  std::istringstream csv(bench::grid_csv(res));
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "algorithm,seed,t,exact_match,k_hat");
  size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 2 * 2 * 3);  // algorithms x seeds x frames

  fs::path dir = fresh_dir("grid_artifacts");
  bench::write_grid_artifacts(res, spec, dir);
  CHECK(fs::exists(dir / "grid.csv"));
  CHECK(fs::exists(dir / "grid.jsonl"));
  for (const char* name :
       {"frame_0002_truth.pgm", "frame_0002_tracker.pgm",
        "frame_0002_music.pgm"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir / name));
    std::string pgm = read_file(dir / name);
    CHECK(pgm.substr(0, 2) == "P2");
  }
  std::istringstream jsonl(read_file(dir / "grid.jsonl"));
  size_t lines = 0;
  while (std::getline(jsonl, line)) {
    json j = json::parse(line);
    CHECK(j.contains("truth"));
    CHECK(j.contains("tracker"));
    CHECK(j.contains("music"));
    ++lines;
  }
  CHECK(lines == 2 * 3);
  fs::remove_all(dir);
}

TEST_CASE("grid tracking does not depend on the thread count") {
#ifdef _OPENMP
  bench::GridSpec spec;
  spec.m = 25;
  spec.grid_w = 6;
  spec.grid_h = 6;
  spec.k = 6;
  spec.r = 4;
  spec.r0 = 10;
  spec.t_max = 2;
  spec.move_prob = 0.2;
  spec.scene_seeds = 3;
  spec.seed = 99;
  omp_set_num_threads(1);
  std::string serial = bench::grid_csv(bench::run_grid_tracking(spec));
  omp_set_num_threads(3);
  std::string parallel = bench::grid_csv(bench::run_grid_tracking(spec));
  omp_set_num_threads(1);
  CHECK(serial == parallel);
#endif
}

TEST_CASE("committed experiment configs parse and validate") {
  fs::path dir(CSMUSIC_CONFIG_DIR);

  std::ifstream fig2(dir / "fig2.json");
  REQUIRE(fig2.good());
  bench::SweepSpec sweep = bench::SweepSpec::from_json(json::parse(fig2));
  CHECK(sweep.m == 40);
  CHECK(sweep.n == 100);
  CHECK(sweep.r == 9);
  CHECK(sweep.trials == 500);
  CHECK(sweep.k_values.front() == 9);
  CHECK(sweep.k_values.back() == 30);
  CHECK(sweep.change_counts == std::vector<int>{4, 6, 7, 8});

  std::ifstream fig3(dir / "fig3.json");
  REQUIRE(fig3.good());
  bench::GridSpec grid = bench::GridSpec::from_json(json::parse(fig3));
  CHECK(grid.m == 50);
  CHECK(grid.grid_w * grid.grid_h == 900);
  CHECK(grid.k == 24);
  CHECK(grid.r == 9);
  CHECK(grid.r0 == 50);
  CHECK(grid.t_max == 45);
  CHECK(grid.scene_seeds == 20);
}

TEST_CASE("cli track runs a scene end to end") {
  fs::path dir = fresh_dir("cli_track");
  json cfg;
  cfg["scene"] = small_scene_json();
  cfg["tracker"] = {{"mode", "noiseless"}, {"k_max", 12}};
  cfg["init"] = "truth";
  write_file(dir / "config.json", cfg.dump(2));

  fs::path out = dir / "out";
  CliRun r = run_cli("track --config " + (dir / "config.json").string() +
                         " --out " + out.string(),
                     dir);
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  json summary = json::parse(r.out);
  CHECK(summary.at("frames").get<int>() == 4);
  CHECK(summary.at("exact_frames").get<int>() == 4);
  REQUIRE(fs::exists(out / "track.csv"));
  REQUIRE(fs::exists(out / "track.jsonl"));
  std::istringstream csv(read_file(out / "track.csv"));
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "t,k_hat,exact_match,deleted,added");
  fs::remove_all(dir);
}

TEST_CASE("cli recover reports exactness on an easy instance") {
  fs::path dir = fresh_dir("cli_recover");
  json cfg;
  cfg["scene"] = small_scene_json();
  cfg["recovery"] = {{"algorithm", "csmusic_optimized"}};
  write_file(dir / "config.json", cfg.dump(2));

  CliRun r =
      run_cli("recover --config " + (dir / "config.json").string(), dir);
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  json record = json::parse(r.out);
  CHECK(record.at("algorithm") == "csmusic_optimized");
  CHECK(record.at("exact").get<bool>());
  CHECK(record.at("support").size() == 10);
  fs::remove_all(dir);
}

TEST_CASE("cli generate exports the frame files") {
  fs::path dir = fresh_dir("cli_generate");
  json cfg = small_scene_json();
  cfg["t_max"] = 1;
  write_file(dir / "config.json", cfg.dump(2));

  fs::path out = dir / "scene";
  CliRun r = run_cli("generate --config " + (dir / "config.json").string() +
                         " --out " + out.string(),
                     dir);
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  for (const char* name :
       {"params.json", "sensing.csv", "frame_0000_signal.csv",
        "frame_0000_measurement.csv", "frame_0000_support.csv",
        "frame_0001_support.csv"}) {
    CAPTURE(name);
    CHECK(fs::exists(out / name));
  }
  fs::remove_all(dir);
}

TEST_CASE("cli sweep writes identical results on repeated runs") {
  fs::path dir = fresh_dir("cli_sweep");
  json cfg;
  cfg["m"] = 40;
  cfg["n"] = 100;
  cfg["r"] = 9;
  cfg["k_values"] = {10};
  cfg["change_counts"] = {4};
  cfg["t_max"] = 2;
  cfg["snr_db"] = "inf";
  cfg["trials"] = 4;
  cfg["seed"] = 1234;
  cfg["algorithms"] = {"noiseless"};
  write_file(dir / "config.json", cfg.dump(2));

  fs::path out1 = dir / "run1";
  fs::path out2 = dir / "run2";
  CliRun r1 = run_cli("sweep --config " + (dir / "config.json").string() +
                          " --out " + out1.string(),
                      dir);
  CAPTURE(r1.err);
  REQUIRE(r1.exit_code == 0);
  CliRun r2 = run_cli("sweep --config " + (dir / "config.json").string() +
                          " --out " + out2.string() + " --threads 2",
                      dir);
  REQUIRE(r2.exit_code == 0);
  std::string csv1 = read_file(out1 / "sweep.csv");
  CHECK_FALSE(csv1.empty());
  CHECK(csv1 == read_file(out2 / "sweep.csv"));
  CHECK(fs::exists(out1 / "sweep_meta.json"));
  json meta = json::parse(read_file(out1 / "sweep_meta.json"));
  CHECK(meta.at("spec").at("trials").get<int>() == 4);
  fs::remove_all(dir);
}

TEST_CASE("cli rejects bad invocations with exit code 2") {
  fs::path dir = fresh_dir("cli_errors");

  SUBCASE("malformed json config") {
    write_file(dir / "bad.json", "{\"m\": 40,,}");
    CliRun r = run_cli("track --config " + (dir / "bad.json").string() +
                           " --out " + (dir / "out").string(),
                       dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("config error") != std::string::npos);
  }
  SUBCASE("missing seed") {
    json cfg;
    cfg["scene"] = small_scene_json();
    cfg["scene"].erase("seed");
    write_file(dir / "noseed.json", cfg.dump());
    CliRun r = run_cli("track --config " + (dir / "noseed.json").string() +
                           " --out " + (dir / "out").string(),
                       dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("seed") != std::string::npos);
  }
  SUBCASE("unknown flag") {
    CliRun r = run_cli("track --bogus", dir);
    CHECK(r.exit_code == 2);
  }
  SUBCASE("missing required --config") {
    CliRun r = run_cli("track --out " + (dir / "out").string(), dir);
    CHECK(r.exit_code == 2);
  }
  SUBCASE("infeasible scene parameters") {
    json cfg;
    cfg["scene"] = small_scene_json();
    cfg["scene"]["k_init"] = 5;  // below r = 9
    write_file(dir / "infeasible.json", cfg.dump());
    CliRun r = run_cli("track --config " + (dir / "infeasible.json").string() +
                           " --out " + (dir / "out").string(),
                       dir);
    CHECK(r.exit_code == 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("cli seed override changes the scene") {
  fs::path dir = fresh_dir("cli_seed");
  json cfg;
  cfg["scene"] = small_scene_json();
  cfg["recovery"] = {{"algorithm", "music"}, {"k", 9}};
  cfg["scene"]["k_init"] = 9;
  write_file(dir / "config.json", cfg.dump());

  CliRun a = run_cli("recover --config " + (dir / "config.json").string(), dir);
  REQUIRE(a.exit_code == 0);
  CliRun b = run_cli("recover --config " + (dir / "config.json").string() +
                         " --seed 31337",
                     dir);
  CAPTURE(b.err);
  REQUIRE(b.exit_code == 0);
  json ja = json::parse(a.out);
  json jb = json::parse(b.out);
  CHECK(ja.at("support") != jb.at("support"));
  // Same invocation, same result.
  CliRun c = run_cli("recover --config " + (dir / "config.json").string(), dir);
  REQUIRE(c.exit_code == 0);
  CHECK(json::parse(c.out).at("support") == ja.at("support"));
  fs::remove_all(dir);
}
