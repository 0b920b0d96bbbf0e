#include "csmusic/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "csmusic/io.hpp"
#include "csmusic/rng.hpp"

namespace csmusic {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Matrix gaussian_matrix(int rows, int cols, SplitMix64& rng, double scale) {
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = scale * rng.next_gaussian();
  return out;
}

// k distinct indices from [0, n), uniformly, ascending.
std::vector<int> sample_distinct(int n, int k, SplitMix64& rng) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    int j = i + rng.next_below(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

SensingMatrix::SensingMatrix(Matrix a) : data_(std::move(a)) {
  column_sq_norms_ = data_.colwise().squaredNorm().transpose();
}

SensingMatrix SensingMatrix::generate(int m, int n, std::uint64_t seed) {
  require(m > 0, "SensingMatrix: m must be positive");
  require(m < n, "SensingMatrix: require m < n");
  SplitMix64 rng(seed);
  return SensingMatrix(gaussian_matrix(m, n, rng, 1.0 / std::sqrt(double(m))));
}

SensingMatrix SensingMatrix::from_matrix(Matrix a) {
  require(a.rows() > 0 && a.cols() > 0, "SensingMatrix: empty matrix");
  require(a.rows() <= a.cols(), "SensingMatrix: require m <= n");
  require(a.allFinite(), "SensingMatrix: entries must be finite");
  return SensingMatrix(std::move(a));
}

Matrix SensingMatrix::columns(const SupportSet& s) const {
  Matrix out(m(), s.size());
  int c = 0;
  for (int j : s) {
    require(j < n(), "SensingMatrix::columns: index out of range");
    out.col(c++) = data_.col(j);
  }
  return out;
}

Matrix SensingMatrix::columns(const std::vector<int>& s) const {
  Matrix out(m(), static_cast<int>(s.size()));
  for (size_t c = 0; c < s.size(); ++c) {
    require(s[c] >= 0 && s[c] < n(), "SensingMatrix::columns: index out of range");
    out.col(static_cast<Eigen::Index>(c)) = data_.col(s[c]);
  }
  return out;
}

JointSparseSignal::JointSparseSignal(Matrix data, SupportSet support)
    : data_(std::move(data)), support_(std::move(support)) {
  require(support_.empty() || support_.max_index() < n(),
          "JointSparseSignal: support index out of range");
  int s = 0;
  const auto& idx = support_.indices();
  for (int i = 0; i < n(); ++i) {
    bool on = s < support_.size() && idx[static_cast<size_t>(s)] == i;
    double norm = data_.row(i).norm();
    if (on) {
      require(norm > 0.0, "JointSparseSignal: support row is zero");
      ++s;
    } else {
      require(norm == 0.0, "JointSparseSignal: nonzero row off support");
    }
  }
}

std::vector<std::string> SceneParams::validate() const {
  require(m > 0 && n > 0 && r > 0, "SceneParams: m, n, r must be positive");
  require(m < n, "SceneParams: require m < n");
  require(k_init >= r, "SceneParams: require k_init >= r");
  require(k_init < m, "SceneParams: require k_init < m");
  require(t_max >= 0, "SceneParams: t_max must be nonnegative");
  require(snr_db > 0 || std::isinf(snr_db),
          "SceneParams: snr_db must be positive or infinite");

  std::vector<std::string> warnings;
  if (const auto* fs = std::get_if<FixedSwap>(&change_mode)) {
    require(fs->u >= 0, "SceneParams: fixed_swap u must be nonnegative");
    require(fs->u <= k_init && fs->u <= n - k_init,
            "SceneParams: fixed_swap u too large for this (n, k)");
    if (fs->u > r - 1)
      warnings.push_back(
          "fixed_swap u exceeds r - 1; tracking guarantees do not apply");
  } else {
    const auto& pm = std::get<PerTargetMove>(change_mode);
    require(pm.prob >= 0.0 && pm.prob <= 1.0,
            "SceneParams: per_target_move prob must be in [0, 1]");
    require(pm.grid_w > 0 && pm.grid_h > 0,
            "SceneParams: grid dimensions must be positive");
    require(pm.grid_w * pm.grid_h == n,
            "SceneParams: grid_w * grid_h must equal n");
    require(pm.grid_w * pm.grid_h >= k_init,
            "SceneParams: grid too small to hold k targets");
  }
  if (k_schedule) {
    require(static_cast<int>(k_schedule->size()) == t_max + 1,
            "SceneParams: k_schedule must have t_max + 1 entries");
    require(k_schedule->front() == k_init,
            "SceneParams: k_schedule must start at k_init");
    require(std::holds_alternative<FixedSwap>(change_mode),
            "SceneParams: k_schedule requires fixed_swap mode");
    for (int k : *k_schedule)
      require(k >= r && k < m, "SceneParams: scheduled k out of [r, m)");
    for (size_t t = 1; t < k_schedule->size(); ++t) {
      int grow = (*k_schedule)[t] - (*k_schedule)[t - 1];
      if (std::max({std::get<FixedSwap>(change_mode).u, grow, 0}) > r - 1) {
        warnings.push_back(
            "scheduled support growth exceeds r - 1 at step " +
            std::to_string(t) + "; tracking guarantees do not apply");
        break;
      }
    }
  }
  return warnings;
}

int SceneParams::k_at(int t) const {
  if (k_schedule) return (*k_schedule)[static_cast<size_t>(t)];
  return k_init;
}

SceneParams SceneParams::from_json(const nlohmann::json& j) {
  SceneParams p;
  p.m = j.at("m").get<int>();
  p.n = j.at("n").get<int>();
  p.r = j.at("r").get<int>();
  p.k_init = j.at("k_init").get<int>();
  p.t_max = j.at("t_max").get<int>();
  const auto& cm = j.at("change_mode");
  std::string type = cm.at("type").get<std::string>();
  if (type == "fixed_swap") {
    p.change_mode = FixedSwap{cm.at("u").get<int>()};
  } else if (type == "per_target_move") {
    p.change_mode = PerTargetMove{cm.at("prob").get<double>(),
                                  cm.at("grid_w").get<int>(),
                                  cm.at("grid_h").get<int>()};
  } else {
    throw std::invalid_argument("SceneParams: unknown change_mode type '" +
                                type + "'");
  }
  const auto& snr = j.at("snr_db");
  if (snr.is_string()) {
    std::string s = snr.get<std::string>();
    require(s == "inf", "SceneParams: snr_db string must be \"inf\"");
    p.snr_db = std::numeric_limits<double>::infinity();
  } else if (snr.is_null()) {
    p.snr_db = std::numeric_limits<double>::infinity();
  } else {
    p.snr_db = snr.get<double>();
  }
  p.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("k_schedule") && !j.at("k_schedule").is_null())
    p.k_schedule = j.at("k_schedule").get<std::vector<int>>();
  p.validate();
  return p;
}

nlohmann::json SceneParams::to_json() const {
  nlohmann::json j;
  j["m"] = m;
  j["n"] = n;
  j["r"] = r;
  j["k_init"] = k_init;
  j["t_max"] = t_max;
  if (const auto* fs = std::get_if<FixedSwap>(&change_mode)) {
    j["change_mode"] = {{"type", "fixed_swap"}, {"u", fs->u}};
  } else {
    const auto& pm = std::get<PerTargetMove>(change_mode);
    j["change_mode"] = {{"type", "per_target_move"},
                        {"prob", pm.prob},
                        {"grid_w", pm.grid_w},
                        {"grid_h", pm.grid_h}};
  }
  if (std::isinf(snr_db))
    j["snr_db"] = "inf";
  else
    j["snr_db"] = snr_db;
  j["seed"] = seed;
  if (k_schedule) j["k_schedule"] = *k_schedule;
  return j;
}

SensingMatrix generate_sensing(int m, int n, std::uint64_t seed) {
  return SensingMatrix::generate(m, n, seed);
}

namespace {

std::vector<int> step_fixed_swap(const std::vector<int>& prev, int n, int u,
                                 int k_next, SplitMix64& rng) {
  int k_prev = static_cast<int>(prev.size());
  int grow = k_next - k_prev;
  int in_count = std::max({u, grow, 0});
  int out_count = in_count - grow;
  if (out_count > k_prev || in_count > n - k_prev)
    throw std::invalid_argument("fixed_swap: step infeasible for (n, k, u)");

  std::vector<int> keep = prev;
  // Departing indices uniform from the current support.
  for (int i = 0; i < out_count; ++i) {
    int j = rng.next_below(static_cast<int>(keep.size()));
    keep.erase(keep.begin() + j);
  }
  // Entering indices uniform from the complement of the *previous* support,
  // excluding anything already chosen, so entrants are genuinely new.
  std::unordered_set<int> used(prev.begin(), prev.end());
  std::vector<int> next = keep;
  for (int i = 0; i < in_count; ++i) {
    int pick;
    do {
      pick = rng.next_below(n);
    } while (used.count(pick));
    used.insert(pick);
    next.push_back(pick);
  }
  std::sort(next.begin(), next.end());
  return next;
}

std::vector<int> step_per_target_move(const std::vector<int>& prev, int grid_w,
                                      int grid_h, double prob,
                                      SplitMix64& rng) {
  std::unordered_set<int> occupied(prev.begin(), prev.end());
  std::vector<int> next;
  next.reserve(prev.size());
  for (int cell : prev) {  // ascending order fixes the collision sequence
    int dest = cell;
    if (rng.next_unit() <= prob) {
      int x = cell % grid_w, y = cell / grid_w;
      int candidates[4];
      int count = 0;
      if (x > 0) candidates[count++] = cell - 1;
      if (x < grid_w - 1) candidates[count++] = cell + 1;
      if (y > 0) candidates[count++] = cell - grid_w;
      if (y < grid_h - 1) candidates[count++] = cell + grid_w;
      int free_cells[4];
      int free_count = 0;
      for (int c = 0; c < count; ++c)
        if (!occupied.count(candidates[c])) free_cells[free_count++] = candidates[c];
      if (free_count > 0) dest = free_cells[rng.next_below(free_count)];
    }
    if (dest != cell) {
      occupied.erase(cell);
      occupied.insert(dest);
    }
    next.push_back(dest);
  }
  std::sort(next.begin(), next.end());
  return next;
}

}  // namespace

SceneTimeline generate_scene(const SceneParams& params) {
  params.validate();
  SensingMatrix sensing = SensingMatrix::generate(
      params.m, params.n, derive_stream(params.seed, kSensingStream));

  std::vector<SceneFrame> frames;
  frames.reserve(static_cast<size_t>(params.t_max) + 1);
  std::vector<int> support;
  for (int t = 0; t <= params.t_max; ++t) {
    SplitMix64 rng(derive_stream(params.seed, kFrameStream,
                                 static_cast<std::uint64_t>(t)));
    if (t == 0) {
      support = sample_distinct(params.n, params.k_init, rng);
    } else if (const auto* fs = std::get_if<FixedSwap>(&params.change_mode)) {
      support = step_fixed_swap(support, params.n, fs->u, params.k_at(t), rng);
    } else {
      const auto& pm = std::get<PerTargetMove>(params.change_mode);
      support = step_per_target_move(support, pm.grid_w, pm.grid_h, pm.prob,
                                     rng);
    }

    int k = static_cast<int>(support.size());
    Matrix amplitudes = gaussian_matrix(k, params.r, rng, 1.0);
    Matrix x = Matrix::Zero(params.n, params.r);
    for (int i = 0; i < k; ++i) x.row(support[static_cast<size_t>(i)]) = amplitudes.row(i);

    MeasurementBlock b{sensing.columns(support) * amplitudes,
                       BlockKind::noiseless, false};
    if (!std::isinf(params.snr_db))
      b = add_noise(b, params.snr_db,
                    derive_stream(params.seed, kNoiseStream,
                                  static_cast<std::uint64_t>(t)));
    frames.push_back(SceneFrame{
        JointSparseSignal(std::move(x), SupportSet(support)), std::move(b)});
  }
  return SceneTimeline{std::move(sensing), std::move(frames), params};
}

MeasurementBlock add_noise(const MeasurementBlock& b, double snr_db,
                           std::uint64_t seed) {
  require(b.kind == BlockKind::noiseless, "add_noise: block already noisy");
  if (std::isinf(snr_db)) return b;
  double b_norm = b.data.norm();
  require(b_norm > 0.0, "add_noise: zero block with finite snr_db");
  SplitMix64 rng(seed);
  Matrix noise = gaussian_matrix(b.m(), b.r(), rng, 1.0);
  double n_norm = noise.norm();
  if (n_norm == 0.0) throw std::runtime_error("add_noise: degenerate draw");
  // Renormalize the draw so the realized Frobenius SNR is exact.
  double scale = b_norm / (n_norm * std::pow(10.0, snr_db / 20.0));
  return MeasurementBlock{b.data + scale * noise, BlockKind::noisy, false};
}

Canonicalized canonicalize(const MeasurementBlock& y,
                           const std::optional<JointSparseSignal>& x,
                           double tol, std::optional<int> max_rank) {
  require(y.data.norm() > 0.0, "canonicalize: zero block");
  Eigen::JacobiSVD<Matrix> svd(y.data, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  double cutoff = tol * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  if (max_rank) rank = std::min(rank, *max_rank);
  require(rank > 0, "canonicalize: rank collapsed to zero");

  Matrix v = svd.matrixV().leftCols(rank);
  Canonicalized out;
  out.block = MeasurementBlock{y.data * v, y.kind, true};
  if (x) {
    require(x->r() == y.r(), "canonicalize: signal/block snapshot mismatch");
    out.signal = JointSparseSignal(x->data() * v, x->support());
  }
  return out;
}

Canonicalized canonicalize(const MeasurementBlock& y,
                           std::optional<int> max_rank) {
  return canonicalize(y, std::nullopt,
                      default_rank_tol(y.m(), y.r()), max_rank);
}

SnrCheck snr_min_check(const MeasurementBlock& b, const Matrix& noise,
                       double gamma, double alpha) {
  require(b.kind == BlockKind::noiseless, "snr_min_check: B must be noiseless");
  require(gamma * (1.0 + alpha) < 1.0,
          "snr_min_check: require gamma * (1 + alpha) < 1");
  Eigen::JacobiSVD<Matrix> svd(b.data);
  const Vector& sv = svd.singularValues();
  double s_min = sv(sv.size() - 1);
  require(s_min > 0.0, "snr_min_check: B must have full column rank");
  double kappa = sv(0) / s_min;
  SnrCheck out;
  out.bound = 1.0 + 4.0 * (kappa + 1.0) / (1.0 - gamma * (1.0 + alpha));
  double n_norm = spectral_norm(noise);
  if (n_norm == 0.0) {
    out.snr_min = std::numeric_limits<double>::infinity();
    out.satisfied = true;
  } else {
    out.snr_min = s_min / n_norm;
    out.satisfied = out.snr_min > out.bound;
  }
  return out;
}

void SceneTimeline::export_csv(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::write_text_atomic(dir / "params.json", params.to_json().dump(2) + "\n");
  io::write_matrix_csv(dir / "sensing.csv", sensing.data());
  char name[64];
  for (size_t t = 0; t < frames.size(); ++t) {
    std::snprintf(name, sizeof(name), "frame_%04zu_signal.csv", t);
    io::write_matrix_csv(dir / name, frames[t].signal.data());
    std::snprintf(name, sizeof(name), "frame_%04zu_measurement.csv", t);
    io::write_matrix_csv(dir / name, frames[t].measurement.data);
    std::snprintf(name, sizeof(name), "frame_%04zu_support.csv", t);
    std::string body;
    for (int j : frames[t].signal.support()) body += std::to_string(j) + "\n";
    io::write_text_atomic(dir / name, body);
  }
}

}  // namespace csmusic
