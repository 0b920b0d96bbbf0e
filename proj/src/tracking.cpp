#include "csmusic/tracking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "csmusic/kernels.hpp"

namespace csmusic {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::vector<int> ascending_positions(const Vector& values) {
  std::vector<int> pos(static_cast<size_t>(values.size()));
  std::iota(pos.begin(), pos.end(), 0);
  std::stable_sort(pos.begin(), pos.end(), [&](int x, int y) {
    return values(x) < values(y);
  });
  return pos;
}

MetricVector clip_metric(std::vector<int> indices, Vector values,
                         std::vector<char> rank_reduced = {}) {
  MetricVector mv;
  mv.indices = std::move(indices);
  mv.values = values.cwiseMax(0.0);
  mv.rank_reduced = std::move(rank_reduced);
  return mv;
}

TrackerState finish_state(const SupportSet& i_prev, SupportSet support,
                          TrackerDiagnostics diagnostics, int k_max) {
  TrackerState st;
  st.support = std::move(support);
  st.k_hat = st.support.size();
  st.last_deletion = i_prev.set_difference(st.support);
  st.last_addition = st.support.set_difference(i_prev);
  st.diagnostics = std::move(diagnostics);
  if (k_max > 0 && st.k_hat > k_max) st.diagnostics.k_exceeded_kmax = true;
  return st;
}

// eta metrics against the column space of [block A_partial], rank-adaptive:
// unlike the static gmusic_metric this never rejects a dependent partial set,
// because the recursion legitimately passes supersets of the needed k - r
// anchors (their span collapses onto R(A_supp), which is the point).
MetricVector addition_metrics(const SensingMatrix& a, const Matrix& block,
                              const SupportSet& partial, bool normalize) {
  Matrix concat(a.m(), block.cols() + partial.size());
  concat.leftCols(block.cols()) = block;
  if (!partial.empty()) concat.rightCols(partial.size()) = a.columns(partial);
  OrthonormalBasis w = orthonormal_basis(concat);
  std::vector<int> eval = partial.complement(a.n());
  Vector values = kernels::residual_metrics(a, w, eval, normalize);
  return clip_metric(std::move(eval), std::move(values));
}

MetricVector deletion_metrics(const SensingMatrix& a, const Matrix& block,
                              const SupportSet& i_prev,
                              const std::vector<int>& space, bool normalize) {
  double tol = default_rank_tol(
      a.m(), block.cols() + static_cast<Eigen::Index>(space.size()));
  kernels::LeaveOneOutResult loo = kernels::leave_one_out_metrics(
      a, block, i_prev.indices(), space, tol, normalize);
  return clip_metric(i_prev.indices(), std::move(loo.values),
                     std::move(loo.rank_reduced));
}

Thresholds resolve_thresholds(int m, const TrackerConfig& cfg) {
  if (cfg.eps1 && cfg.eps2) return Thresholds{*cfg.eps1, *cfg.eps2};
  Thresholds t = default_thresholds(m, cfg.k_max, cfg.r);
  if (cfg.eps1) t.eps1 = *cfg.eps1;
  if (cfg.eps2) t.eps2 = *cfg.eps2;
  require(t.eps1 > 0.0 && t.eps1 < 1.0 && t.eps2 > 0.0 && t.eps2 < 1.0,
          "tracker: thresholds must lie in (0, 1)");
  return t;
}

}  // namespace

Thresholds default_thresholds(int m, int k_max, int r) {
  require(r >= 1, "default_thresholds: require r >= 1");
  require(k_max >= r, "default_thresholds: require k_max >= r");
  if (k_max + r >= m)
    throw std::invalid_argument(
        "default_thresholds: threshold formula outside validity "
        "(require k_max + r < m)");
  Thresholds t;
  t.eps1 = (1.0 - static_cast<double>(k_max + r) / m) / 2.0;
  t.eps2 = (1.0 - static_cast<double>(k_max) / m) / 2.0;
  return t;
}

TrackerState track_noiseless(const SensingMatrix& a,
                             const MeasurementBlock& b_t,
                             const SupportSet& i_prev,
                             const TrackerConfig& cfg) {
  require(b_t.canonical, "track_noiseless: block must be canonical");
  require(b_t.kind == BlockKind::noiseless,
          "track_noiseless: block must be noiseless");
  require(cfg.zero_tol > 0, "track_noiseless: zero_tol must be positive");
  require(cfg.k_max >= 1, "track_noiseless: k_max must be set");
  require(2 * cfg.k_max <= a.m(),
          "track_noiseless: require 2 k_max <= m");
  require(i_prev.empty() || i_prev.max_index() < a.n(),
          "track_noiseless: support index out of range");

  TrackerDiagnostics diag;
  int r_t = b_t.r();
  Matrix deletion_block = b_t.data;
  if (i_prev.size() + r_t > a.m()) {
    if (!cfg.use_column_truncation)
      throw std::invalid_argument(
          "track_noiseless: |I_prev| + r exceeds m; enable column truncation");
    int cols = std::min(1 + cfg.k_max / 2, r_t);
    deletion_block = b_t.data.leftCols(cols);
    diag.truncated = true;
    require(i_prev.size() + cols <= a.m(),
            "track_noiseless: truncated deletion test still exceeds m");
  }

  diag.deletion_metrics = deletion_metrics(a, deletion_block, i_prev,
                                           i_prev.indices(), cfg.normalize);
  std::vector<int> survivors;
  for (size_t i = 0; i < diag.deletion_metrics.indices.size(); ++i)
    if (diag.deletion_metrics.values(static_cast<Eigen::Index>(i)) <=
        cfg.zero_tol)
      survivors.push_back(diag.deletion_metrics.indices[i]);
  SupportSet i_a(std::move(survivors));
  diag.assumption_violated = i_a.empty() && !i_prev.empty();

  diag.addition_metrics =
      addition_metrics(a, b_t.data, i_a, cfg.normalize);
  std::vector<int> found = i_a.indices();
  for (size_t i = 0; i < diag.addition_metrics.indices.size(); ++i)
    if (diag.addition_metrics.values(static_cast<Eigen::Index>(i)) <=
        cfg.zero_tol)
      found.push_back(diag.addition_metrics.indices[i]);

  return finish_state(i_prev, SupportSet(std::move(found)), std::move(diag),
                      cfg.k_max);
}

TrackerState track_noisy_fixed_k(const SensingMatrix& a,
                                 const MeasurementBlock& y_t,
                                 const SupportSet& i_prev, int k,
                                 const TrackerConfig& cfg) {
  require(y_t.canonical, "track_noisy_fixed_k: block must be canonical");
  require(i_prev.size() == k,
          "track_noisy_fixed_k: require |I_prev| = k");
  require(k >= 1 && k < a.m(), "track_noisy_fixed_k: require 1 <= k < m");
  require(i_prev.max_index() < a.n(),
          "track_noisy_fixed_k: support index out of range");

  TrackerDiagnostics diag;
  int r_t = y_t.r();
  int keep_count = std::max(k - r_t, 0);

  diag.deletion_metrics = deletion_metrics(a, y_t.data, i_prev,
                                           i_prev.indices(), cfg.normalize);
  std::vector<int> order = ascending_positions(diag.deletion_metrics.values);
  std::vector<int> kept_indices;
  kept_indices.reserve(static_cast<size_t>(keep_count));
  for (int i = 0; i < keep_count; ++i)
    kept_indices.push_back(
        diag.deletion_metrics.indices[static_cast<size_t>(order[static_cast<size_t>(i)])]);
  SupportSet kept(std::move(kept_indices));

  diag.addition_metrics = addition_metrics(a, y_t.data, kept, cfg.normalize);
  std::vector<int> add_order = ascending_positions(diag.addition_metrics.values);
  std::vector<int> found = kept.indices();
  for (int i = 0; i < k - keep_count; ++i)
    found.push_back(diag.addition_metrics.indices[static_cast<size_t>(
        add_order[static_cast<size_t>(i)])]);

  return finish_state(i_prev, SupportSet(std::move(found)), std::move(diag),
                      cfg.k_max);
}

std::vector<int> greedy_independent_subset(const SensingMatrix& a,
                                           const OrthonormalBasis& base,
                                           const std::vector<int>& candidates,
                                           double rel_tol) {
  require(rel_tol > 0.0, "greedy_independent_subset: rel_tol must be positive");
  Matrix q = base.columns();
  std::vector<int> accepted;
  for (int j : candidates) {
    Vector v = a.column(j);
    Vector resid = v;
    if (q.cols() > 0) {
      resid -= q * (q.transpose() * v);
      // Second orthogonalization pass keeps the running basis tight.
      resid -= q * (q.transpose() * resid);
    }
    double norm = resid.norm();
    if (norm > rel_tol * v.norm()) {
      q.conservativeResize(Eigen::NoChange, q.cols() + 1);
      q.col(q.cols() - 1) = resid / norm;
      accepted.push_back(j);
    }
  }
  return accepted;
}

TrackerState track_noisy_adaptive(const SensingMatrix& a,
                                  const MeasurementBlock& y_t,
                                  const SupportSet& i_prev,
                                  const TrackerConfig& cfg) {
  require(y_t.canonical, "track_noisy_adaptive: block must be canonical");
  require(i_prev.empty() || i_prev.max_index() < a.n(),
          "track_noisy_adaptive: support index out of range");
  Thresholds eps = resolve_thresholds(a.m(), cfg);

  TrackerDiagnostics diag;
  OrthonormalBasis basis_y = orthonormal_basis(y_t.data);

  std::vector<int> i1 = greedy_independent_subset(a, basis_y, i_prev.indices(),
                                                  cfg.nrank_tol);
  diag.i1 = SupportSet(i1);
  diag.pure_measurement_subspace = i1.empty() && !i_prev.empty();

  diag.deletion_metrics =
      deletion_metrics(a, y_t.data, i_prev, i1, cfg.normalize);
  std::vector<int> survivors;
  for (size_t i = 0; i < diag.deletion_metrics.indices.size(); ++i)
    if (diag.deletion_metrics.values(static_cast<Eigen::Index>(i)) < eps.eps1)
      survivors.push_back(diag.deletion_metrics.indices[i]);
  SupportSet i_a(std::move(survivors));
  diag.assumption_violated = i_a.empty() && !i_prev.empty();

  std::vector<int> i2 = greedy_independent_subset(a, basis_y, i_a.indices(),
                                                  cfg.nrank_tol);
  diag.i2 = SupportSet(i2);

  diag.addition_metrics =
      addition_metrics(a, y_t.data, diag.i2, cfg.normalize);
  std::vector<int> found = i_a.indices();
  for (size_t i = 0; i < diag.addition_metrics.indices.size(); ++i) {
    int j = diag.addition_metrics.indices[i];
    if (i_a.contains(j)) continue;
    if (diag.addition_metrics.values(static_cast<Eigen::Index>(i)) < eps.eps2)
      found.push_back(j);
  }

  return finish_state(i_prev, SupportSet(std::move(found)), std::move(diag),
                      cfg.k_max);
}

SceneTrackResult track_scene(const SensingMatrix& a,
                             const SceneTimeline& timeline,
                             const SupportSet& i0, const TrackerConfig& cfg) {
  require(!timeline.frames.empty(), "track_scene: empty timeline");
  SceneTrackResult out;

  TrackerState initial;
  initial.t = 0;
  initial.support = i0;
  initial.k_hat = i0.size();
  out.states.push_back(std::move(initial));
  out.exact_match.push_back(i0 == timeline.truth(0) ? 1 : 0);

  for (size_t t = 1; t < timeline.frames.size(); ++t) {
    MeasurementBlock canonical =
        canonicalize(timeline.frames[t].measurement).block;
    const SupportSet& prev = out.states.back().support;
    TrackerState st;
    switch (cfg.mode) {
      case TrackerMode::noiseless:
        st = track_noiseless(a, canonical, prev, cfg);
        break;
      case TrackerMode::noisy_fixed_k: {
        int k = cfg.fixed_k > 0 ? cfg.fixed_k : i0.size();
        st = track_noisy_fixed_k(a, canonical, prev, k, cfg);
        break;
      }
      case TrackerMode::noisy_adaptive:
        st = track_noisy_adaptive(a, canonical, prev, cfg);
        break;
    }
    st.t = static_cast<int>(t);
    out.exact_match.push_back(st.support == timeline.truth(static_cast<int>(t))
                                  ? 1
                                  : 0);
    out.states.push_back(std::move(st));
  }
  return out;
}

std::string states_jsonl(const SceneTrackResult& result) {
  std::string out;
  for (size_t t = 0; t < result.states.size(); ++t) {
    const TrackerState& st = result.states[t];
    nlohmann::json j;
    j["t"] = st.t;
    j["k_hat"] = st.k_hat;
    j["support"] = st.support.indices();
    j["deleted"] = st.last_deletion.indices();
    j["added"] = st.last_addition.indices();
    j["exact_match"] = result.exact_match[t] != 0;
    j["flags"] = {
        {"assumption_violated", st.diagnostics.assumption_violated},
        {"pure_measurement_subspace", st.diagnostics.pure_measurement_subspace},
        {"truncated", st.diagnostics.truncated},
        {"k_exceeded_kmax", st.diagnostics.k_exceeded_kmax},
    };
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string states_csv(const SceneTrackResult& result) {
  std::string out = "t,k_hat,exact_match,deleted,added\n";
  for (size_t t = 0; t < result.states.size(); ++t) {
    const TrackerState& st = result.states[t];
    out += std::to_string(st.t) + ',' + std::to_string(st.k_hat) + ',' +
           std::to_string(result.exact_match[t] != 0 ? 1 : 0) + ',' +
           std::to_string(st.last_deletion.size()) + ',' +
           std::to_string(st.last_addition.size()) + '\n';
  }
  return out;
}

}  // namespace csmusic
