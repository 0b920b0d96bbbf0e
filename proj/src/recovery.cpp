#include "csmusic/recovery.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "csmusic/kernels.hpp"

namespace csmusic {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Positions 0..count-1 of `values` in ascending value order; stable, so equal
// values keep their original (lower-index-first) order.
std::vector<int> ascending_positions(const Vector& values) {
  std::vector<int> pos(static_cast<size_t>(values.size()));
  std::iota(pos.begin(), pos.end(), 0);
  std::stable_sort(pos.begin(), pos.end(), [&](int x, int y) {
    return values(x) < values(y);
  });
  return pos;
}

std::vector<int> smallest_indices(const MetricVector& mv, int count) {
  std::vector<int> pos = ascending_positions(mv.values);
  std::vector<int> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    out.push_back(mv.indices[static_cast<size_t>(pos[static_cast<size_t>(i)])]);
  return out;
}

// The MUSIC-family routines depend on B only through R(B); reduce to a
// full-column-rank block up front so ranks and flags read cleanly. The zero
// block (which canonicalize rejects) becomes an explicit zero-column block.
MeasurementBlock canonical_block(const MeasurementBlock& b) {
  if (b.canonical) return b;
  if (b.data.norm() == 0.0)
    return MeasurementBlock{Matrix(b.data.rows(), 0), b.kind, true};
  return canonicalize(b).block;
}

MetricVector make_metric(std::vector<int> indices, Vector values,
                         std::vector<char> rank_reduced = {}) {
  MetricVector mv;
  mv.indices = std::move(indices);
  mv.values = values.cwiseMax(0.0);
  mv.rank_reduced = std::move(rank_reduced);
  return mv;
}

std::vector<int> all_indices(int n) {
  std::vector<int> out(static_cast<size_t>(n));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace

double MetricVector::at(int index) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index)
    throw std::invalid_argument("MetricVector::at: index not in domain");
  return values(static_cast<Eigen::Index>(it - indices.begin()));
}

SupportSet somp(const SensingMatrix& a, const MeasurementBlock& b, int k) {
  require(k >= 0, "somp: k must be nonnegative");
  require(k < a.m(), "somp: require k < m");
  if (k == 0) return SupportSet{};

  std::vector<int> selected;
  std::vector<char> taken(static_cast<size_t>(a.n()), 0);
  Matrix residual = b.data;
  for (int step = 0; step < k; ++step) {
    Vector scores = kernels::correlation_norms(a, residual);
    int best = -1;
    double best_score = -1.0;
    for (int j = 0; j < a.n(); ++j) {
      if (taken[static_cast<size_t>(j)]) continue;
      if (scores(j) > best_score) {
        best_score = scores(j);
        best = j;
      }
    }
    selected.push_back(best);
    taken[static_cast<size_t>(best)] = 1;

    OrthonormalBasis basis = orthonormal_basis(a.columns(selected));
    if (basis.dim() < static_cast<Eigen::Index>(selected.size()))
      throw std::runtime_error("somp: degenerate dictionary");
    residual = b.data - basis.project(b.data);
  }
  return SupportSet(std::move(selected));
}

SupportEstimate two_thresholding(const SensingMatrix& a,
                                 const MeasurementBlock& b, int k) {
  require(k >= 0 && k <= a.n(), "two_thresholding: require 0 <= k <= n");
  Vector scores = kernels::correlation_norms(a, b.data);
  // Descending by score, lower index first among ties.
  std::vector<int> pos = all_indices(a.n());
  std::stable_sort(pos.begin(), pos.end(), [&](int x, int y) {
    return scores(x) > scores(y);
  });
  std::vector<int> picked(pos.begin(), pos.begin() + k);

  SupportEstimate out;
  out.support = SupportSet(std::move(picked));
  if (k > 0) {
    double kth = scores(pos[static_cast<size_t>(k - 1)]);
    out.degenerate = kth == 0.0 || scores.maxCoeff() == scores.minCoeff();
  }
  return out;
}

MetricVector music_metric(const SensingMatrix& a, const MeasurementBlock& b,
                          bool normalize) {
  MeasurementBlock cb = canonical_block(b);
  OrthonormalBasis u = orthonormal_basis(cb.data);
  std::vector<int> eval = all_indices(a.n());
  Vector values = kernels::residual_metrics(a, u, eval, normalize);
  return make_metric(std::move(eval), std::move(values));
}

SupportEstimate music(const SensingMatrix& a, const MeasurementBlock& b, int k,
                      double zero_tol, bool normalize) {
  require(k >= 0, "music: k must be nonnegative");
  require(k < a.m(), "music: require k < m (l0 feasibility bound)");
  require(zero_tol > 0, "music: zero_tol must be positive");
  MeasurementBlock cb = canonical_block(b);
  MetricVector mv = music_metric(a, cb, normalize);

  SupportEstimate out;
  out.support = SupportSet(smallest_indices(mv, k));
  out.rank_deficient_regime = cb.r() < k;
  if (k > 0) out.degenerate = mv.values.maxCoeff() == mv.values.minCoeff();
  return out;
}

MetricVector gmusic_metric(const SensingMatrix& a, const MeasurementBlock& b,
                           const SupportSet& partial, bool normalize) {
  require(partial.empty() || partial.max_index() < a.n(),
          "gmusic_metric: partial index out of range");
  MeasurementBlock cb = canonical_block(b);
  OrthonormalBasis basis_b = orthonormal_basis(cb.data);

  OrthonormalBasis basis_pa = OrthonormalBasis::empty(a.m());
  if (!partial.empty()) {
    Matrix projected = a.columns(partial);
    projected -= basis_b.project(projected);
    basis_pa = orthonormal_basis(projected);
    if (basis_pa.dim() < partial.size())
      throw std::runtime_error("gmusic_metric: partial support degenerate");
  }
  std::vector<int> eval = partial.complement(a.n());
  Vector values =
      kernels::projected_metrics(a, basis_b, basis_pa, eval, normalize);
  return make_metric(std::move(eval), std::move(values));
}

MetricVector gmusic_metric_concat(const SensingMatrix& a,
                                  const MeasurementBlock& b,
                                  const SupportSet& partial, bool normalize) {
  require(partial.empty() || partial.max_index() < a.n(),
          "gmusic_metric: partial index out of range");
  MeasurementBlock cb = canonical_block(b);
  Matrix concat(a.m(), cb.r() + partial.size());
  concat.leftCols(cb.r()) = cb.data;
  concat.rightCols(partial.size()) = a.columns(partial);

  OrthonormalBasis w = orthonormal_basis(concat);
  std::vector<int> eval = partial.complement(a.n());
  Vector values = kernels::residual_metrics(a, w, eval, normalize);
  return make_metric(std::move(eval), std::move(values));
}

MetricVector support_selection_metric(const SensingMatrix& a,
                                      const MeasurementBlock& b,
                                      const SupportSet& i_k, bool normalize) {
  require(i_k.empty() || i_k.max_index() < a.n(),
          "support_selection_metric: index out of range");
  MeasurementBlock cb = canonical_block(b);
  require(i_k.size() <= a.m() - cb.r(),
          "support_selection_metric: require |I_k| <= m - rank(B)");
  double tol = default_rank_tol(a.m(), cb.r() + i_k.size());
  kernels::LeaveOneOutResult loo = kernels::leave_one_out_metrics(
      a, cb.data, i_k.indices(), i_k.indices(), tol, normalize);
  return make_metric(i_k.indices(), std::move(loo.values),
                     std::move(loo.rank_reduced));
}

namespace {

SupportEstimate cs_step(const SensingMatrix& a, const MeasurementBlock& cb,
                        const RecoveryConfig& cfg, int count) {
  if (count == 0) return SupportEstimate{};
  if (cfg.cs_algo == CsAlgo::somp) {
    SupportEstimate out;
    out.support = somp(a, cb, count);
    out.degenerate = cb.data.norm() == 0.0;
    return out;
  }
  return two_thresholding(a, cb, count);
}

}  // namespace

SupportEstimate csmusic(const SensingMatrix& a, const MeasurementBlock& b,
                        const RecoveryConfig& cfg) {
  require(cfg.k >= 1, "csmusic: k must be >= 1");
  require(cfg.zero_tol > 0, "csmusic: zero_tol must be positive");
  require(cfg.k < a.m(), "csmusic: require k < m");
  MeasurementBlock cb = canonical_block(b);
  int r = cb.r();
  require(r <= cfg.k, "csmusic: rank(B) exceeds k");

  SupportEstimate cs = cs_step(a, cb, cfg, cfg.k - r);
  MetricVector eta = gmusic_metric(a, cb, cs.support, cfg.normalize);
  SupportSet added(smallest_indices(eta, r));

  SupportEstimate out;
  out.support = cs.support.set_union(added);
  out.degenerate = cs.degenerate;
  return out;
}

SupportEstimate csmusic_optimized(const SensingMatrix& a,
                                  const MeasurementBlock& b,
                                  const RecoveryConfig& cfg) {
  require(cfg.k >= 1, "csmusic_optimized: k must be >= 1");
  require(cfg.zero_tol > 0, "csmusic_optimized: zero_tol must be positive");
  require(cfg.k < a.m(), "csmusic_optimized: require k < m");
  MeasurementBlock cb = canonical_block(b);
  int r = cb.r();
  require(r <= cfg.k, "csmusic_optimized: rank(B) exceeds k");
  require(cfg.k <= a.m() - r,
          "csmusic_optimized: require k <= m - rank(B) for the deletion test");

  SupportEstimate cs = cs_step(a, cb, cfg, cfg.k);
  MetricVector zeta = support_selection_metric(a, cb, cs.support, cfg.normalize);
  SupportSet kept(smallest_indices(zeta, cfg.k - r));
  MetricVector eta = gmusic_metric(a, cb, kept, cfg.normalize);
  SupportSet added(smallest_indices(eta, r));

  SupportEstimate out;
  out.support = kept.set_union(added);
  out.degenerate = cs.degenerate;
  return out;
}

std::optional<int> spark_bruteforce(const SensingMatrix& a, int max_cols) {
  require(max_cols >= 1, "spark_bruteforce: max_cols must be >= 1");
  require(a.n() <= 20 || max_cols <= 6,
          "spark_bruteforce: combinatorial guard (need n <= 20 or max_cols <= 6)");
  constexpr long long kBudget = 2'000'000;
  int limit = std::min(max_cols, a.n());
  long long total = 0;
  {
    // Sum of binomial coefficients C(n, s), s = 1..limit.
    long long c = 1;
    for (int s = 1; s <= limit; ++s) {
      c = c * (a.n() - s + 1) / s;
      total += c;
      if (total > kBudget)
        throw std::invalid_argument(
            "spark_bruteforce: budget exceeded (needs > " +
            std::to_string(total) + " subset checks, budget " +
            std::to_string(kBudget) + ")");
    }
  }

  std::vector<int> comb;
  for (int s = 1; s <= limit; ++s) {
    comb.resize(static_cast<size_t>(s));
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
      if (numerical_rank(a.columns(comb)) < s) return s;
      // Next lexicographic combination of size s from [0, n).
      int i = s - 1;
      while (i >= 0 && comb[static_cast<size_t>(i)] == a.n() - s + i) --i;
      if (i < 0) break;
      ++comb[static_cast<size_t>(i)];
      for (int t = i + 1; t < s; ++t)
        comb[static_cast<size_t>(t)] = comb[static_cast<size_t>(t - 1)] + 1;
    }
  }
  return std::nullopt;
}

nlohmann::json recovery_record(const std::string& algorithm, int k, int r,
                               const SupportEstimate& estimate,
                               const std::optional<MetricVector>& metrics) {
  nlohmann::json j;
  j["algorithm"] = algorithm;
  j["k"] = k;
  j["r"] = r;
  j["support"] = estimate.support.indices();
  if (metrics) {
    nlohmann::json m;
    m["indices"] = metrics->indices;
    m["values"] = std::vector<double>(
        metrics->values.data(), metrics->values.data() + metrics->values.size());
    if (!metrics->rank_reduced.empty()) {
      std::vector<bool> flags(metrics->rank_reduced.begin(),
                              metrics->rank_reduced.end());
      m["rank_reduced"] = flags;
    }
    j["metrics"] = std::move(m);
  }
  j["degenerate_flags"] = {{"degenerate", estimate.degenerate},
                           {"rank_deficient_regime",
                            estimate.rank_deficient_regime}};
  return j;
}

}  // namespace csmusic
