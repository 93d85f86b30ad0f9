#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "oqs/model.hpp"
#include "oqs/spectral.hpp"

namespace oqs {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// O(n^3)). Returns assignment[row] = column.
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

struct TrackOptions {
  /// Two assignments whose costs differ by less than match_tol * (larger cost)
  /// are considered tied.
  double match_tol = 0.25;
  /// Minimum lead in summed |Phi_prev^T Phi_new| needed to break a tie.
  double overlap_tol = 0.2;
  int max_refine = 12;
  /// Record unresolved steps as coalescences instead of throwing.
  bool allow_coalescence = false;
  SpectralOptions spectral;
};

struct TrajectorySet {
  std::vector<double> s; // curve parameter at each grid point
  std::optional<ParameterPath> path;
  std::vector<std::vector<int>> labels;      // labels[k][j]: label of solver output j at point k
  std::vector<std::vector<cplx>> values;     // values[label][k]
  std::vector<std::vector<CVector>> vectors; // vectors[label][k], unit norm
  std::vector<int> ambiguous_steps;          // step k joins points k and k+1
  std::vector<int> coalescent_steps;

  int n_labels() const { return static_cast<int>(values.size()); }
  int n_points() const { return static_cast<int>(s.size()); }
};

namespace detail {

struct LabeledState {
  std::vector<cplx> values;
  CMatrix vectors; // column = label
};

inline LabeledState reorder(const EigenSystem& es, const std::vector<int>& label_to_solver) {
  const int n = es.size();
  LabeledState st;
  st.values.resize(n);
  st.vectors.resize(es.right_vectors.rows(), n);
  for (int l = 0; l < n; ++l) {
    const int j = label_to_solver[l];
    st.values[l] = es.value(j);
    st.vectors.col(l) = es.right_vectors.col(j).normalized();
  }
  return st;
}

struct StepMatch {
  std::vector<int> assignment; // label -> solver index
  bool resolved = true;
};

inline double assignment_cost(const Eigen::MatrixXd& c, const std::vector<int>& a) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += c(i, a[i]);
  return s;
}

inline StepMatch match_step(const LabeledState& prev, const EigenSystem& next, const TrackOptions& opt) {
  const int n = next.size();
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost(i, j) = std::abs(prev.values[i] - next.value(j));
  StepMatch m;
  m.assignment = min_cost_assignment(cost);
  if (n < 2) return m;
  const double best = assignment_cost(cost, m.assignment);
  const double floor = 1e-14 * std::max(1.0, next.h_norm);

  std::vector<std::vector<int>> tied;
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) {
      auto alt = m.assignment;
      std::swap(alt[i], alt[k]);
      const double ac = assignment_cost(cost, alt);
      if (ac - best <= opt.match_tol * std::max(ac, floor)) tied.push_back(std::move(alt));
    }
  if (tied.empty()) return m;

  auto score = [&](const std::vector<int>& a) {
    double s = 0.0;
    for (int l = 0; l < n; ++l) {
      CVector w = next.right_vectors.col(a[l]).normalized();
      s += std::abs(cplx(prev.vectors.col(l).transpose() * w));
    }
    return s;
  };
  tied.insert(tied.begin(), m.assignment);
  std::vector<double> scores;
  for (const auto& a : tied) scores.push_back(score(a));
  int top = 0;
  for (int t = 1; t < static_cast<int>(tied.size()); ++t)
    if (scores[t] > scores[top]) top = t;
  double runner = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < static_cast<int>(tied.size()); ++t)
    if (t != top) runner = std::max(runner, scores[t]);
  m.assignment = tied[top];
  m.resolved = scores[top] - runner >= opt.overlap_tol;
  return m;
}

} // namespace detail

/// Follows eigenpairs along a curve s -> H(s) sampled at `grid`. `system_at(s)`
/// returns the eigen-system at an arbitrary curve parameter; it is called for
/// grid points not covered by `precomputed` and for bisection midpoints.
/// Each step is an optimal bipartite matching on |dE|; near-ties are broken by
/// eigenvector overlap, and steps that stay ambiguous are bisected up to
/// max_refine times.
inline TrajectorySet track_family(const std::function<EigenSystem(double)>& system_at, std::vector<double> grid,
                                  const TrackOptions& opt = {}, std::vector<EigenSystem> precomputed = {}) {
  if (grid.size() < 2) throw SpecError("track: at least 2 grid points required");
  if (precomputed.empty()) {
    precomputed.reserve(grid.size());
    for (double s : grid) precomputed.push_back(system_at(s));
  }
  if (precomputed.size() != grid.size()) throw SpecError("track: precomputed systems do not match the grid");

  const int n = precomputed.front().size();
  const int np = static_cast<int>(grid.size());
  TrajectorySet ts;
  ts.s = grid;
  ts.labels.assign(np, std::vector<int>(n));
  ts.values.assign(n, std::vector<cplx>(np));
  ts.vectors.assign(n, std::vector<CVector>(np));

  std::vector<int> ident(n);
  for (int l = 0; l < n; ++l) ident[l] = l;
  detail::LabeledState state = detail::reorder(precomputed[0], ident);

  auto store = [&](int k, const std::vector<int>& label_to_solver, const detail::LabeledState& st) {
    for (int l = 0; l < n; ++l) {
      ts.labels[k][label_to_solver[l]] = l;
      ts.values[l][k] = st.values[l];
      ts.vectors[l][k] = st.vectors.col(l);
    }
  };
  store(0, ident, state);

  for (int k = 0; k + 1 < np; ++k) {
    bool refined = false;
    bool coalesced = false;
    std::function<std::vector<int>(const detail::LabeledState&, double, double, const EigenSystem&, int)> advance =
        [&](const detail::LabeledState& prev, double s0, double s1, const EigenSystem& next,
            int depth) -> std::vector<int> {
      auto m = detail::match_step(prev, next, opt);
      if (m.resolved) return m.assignment;
      if (depth >= opt.max_refine) {
        if (!opt.allow_coalescence)
          throw TrackingError("track: step " + std::to_string(k) +
                                  " remains ambiguous after refinement (path passes through an EP?)",
                              k);
        coalesced = true;
        return m.assignment;
      }
      refined = true;
      const double mid = 0.5 * (s0 + s1);
      EigenSystem es_mid = system_at(mid);
      auto a_mid = advance(prev, s0, mid, es_mid, depth + 1);
      auto st_mid = detail::reorder(es_mid, a_mid);
      return advance(st_mid, mid, s1, next, depth + 1);
    };
    auto a = advance(state, grid[k], grid[k + 1], precomputed[k + 1], 0);
    state = detail::reorder(precomputed[k + 1], a);
    store(k + 1, a, state);
    if (refined) ts.ambiguous_steps.push_back(k);
    if (coalesced) ts.coalescent_steps.push_back(k);
  }
  return ts;
}

/// Tracks the eigen-system of build_hamiltonian(spec, .) along a parameter path.
/// Refinement midpoints interpolate linearly between neighbouring points.
inline TrajectorySet track(const SystemSpec& spec, const ParameterPath& path, const TrackOptions& opt = {},
                           std::vector<EigenSystem> precomputed = {}) {
  require_valid(spec);
  auto bad = validate_path(path, spec.n_channels());
  if (!bad.empty()) throw SpecError("invalid path: " + detail::join(bad));
  const int np = static_cast<int>(path.points.size());
  auto system_at = [&](double s) {
    int k = std::clamp(static_cast<int>(std::floor(s)), 0, np - 2);
    const double t = s - k;
    ParameterPoint p = t == 0.0 ? path.points[k] : interpolate(path.points[k], path.points[k + 1], t);
    return eigendecompose(build_hamiltonian(spec, p), opt.spectral);
  };
  std::vector<double> grid(np);
  for (int k = 0; k < np; ++k) grid[k] = k;
  auto ts = track_family(system_at, grid, opt, std::move(precomputed));
  ts.path = path;
  return ts;
}

/// Label permutation accumulated over a closed path: perm[l] is the label whose
/// starting eigenvalue label l ends on.
inline std::vector<int> net_permutation(const TrajectorySet& ts) {
  const int n = ts.n_labels();
  const int last = ts.n_points() - 1;
  Eigen::MatrixXd cost(n, n);
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m) cost(l, m) = std::abs(ts.values[l][last] - ts.values[m][0]);
  return min_cost_assignment(cost);
}

inline bool is_identity(const std::vector<int>& p) {
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] != static_cast<int>(i)) return false;
  return true;
}

/// True if p swaps exactly labels i and j.
inline bool is_transposition(const std::vector<int>& p, int i, int j) {
  for (size_t k = 0; k < p.size(); ++k) {
    const int want = k == static_cast<size_t>(i) ? j : k == static_cast<size_t>(j) ? i : static_cast<int>(k);
    if (p[k] != want) return false;
  }
  return true;
}

inline std::vector<int> compose(const std::vector<int>& p, const std::vector<int>& q) {
  std::vector<int> r(p.size());
  for (size_t i = 0; i < p.size(); ++i) r[i] = q[p[i]];
  return r;
}

enum class CrossingKind { ENERGY_EXCHANGE, WIDTH_EXCHANGE, FULL_EXCHANGE_EP, AVOIDED };

inline const char* to_string(CrossingKind k) {
  switch (k) {
  case CrossingKind::ENERGY_EXCHANGE: return "ENERGY_EXCHANGE";
  case CrossingKind::WIDTH_EXCHANGE: return "WIDTH_EXCHANGE";
  case CrossingKind::FULL_EXCHANGE_EP: return "FULL_EXCHANGE_EP";
  case CrossingKind::AVOIDED: return "AVOIDED";
  }
  return "?";
}

struct CrossingOptions {
  int w_steps = 5;
  /// The pair counts as approaching if its closest gap is below
  /// approach_tol times the larger of the two end-point gaps.
  double approach_tol = 0.5;
};

struct CrossingReport {
  CrossingKind kind = CrossingKind::AVOIDED;
  int index = -1;                  // grid index of closest approach
  double min_gap = 0.0;
  bool energy_order_flipped = false;
  bool width_order_flipped = false;
  double margin = 0.0;             // +inf when the pair never approaches
};

/// Which components (Re, Im) of the pair trade order across the closest approach.
inline CrossingReport classify_crossing(const TrajectorySet& ts, int l1, int l2, const CrossingOptions& opt = {}) {
  if (l1 == l2 || l1 < 0 || l2 < 0 || l1 >= ts.n_labels() || l2 >= ts.n_labels())
    throw SpecError("classify_crossing: invalid label pair");
  if (ts.path && ts.path->closed) throw SpecError("classify_crossing: path must be open");
  const int np = ts.n_points();
  const auto& v1 = ts.values[l1];
  const auto& v2 = ts.values[l2];

  CrossingReport rep;
  rep.index = 0;
  rep.min_gap = std::abs(v1[0] - v2[0]);
  for (int k = 1; k < np; ++k) {
    const double g = std::abs(v1[k] - v2[k]);
    if (g < rep.min_gap) {
      rep.min_gap = g;
      rep.index = k;
    }
  }

  if (!ts.coalescent_steps.empty()) {
    rep.kind = CrossingKind::FULL_EXCHANGE_EP;
    rep.index = ts.coalescent_steps.front();
    rep.energy_order_flipped = rep.width_order_flipped = true;
    return rep;
  }

  const double end_gap = std::max(std::abs(v1[0] - v2[0]), std::abs(v1[np - 1] - v2[np - 1]));
  if (rep.index == 0 || rep.index == np - 1 || rep.min_gap > opt.approach_tol * end_gap) {
    rep.kind = CrossingKind::AVOIDED;
    rep.margin = std::numeric_limits<double>::infinity();
    return rep;
  }
  const int lo = std::max(0, rep.index - opt.w_steps);
  const int hi = std::min(np - 1, rep.index + opt.w_steps);
  auto sgn = [](double x) { return (x > 0) - (x < 0); };
  const cplx d_lo = v1[lo] - v2[lo];
  const cplx d_hi = v1[hi] - v2[hi];
  rep.energy_order_flipped = sgn(d_lo.real()) * sgn(d_hi.real()) < 0;
  rep.width_order_flipped = sgn(d_lo.imag()) * sgn(d_hi.imag()) < 0;
  if (rep.energy_order_flipped && rep.width_order_flipped) rep.kind = CrossingKind::FULL_EXCHANGE_EP;
  else if (rep.energy_order_flipped) rep.kind = CrossingKind::ENERGY_EXCHANGE;
  else if (rep.width_order_flipped) rep.kind = CrossingKind::WIDTH_EXCHANGE;
  else rep.kind = CrossingKind::AVOIDED;
  rep.margin = rep.min_gap;
  return rep;
}

} // namespace oqs
