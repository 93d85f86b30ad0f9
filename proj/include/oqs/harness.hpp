#pragma once

#include <algorithm>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "oqs/model.hpp"
#include "oqs/observables.hpp"
#include "oqs/spectral.hpp"
#include "oqs/tracking.hpp"

namespace oqs {

struct SweepOptions {
  TrackOptions track;
  EquilibriumThresholds thresholds;
  int threads = 0; // 0: hardware concurrency, 1: serial
};

struct SweepRow {
  int index = 0;
  ParameterPoint point;
  std::vector<EigenvalueRecord> eigenvalues; // label order
  std::vector<double> rigidities;
  std::vector<double> entropies;
  double defect = 0.0;
  double min_gap = 0.0;
  bool equilibrium = false;
  EquilibriumVerdict verdict;
};

struct PlateauReport {
  int window = 0;
  double delta = 0.0;
  std::optional<int> start_index;
  std::optional<double> saturated_value;
};

namespace detail {

/// Runs fn(i) for i in [0, n) on `threads` workers. Results must be written by
/// index; the first failure (lowest index) is rethrown after all workers join.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::clamp(threads, 1, std::max(1, n));
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int b = t * chunk, e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

} // namespace detail

/// One row per path point, labels consistent with the tracked trajectories.
inline std::vector<SweepRow> run_sweep(const SystemSpec& spec, const ParameterPath& path, const SweepOptions& opt = {}) {
  require_valid(spec);
  auto bad = validate_path(path, spec.n_channels());
  if (!bad.empty()) throw SpecError("invalid path: " + detail::join(bad));
  const int np = static_cast<int>(path.points.size());

  std::vector<EigenSystem> systems(np);
  std::vector<HamiltonianMatrix> h0s(np);
  detail::parallel_for(np, opt.threads, [&](int i) {
    try {
      auto h = build_hamiltonian(spec, path.points[i]);
      systems[i] = eigendecompose(h, opt.track.spectral);
      h0s[i] = build_h0(spec, path.points[i]);
    } catch (const NumericalError& e) {
      throw NumericalError("point " + std::to_string(i) + ": " + e.what(), e.worst_residual());
    }
  });

  auto ts = track(spec, path, opt.track, systems);

  const int n = spec.n_states;
  std::vector<SweepRow> rows(np);
  detail::parallel_for(np, opt.threads, [&](int k) {
    const EigenSystem& es = systems[k];
    auto mix = mixing_coefficients(es, h0s[k]);
    auto verdict = detect_equilibrium(es, mix, gap_info(es, h0s[k]), opt.thresholds);
    SweepRow& row = rows[k];
    row.index = k;
    row.point = path.points[k];
    row.eigenvalues.resize(n);
    row.rigidities.resize(n);
    row.entropies.resize(n);
    for (int j = 0; j < n; ++j) {
      const int l = ts.labels[k][j];
      row.eigenvalues[l] = es.eigenvalues[j];
      row.rigidities[l] = phase_rigidity(es.right_vectors.col(j));
      row.entropies[l] = mix.entropies[j];
    }
    row.defect = verdict.orthogonality_defect;
    row.min_gap = verdict.min_gap;
    row.equilibrium = verdict.passed;
    row.verdict = verdict;
  });
  return rows;
}

/// Earliest index from which every window-long slice varies by at most delta.
inline PlateauReport detect_plateau(std::span<const double> series, int window, double delta) {
  if (window < 2) throw SpecError("detect_plateau: window must be >= 2");
  if (static_cast<int>(series.size()) < window) throw SpecError("detect_plateau: series shorter than window");
  PlateauReport rep{window, delta, std::nullopt, std::nullopt};
  const int last = static_cast<int>(series.size()) - window;
  int start = last + 1;
  for (int t = last; t >= 0; --t) {
    auto [lo, hi] = std::minmax_element(series.begin() + t, series.begin() + t + window);
    if (*hi - *lo > delta) break;
    start = t;
  }
  if (start <= last) {
    rep.start_index = start;
    double s = 0.0;
    for (size_t k = start; k < series.size(); ++k) s += series[k];
    rep.saturated_value = s / static_cast<double>(series.size() - start);
  }
  return rep;
}

inline PlateauReport detect_plateau(const std::vector<double>& series, int window, double delta) {
  return detect_plateau(std::span<const double>(series), window, delta);
}

struct PlateauOptions {
  int window = 10;
  double delta = 1e-3;
  bool operator==(const PlateauOptions&) const = default;
};

struct EquilibriumSearch {
  std::vector<SweepRow> rows;
  std::optional<int> first_passing; // row index
  PlateauReport plateau;            // on the label-averaged entropy
};

inline std::vector<double> mean_entropy_series(const std::vector<SweepRow>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    double s = 0.0;
    for (double h : r.entropies) s += h;
    out.push_back(s / static_cast<double>(r.entropies.size()));
  }
  return out;
}

inline EquilibriumSearch find_equilibrium(const SystemSpec& spec, const ParameterPath& path, const SweepOptions& opt = {},
                                          const PlateauOptions& plateau = {}) {
  EquilibriumSearch out;
  out.rows = run_sweep(spec, path, opt);
  for (const auto& r : out.rows)
    if (r.equilibrium) {
      out.first_passing = r.index;
      break;
    }
  const auto series = mean_entropy_series(out.rows);
  const int w = std::min<int>(plateau.window, static_cast<int>(series.size()));
  out.plateau = detect_plateau(series, std::max(2, w), plateau.delta);
  return out;
}

} // namespace oqs
