#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "oqs/model.hpp"
#include "oqs/spectral.hpp"
#include "oqs/tracking.hpp"

namespace oqs {

using Vec2 = std::array<double, 2>;

/// D = (eps1 - eps2)^2 + 4 omega^2. The matrix [[eps1, omega], [omega, eps2]]
/// has eigenvalues (eps1 + eps2)/2 +- sqrt(D)/2 and a double eigenvalue iff D = 0.
inline cplx discriminant_2x2(cplx eps1, cplx eps2, cplx omega) {
  const cplx d = eps1 - eps2;
  return d * d + 4.0 * omega * omega;
}

/// A family of matrices H(x) over two real unknowns. H is affine in x for every
/// space built here, so derivative() is exact.
struct SearchSpace {
  std::function<CMatrix(const Vec2&)> matrix;
  std::function<std::array<CMatrix, 2>(const Vec2&)> derivative;
  std::function<std::optional<ParameterPoint>(const Vec2&)> point; // spec mode only
  std::array<std::string, 2> names;
  WidthSign width_sign = WidthSign::physical_minus;
};

/// Unknowns available in direct 2x2 mode.
enum class DirectUnknown { eps1_re, eps1_im, eps2_re, eps2_im, omega_re, omega_im };

inline const char* to_string(DirectUnknown u) {
  switch (u) {
  case DirectUnknown::eps1_re: return "eps1.re";
  case DirectUnknown::eps1_im: return "eps1.im";
  case DirectUnknown::eps2_re: return "eps2.re";
  case DirectUnknown::eps2_im: return "eps2.im";
  case DirectUnknown::omega_re: return "omega.re";
  case DirectUnknown::omega_im: return "omega.im";
  }
  return "?";
}

inline std::optional<DirectUnknown> parse_direct_unknown(const std::string& s) {
  for (auto u : {DirectUnknown::eps1_re, DirectUnknown::eps1_im, DirectUnknown::eps2_re, DirectUnknown::eps2_im,
                 DirectUnknown::omega_re, DirectUnknown::omega_im})
    if (s == to_string(u)) return u;
  return std::nullopt;
}

struct DirectMatrix {
  cplx eps1, eps2, omega;
  bool operator==(const DirectMatrix&) const = default;
};

/// [[eps1, omega], [omega, eps2]] with two of the six real components free.
inline SearchSpace direct_space(DirectMatrix base, std::array<DirectUnknown, 2> unknowns) {
  if (unknowns[0] == unknowns[1]) throw SpecError("direct search: the two unknowns must differ");
  auto apply = [base, unknowns](const Vec2& x) {
    DirectMatrix m = base;
    for (int k = 0; k < 2; ++k) {
      switch (unknowns[k]) {
      case DirectUnknown::eps1_re: m.eps1.real(x[k]); break;
      case DirectUnknown::eps1_im: m.eps1.imag(x[k]); break;
      case DirectUnknown::eps2_re: m.eps2.real(x[k]); break;
      case DirectUnknown::eps2_im: m.eps2.imag(x[k]); break;
      case DirectUnknown::omega_re: m.omega.real(x[k]); break;
      case DirectUnknown::omega_im: m.omega.imag(x[k]); break;
      }
    }
    return m;
  };
  SearchSpace sp;
  sp.matrix = [apply](const Vec2& x) {
    auto m = apply(x);
    CMatrix h(2, 2);
    h << m.eps1, m.omega, m.omega, m.eps2;
    return h;
  };
  sp.derivative = [unknowns](const Vec2&) {
    std::array<CMatrix, 2> d{CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
    const cplx one{1.0, 0.0}, i{0.0, 1.0};
    for (int k = 0; k < 2; ++k) {
      switch (unknowns[k]) {
      case DirectUnknown::eps1_re: d[k](0, 0) = one; break;
      case DirectUnknown::eps1_im: d[k](0, 0) = i; break;
      case DirectUnknown::eps2_re: d[k](1, 1) = one; break;
      case DirectUnknown::eps2_im: d[k](1, 1) = i; break;
      case DirectUnknown::omega_re: d[k](0, 1) = d[k](1, 0) = one; break;
      case DirectUnknown::omega_im: d[k](0, 1) = d[k](1, 0) = i; break;
      }
    }
    return d;
  };
  sp.point = [](const Vec2&) { return std::optional<ParameterPoint>{}; };
  sp.names = {to_string(unknowns[0]), to_string(unknowns[1])};
  return sp;
}

/// Unknown in spec mode: the sweep parameter a, or Re/Im of one coupling.
struct SpecUnknown {
  enum Kind { a, omega_re, omega_im } kind = a;
  int channel = 0;
  bool operator==(const SpecUnknown&) const = default;
};

inline std::string to_string(const SpecUnknown& u) {
  if (u.kind == SpecUnknown::a) return "a";
  return "omega[" + std::to_string(u.channel) + "]." + (u.kind == SpecUnknown::omega_re ? "re" : "im");
}

/// Parses "a", "omega[c].re" or "omega[c].im".
inline std::optional<SpecUnknown> parse_spec_unknown(const std::string& s) {
  if (s == "a") return SpecUnknown{SpecUnknown::a, 0};
  if (s.rfind("omega[", 0) != 0) return std::nullopt;
  const auto close = s.find(']');
  if (close == std::string::npos || close <= 6) return std::nullopt;
  const std::string idx = s.substr(6, close - 6);
  for (char ch : idx)
    if (ch < '0' || ch > '9') return std::nullopt;
  const std::string tail = s.substr(close + 1);
  SpecUnknown u;
  u.channel = std::stoi(idx);
  if (tail == ".re") u.kind = SpecUnknown::omega_re;
  else if (tail == ".im") u.kind = SpecUnknown::omega_im;
  else return std::nullopt;
  return u;
}

inline ParameterPoint apply_unknowns(ParameterPoint p, const std::array<SpecUnknown, 2>& unknowns, const Vec2& x) {
  for (int k = 0; k < 2; ++k) {
    const auto& u = unknowns[k];
    if (u.kind == SpecUnknown::a) p.a = x[k];
    else if (u.kind == SpecUnknown::omega_re) p.omegas[u.channel].real(x[k]);
    else p.omegas[u.channel].imag(x[k]);
  }
  return p;
}

inline Vec2 extract_unknowns(const ParameterPoint& p, const std::array<SpecUnknown, 2>& unknowns) {
  Vec2 x{};
  for (int k = 0; k < 2; ++k) {
    const auto& u = unknowns[k];
    x[k] = u.kind == SpecUnknown::a ? p.a
           : u.kind == SpecUnknown::omega_re ? p.omegas[u.channel].real()
                                             : p.omegas[u.channel].imag();
  }
  return x;
}

/// build_hamiltonian(spec, base with the two unknowns replaced by x).
inline SearchSpace spec_space(const SystemSpec& spec, const ParameterPoint& base, std::array<SpecUnknown, 2> unknowns) {
  require_valid(spec);
  require_point(spec, base);
  if (unknowns[0] == unknowns[1]) throw SpecError("spec search: the two unknowns must differ");
  for (const auto& u : unknowns)
    if (u.kind != SpecUnknown::a && (u.channel < 0 || u.channel >= spec.n_channels()))
      throw SpecError("spec search: unknown " + to_string(u) + " refers to a missing channel");
  SearchSpace sp;
  sp.matrix = [spec, base, unknowns](const Vec2& x) {
    return build_hamiltonian(spec, apply_unknowns(base, unknowns, x)).entries;
  };
  sp.derivative = [spec, unknowns](const Vec2&) {
    std::array<CMatrix, 2> d;
    const int n = spec.n_states;
    for (int k = 0; k < 2; ++k) {
      const auto& u = unknowns[k];
      d[k] = CMatrix::Zero(n, n);
      if (u.kind == SpecUnknown::a) {
        for (int j = 0; j < n; ++j) d[k](j, j) = spec.diag_energies[j].e1;
      } else {
        const cplx dw = u.kind == SpecUnknown::omega_re ? cplx{1.0, 0.0} : cplx{0.0, 1.0};
        const cplx g = cplx{0.0, -0.5} * dw;
        const auto& w = spec.channels[u.channel].w;
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) d[k](j, l) = g * (w[j] * w[l]);
      }
    }
    return d;
  };
  sp.point = [base, unknowns](const Vec2& x) { return std::optional<ParameterPoint>{apply_unknowns(base, unknowns, x)}; };
  sp.names = {to_string(unknowns[0]), to_string(unknowns[1])};
  sp.width_sign = spec.conventions.width_sign;
  return sp;
}

struct EpOptions {
  int max_iter = 50;
  double residual_rel = 1e-12; // Newton stops once |D| <= residual_rel * ||H||_F^2
  double ep_gap_tol = 1e-7;    // relative to ||H||_F
  double ep_so_tol = 1e-6;
  double radius = 1e-3;        // verification loop radius, relative to max(1, |x|)
  int steps = 64;              // verification loop resolution
  // Simplex search (N-state mode).
  double simplex_step = 0.1;   // relative to max(1, |seed|)
  int simplex_restarts = 12;
  int simplex_max_evals = 4000;
  TrackOptions track;
};

struct EpCandidate {
  Vec2 unknowns{};
  std::array<std::string, 2> names;
  std::optional<ParameterPoint> point;
  std::optional<cplx> detuning; // eps1 - eps2 of the 2x2 matrix at the candidate (direct mode)
  std::pair<int, int> pair{0, 1}; // coalescing eigenvalues, sorted order at the candidate
  cplx eigenvalue{};              // mean of the coalescing pair
  double min_gap = 0.0;
  double self_orth = 0.0;
  double h_norm = 0.0;
  double discriminant_abs = 0.0;
  int iterations = 0;
  std::optional<std::vector<int>> encircle_permutation;
  bool verified = false;
};

struct EncircleResult {
  std::vector<int> permutation;
  TrajectorySet trajectories;
  Vec2 center{};
  double radius = 0.0;
  int loops = 1;
};

/// Tracks the eigenvalues around a circle of the given radius in the unknown
/// plane and returns the net label permutation after `loops` turns.
inline EncircleResult encircle(const SearchSpace& space, const Vec2& center, double radius, int steps, int loops = 1,
                               const TrackOptions& opt = {}) {
  if (!(radius > 0.0)) throw SpecError("encircle: radius must be positive");
  if (steps < 16) throw SpecError("encircle: at least 16 steps required");
  if (loops < 1) throw SpecError("encircle: loops must be >= 1");
  auto at = [&](double theta) {
    Vec2 x{center[0] + radius * std::cos(theta), center[1] + radius * std::sin(theta)};
    return eigendecompose(space.matrix(x), space.width_sign, opt.spectral);
  };
  const int total = steps * loops;
  std::vector<double> grid(total + 1);
  for (int k = 0; k <= total; ++k) grid[k] = 2.0 * std::numbers::pi * k / steps;
  grid[total] = 2.0 * std::numbers::pi * loops;

  EncircleResult r;
  r.center = center;
  r.radius = radius;
  r.loops = loops;
  try {
    r.trajectories = track_family(at, grid, opt);
  } catch (const TrackingError& e) {
    throw EncircleError(std::string("encircle: ") + e.what() + "; change the radius or increase steps");
  }
  r.permutation = net_permutation(r.trajectories);
  return r;
}

namespace detail {

// Distance between the closest pair, its self-orthogonality and mean value.
inline void describe_pair(const EigenSystem& es, EpCandidate& c) {
  auto g = min_gap(es);
  c.pair = {g.i, g.j};
  c.min_gap = g.gap;
  c.h_norm = es.h_norm;
  c.eigenvalue = 0.5 * (es.value(g.i) + es.value(g.j));
  double so = 0.0;
  for (int idx : {g.i, g.j}) {
    CVector v = es.right_vectors.col(idx).normalized();
    so = std::max(so, std::abs(cplx(v.transpose() * v)));
  }
  c.self_orth = so;
}

inline void verify(const SearchSpace& space, EpCandidate& c, const EpOptions& opt) {
  const double scale = std::max(1.0, std::hypot(c.unknowns[0], c.unknowns[1]));
  const bool gap_ok = c.min_gap <= opt.ep_gap_tol * std::max(c.h_norm, 1e-300);
  const bool so_ok = c.self_orth <= opt.ep_so_tol;
  c.verified = false;
  if (!gap_ok || !so_ok) return;
  try {
    auto loop = encircle(space, c.unknowns, opt.radius * scale, opt.steps, 1, opt.track);
    // Labels on the loop start at the first grid point in sorted order; map the
    // coalescing pair by proximity to the candidate eigenvalue.
    const auto& ts = loop.trajectories;
    std::vector<std::pair<double, int>> d;
    for (int l = 0; l < ts.n_labels(); ++l) d.push_back({std::abs(ts.values[l][0] - c.eigenvalue), l});
    std::sort(d.begin(), d.end());
    c.encircle_permutation = loop.permutation;
    c.verified = is_transposition(loop.permutation, d[0].second, d[1].second);
  } catch (const EncircleError&) {
    c.verified = false;
  }
}

} // namespace detail

/// Newton iteration on D(H(x)) = (H00 - H11)^2 + 4 H01 H10 = 0 for a 2x2 family,
/// treating Re D = Im D = 0 as two real equations in the two unknowns.
inline EpCandidate find_ep_2x2(const SearchSpace& space, Vec2 x, const EpOptions& opt = {}) {
  auto disc = [](const CMatrix& h) {
    const cplx d = h(0, 0) - h(1, 1);
    return d * d + 4.0 * h(0, 1) * h(1, 0);
  };
  EpCandidate c;
  c.names = space.names;
  bool converged = false;
  int extra = 0;
  double last_abs = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it <= opt.max_iter; ++it) {
    const CMatrix h = space.matrix(x);
    if (h.rows() != 2) throw SpecError("find_ep_2x2: matrix family must be 2x2");
    const cplx d = disc(h);
    const double scale = std::max(h.squaredNorm(), std::numeric_limits<double>::min());
    const double ad = std::abs(d);
    if (!std::isfinite(ad)) throw SearchError("find_ep_2x2: iterate diverged", x[0], x[1]);
    if (ad <= opt.residual_rel * scale) {
      converged = true;
      // Quadratic convergence: a couple of extra steps drive |D| to rounding level.
      if (ad == 0.0 || ad >= 0.5 * last_abs || extra >= 2) break;
      ++extra;
    }
    last_abs = ad;
    if (it == opt.max_iter) break;
    const auto dh = space.derivative(x);
    std::array<cplx, 2> g;
    for (int k = 0; k < 2; ++k) {
      const cplx diff = h(0, 0) - h(1, 1);
      g[k] = 2.0 * diff * (dh[k](0, 0) - dh[k](1, 1)) + 4.0 * (dh[k](0, 1) * h(1, 0) + h(0, 1) * dh[k](1, 0));
    }
    // J = [[Re g0, Re g1], [Im g0, Im g1]]
    const double j00 = g[0].real(), j01 = g[1].real(), j10 = g[0].imag(), j11 = g[1].imag();
    const double det = j00 * j11 - j01 * j10;
    const double jn = j00 * j00 + j01 * j01 + j10 * j10 + j11 * j11;
    if (!(std::abs(det) > 1e-14 * jn) || jn == 0.0)
      throw SearchError("find_ep_2x2: singular Jacobian at iteration " + std::to_string(it), x[0], x[1]);
    const double r0 = -d.real(), r1 = -d.imag();
    x[0] += (j11 * r0 - j01 * r1) / det;
    x[1] += (-j10 * r0 + j00 * r1) / det;
  }
  if (!converged)
    throw SearchError("find_ep_2x2: no convergence after " + std::to_string(opt.max_iter) + " iterations", x[0], x[1]);

  c.unknowns = x;
  c.iterations = it;
  c.point = space.point(x);
  const CMatrix h = space.matrix(x);
  c.discriminant_abs = std::abs(disc(h));
  c.detuning = h(0, 0) - h(1, 1);
  auto es = eigendecompose(h, space.width_sign);
  detail::describe_pair(es, c);
  detail::verify(space, c, opt);
  return c;
}

namespace detail {

// Nelder-Mead on a 2-D objective; returns the best vertex.
inline Vec2 nelder_mead(const std::function<double(const Vec2&)>& f, Vec2 x0, double step, int max_evals,
                        double x_tol, int& evals) {
  std::array<Vec2, 3> v{x0, Vec2{x0[0] + step, x0[1]}, Vec2{x0[0], x0[1] + step}};
  std::array<double, 3> fv{};
  for (int i = 0; i < 3; ++i) fv[i] = f(v[i]);
  evals += 3;
  auto lerp = [](const Vec2& a, const Vec2& b, double t) { return Vec2{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}; };
  while (evals < max_evals) {
    std::array<int, 3> o{0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int b = o[0], m = o[1], w = o[2];
    const double size = std::max(std::hypot(v[w][0] - v[b][0], v[w][1] - v[b][1]),
                                 std::hypot(v[m][0] - v[b][0], v[m][1] - v[b][1]));
    if (size < x_tol) break;
    const Vec2 c{0.5 * (v[b][0] + v[m][0]), 0.5 * (v[b][1] + v[m][1])};
    const Vec2 xr = lerp(c, v[w], -1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[b]) {
      const Vec2 xe = lerp(c, v[w], -2.0);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) { v[w] = xe; fv[w] = fe; }
      else { v[w] = xr; fv[w] = fr; }
    } else if (fr < fv[m]) {
      v[w] = xr;
      fv[w] = fr;
    } else {
      const bool outside = fr < fv[w];
      const Vec2 xc = outside ? lerp(c, v[w], -0.5) : lerp(c, v[w], 0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fv[w])) {
        v[w] = xc;
        fv[w] = fc;
      } else {
        for (int i : {m, w}) {
          v[i] = lerp(v[b], v[i], 0.5);
          fv[i] = f(v[i]);
          ++evals;
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (fv[i] < fv[best]) best = i;
  return v[best];
}

// Pair of eigenvalues nearest to two reference values (distinct indices).
inline std::pair<int, int> nearest_pair(const EigenSystem& es, cplx r1, cplx r2) {
  const int n = es.size();
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> p{0, 1};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = std::abs(es.value(i) - r1) + std::abs(es.value(j) - r2);
      if (d < best) {
        best = d;
        p = {i, j};
      }
    }
  return p;
}

} // namespace detail

/// EP search for an N-state family. The squared gap of the hinted pair has a
/// cusp at the EP, so it is first minimized by a restarted simplex; the result
/// is polished by Newton on the pair's discriminant (E_i - E_j)^2, which stays
/// analytic through the EP. pair_hint indexes the sorted spectrum at the seed.
inline EpCandidate find_ep_nd(const SearchSpace& space, std::pair<int, int> pair_hint, Vec2 seed,
                              const EpOptions& opt = {}) {
  EigenSystem es0 = eigendecompose(space.matrix(seed), space.width_sign, opt.track.spectral);
  const int n = es0.size();
  if (n < 2) throw SpecError("find_ep_nd: need at least 2 states");
  if (pair_hint.first == pair_hint.second || pair_hint.first < 0 || pair_hint.second < 0 || pair_hint.first >= n ||
      pair_hint.second >= n)
    throw SpecError("find_ep_nd: invalid pair hint");

  cplx ref1 = es0.value(pair_hint.first), ref2 = es0.value(pair_hint.second);
  auto pair_values = [&](const Vec2& x, cplx r1, cplx r2) {
    auto es = eigendecompose(space.matrix(x), space.width_sign, opt.track.spectral);
    auto p = detail::nearest_pair(es, r1, r2);
    return std::array<cplx, 2>{es.value(p.first), es.value(p.second)};
  };

  auto gap2 = [&](const Vec2& x) {
    try {
      auto v = pair_values(x, ref1, ref2);
      return std::norm(v[0] - v[1]);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const double scale = std::max(1.0, std::hypot(seed[0], seed[1]));
  Vec2 x = seed;
  double step = opt.simplex_step * scale;
  int evals = 0;
  double gbest = gap2(x);
  for (int r = 0; r < opt.simplex_restarts && evals < opt.simplex_max_evals; ++r) {
    Vec2 xn = detail::nelder_mead(gap2, x, step, opt.simplex_max_evals, 1e-10 * scale, evals);
    const double gn = gap2(xn);
    if (gn <= gbest) {
      x = xn;
      gbest = gn;
      auto v = pair_values(x, ref1, ref2);
      ref1 = v[0];
      ref2 = v[1];
    }
    step *= 0.25;
    const double hn = space.matrix(x).norm();
    if (gbest <= std::pow(1e-3 * hn, 2)) break;
  }

  // Newton polish on f(x) = (E_p - E_q)^2 with central differences.
  auto f = [&](const Vec2& y) {
    auto v = pair_values(y, ref1, ref2);
    return (v[0] - v[1]) * (v[0] - v[1]);
  };
  int it = 0;
  double best_abs = std::abs(f(x));
  Vec2 best_x = x;
  for (; it < opt.max_iter; ++it) {
    const double hn = space.matrix(x).norm();
    const cplx fx = f(x);
    if (std::abs(fx) < best_abs) {
      best_abs = std::abs(fx);
      best_x = x;
    }
    if (std::abs(fx) <= std::pow(0.1 * opt.ep_gap_tol * hn, 2)) break;
    const double h = 1e-6 * scale;
    std::array<cplx, 2> g;
    for (int k = 0; k < 2; ++k) {
      Vec2 xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      g[k] = (f(xp) - f(xm)) / (2.0 * h);
    }
    const double j00 = g[0].real(), j01 = g[1].real(), j10 = g[0].imag(), j11 = g[1].imag();
    const double det = j00 * j11 - j01 * j10;
    const double jn = j00 * j00 + j01 * j01 + j10 * j10 + j11 * j11;
    if (!(std::abs(det) > 1e-14 * jn) || jn == 0.0) break;
    const double r0 = -fx.real(), r1 = -fx.imag();
    x[0] += (j11 * r0 - j01 * r1) / det;
    x[1] += (-j10 * r0 + j00 * r1) / det;
    auto v = pair_values(x, ref1, ref2);
    ref1 = v[0];
    ref2 = v[1];
  }
  if (std::abs(f(x)) > best_abs) x = best_x;

  EpCandidate c;
  c.names = space.names;
  c.unknowns = x;
  c.iterations = it;
  c.point = space.point(x);
  const CMatrix h = space.matrix(x);
  auto es = eigendecompose(h, space.width_sign, opt.track.spectral);
  auto p = detail::nearest_pair(es, ref1, ref2);
  c.discriminant_abs = std::norm(es.value(p.first) - es.value(p.second));
  if (h.rows() == 2) c.detuning = h(0, 0) - h(1, 1);
  detail::describe_pair(es, c);
  if (c.min_gap > opt.ep_gap_tol * std::max(c.h_norm, 1e-300))
    throw SearchError("find_ep_nd: gap stagnated at " + std::to_string(c.min_gap) + " above tolerance", x[0], x[1]);
  detail::verify(space, c, opt);
  return c;
}

} // namespace oqs
