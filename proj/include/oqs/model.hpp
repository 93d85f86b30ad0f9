#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oqs/errors.hpp"

namespace oqs {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// How the sign of the imaginary part relates to the width.
///
/// physical_minus: decaying states carry Im E < 0, intrinsic widths enter the
/// diagonal as -(i/2) gamma0 and Gamma is reported as -2 Im E (>= 0 for decay).
/// paper_plus: eigenvalues are read as E + i Gamma/2, intrinsic widths enter as
/// +(i/2) gamma0 and Gamma is reported as +2 Im E.
enum class WidthSign { paper_plus, physical_minus };

inline double width_sign_factor(WidthSign s) { return s == WidthSign::paper_plus ? 1.0 : -1.0; }

inline const char* to_string(WidthSign s) {
  return s == WidthSign::paper_plus ? "paper_plus" : "physical_minus";
}

struct DiagonalEnergy {
  double e0 = 0.0;     // energy offset
  double e1 = 0.0;     // slope in the sweep parameter a
  double gamma0 = 0.0; // intrinsic width, >= 0
  bool operator==(const DiagonalEnergy&) const = default;
};

struct Channel {
  std::vector<cplx> w;
  std::string label;
  bool operator==(const Channel&) const = default;
};

struct Conventions {
  WidthSign width_sign = WidthSign::physical_minus;
  bool operator==(const Conventions&) const = default;
};

/// N states coupled to C environments through channel vectors W_c.
struct SystemSpec {
  int n_states = 0;
  std::vector<DiagonalEnergy> diag_energies;
  std::vector<Channel> channels;
  Conventions conventions;
  bool operator==(const SystemSpec&) const = default;

  int n_channels() const { return static_cast<int>(channels.size()); }
};

struct ParameterPoint {
  double a = 0.0;
  std::vector<cplx> omegas;
  bool operator==(const ParameterPoint&) const = default;
};

struct ParameterPath {
  std::vector<ParameterPoint> points;
  bool closed = false;
  bool operator==(const ParameterPath&) const = default;
};

struct HamiltonianMatrix {
  CMatrix entries;
  ParameterPoint point;
  WidthSign width_sign = WidthSign::physical_minus;

  int size() const { return static_cast<int>(entries.rows()); }
};

/// Lists every violated invariant; empty means the spec is usable.
inline std::vector<std::string> validate_spec(const SystemSpec& spec) {
  std::vector<std::string> out;
  if (spec.n_states < 2) out.push_back("n_states must be ≥ 2");
  if (spec.diag_energies.size() != static_cast<size_t>(spec.n_states) && spec.n_states >= 0)
    out.push_back("diag_energies: length " + std::to_string(spec.diag_energies.size()) +
                  " ≠ n_states " + std::to_string(spec.n_states));
  for (size_t k = 0; k < spec.diag_energies.size(); ++k) {
    const auto& d = spec.diag_energies[k];
    if (!std::isfinite(d.e0) || !std::isfinite(d.e1) || !std::isfinite(d.gamma0))
      out.push_back("diag_energies " + std::to_string(k) + ": non-finite value");
    if (d.gamma0 < 0.0) out.push_back("diag_energies " + std::to_string(k) + ": gamma0 must be ≥ 0");
  }
  if (spec.channels.empty()) out.push_back("channels: at least one channel required");
  bool any_nonzero = false;
  for (size_t c = 0; c < spec.channels.size(); ++c) {
    const auto& w = spec.channels[c].w;
    if (w.size() != static_cast<size_t>(spec.n_states))
      out.push_back("channel " + std::to_string(c) + ": w length ≠ N");
    for (const auto& x : w) {
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
        out.push_back("channel " + std::to_string(c) + ": non-finite entry");
        break;
      }
      if (x != cplx{}) any_nonzero = true;
    }
  }
  if (!spec.channels.empty() && !any_nonzero) out.push_back("channels: all channel vectors are zero");
  return out;
}

namespace detail {
inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "; " : "") + v[i];
  return s;
}
} // namespace detail

inline void require_valid(const SystemSpec& spec) {
  auto v = validate_spec(spec);
  if (!v.empty()) throw SpecError("invalid system spec: " + detail::join(v));
}

inline void require_point(const SystemSpec& spec, const ParameterPoint& p) {
  if (p.omegas.size() != spec.channels.size())
    throw SpecError("parameter point has " + std::to_string(p.omegas.size()) + " couplings, spec has " +
                    std::to_string(spec.channels.size()) + " channels");
}

/// Diagonal energy eps_k(a) including the intrinsic width.
inline cplx diagonal_energy(const SystemSpec& spec, int k, double a) {
  const auto& d = spec.diag_energies[k];
  double s = width_sign_factor(spec.conventions.width_sign);
  return {d.e0 + d.e1 * a, s * 0.5 * d.gamma0};
}

/// H = diag(eps_k(a)) - (i/2) sum_c omega_c W_c W_c^T.
/// Built from the upper triangle and mirrored, so H is exactly symmetric.
inline HamiltonianMatrix build_hamiltonian(const SystemSpec& spec, const ParameterPoint& point) {
  require_valid(spec);
  require_point(spec, point);
  const int n = spec.n_states;
  CMatrix h = CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) h(k, k) = diagonal_energy(spec, k, point.a);
  const cplx minus_half_i{0.0, -0.5};
  for (size_t c = 0; c < spec.channels.size(); ++c) {
    const cplx g = minus_half_i * point.omegas[c];
    if (g == cplx{}) continue;
    const auto& w = spec.channels[c].w;
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) h(j, k) += g * (w[j] * w[k]);
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) h(k, j) = h(j, k);
  return {std::move(h), point, spec.conventions.width_sign};
}

/// The full Hamiltonian with every off-diagonal element removed.
inline HamiltonianMatrix build_h0(const SystemSpec& spec, const ParameterPoint& point) {
  HamiltonianMatrix h = build_hamiltonian(spec, point);
  CMatrix d = CMatrix::Zero(h.size(), h.size());
  d.diagonal() = h.entries.diagonal();
  h.entries = std::move(d);
  return h;
}

inline std::vector<std::string> validate_path(const ParameterPath& path, int n_channels) {
  std::vector<std::string> out;
  if (path.points.size() < 2) out.push_back("path: at least 2 points required");
  for (size_t i = 0; i < path.points.size(); ++i)
    if (path.points[i].omegas.size() != static_cast<size_t>(n_channels))
      out.push_back("path point " + std::to_string(i) + ": omegas length ≠ C");
  if (path.closed && path.points.size() >= 2 && out.empty()) {
    const auto& f = path.points.front();
    const auto& l = path.points.back();
    bool same = std::abs(f.a - l.a) <= 1e-12;
    for (size_t c = 0; c < f.omegas.size(); ++c)
      same = same && std::abs(f.omegas[c].real() - l.omegas[c].real()) <= 1e-12 &&
             std::abs(f.omegas[c].imag() - l.omegas[c].imag()) <= 1e-12;
    if (!same) out.push_back("path: closed but first and last points differ");
  }
  return out;
}

inline ParameterPoint interpolate(const ParameterPoint& p, const ParameterPoint& q, double t) {
  ParameterPoint r;
  r.a = p.a + t * (q.a - p.a);
  r.omegas.resize(p.omegas.size());
  for (size_t c = 0; c < p.omegas.size(); ++c) r.omegas[c] = p.omegas[c] + t * (q.omegas[c] - p.omegas[c]);
  return r;
}

/// n equally spaced points from `from` to `to` inclusive.
inline ParameterPath line_path(const ParameterPoint& from, const ParameterPoint& to, int n) {
  if (n < 2) throw SpecError("line path needs at least 2 points");
  ParameterPath path;
  path.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (i == n - 1) {
      path.points.push_back(to);
    } else {
      path.points.push_back(interpolate(from, to, static_cast<double>(i) / (n - 1)));
    }
  }
  return path;
}

} // namespace oqs
