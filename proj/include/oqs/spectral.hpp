#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "oqs/eigensolver.hpp"
#include "oqs/model.hpp"

namespace oqs {

struct EigenvalueRecord {
  cplx value;
  double energy = 0.0;   // Re value
  double width = 0.0;    // Gamma under the active sign convention
  double lifetime = 0.0; // 1/|Gamma|, +inf for a zero width

  static EigenvalueRecord make(cplx v, WidthSign sign) {
    EigenvalueRecord r;
    r.value = v;
    r.energy = v.real();
    r.width = 2.0 * width_sign_factor(sign) * v.imag();
    r.lifetime = r.width == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / std::abs(r.width);
    return r;
  }
};

enum class Normalization { biorthogonal, unit, unnormalized };

struct EigenSystem {
  std::vector<EigenvalueRecord> eigenvalues;
  CMatrix right_vectors; // column i is Phi_i
  Normalization normalization = Normalization::unnormalized;
  std::vector<bool> self_orthogonal;
  std::vector<double> residuals;
  double h_norm = 0.0; // Frobenius norm of the decomposed matrix
  WidthSign width_sign = WidthSign::physical_minus;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  cplx value(int i) const { return eigenvalues[i].value; }
  CVector vector(int i) const { return right_vectors.col(i); }
};

struct SpectralOptions {
  double residual_rel = 1e-10; // residual contract, relative to ||H||_F
  double so_tol = 1e-10;       // |Phi^T Phi| of a unit vector below this is self-orthogonal
  int max_n = 64;
};

namespace detail {

inline double residual(const CMatrix& h, cplx lambda, const CVector& v) {
  return (h * v - lambda * v).norm();
}

// Closed form for 2x2: eigenvalues m +- sqrt(((a-d)/2)^2 + b c), vectors (b, lambda - a) or (lambda - d, c).
inline void solve_2x2(const CMatrix& h, std::vector<cplx>& vals, CMatrix& vecs) {
  const cplx a = h(0, 0), b = h(0, 1), c = h(1, 0), d = h(1, 1);
  vals.resize(2);
  vecs = CMatrix::Identity(2, 2);
  if (b == cplx{} && c == cplx{}) {
    vals = {a, d};
    return;
  }
  const cplx m = 0.5 * (a + d);
  const cplx hd = 0.5 * (a - d);
  const cplx s = std::sqrt(hd * hd + b * c);
  cplx l1 = m + s, l2 = m - s;
  // Recover the smaller root from the determinant when the difference cancels.
  if (std::abs(l1) < std::abs(l2)) std::swap(l1, l2);
  if (std::abs(l2) < 1e-3 * std::abs(l1) && l1 != cplx{}) l2 = (a * d - b * c) / l1;
  vals = {l1, l2};
  for (int k = 0; k < 2; ++k) {
    CVector u(2), w(2);
    u << b, vals[k] - a;
    w << vals[k] - d, c;
    CVector v = u.squaredNorm() >= w.squaredNorm() ? u : w;
    const double nv = v.norm();
    if (nv > 0.0) vecs.col(k) = v / nv;
    else vecs.col(k) = CMatrix::Identity(2, 2).col(k);
  }
}

// One or two steps of inverse iteration starting from v; returns the improved vector.
inline CVector inverse_iteration(const CMatrix& h, cplx lambda, CVector v, int steps = 2) {
  const int n = static_cast<int>(h.rows());
  const double eps = std::numeric_limits<double>::epsilon();
  const double hn = std::max(h.norm(), std::numeric_limits<double>::min());
  CMatrix shifted = h - (lambda + cplx{eps * hn, eps * hn}) * CMatrix::Identity(n, n);
  Eigen::PartialPivLU<CMatrix> lu(shifted);
  for (int s = 0; s < steps; ++s) {
    CVector x = lu.solve(v);
    const double nx = x.norm();
    if (!std::isfinite(nx) || nx == 0.0) break;
    v = x / nx;
  }
  return v;
}

} // namespace detail

/// Unit-normalizes every column and records residuals ||H Phi - E Phi||_2.
/// The output is sorted by (Re E, Im E).
inline EigenSystem eigendecompose(const CMatrix& h, WidthSign sign = WidthSign::physical_minus,
                                  const SpectralOptions& opt = {}) {
  const int n = static_cast<int>(h.rows());
  if (h.cols() != n) throw SpecError("eigendecompose: matrix is not square");
  if (n < 1 || n > opt.max_n) throw SpecError("eigendecompose: size must be in [1, " + std::to_string(opt.max_n) + "]");
  if (!h.allFinite()) throw NumericalError("eigendecompose: non-finite matrix entries", std::numeric_limits<double>::infinity());

  std::vector<cplx> vals(n);
  CMatrix vecs;
  if (n == 1) {
    vals[0] = h(0, 0);
    vecs = CMatrix::Identity(1, 1);
  } else if (n == 2) {
    detail::solve_2x2(h, vals, vecs);
  } else {
    auto sf = linalg::schur(h);
    for (int i = 0; i < n; ++i) vals[i] = sf.t(i, i);
    vecs = sf.z * linalg::triangular_eigenvectors(sf.t);
    for (int i = 0; i < n; ++i) vecs.col(i).normalize();
  }

  EigenSystem es;
  es.h_norm = h.norm();
  es.width_sign = sign;
  const double limit = opt.residual_rel * std::max(es.h_norm, std::numeric_limits<double>::min());

  std::vector<double> res(n);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    res[i] = detail::residual(h, vals[i], vecs.col(i));
    if (res[i] > limit) {
      CVector v = detail::inverse_iteration(h, vals[i], vecs.col(i));
      const double r2 = detail::residual(h, vals[i], v);
      if (r2 < res[i]) {
        vecs.col(i) = v;
        res[i] = r2;
      }
    }
    worst = std::max(worst, res[i]);
  }
  if (worst > limit)
    throw NumericalError("eigendecompose: residual contract violated (worst " + std::to_string(worst) + ")", worst);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    if (vals[x].real() != vals[y].real()) return vals[x].real() < vals[y].real();
    return vals[x].imag() < vals[y].imag();
  });

  es.right_vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    const int i = order[k];
    es.eigenvalues.push_back(EigenvalueRecord::make(vals[i], sign));
    es.right_vectors.col(k) = vecs.col(i);
    es.residuals.push_back(res[i]);
    const cplx tt = vecs.col(i).transpose() * vecs.col(i);
    es.self_orthogonal.push_back(std::abs(tt) < opt.so_tol);
  }
  es.normalization = Normalization::unit;
  return es;
}

inline EigenSystem eigendecompose(const HamiltonianMatrix& h, const SpectralOptions& opt = {}) {
  return eigendecompose(h.entries, h.width_sign, opt);
}

/// Scales each Phi_i so that Phi_i^T Phi_i = 1. Vectors that are
/// self-orthogonal at unit norm cannot be scaled; they stay unit-normalized
/// and are flagged.
inline EigenSystem biorthonormalize(EigenSystem es, double so_tol = 1e-10) {
  const int n = es.size();
  for (int i = 0; i < n; ++i) {
    auto col = es.right_vectors.col(i);
    const double nrm = col.norm();
    if (nrm == 0.0) throw DomainError("biorthonormalize: zero eigenvector");
    col /= nrm;
    const cplx tt = col.transpose() * col;
    es.self_orthogonal[i] = std::abs(tt) < so_tol;
    if (!es.self_orthogonal[i]) col /= std::sqrt(tt);
  }
  es.normalization = Normalization::biorthogonal;
  return es;
}

/// Copy with every eigenvector scaled to unit 2-norm.
inline EigenSystem unit_normalized(EigenSystem es) {
  for (int i = 0; i < es.size(); ++i) es.right_vectors.col(i).normalize();
  es.normalization = Normalization::unit;
  return es;
}

/// Smallest |E_i - E_j| over i != j, and the pair attaining it.
struct GapPair {
  double gap = std::numeric_limits<double>::infinity();
  int i = -1, j = -1;
};

inline GapPair min_gap(const EigenSystem& es) {
  GapPair g;
  for (int i = 0; i < es.size(); ++i)
    for (int j = i + 1; j < es.size(); ++j) {
      const double d = std::abs(es.value(i) - es.value(j));
      if (d < g.gap) g = {d, i, j};
    }
  return g;
}

} // namespace oqs
