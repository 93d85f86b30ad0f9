#pragma once

// Dense complex eigensolver for small general matrices: Householder reduction
// to upper Hessenberg form, single-shift QR sweeps (Wilkinson shift with
// periodic exceptional shifts) to a complex Schur form H = Z T Z^*, and
// eigenvectors of T by back substitution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "oqs/model.hpp"

namespace oqs::linalg {

struct SchurForm {
  CMatrix t; // upper triangular
  CMatrix z; // unitary
  int sweeps = 0;
};

namespace detail {

// Unitary rotation G = [[c, s], [-conj(s), c]] with G [x; y] = [r; 0].
struct Givens {
  double c = 1.0;
  cplx s{};

  static Givens make(cplx x, cplx y) {
    Givens g;
    const double ay = std::abs(y);
    if (ay == 0.0) return g;
    const double ax = std::abs(x);
    if (ax == 0.0) {
      g.c = 0.0;
      g.s = std::conj(y) / ay;
      return g;
    }
    const double nrm = std::hypot(ax, ay);
    g.c = ax / nrm;
    g.s = (x / ax) * std::conj(y) / nrm;
    return g;
  }

  // rows k, k+1 of m, columns [c0, c1)
  void apply_left(CMatrix& m, int k, int c0, int c1) const {
    for (int j = c0; j < c1; ++j) {
      const cplx a = m(k, j), b = m(k + 1, j);
      m(k, j) = c * a + s * b;
      m(k + 1, j) = -std::conj(s) * a + c * b;
    }
  }

  // columns k, k+1 of m multiplied by G^*, rows [r0, r1)
  void apply_right(CMatrix& m, int k, int r0, int r1) const {
    for (int i = r0; i < r1; ++i) {
      const cplx a = m(i, k), b = m(i, k + 1);
      m(i, k) = c * a + std::conj(s) * b;
      m(i, k + 1) = -s * a + c * b;
    }
  }
};

// Eigenvalue of [[a, b], [c, d]] closest to d.
inline cplx wilkinson_shift(cplx a, cplx b, cplx c, cplx d) {
  const cplx half_diff = 0.5 * (a - d);
  const cplx disc = std::sqrt(half_diff * half_diff + b * c);
  const cplx mid = 0.5 * (a + d);
  const cplx l1 = mid + disc, l2 = mid - disc;
  return std::abs(l1 - d) < std::abs(l2 - d) ? l1 : l2;
}

} // namespace detail

/// Reduces a to Hessenberg form in place, accumulating the transform in q (a_in = q a q^*).
inline void hessenberg(CMatrix& a, CMatrix& q) {
  const int n = static_cast<int>(a.rows());
  q = CMatrix::Identity(n, n);
  for (int k = 0; k + 2 < n; ++k) {
    const int m = n - k - 1;
    CVector x = a.block(k + 1, k, m, 1);
    double tail = x.tail(m - 1).squaredNorm();
    if (tail == 0.0) continue;
    const double xnorm = std::sqrt(std::norm(x(0)) + tail);
    const cplx phase = x(0) == cplx{} ? cplx{1.0} : x(0) / std::abs(x(0));
    CVector v = x;
    v(0) += phase * xnorm;
    v /= v.norm();
    // a <- (I - 2 v v^*) a (I - 2 v v^*) on the trailing block
    auto rows = a.middleRows(k + 1, m);
    Eigen::RowVectorXcd vr = v.adjoint() * rows;
    rows.noalias() -= 2.0 * v * vr;
    auto cols = a.middleCols(k + 1, m);
    CVector cv = cols * v;
    cols.noalias() -= 2.0 * cv * v.adjoint();
    auto qc = q.middleCols(k + 1, m);
    CVector qv = qc * v;
    qc.noalias() -= 2.0 * qv * v.adjoint();
    for (int i = k + 2; i < n; ++i) a(i, k) = cplx{};
  }
}

/// Complex Schur decomposition of a general square matrix.
/// Throws NumericalError if the QR iteration fails to deflate.
inline SchurForm schur(const CMatrix& input, int max_sweeps_per_eig = 40) {
  const int n = static_cast<int>(input.rows());
  SchurForm out;
  out.t = input;
  hessenberg(out.t, out.z);
  if (n <= 1) return out;

  CMatrix& t = out.t;
  CMatrix& z = out.z;
  const double eps = std::numeric_limits<double>::epsilon();
  const double anorm = std::max(t.norm(), std::numeric_limits<double>::min());
  int hi = n - 1;
  int iter = 0;
  int total = 0;
  while (hi > 0) {
    int l = hi;
    while (l > 0) {
      const double sub = std::abs(t(l, l - 1));
      const double diag = std::abs(t(l - 1, l - 1)) + std::abs(t(l, l));
      if (sub <= eps * diag || sub <= eps * anorm * 1e-3) {
        t(l, l - 1) = cplx{};
        break;
      }
      --l;
    }
    if (l == hi) {
      --hi;
      iter = 0;
      continue;
    }
    ++iter;
    ++total;
    if (iter > max_sweeps_per_eig)
      throw NumericalError("QR iteration did not converge (" + std::to_string(total) + " sweeps)",
                           std::abs(t(hi, hi - 1)));

    cplx shift;
    if (iter % 10 == 0) {
      shift = t(hi, hi) + std::abs(t(hi, hi - 1).real()) + (hi >= 2 ? std::abs(t(hi - 1, hi - 2).real()) : 0.0);
    } else {
      shift = detail::wilkinson_shift(t(hi - 1, hi - 1), t(hi - 1, hi), t(hi, hi - 1), t(hi, hi));
    }

    cplx x = t(l, l) - shift;
    cplx y = t(l + 1, l);
    for (int k = l; k < hi; ++k) {
      auto g = detail::Givens::make(x, y);
      g.apply_left(t, k, k > l ? k - 1 : l, n);
      if (k > l) t(k + 1, k - 1) = cplx{};
      g.apply_right(t, k, 0, std::min(k + 3, hi + 1));
      g.apply_right(z, k, 0, n);
      if (k + 1 < hi) {
        x = t(k + 1, k);
        y = t(k + 2, k);
      }
    }
  }
  out.sweeps = total;
  return out;
}

/// Column k holds the eigenvector of the upper triangular t for eigenvalue t(k, k).
/// Near-equal diagonal entries are separated by a floor on the pivot, as in LAPACK's trevc.
inline CMatrix triangular_eigenvectors(const CMatrix& t) {
  const int n = static_cast<int>(t.rows());
  const double eps = std::numeric_limits<double>::epsilon();
  const double small = std::max(eps * t.norm(), std::numeric_limits<double>::min());
  const double big = 1.0 / (eps * eps);
  CMatrix y = CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    y(k, k) = 1.0;
    for (int i = k - 1; i >= 0; --i) {
      cplx acc{};
      for (int j = i + 1; j <= k; ++j) acc += t(i, j) * y(j, k);
      cplx den = t(i, i) - t(k, k);
      if (std::abs(den) < small) den = small;
      y(i, k) = -acc / den;
      if (std::abs(y(i, k)) > big) y.col(k) /= std::abs(y(i, k));
    }
  }
  return y;
}

} // namespace oqs::linalg
