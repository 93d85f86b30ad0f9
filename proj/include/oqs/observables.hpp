#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oqs/model.hpp"
#include "oqs/spectral.hpp"

namespace oqs {

/// r = |Phi^T Phi| / <Phi|Phi>, in [0, 1]; 1 for real vectors, 0 at an EP.
inline double phase_rigidity(const CVector& phi) {
  const double nn = phi.squaredNorm();
  if (!(nn > 0.0)) throw DomainError("phase_rigidity: zero vector");
  return std::abs(cplx(phi.transpose() * phi)) / nn;
}

/// <Phi|Phi> after scaling Phi so that Phi^T Phi = 1. Equals 1/r and is >= 1;
/// it diverges as the state approaches an EP.
inline double em_norm(const CVector& phi, double so_tol = 1e-10) {
  const double nrm = phi.norm();
  if (!(nrm > 0.0)) throw DomainError("em_norm: zero vector");
  CVector u = phi / nrm;
  const cplx tt = u.transpose() * u;
  if (std::abs(tt) < so_tol) throw DomainError("em_norm: self-orthogonal vector (diverging external mixing near an EP)");
  u /= std::sqrt(tt);
  return u.squaredNorm();
}

/// Shannon entropy in bits with 0 log 0 = 0.
inline double shannon_entropy(std::span<const double> p) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw DomainError("shannon_entropy: negative or NaN probability");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("shannon_entropy: probabilities sum to " + std::to_string(sum));
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log2(x);
  return std::clamp(h, 0.0, std::log2(static_cast<double>(p.size())));
}

inline double shannon_entropy(const std::vector<double>& p) { return shannon_entropy(std::span<const double>(p)); }

/// Expansion of the eigenfunctions in the eigenbasis of H0 (the standard basis).
/// Row i of b holds the components of unit-normalized Phi_i, so
/// Phi_i = sum_k b(i, k) Phi_k^0. The variant with a 1/N prefactor in front of
/// the sum corresponds to N * b; the probabilities p are the same for both.
struct MixingReport {
  CMatrix b;
  Eigen::MatrixXd p;
  std::vector<double> entropies;
  double max_entropy = 0.0;
};

inline bool is_diagonal(const CMatrix& m) {
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != cplx{}) return false;
  return true;
}

inline MixingReport mixing_from_vectors(const CMatrix& vectors) {
  const int n = static_cast<int>(vectors.cols());
  const int dim = static_cast<int>(vectors.rows());
  MixingReport rep;
  rep.b.resize(n, dim);
  rep.p.resize(n, dim);
  rep.entropies.resize(n);
  rep.max_entropy = std::log2(static_cast<double>(dim));
  for (int i = 0; i < n; ++i) {
    const double nrm = vectors.col(i).norm();
    if (!(nrm > 0.0)) throw DomainError("mixing_coefficients: zero eigenvector");
    rep.b.row(i) = (vectors.col(i) / nrm).transpose();
    double total = 0.0;
    for (int k = 0; k < dim; ++k) total += std::norm(rep.b(i, k));
    std::vector<double> row(dim);
    for (int k = 0; k < dim; ++k) row[k] = rep.p(i, k) = std::norm(rep.b(i, k)) / total;
    rep.entropies[i] = shannon_entropy(row);
  }
  return rep;
}

inline MixingReport mixing_coefficients(const EigenSystem& es, const HamiltonianMatrix& h0) {
  if (!is_diagonal(h0.entries)) throw SpecError("mixing_coefficients: H0 must be diagonal");
  if (h0.size() != es.right_vectors.rows()) throw SpecError("mixing_coefficients: dimension mismatch");
  return mixing_from_vectors(es.right_vectors);
}

/// Largest normalized overlap |<Phi_i|Phi_j>| / (|Phi_i| |Phi_j|), i != j.
inline double gram_defect(const CMatrix& vectors) {
  const int n = static_cast<int>(vectors.cols());
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = std::abs(cplx(vectors.col(i).adjoint() * vectors.col(j))) /
                       (vectors.col(i).norm() * vectors.col(j).norm());
      worst = std::max(worst, d);
    }
  return worst;
}

inline double gram_defect(const EigenSystem& es) { return gram_defect(es.right_vectors); }

struct EquilibriumThresholds {
  double t_orth = 1e-3;
  double t_prob = 0.05;
  double t_ent = 0.05; // bits
  double gap_factor = 0.1; // t_gap = gap_factor * level spacing unless t_gap is set
  std::optional<double> t_gap;
  double ep_gap_tol = 1e-7; // gaps at or below this * ||H||_F never pass
  bool operator==(const EquilibriumThresholds&) const = default;
};

struct GapInfo {
  double min_gap = 0.0;
  double level_spacing = 0.0;
  double h_norm = 0.0;
};

/// Mean distance between neighbouring diagonal energies of H0 ordered by (Re, Im).
inline double level_spacing(const HamiltonianMatrix& h0) {
  std::vector<cplx> d(h0.size());
  for (int k = 0; k < h0.size(); ++k) d[k] = h0.entries(k, k);
  if (d.size() < 2) return 0.0;
  std::sort(d.begin(), d.end(), [](cplx x, cplx y) { return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag(); });
  double s = 0.0;
  for (size_t k = 1; k < d.size(); ++k) s += std::abs(d[k] - d[k - 1]);
  return s / static_cast<double>(d.size() - 1);
}

inline GapInfo gap_info(const EigenSystem& es, const HamiltonianMatrix& h0) {
  return {min_gap(es).gap, level_spacing(h0), es.h_norm};
}

struct EquilibriumVerdict {
  double orthogonality_defect = 0.0;
  double prob_deviation = 0.0;
  double entropy_gap = 0.0;
  double min_gap = 0.0;
  double t_gap = 0.0; // resolved gap threshold
  bool orth_ok = false, prob_ok = false, entropy_ok = false, gap_ok = false;
  bool passed = false;
  EquilibriumThresholds thresholds;
};

inline EquilibriumVerdict detect_equilibrium(const EigenSystem& es, const MixingReport& rep, const GapInfo& gaps,
                                             const EquilibriumThresholds& th = {}) {
  EquilibriumVerdict v;
  v.thresholds = th;
  v.orthogonality_defect = gram_defect(es);
  const double uniform = 1.0 / static_cast<double>(rep.p.cols());
  v.prob_deviation = (rep.p.array() - uniform).abs().maxCoeff();
  v.entropy_gap = 0.0;
  for (double h : rep.entropies) v.entropy_gap = std::max(v.entropy_gap, rep.max_entropy - h);
  v.min_gap = gaps.min_gap;
  v.t_gap = th.t_gap ? *th.t_gap : th.gap_factor * gaps.level_spacing;
  v.orth_ok = v.orthogonality_defect <= th.t_orth;
  v.prob_ok = v.prob_deviation <= th.t_prob;
  v.entropy_ok = v.entropy_gap <= th.t_ent;
  v.gap_ok = v.min_gap >= v.t_gap && v.min_gap > th.ep_gap_tol * gaps.h_norm;
  v.passed = v.orth_ok && v.prob_ok && v.entropy_ok && v.gap_ok;
  return v;
}

} // namespace oqs
