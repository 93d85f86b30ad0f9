// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "oqs/oqs.hpp"
#include "test_support.hpp"

using namespace oqs;
using oqs::testing::I;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool ok;
  std::string detail;
};

Outcome eigensolver_contract() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst_res = 0.0, worst_trace = 0.0, worst_oracle = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 11;
    CMatrix h = oqs::testing::random_complex_symmetric(n, rng);
    auto es = eigendecompose(h);
    const double hn = h.norm();
    cplx tr{};
    std::vector<cplx> vals;
    for (int i = 0; i < n; ++i) {
      worst_res = std::max(worst_res, (h * es.vector(i) - es.value(i) * es.vector(i)).norm() / hn);
      tr += es.value(i);
      vals.push_back(es.value(i));
    }
    worst_trace = std::max(worst_trace, std::abs(tr - h.trace()) / hn);
    if (n <= 3)
      worst_oracle = std::max(worst_oracle, oqs::testing::multiset_distance(vals, oqs::testing::charpoly_roots(h)));
  }
  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "residual/||H|| %.2e, trace/||H|| %.2e, cubic oracle %.2e, %.3f s", worst_res,
                worst_trace, worst_oracle, secs);
  return {worst_res <= 1e-10 && worst_trace <= 1e-10 && worst_oracle <= 1e-9 && secs < 5.0, buf};
}

Outcome ep_fixture() {
  auto es = eigendecompose(oqs::testing::ep_fixture());
  double dev = 0.0, so = 0.0;
  for (int i = 0; i < 2; ++i) {
    dev = std::max(dev, std::abs(es.value(i) - 0.5 * I));
    const CVector v = es.vector(i).normalized();
    so = std::max(so, std::abs(cplx(v.transpose() * v)));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "|E - i/2| %.2e, |Phi^T Phi| %.2e", dev, so);
  return {dev <= 1e-10 && so <= 1e-8, buf};
}

Outcome ep_search() {
  auto space = direct_space({0.0, I, 0.5}, {DirectUnknown::eps2_re, DirectUnknown::eps2_im});
  auto c = find_ep_2x2(space, {0.0, 0.9});
  const double err = std::abs(cplx(c.unknowns[0], c.unknowns[1]) - I);
  char buf[160];
  std::snprintf(buf, sizeof buf, "|eps2 - i| %.2e after %d Newton steps", err, c.iterations);
  return {err <= 1e-8 && c.iterations <= 20, buf};
}

Outcome monodromy() {
  auto space = direct_space({0.0, I, 0.5}, {DirectUnknown::eps2_re, DirectUnknown::eps2_im});
  auto once = encircle(space, {0.0, 1.0}, 0.2, 400, 1);
  auto twice = encircle(space, {0.0, 1.0}, 0.2, 400, 2);
  const bool ok = is_transposition(once.permutation, 0, 1) && is_identity(twice.permutation);
  return {ok, std::string("one loop ") + (is_transposition(once.permutation, 0, 1) ? "(1 2)" : "not (1 2)") +
                  ", two loops " + (is_identity(twice.permutation) ? "identity" : "not identity")};
}

/// Re/Im order changes of the closed-form branches, continued along a fine grid.
std::pair<bool, bool> closed_form_flips(double kappa) {
  auto cur = oqs::testing::crossing_eigenvalues(-1.0, kappa);
  const cplx d0 = cur[0] - cur[1];
  for (int k = 1; k <= 20000; ++k) {
    auto r = oqs::testing::crossing_eigenvalues(-1.0 + 2.0 * k / 20000, kappa);
    if (std::abs(r[0] - cur[0]) > std::abs(r[1] - cur[0])) std::swap(r[0], r[1]);
    cur = r;
  }
  const cplx d1 = cur[0] - cur[1];
  return {(d0.real() > 0) != (d1.real() > 0), (d0.imag() > 0) != (d1.imag() > 0)};
}

Outcome vicinity() {
  const auto spec = oqs::testing::crossing_spec();
  auto classify = [&](double kappa) {
    auto path = line_path(oqs::testing::crossing_point(-1.0, kappa), oqs::testing::crossing_point(1.0, kappa), 201);
    return classify_crossing(track(spec, path), 0, 1);
  };
  auto below = classify(0.4), above = classify(0.6);
  auto ob = closed_form_flips(0.4), oa = closed_form_flips(0.6);
  const bool ok = below.kind == CrossingKind::ENERGY_EXCHANGE && above.kind == CrossingKind::WIDTH_EXCHANGE &&
                  ob.first && !ob.second && !oa.first && oa.second;
  return {ok, std::string("kappa 0.4: ") + to_string(below.kind) + ", kappa 0.6: " + to_string(above.kind) +
                  (ok ? ", closed form agrees" : ", closed form disagrees")};
}

Outcome em_divergence() {
  double prev_r = 2.0, prev_em = 0.0, worst_prod = 0.0, r8 = 0.0, em8 = 0.0;
  bool monotone = true;
  for (int n = 0; n <= 8; ++n) {
    CMatrix h = oqs::testing::ep_fixture();
    h(1, 1) += 0.2 * std::pow(2.0, -n);
    auto es = eigendecompose(h);
    const double r = phase_rigidity(es.vector(0)), em = em_norm(es.vector(0));
    monotone = monotone && r < prev_r && em > prev_em;
    worst_prod = std::max(worst_prod, std::abs(r * em - 1.0));
    prev_r = r;
    prev_em = em;
    r8 = r;
    em8 = em;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "r(8) %.4f, em(8) %.2f, max|r*em - 1| %.2e, monotone %s", r8, em8, worst_prod,
                monotone ? "yes" : "no");
  return {monotone && r8 < 0.05 && em8 > 20.0 && worst_prod <= 1e-10, buf};
}

Outcome entropy_units() {
  const double h2 = shannon_entropy(std::vector<double>{1.0, 0.0});
  const double h1 = shannon_entropy(std::vector<double>{0.5, 0.5});
  const double h4 = shannon_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25});
  std::mt19937_64 rng(7);
  std::exponential_distribution<double> ed;
  int over = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 15;
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& x : p) s += (x = ed(rng));
    for (auto& x : p) x /= s;
    if (shannon_entropy(p) > std::log2(static_cast<double>(n))) ++over;
  }
  const bool ok = std::abs(h2) <= 1e-12 && std::abs(h1 - 1.0) <= 1e-12 && std::abs(h4 - 2.0) <= 1e-12 && over == 0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "H(1,0)=%.3g H(1/2,1/2)=%.15g H(uniform 4)=%.15g, %d of 1000 above log2 N", h2, h1, h4,
                over);
  return {ok, buf};
}

Outcome equilibrium_oracle() {
  EigenSystem es;
  for (int i = 0; i < 4; ++i) es.eigenvalues.push_back(EigenvalueRecord::make(cplx(i, 0.0), WidthSign::physical_minus));
  es.right_vectors = oqs::testing::dft4();
  es.self_orthogonal.assign(4, false);
  es.residuals.assign(4, 0.0);
  es.h_norm = std::sqrt(14.0);
  HamiltonianMatrix h0;
  h0.entries = CMatrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) h0.entries(i, i) = static_cast<double>(i);

  auto rep = mixing_from_vectors(es.right_vectors);
  auto pass = detect_equilibrium(es, rep, gap_info(es, h0));
  double hmin = 2.0;
  for (double h : rep.entropies) hmin = std::min(hmin, h);
  const bool ok1 = pass.passed && pass.orthogonality_defect <= 1e-10 && pass.prob_deviation <= 1e-10 &&
                   std::abs(hmin - 2.0) <= 1e-12;

  auto bad = rep;
  const std::vector<double> row{0.35, 0.15, 0.25, 0.25};
  for (int k = 0; k < 4; ++k) bad.p(0, k) = row[k];
  bad.entropies[0] = shannon_entropy(row);
  auto fail_prob = detect_equilibrium(es, bad, gap_info(es, h0));
  const bool ok2 = !fail_prob.passed && !fail_prob.prob_ok && fail_prob.orth_ok && fail_prob.gap_ok;

  EquilibriumThresholds pinned;
  pinned.t_gap = 2.0; // above the smallest gap 1
  auto fail_gap = detect_equilibrium(es, rep, gap_info(es, h0), pinned);
  const bool ok3 = !fail_gap.passed && !fail_gap.gap_ok && fail_gap.orth_ok && fail_gap.prob_ok && fail_gap.entropy_ok;

  char buf[220];
  std::snprintf(buf, sizeof buf, "DFT passes (defect %.1e, dev %.1e); perturbed row dev %.2f fails; gap veto %s",
                pass.orthogonality_defect, pass.prob_deviation, fail_prob.prob_deviation, ok3 ? "fails" : "passes");
  return {ok1 && ok2 && ok3, buf};
}

Outcome determinism_performance() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  RunConfig cfg;
  cfg.spec.n_states = 8;
  for (int k = 0; k < 8; ++k) cfg.spec.diag_energies.push_back({1.0 * k, 0.3 * nd(rng), 0.05 * (k + 1)});
  for (int c = 0; c < 2; ++c) {
    Channel ch;
    for (int k = 0; k < 8; ++k) ch.w.push_back({nd(rng), 0.0});
    cfg.spec.channels.push_back(ch);
  }
  const auto path = line_path({0.0, {cplx(0.05, 0.0), cplx(0.0, 0.02)}}, {1.0, {cplx(0.2, 0.0), cplx(0.0, 0.1)}}, 10000);

  auto timed = [&](int threads, double& secs) {
    SweepOptions opt = cfg.sweep_options();
    opt.threads = threads;
    const auto t0 = Clock::now();
    auto rows = run_sweep(cfg.spec, path, opt);
    auto text = csv_text(rows, 8, 2, cfg.outputs.precision);
    secs = seconds_since(t0);
    return std::make_pair(rows.size(), text);
  };
  double t_serial = 0.0, t_parallel = 0.0;
  auto serial = timed(1, t_serial);
  auto parallel = timed(4, t_parallel);
  const bool same = serial.second == parallel.second;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu rows, serial %.2f s, 4 threads %.2f s, CSV %s", parallel.first, t_serial,
                t_parallel, same ? "byte-identical" : "differs");
  return {serial.first == 10000 && same && t_serial < 10.0 && t_parallel < 10.0, buf};
}

Outcome plateau() {
  std::vector<double> knee(200);
  for (int k = 0; k < 200; ++k) knee[k] = k < 60 ? 2.0 * k / 60.0 : 2.0;
  auto p = detect_plateau(knee, 10, 1e-3);
  std::vector<double> grow(200);
  for (int k = 0; k < 200; ++k) grow[k] = 0.01 * k;
  auto q = detect_plateau(grow, 10, 1e-3);
  const bool ok = p.start_index && std::abs(*p.start_index - 60) <= 10 && std::abs(*p.saturated_value - 2.0) <= 1e-3 &&
                  !q.start_index;
  char buf[160];
  std::snprintf(buf, sizeof buf, "knee series start %d (value %.6g), growing series %s", p.start_index.value_or(-1),
                p.saturated_value.value_or(0.0), q.start_index ? "detected" : "none");
  return {ok, buf};
}

} // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"eigensolver contract", eigensolver_contract},
      {"EP fixture coalescence", ep_fixture},
      {"EP search convergence", ep_search},
      {"monodromy", monodromy},
      {"vicinity classification", vicinity},
      {"EM divergence", em_divergence},
      {"entropy units", entropy_units},
      {"equilibrium detector", equilibrium_oracle},
      {"determinism and performance", determinism_performance},
      {"plateau detection", plateau},
  };
  int failed = 0, idx = 0;
  for (const auto& [name, fn] : criteria) {
    ++idx;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s\n", o.ok ? "PASS" : "FAIL", idx, name, o.detail.c_str());
    if (!o.ok) ++failed;
  }
  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
