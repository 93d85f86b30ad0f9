#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "oqs/config.hpp"
#include "oqs/eplocator.hpp"
#include "oqs/harness.hpp"

namespace oqs {

inline std::string format_double(double x, int precision) {
  if (x == 0.0) return "0"; // folds -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

/// index,a,omega_1_re,omega_1_im,...,E_1,Gamma_1,r_1,H_1,...,defect,min_gap,equilibrium
inline std::string csv_header(int n_states, int n_channels) {
  std::string h = "index,a";
  for (int c = 1; c <= n_channels; ++c) h += ",omega_" + std::to_string(c) + "_re,omega_" + std::to_string(c) + "_im";
  for (int i = 1; i <= n_states; ++i) {
    const auto s = std::to_string(i);
    h += ",E_" + s + ",Gamma_" + s + ",r_" + s + ",H_" + s;
  }
  h += ",defect,min_gap,equilibrium\n";
  return h;
}

inline std::string csv_text(const std::vector<SweepRow>& rows, int n_states, int n_channels, int precision) {
  std::string out = csv_header(n_states, n_channels);
  auto f = [&](double x) { return format_double(x, precision); };
  for (const auto& r : rows) {
    std::string line = std::to_string(r.index) + "," + f(r.point.a);
    for (const auto& w : r.point.omegas) line += "," + f(w.real()) + "," + f(w.imag());
    for (int i = 0; i < n_states; ++i)
      line += "," + f(r.eigenvalues[i].energy) + "," + f(r.eigenvalues[i].width) + "," + f(r.rigidities[i]) + "," +
              f(r.entropies[i]);
    line += "," + f(r.defect) + "," + f(r.min_gap) + "," + (r.equilibrium ? "1" : "0") + "\n";
    out += line;
  }
  return out;
}

/// Whitespace-separated column files, one per observable family.
inline std::vector<std::pair<std::string, std::string>> plot_files(const std::vector<SweepRow>& rows, int n_states,
                                                                   const std::string& prefix, int precision) {
  auto f = [&](double x) { return format_double(x, precision); };
  std::string eig = "# index a", rig = "# index a", ent = "# index a";
  for (int i = 1; i <= n_states; ++i) {
    const auto s = std::to_string(i);
    eig += " ReE_" + s + " ImE_" + s;
    rig += " r_" + s;
    ent += " H_" + s;
  }
  eig += "\n";
  rig += "\n";
  ent += " H_mean\n";
  for (const auto& r : rows) {
    const std::string head = std::to_string(r.index) + " " + f(r.point.a);
    eig += head;
    rig += head;
    ent += head;
    double mean = 0.0;
    for (int i = 0; i < n_states; ++i) {
      eig += " " + f(r.eigenvalues[i].value.real()) + " " + f(r.eigenvalues[i].value.imag());
      rig += " " + f(r.rigidities[i]);
      ent += " " + f(r.entropies[i]);
      mean += r.entropies[i];
    }
    ent += " " + f(mean / n_states) + "\n";
    eig += "\n";
    rig += "\n";
  }
  return {{prefix + "_eigenvalues.dat", eig}, {prefix + "_rigidity.dat", rig}, {prefix + "_entropy.dat", ent}};
}

inline json verdict_json(const EquilibriumVerdict& v) {
  return json{{"passed", v.passed},
              {"orthogonality_defect", v.orthogonality_defect},
              {"prob_deviation", v.prob_deviation},
              {"entropy_gap", v.entropy_gap},
              {"min_gap", v.min_gap},
              {"t_gap", v.t_gap},
              {"conditions", json{{"orthogonal", v.orth_ok}, {"uniform_probability", v.prob_ok},
                                  {"max_entropy", v.entropy_ok}, {"far_from_ep", v.gap_ok}}},
              {"margins", json{{"orthogonality", v.thresholds.t_orth - v.orthogonality_defect},
                               {"probability", v.thresholds.t_prob - v.prob_deviation},
                               {"entropy", v.thresholds.t_ent - v.entropy_gap},
                               {"gap", v.min_gap - v.t_gap}}}};
}

inline json plateau_json(const PlateauReport& p) {
  return json{{"window", p.window},
              {"delta", p.delta},
              {"start_index", p.start_index ? json(*p.start_index) : json(nullptr)},
              {"saturated_value", p.saturated_value ? json(*p.saturated_value) : json(nullptr)}};
}

inline json candidate_json(const EpCandidate& c) {
  json j{{"unknowns", json{{c.names[0], c.unknowns[0]}, {c.names[1], c.unknowns[1]}}}};
  if (c.point) j["point"] = config_detail::point_json(*c.point);
  if (c.detuning) j["detuning"] = config_detail::to_json(*c.detuning);
  j["eigenvalue"] = config_detail::to_json(c.eigenvalue);
  j["pair"] = json::array({c.pair.first, c.pair.second});
  j["min_gap"] = c.min_gap;
  j["self_orth"] = c.self_orth;
  j["discriminant_abs"] = c.discriminant_abs;
  j["iterations"] = c.iterations;
  j["encircle_permutation"] = c.encircle_permutation ? json(*c.encircle_permutation) : json(nullptr);
  j["verified"] = c.verified;
  return j;
}

inline json eigensystem_json(const EigenSystem& es) {
  json arr = json::array();
  for (int i = 0; i < es.size(); ++i) {
    const auto& r = es.eigenvalues[i];
    arr.push_back(json{{"value", config_detail::to_json(r.value)},
                       {"E", r.energy},
                       {"Gamma", r.width},
                       {"tau", std::isfinite(r.lifetime) ? json(r.lifetime) : json("inf")},
                       {"self_orthogonal", static_cast<bool>(es.self_orthogonal[i])},
                       {"residual", es.residuals[i]}});
  }
  return arr;
}

/// Writes every file to a temporary sibling first and renames only after all
/// writes succeeded, so a failure leaves no partial output behind.
inline void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [path, content] : files) {
    fs::path tmp = path;
    tmp += ".tmp";
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) {
      cleanup();
      throw IoError("cannot write " + path.string());
    }
    temps.push_back(tmp);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.close();
    if (!os) {
      cleanup();
      throw IoError("write failed for " + path.string());
    }
  }
  for (size_t i = 0; i < files.size(); ++i) {
    std::error_code ec;
    fs::rename(temps[i], files[i].first, ec);
    if (ec) {
      cleanup();
      throw IoError("cannot rename into " + files[i].first.string() + ": " + ec.message());
    }
  }
}

struct RunReports {
  std::vector<EpCandidate> candidates;
  std::optional<EquilibriumVerdict> equilibrium;
  std::optional<int> equilibrium_index;
  std::optional<PlateauReport> plateau;
  json extra = json::object();
};

inline json summary_json(const RunConfig& cfg, const std::vector<SweepRow>& rows, const RunReports& rep) {
  json j;
  j["config"] = config_to_json(cfg);
  j["thresholds"] = config_detail::thresholds_json(cfg.thresholds);
  j["rows"] = rows.size();
  json cands = json::array();
  for (const auto& c : rep.candidates) cands.push_back(candidate_json(c));
  j["ep_candidates"] = cands;
  if (rep.equilibrium) {
    json e = verdict_json(*rep.equilibrium);
    e["row"] = rep.equilibrium_index ? json(*rep.equilibrium_index) : json(nullptr);
    j["equilibrium"] = e;
  } else {
    j["equilibrium"] = nullptr;
  }
  j["plateau"] = rep.plateau ? plateau_json(*rep.plateau) : json(nullptr);
  for (auto it = rep.extra.begin(); it != rep.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

/// CSV, JSON summary and plot-data files under out_dir.
inline std::vector<std::filesystem::path> emit_results(const std::vector<SweepRow>& rows, const RunReports& rep,
                                                      const RunConfig& cfg, const std::filesystem::path& out_dir) {
  if (rows.empty()) throw SpecError("emit_results: no rows");
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  const int n = cfg.spec.n_states, c = cfg.spec.n_channels(), prec = cfg.outputs.precision;
  files.push_back({out_dir / cfg.outputs.csv, csv_text(rows, n, c, prec)});
  files.push_back({out_dir / cfg.outputs.json, summary_json(cfg, rows, rep).dump(2) + "\n"});
  for (auto& [name, content] : plot_files(rows, n, cfg.outputs.plot_data, prec)) files.push_back({out_dir / name, content});
  write_files_atomically(files);
  std::vector<std::filesystem::path> out;
  for (const auto& f : files) out.push_back(f.first);
  return out;
}

} // namespace oqs
