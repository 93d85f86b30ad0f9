#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage/config/IO error,
// 2 numerical failure, 3 search not converged / no EP / no equilibrium.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oqs/config.hpp"
#include "oqs/emit.hpp"
#include "oqs/eplocator.hpp"
#include "oqs/harness.hpp"
#include "oqs/observables.hpp"

namespace oqs::cli {

enum ExitCode { ok = 0, usage = 1, numerical = 2, not_found = 3 };

struct Invocation {
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool out_given = false;
};

inline RunConfig load_config(const Invocation& inv) {
  std::ifstream is(inv.config_path, std::ios::binary);
  if (!is) throw IoError("cannot read config file " + inv.config_path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), inv.overrides);
}

inline std::string fmt_complex(cplx z, int precision) {
  return "(" + format_double(z.real(), precision) + ", " + format_double(z.imag(), precision) + ")";
}

inline SearchSpace make_space(const RunConfig& cfg) {
  if (!cfg.ep_search) throw SpecError("config has no ep_search section");
  const auto& e = *cfg.ep_search;
  if (e.mode == EpSearchConfig::direct)
    return direct_space(e.matrix, {*parse_direct_unknown(e.unknowns[0]), *parse_direct_unknown(e.unknowns[1])});
  if (!cfg.point) throw SpecError("ep_search in spec mode needs a base \"point\"");
  return spec_space(cfg.spec, *cfg.point, {*parse_spec_unknown(e.unknowns[0]), *parse_spec_unknown(e.unknowns[1])});
}

inline EpCandidate search(const RunConfig& cfg, const SearchSpace& space) {
  const auto& e = *cfg.ep_search;
  const auto opt = cfg.thresholds.ep();
  const int n = static_cast<int>(space.matrix(e.seed).rows());
  const bool newton = e.method == EpSearchConfig::newton || (e.method == EpSearchConfig::automatic && n == 2);
  if (newton) return find_ep_2x2(space, e.seed, opt);
  return find_ep_nd(space, {e.pair[0], e.pair[1]}, e.seed, opt);
}

inline void write_summary(const Invocation& inv, const RunConfig& cfg, const json& body) {
  if (!inv.out_given) return;
  std::filesystem::path dir(inv.out_dir);
  json j{{"config", config_to_json(cfg)}};
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  write_files_atomically({{dir / cfg.outputs.json, j.dump(2) + "\n"}});
}

inline int run_spectrum(const Invocation& inv, const RunConfig& cfg, std::ostream& out) {
  if (!cfg.point) throw SpecError("spectrum needs a \"point\" in the config");
  const auto h = build_hamiltonian(cfg.spec, *cfg.point);
  auto es = biorthonormalize(eigendecompose(h, cfg.thresholds.spectral()), cfg.thresholds.so_tol);
  const auto mix = mixing_coefficients(es, build_h0(cfg.spec, *cfg.point));
  const int p = cfg.outputs.precision;
  out << "# state eigenvalue E Gamma tau r H self_orthogonal\n";
  for (int i = 0; i < es.size(); ++i) {
    const auto& r = es.eigenvalues[i];
    out << (i + 1) << " " << fmt_complex(r.value, p) << " " << format_double(r.energy, p) << " "
        << format_double(r.width, p) << " " << (std::isfinite(r.lifetime) ? format_double(r.lifetime, p) : "inf") << " "
        << format_double(phase_rigidity(es.right_vectors.col(i)), p) << " " << format_double(mix.entropies[i], p) << " "
        << (es.self_orthogonal[i] ? "yes" : "no") << "\n";
  }
  write_summary(inv, cfg, json{{"eigenvalues", eigensystem_json(es)}});
  return ok;
}

inline int run_sweep_cmd(const Invocation& inv, const RunConfig& cfg, std::ostream& out, bool equilibrium) {
  if (!cfg.path) throw SpecError(inv.command + " needs a \"path\" in the config");
  const auto path = make_path(*cfg.path, cfg.spec);
  RunReports rep;
  std::vector<SweepRow> rows;
  bool found = true;
  if (equilibrium) {
    auto res = find_equilibrium(cfg.spec, path, cfg.sweep_options(), cfg.thresholds.plateau());
    rows = std::move(res.rows);
    rep.plateau = res.plateau;
    if (res.first_passing) {
      rep.equilibrium = rows[*res.first_passing].verdict;
      rep.equilibrium_index = *res.first_passing;
    } else {
      rep.equilibrium = rows.back().verdict;
      found = false;
    }
  } else {
    rows = run_sweep(cfg.spec, path, cfg.sweep_options());
    const auto series = mean_entropy_series(rows);
    const int w = std::max(2, std::min<int>(cfg.thresholds.plateau_window, static_cast<int>(series.size())));
    rep.plateau = detect_plateau(series, w, cfg.thresholds.plateau_delta);
    for (const auto& r : rows)
      if (r.equilibrium) {
        rep.equilibrium = r.verdict;
        rep.equilibrium_index = r.index;
        break;
      }
  }
  auto files = emit_results(rows, rep, cfg, inv.out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(inv.out_dir));
  out << rows.size() << " rows";
  if (equilibrium) {
    if (found) out << "; equilibrium at row " << *rep.equilibrium_index;
    else out << "; no equilibrium point on the path";
  }
  out << "\n";
  for (const auto& f : files) out << "wrote " << f.string() << "\n";
  return found ? ok : not_found;
}

inline int run_find_ep(const Invocation& inv, const RunConfig& cfg, std::ostream& out) {
  const auto space = make_space(cfg);
  const auto c = search(cfg, space);
  const int p = cfg.outputs.precision;
  out << c.names[0] << " = " << format_double(c.unknowns[0], p) << "\n"
      << c.names[1] << " = " << format_double(c.unknowns[1], p) << "\n"
      << "eigenvalue = " << fmt_complex(c.eigenvalue, p) << "\n"
      << "min_gap = " << format_double(c.min_gap, p) << "\n"
      << "self_orth = " << format_double(c.self_orth, p) << "\n"
      << "iterations = " << c.iterations << "\n"
      << "verified = " << (c.verified ? "true" : "false") << "\n";
  write_summary(inv, cfg, json{{"ep_candidates", json::array({candidate_json(c)})}});
  return c.verified ? ok : not_found;
}

inline int run_encircle(const Invocation& inv, const RunConfig& cfg, std::ostream& out) {
  const auto space = make_space(cfg);
  const auto& e = *cfg.ep_search;
  Vec2 center;
  json cands = json::array();
  if (e.center) {
    center = *e.center;
  } else {
    const auto c = search(cfg, space);
    center = c.unknowns;
    cands.push_back(candidate_json(c));
  }
  const auto loop = encircle(space, center, e.encircle.radius, e.encircle.steps, e.encircle.loops, cfg.thresholds.track());
  out << "center = (" << format_double(center[0], cfg.outputs.precision) << ", "
      << format_double(center[1], cfg.outputs.precision) << ")\npermutation =";
  for (int l : loop.permutation) out << " " << (l + 1);
  out << "\n" << (is_identity(loop.permutation) ? "labels return to themselves" : "labels exchanged") << "\n";

  if (inv.out_given) {
    const auto& ts = loop.trajectories;
    json values = json::array();
    std::string dat = "# theta";
    for (int l = 1; l <= ts.n_labels(); ++l) dat += " ReE_" + std::to_string(l) + " ImE_" + std::to_string(l);
    dat += "\n";
    for (int k = 0; k < ts.n_points(); ++k) {
      dat += format_double(ts.s[k], cfg.outputs.precision);
      for (int l = 0; l < ts.n_labels(); ++l)
        dat += " " + format_double(ts.values[l][k].real(), cfg.outputs.precision) + " " +
               format_double(ts.values[l][k].imag(), cfg.outputs.precision);
      dat += "\n";
    }
    for (int l = 0; l < ts.n_labels(); ++l) {
      json seq = json::array();
      for (int k = 0; k < ts.n_points(); ++k) seq.push_back(config_detail::to_json(ts.values[l][k]));
      values.push_back(seq);
    }
    std::filesystem::path dir(inv.out_dir);
    json j{{"config", config_to_json(cfg)},
           {"ep_candidates", cands},
           {"encircle", json{{"center", json::array({center[0], center[1]})},
                             {"radius", loop.radius},
                             {"loops", loop.loops},
                             {"permutation", loop.permutation},
                             {"ambiguous_steps", ts.ambiguous_steps},
                             {"values", values}}}};
    write_files_atomically({{dir / cfg.outputs.json, j.dump(2) + "\n"},
                            {dir / (cfg.outputs.plot_data + "_loop.dat"), dat}});
  }
  return ok;
}

/// Parses argv, runs the subcommand and maps failures onto exit codes.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Non-Hermitian open-system laboratory: spectra, EP search, encircling and equilibrium sweeps"};
  app.require_subcommand(1);
  Invocation inv;
  const char* names[] = {"spectrum", "sweep", "find-ep", "encircle", "equilibrium"};
  const char* help[] = {"eigenvalues and rigidities at the configured point",
                        "sweep the configured path and write CSV/JSON/plot data",
                        "locate an exceptional point from the configured seed",
                        "encircle a point and report the label permutation",
                        "sweep and report the first equilibrium point"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", inv.config_path, "JSON configuration file")->required();
    sub->add_option("--override", inv.overrides, "KEY=VALUE override (repeatable)");
    sub->add_option("--out", inv.out_dir, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code == 0 ? ok : usage;
  }
  inv.command = app.get_subcommands().front()->get_name();
  inv.out_given = !inv.out_dir.empty();
  if (!inv.out_given) inv.out_dir = ".";

  try {
    if (inv.out_given) {
      std::error_code ec;
      std::filesystem::create_directories(inv.out_dir, ec);
      if (ec) throw IoError("cannot create output directory " + inv.out_dir + ": " + ec.message());
    }
    const RunConfig cfg = load_config(inv);
    if (inv.command == "spectrum") return run_spectrum(inv, cfg, out);
    if (inv.command == "sweep") return run_sweep_cmd(inv, cfg, out, false);
    if (inv.command == "equilibrium") return run_sweep_cmd(inv, cfg, out, true);
    if (inv.command == "find-ep") return run_find_ep(inv, cfg, out);
    if (inv.command == "encircle") return run_encircle(inv, cfg, out);
  } catch (const SearchError& e) {
    err << "error: " << e.what() << " (last iterate " << e.last(0) << ", " << e.last(1) << ")\n";
    return not_found;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  }
  return usage;
}

} // namespace oqs::cli
