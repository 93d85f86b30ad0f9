#pragma once

// JSON run configuration. Complex numbers travel as two-element [re, im]
// arrays; unknown keys are rejected with the dotted path of the offending key.

#include <array>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "oqs/eplocator.hpp"
#include "oqs/harness.hpp"
#include "oqs/model.hpp"
#include "oqs/observables.hpp"
#include "oqs/tracking.hpp"

namespace oqs {

using json = nlohmann::ordered_json;

struct PathConfig {
  enum Kind { line, points, loop };
  Kind kind = line;
  // line
  ParameterPoint from, to;
  int n_points = 0;
  // points
  std::vector<ParameterPoint> list;
  bool closed = false;
  // loop
  ParameterPoint center;
  std::array<std::string, 2> axes{"a", "omega[0].im"};
  double radius = 0.0;
  int steps = 0;
  int loops = 1;
  bool operator==(const PathConfig&) const = default;
};

struct EncircleConfig {
  double radius = 0.2;
  int steps = 400;
  int loops = 1;
  bool operator==(const EncircleConfig&) const = default;
};

struct EpSearchConfig {
  enum Mode { direct, spec };
  enum Method { automatic, newton, simplex };
  Mode mode = direct;
  DirectMatrix matrix{};
  std::array<std::string, 2> unknowns{"eps2.re", "eps2.im"};
  Vec2 seed{};
  std::optional<Vec2> center;
  Method method = automatic;
  std::array<int, 2> pair{0, 1};
  EncircleConfig encircle;
  bool operator==(const EpSearchConfig&) const = default;
};

/// Every tunable tolerance, flattened; the option structs are derived from it.
struct Tolerances {
  // spectral
  double residual_rel = 1e-10;
  double so_tol = 1e-10;
  // tracking
  double match_tol = 0.25;
  double overlap_tol = 0.2;
  int max_refine = 12;
  int w_steps = 5;
  double approach_tol = 0.5;
  // EP search
  double ep_gap_tol = 1e-7;
  double ep_so_tol = 1e-6;
  int ep_max_iter = 50;
  double ep_residual_rel = 1e-12;
  double verify_radius = 1e-3;
  int verify_steps = 64;
  // equilibrium
  double t_orth = 1e-3;
  double t_prob = 0.05;
  double t_ent = 0.05;
  double gap_factor = 0.1;
  std::optional<double> t_gap;
  // plateau
  int plateau_window = 10;
  double plateau_delta = 1e-3;
  bool operator==(const Tolerances&) const = default;

  SpectralOptions spectral() const {
    SpectralOptions o;
    o.residual_rel = residual_rel;
    o.so_tol = so_tol;
    return o;
  }
  TrackOptions track() const {
    TrackOptions o;
    o.match_tol = match_tol;
    o.overlap_tol = overlap_tol;
    o.max_refine = max_refine;
    o.spectral = spectral();
    return o;
  }
  CrossingOptions crossing() const { return {w_steps, approach_tol}; }
  EpOptions ep() const {
    EpOptions o;
    o.max_iter = ep_max_iter;
    o.residual_rel = ep_residual_rel;
    o.ep_gap_tol = ep_gap_tol;
    o.ep_so_tol = ep_so_tol;
    o.radius = verify_radius;
    o.steps = verify_steps;
    o.track = track();
    return o;
  }
  EquilibriumThresholds equilibrium() const {
    EquilibriumThresholds t;
    t.t_orth = t_orth;
    t.t_prob = t_prob;
    t.t_ent = t_ent;
    t.gap_factor = gap_factor;
    t.t_gap = t_gap;
    t.ep_gap_tol = ep_gap_tol;
    return t;
  }
  PlateauOptions plateau() const { return {plateau_window, plateau_delta}; }
};

struct Outputs {
  std::string csv = "sweep.csv";
  std::string json = "summary.json";
  std::string plot_data = "plot";
  int precision = 12;
  bool operator==(const Outputs&) const = default;
};

struct RunConfig {
  SystemSpec spec;
  std::optional<ParameterPoint> point;
  std::optional<PathConfig> path;
  std::optional<EpSearchConfig> ep_search;
  Tolerances thresholds;
  Outputs outputs;
  int threads = 0;
  bool operator==(const RunConfig&) const = default;

  SweepOptions sweep_options() const {
    SweepOptions o;
    o.track = thresholds.track();
    o.thresholds = thresholds.equilibrium();
    o.threads = threads;
    return o;
  }
};

namespace config_detail {

inline std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string child(const std::string& path, size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw SpecError("schema error at " + (path.empty() ? std::string("<root>") : path) + ": " + msg);
}

inline const json& object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(child(path, it.key()), "unknown key");
  return j;
}

inline const json& required(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(child(path, key), "missing required key");
  return obj.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

inline bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

inline std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

inline cplx complex(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) fail(path, "complex needs [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

template <class T, class F>
void optional_field(const json& obj, const std::string& path, const char* key, T& dst, F&& conv) {
  if (obj.contains(key)) dst = conv(obj.at(key), child(path, key));
}

inline ParameterPoint parse_point(const json& j, const std::string& path) {
  object(j, path, {"a", "omegas"});
  ParameterPoint p;
  p.a = number(required(j, path, "a"), child(path, "a"));
  const auto& om = required(j, path, "omegas");
  const auto op = child(path, "omegas");
  if (!om.is_array()) fail(op, "expected an array");
  for (size_t i = 0; i < om.size(); ++i) p.omegas.push_back(complex(om[i], child(op, i)));
  return p;
}

inline json point_json(const ParameterPoint& p) {
  json om = json::array();
  for (auto w : p.omegas) om.push_back(to_json(w));
  return json{{"a", p.a}, {"omegas", om}};
}

inline SystemSpec parse_spec(const json& j, const std::string& path) {
  object(j, path, {"n_states", "diag_energies", "channels", "conventions"});
  SystemSpec s;
  s.n_states = integer(required(j, path, "n_states"), child(path, "n_states"));
  if (s.n_states < 2) fail(child(path, "n_states"), "n_states must be ≥ 2");
  const auto dp = child(path, "diag_energies");
  const auto& de = required(j, path, "diag_energies");
  if (!de.is_array()) fail(dp, "expected an array");
  for (size_t k = 0; k < de.size(); ++k) {
    const auto ep = child(dp, k);
    object(de[k], ep, {"e0", "e1", "gamma0"});
    DiagonalEnergy d;
    optional_field(de[k], ep, "e0", d.e0, number);
    optional_field(de[k], ep, "e1", d.e1, number);
    optional_field(de[k], ep, "gamma0", d.gamma0, number);
    s.diag_energies.push_back(d);
  }
  const auto cp = child(path, "channels");
  const auto& ch = required(j, path, "channels");
  if (!ch.is_array()) fail(cp, "expected an array");
  for (size_t c = 0; c < ch.size(); ++c) {
    const auto pp = child(cp, c);
    object(ch[c], pp, {"w", "label"});
    Channel chan;
    const auto& w = required(ch[c], pp, "w");
    if (!w.is_array()) fail(child(pp, "w"), "expected an array");
    for (size_t k = 0; k < w.size(); ++k) chan.w.push_back(complex(w[k], child(child(pp, "w"), k)));
    optional_field(ch[c], pp, "label", chan.label, string);
    s.channels.push_back(std::move(chan));
  }
  if (j.contains("conventions")) {
    const auto vp = child(path, "conventions");
    object(j.at("conventions"), vp, {"width_sign"});
    if (j.at("conventions").contains("width_sign")) {
      auto ws = string(j.at("conventions").at("width_sign"), child(vp, "width_sign"));
      if (ws == "paper_plus") s.conventions.width_sign = WidthSign::paper_plus;
      else if (ws == "physical_minus") s.conventions.width_sign = WidthSign::physical_minus;
      else fail(child(vp, "width_sign"), "expected \"paper_plus\" or \"physical_minus\"");
    }
  }
  auto bad = validate_spec(s);
  if (!bad.empty()) fail(path, detail::join(bad));
  return s;
}

inline json spec_json(const SystemSpec& s) {
  json de = json::array();
  for (const auto& d : s.diag_energies) de.push_back(json{{"e0", d.e0}, {"e1", d.e1}, {"gamma0", d.gamma0}});
  json ch = json::array();
  for (const auto& c : s.channels) {
    json w = json::array();
    for (auto x : c.w) w.push_back(to_json(x));
    ch.push_back(json{{"w", w}, {"label", c.label}});
  }
  return json{{"n_states", s.n_states},
              {"diag_energies", de},
              {"channels", ch},
              {"conventions", json{{"width_sign", to_string(s.conventions.width_sign)}}}};
}

inline PathConfig parse_path(const json& j, const std::string& path) {
  object(j, path, {"kind", "from", "to", "points", "closed", "center", "axes", "radius", "steps", "loops"});
  PathConfig pc;
  const auto kind = string(required(j, path, "kind"), child(path, "kind"));
  if (kind == "line") {
    object(j, path, {"kind", "from", "to", "points"});
    pc.kind = PathConfig::line;
    pc.from = parse_point(required(j, path, "from"), child(path, "from"));
    pc.to = parse_point(required(j, path, "to"), child(path, "to"));
    pc.n_points = integer(required(j, path, "points"), child(path, "points"));
    if (pc.n_points < 2) fail(child(path, "points"), "at least 2 points required");
  } else if (kind == "points") {
    object(j, path, {"kind", "points", "closed"});
    pc.kind = PathConfig::points;
    const auto pp = child(path, "points");
    const auto& arr = required(j, path, "points");
    if (!arr.is_array()) fail(pp, "expected an array of points");
    for (size_t i = 0; i < arr.size(); ++i) pc.list.push_back(parse_point(arr[i], child(pp, i)));
    if (pc.list.size() < 2) fail(pp, "at least 2 points required");
    optional_field(j, path, "closed", pc.closed, boolean);
  } else if (kind == "loop") {
    object(j, path, {"kind", "center", "axes", "radius", "steps", "loops"});
    pc.kind = PathConfig::loop;
    pc.center = parse_point(required(j, path, "center"), child(path, "center"));
    if (j.contains("axes")) {
      const auto& ax = j.at("axes");
      if (!ax.is_array() || ax.size() != 2) fail(child(path, "axes"), "expected two unknown names");
      for (int k = 0; k < 2; ++k) {
        pc.axes[k] = string(ax[k], child(child(path, "axes"), k));
        if (!parse_spec_unknown(pc.axes[k])) fail(child(child(path, "axes"), k), "expected \"a\" or \"omega[c].re|im\"");
      }
    }
    pc.radius = number(required(j, path, "radius"), child(path, "radius"));
    if (!(pc.radius > 0)) fail(child(path, "radius"), "must be positive");
    pc.steps = integer(required(j, path, "steps"), child(path, "steps"));
    if (pc.steps < 16) fail(child(path, "steps"), "at least 16 steps required");
    optional_field(j, path, "loops", pc.loops, integer);
    if (pc.loops < 1) fail(child(path, "loops"), "must be ≥ 1");
  } else {
    fail(child(path, "kind"), "expected \"line\", \"points\" or \"loop\"");
  }
  return pc;
}

inline json path_json(const PathConfig& p) {
  switch (p.kind) {
  case PathConfig::line:
    return json{{"kind", "line"}, {"from", point_json(p.from)}, {"to", point_json(p.to)}, {"points", p.n_points}};
  case PathConfig::points: {
    json arr = json::array();
    for (const auto& q : p.list) arr.push_back(point_json(q));
    return json{{"kind", "points"}, {"points", arr}, {"closed", p.closed}};
  }
  case PathConfig::loop:
    return json{{"kind", "loop"},     {"center", point_json(p.center)}, {"axes", json::array({p.axes[0], p.axes[1]})},
                {"radius", p.radius}, {"steps", p.steps},               {"loops", p.loops}};
  }
  return {};
}

inline Vec2 vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) fail(path, "expected [x0, x1]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline EpSearchConfig parse_ep_search(const json& j, const std::string& path) {
  object(j, path, {"mode", "matrix", "unknowns", "seed", "center", "method", "pair", "encircle"});
  EpSearchConfig e;
  const auto mode = string(required(j, path, "mode"), child(path, "mode"));
  if (mode == "direct") e.mode = EpSearchConfig::direct;
  else if (mode == "spec") e.mode = EpSearchConfig::spec;
  else fail(child(path, "mode"), "expected \"direct\" or \"spec\"");
  if (e.mode == EpSearchConfig::direct) {
    const auto mp = child(path, "matrix");
    const auto& m = required(j, path, "matrix");
    object(m, mp, {"eps1", "eps2", "omega"});
    e.matrix.eps1 = complex(required(m, mp, "eps1"), child(mp, "eps1"));
    e.matrix.eps2 = complex(required(m, mp, "eps2"), child(mp, "eps2"));
    e.matrix.omega = complex(required(m, mp, "omega"), child(mp, "omega"));
  } else if (j.contains("matrix")) {
    fail(child(path, "matrix"), "only valid in direct mode");
  }
  const auto up = child(path, "unknowns");
  const auto& un = required(j, path, "unknowns");
  if (!un.is_array() || un.size() != 2) fail(up, "expected two unknown names");
  for (int k = 0; k < 2; ++k) {
    e.unknowns[k] = string(un[k], child(up, k));
    const bool ok = e.mode == EpSearchConfig::direct ? parse_direct_unknown(e.unknowns[k]).has_value()
                                                     : parse_spec_unknown(e.unknowns[k]).has_value();
    if (!ok) fail(child(up, k), "unrecognized unknown \"" + e.unknowns[k] + "\"");
  }
  e.seed = vec2(required(j, path, "seed"), child(path, "seed"));
  if (j.contains("center")) e.center = vec2(j.at("center"), child(path, "center"));
  if (j.contains("method")) {
    auto m = string(j.at("method"), child(path, "method"));
    if (m == "auto") e.method = EpSearchConfig::automatic;
    else if (m == "newton") e.method = EpSearchConfig::newton;
    else if (m == "simplex") e.method = EpSearchConfig::simplex;
    else fail(child(path, "method"), "expected \"auto\", \"newton\" or \"simplex\"");
  }
  if (j.contains("pair")) {
    const auto& p = j.at("pair");
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
      fail(child(path, "pair"), "expected [i, j]");
    e.pair = {p[0].get<int>(), p[1].get<int>()};
  }
  if (j.contains("encircle")) {
    const auto ep = child(path, "encircle");
    object(j.at("encircle"), ep, {"radius", "steps", "loops"});
    optional_field(j.at("encircle"), ep, "radius", e.encircle.radius, number);
    optional_field(j.at("encircle"), ep, "steps", e.encircle.steps, integer);
    optional_field(j.at("encircle"), ep, "loops", e.encircle.loops, integer);
    if (!(e.encircle.radius > 0)) fail(child(ep, "radius"), "must be positive");
    if (e.encircle.steps < 16) fail(child(ep, "steps"), "at least 16 steps required");
    if (e.encircle.loops < 1) fail(child(ep, "loops"), "must be ≥ 1");
  }
  return e;
}

inline json ep_search_json(const EpSearchConfig& e) {
  json j{{"mode", e.mode == EpSearchConfig::direct ? "direct" : "spec"}};
  if (e.mode == EpSearchConfig::direct)
    j["matrix"] = json{{"eps1", to_json(e.matrix.eps1)}, {"eps2", to_json(e.matrix.eps2)}, {"omega", to_json(e.matrix.omega)}};
  j["unknowns"] = json::array({e.unknowns[0], e.unknowns[1]});
  j["seed"] = json::array({e.seed[0], e.seed[1]});
  if (e.center) j["center"] = json::array({(*e.center)[0], (*e.center)[1]});
  j["method"] = e.method == EpSearchConfig::automatic ? "auto" : e.method == EpSearchConfig::newton ? "newton" : "simplex";
  j["pair"] = json::array({e.pair[0], e.pair[1]});
  j["encircle"] = json{{"radius", e.encircle.radius}, {"steps", e.encircle.steps}, {"loops", e.encircle.loops}};
  return j;
}

inline Tolerances parse_thresholds(const json& j, const std::string& path) {
  object(j, path, {"residual_rel", "so_tol", "match_tol", "overlap_tol", "max_refine", "w_steps", "approach_tol",
                   "ep_gap_tol", "ep_so_tol", "ep_max_iter", "ep_residual_rel", "verify_radius", "verify_steps",
                   "t_orth", "t_prob", "t_ent", "gap_factor", "t_gap", "plateau_window", "plateau_delta"});
  Tolerances t;
  auto num = [&](const char* k, double& d) {
    optional_field(j, path, k, d, number);
    if (!(d >= 0.0)) fail(child(path, k), "must be non-negative");
  };
  auto cnt = [&](const char* k, int& v, int lo) {
    optional_field(j, path, k, v, integer);
    if (v < lo) fail(child(path, k), "must be ≥ " + std::to_string(lo));
  };
  num("residual_rel", t.residual_rel);
  num("so_tol", t.so_tol);
  num("match_tol", t.match_tol);
  num("overlap_tol", t.overlap_tol);
  cnt("max_refine", t.max_refine, 0);
  cnt("w_steps", t.w_steps, 1);
  num("approach_tol", t.approach_tol);
  num("ep_gap_tol", t.ep_gap_tol);
  num("ep_so_tol", t.ep_so_tol);
  cnt("ep_max_iter", t.ep_max_iter, 1);
  num("ep_residual_rel", t.ep_residual_rel);
  num("verify_radius", t.verify_radius);
  cnt("verify_steps", t.verify_steps, 16);
  num("t_orth", t.t_orth);
  num("t_prob", t.t_prob);
  num("t_ent", t.t_ent);
  num("gap_factor", t.gap_factor);
  if (j.contains("t_gap") && !j.at("t_gap").is_null()) {
    t.t_gap = number(j.at("t_gap"), child(path, "t_gap"));
    if (!(*t.t_gap >= 0.0)) fail(child(path, "t_gap"), "must be non-negative");
  }
  cnt("plateau_window", t.plateau_window, 2);
  num("plateau_delta", t.plateau_delta);
  return t;
}

inline json thresholds_json(const Tolerances& t) {
  return json{{"residual_rel", t.residual_rel},
              {"so_tol", t.so_tol},
              {"match_tol", t.match_tol},
              {"overlap_tol", t.overlap_tol},
              {"max_refine", t.max_refine},
              {"w_steps", t.w_steps},
              {"approach_tol", t.approach_tol},
              {"ep_gap_tol", t.ep_gap_tol},
              {"ep_so_tol", t.ep_so_tol},
              {"ep_max_iter", t.ep_max_iter},
              {"ep_residual_rel", t.ep_residual_rel},
              {"verify_radius", t.verify_radius},
              {"verify_steps", t.verify_steps},
              {"t_orth", t.t_orth},
              {"t_prob", t.t_prob},
              {"t_ent", t.t_ent},
              {"gap_factor", t.gap_factor},
              {"t_gap", t.t_gap ? json(*t.t_gap) : json(nullptr)},
              {"plateau_window", t.plateau_window},
              {"plateau_delta", t.plateau_delta}};
}

inline std::pair<int, int> line_column(const std::string& text, size_t byte) {
  int line = 1, col = 1;
  for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// "a.b.2.c" -> object/array navigation; creates missing object keys.
inline void set_dotted(json& root, const std::string& key, const json& value) {
  json* node = &root;
  size_t pos = 0;
  while (true) {
    const size_t dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw SpecError("override: malformed key \"" + key + "\"");
    json* next = nullptr;
    if (node->is_array()) {
      size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (...) {
        throw SpecError("override: \"" + part + "\" is not an array index in \"" + key + "\"");
      }
      if (idx >= node->size()) throw SpecError("override: index " + part + " out of range in \"" + key + "\"");
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw SpecError("override: \"" + key + "\" descends into a scalar");
      next = &(*node)[part];
    }
    node = next;
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  *node = value;
}

} // namespace config_detail

/// Applies KEY=VALUE overrides; VALUE is parsed as JSON, falling back to a string.
inline void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw SpecError("override must be KEY=VALUE: \"" + o + "\"");
    const std::string key = o.substr(0, eq), raw = o.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    config_detail::set_dotted(doc, key, value);
  }
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = config_detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw SpecError("config syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                    e.what());
  }
}

inline RunConfig config_from_json(const json& j) {
  using namespace config_detail;
  object(j, "", {"spec", "point", "path", "ep_search", "thresholds", "outputs", "threads"});
  RunConfig cfg;
  cfg.spec = parse_spec(required(j, "", "spec"), "spec");
  if (j.contains("point")) {
    cfg.point = parse_point(j.at("point"), "point");
    if (cfg.point->omegas.size() != cfg.spec.channels.size()) fail("point.omegas", "length must equal the number of channels");
  }
  if (j.contains("path")) {
    cfg.path = parse_path(j.at("path"), "path");
    auto check = [&](const ParameterPoint& p, const std::string& where) {
      if (p.omegas.size() != cfg.spec.channels.size()) fail(where, "length must equal the number of channels");
    };
    switch (cfg.path->kind) {
    case PathConfig::line:
      check(cfg.path->from, "path.from.omegas");
      check(cfg.path->to, "path.to.omegas");
      break;
    case PathConfig::points:
      for (size_t i = 0; i < cfg.path->list.size(); ++i)
        check(cfg.path->list[i], "path.points[" + std::to_string(i) + "].omegas");
      break;
    case PathConfig::loop:
      check(cfg.path->center, "path.center.omegas");
      for (int k = 0; k < 2; ++k) {
        auto u = *parse_spec_unknown(cfg.path->axes[k]);
        if (u.kind != SpecUnknown::a && u.channel >= cfg.spec.n_channels())
          fail("path.axes[" + std::to_string(k) + "]", "refers to a missing channel");
      }
      if (cfg.path->axes[0] == cfg.path->axes[1]) fail("path.axes", "axes must differ");
      break;
    }
  }
  if (j.contains("ep_search")) cfg.ep_search = parse_ep_search(j.at("ep_search"), "ep_search");
  if (j.contains("thresholds")) cfg.thresholds = parse_thresholds(j.at("thresholds"), "thresholds");
  if (j.contains("outputs")) {
    const auto& o = object(j.at("outputs"), "outputs", {"csv", "json", "plot_data", "precision"});
    optional_field(o, "outputs", "csv", cfg.outputs.csv, string);
    optional_field(o, "outputs", "json", cfg.outputs.json, string);
    optional_field(o, "outputs", "plot_data", cfg.outputs.plot_data, string);
    optional_field(o, "outputs", "precision", cfg.outputs.precision, integer);
    if (cfg.outputs.precision < 6 || cfg.outputs.precision > 17) fail("outputs.precision", "must be in [6, 17]");
  }
  if (j.contains("threads")) {
    cfg.threads = integer(j.at("threads"), "threads");
    if (cfg.threads < 0) fail("threads", "must be ≥ 0");
  }
  return cfg;
}

/// Parses and validates a JSON configuration document.
inline RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
  json j = parse_json_text(text);
  apply_overrides(j, overrides);
  return config_from_json(j);
}

/// Canonical JSON form of a configuration; parse_config(config_to_json(c).dump()) == c.
inline json config_to_json(const RunConfig& c) {
  using namespace config_detail;
  json j{{"spec", spec_json(c.spec)}};
  if (c.point) j["point"] = point_json(*c.point);
  if (c.path) j["path"] = path_json(*c.path);
  if (c.ep_search) j["ep_search"] = ep_search_json(*c.ep_search);
  j["thresholds"] = thresholds_json(c.thresholds);
  j["outputs"] = json{{"csv", c.outputs.csv}, {"json", c.outputs.json}, {"plot_data", c.outputs.plot_data},
                      {"precision", c.outputs.precision}};
  j["threads"] = c.threads;
  return j;
}

/// Expands the configured path into explicit points.
inline ParameterPath make_path(const PathConfig& pc, const SystemSpec& spec) {
  switch (pc.kind) {
  case PathConfig::line: return line_path(pc.from, pc.to, pc.n_points);
  case PathConfig::points: {
    ParameterPath p{pc.list, pc.closed};
    auto bad = validate_path(p, spec.n_channels());
    if (!bad.empty()) throw SpecError("invalid path: " + detail::join(bad));
    return p;
  }
  case PathConfig::loop: {
    std::array<SpecUnknown, 2> ax{*parse_spec_unknown(pc.axes[0]), *parse_spec_unknown(pc.axes[1])};
    for (const auto& u : ax)
      if (u.kind != SpecUnknown::a && u.channel >= spec.n_channels())
        throw SpecError("loop axis " + to_string(u) + " refers to a missing channel");
    if (ax[0] == ax[1]) throw SpecError("loop axes must differ");
    const Vec2 c = extract_unknowns(pc.center, ax);
    ParameterPath p;
    p.closed = true;
    const int total = pc.steps * pc.loops;
    for (int k = 0; k <= total; ++k) {
      const double th = 2.0 * std::numbers::pi * k / pc.steps;
      Vec2 x{c[0] + pc.radius * std::cos(th), c[1] + pc.radius * std::sin(th)};
      p.points.push_back(apply_unknowns(pc.center, ax, x));
    }
    p.points.back() = p.points.front();
    return p;
  }
  }
  throw SpecError("unknown path kind");
}

} // namespace oqs
