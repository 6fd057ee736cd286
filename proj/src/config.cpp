#include "levelflow/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "levelflow/error.hpp"

namespace levelflow {

NumericalParams default_params() { return NumericalParams{}; }

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v, int line) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out))
    throw ConfigError("expected a number, got '" + v + "'", line);
  return out;
}

int to_int(const std::string& v, int line) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("expected an integer, got '" + v + "'", line);
  return out;
}

std::vector<double> to_list(const std::string& v, std::size_t n, int line) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto comma = v.find(',', pos);
    const auto end = comma == std::string::npos ? v.size() : comma;
    out.push_back(to_double(trim(std::string_view(v).substr(pos, end - pos)), line));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.size() != n)
    throw ConfigError("expected " + std::to_string(n) + " comma-separated numbers, got '" + v + "'",
                      line);
  return out;
}

Vec2 to_vec(const std::string& v, int line) {
  const auto l = to_list(v, 2, line);
  return {l[0], l[1]};
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'", line);
}

template <typename E>
E to_enum(const std::string& v, int line, std::initializer_list<std::pair<std::string_view, E>> table) {
  std::string options;
  for (const auto& [name, value] : table) {
    if (v == name) return value;
    options += (options.empty() ? "" : "|") + std::string(name);
  }
  throw ConfigError("unknown value '" + v + "', expected " + options, line);
}

BoundaryKind to_boundary(const std::string& v, int line) {
  return to_enum<BoundaryKind>(v, line,
                               {{"dirichlet", BoundaryKind::dirichlet},
                                {"open", BoundaryKind::open},
                                {"slip", BoundaryKind::slip},
                                {"inflow", BoundaryKind::inflow}});
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}
std::string fmt(Vec2 v) { return fmt(v.x) + ", " + fmt(v.y); }
std::string fmt(bool b) { return b ? "true" : "false"; }

using Setter = std::function<void(ScenarioConfig&, const std::string&, int)>;

std::map<std::string, Setter> make_setters() {
  std::map<std::string, Setter> s;
  s["scenario.name"] = [](auto& c, auto& v, int) { c.name = v; };
  s["domain.x0"] = [](auto& c, auto& v, int l) { c.domain.x0 = to_double(v, l); };
  s["domain.x1"] = [](auto& c, auto& v, int l) { c.domain.x1 = to_double(v, l); };
  s["domain.y0"] = [](auto& c, auto& v, int l) { c.domain.y0 = to_double(v, l); };
  s["domain.y1"] = [](auto& c, auto& v, int l) { c.domain.y1 = to_double(v, l); };
  s["mesh.h0"] = [](auto& c, auto& v, int l) { c.h0 = to_double(v, l); };
  s["mesh.r_max"] = [](auto& c, auto& v, int l) { c.num.r_max = to_int(v, l); };
  s["time.t_final"] = [](auto& c, auto& v, int l) { c.t_final = to_double(v, l); };
  s["time.dt_max"] = [](auto& c, auto& v, int l) { c.dt_max = to_double(v, l); };
  s["time.dt"] = [](auto& c, auto& v, int l) { c.dt = to_double(v, l); };
  s["time.first_step_factor"] = [](auto& c, auto& v, int l) { c.first_step_factor = to_double(v, l); };

  for (int i = 0; i < kNumSides; ++i) {
    const std::string p = "bc." + std::string(side_name(static_cast<Side>(i)));
    s[p] = [i](auto& c, auto& v, int l) { c.bc[i].kind = to_boundary(v, l); };
    s[p + ".velocity"] = [i](auto& c, auto& v, int l) { c.bc[i].velocity = to_vec(v, l); };
    s[p + ".window"] = [i](auto& c, auto& v, int l) {
      const auto w = to_list(v, 2, l);
      c.bc[i].window_lo = w[0];
      c.bc[i].window_hi = w[1];
    };
    s[p + ".outside"] = [i](auto& c, auto& v, int l) {
      c.bc[i].outside = to_boundary(v, l);
      if (c.bc[i].outside == BoundaryKind::inflow)
        throw ConfigError("outside condition cannot be inflow", l);
    };
    s[p + ".profile"] = [i](auto& c, auto& v, int l) {
      c.bc[i].parabolic = to_enum<bool>(v, l, {{"uniform", false}, {"parabolic", true}});
    };
  }

  using S = LevelSetInit::Shape;
  s["levelset.init"] = [](auto& c, auto& v, int l) {
    c.levelset.shape = to_enum<S>(v, l,
                                  {{"circle", S::circle},
                                   {"halfplane", S::halfplane},
                                   {"box", S::box},
                                   {"jet", S::jet},
                                   {"zalesak", S::zalesak}});
  };
  s["levelset.profile"] = [](auto& c, auto& v, int l) {
    c.levelset.profile = to_enum<LevelSetInit::Profile>(
        v, l, {{"distance", LevelSetInit::Profile::distance}, {"tanh", LevelSetInit::Profile::tanh}});
  };
  s["levelset.inside"] = [](auto& c, auto& v, int l) {
    c.levelset.inside_sign = to_enum<int>(v, l, {{"plus", 1}, {"minus", -1}});
  };
  s["levelset.center"] = [](auto& c, auto& v, int l) { c.levelset.center = to_vec(v, l); };
  s["levelset.radius"] = [](auto& c, auto& v, int l) { c.levelset.radius = to_double(v, l); };
  s["levelset.point"] = [](auto& c, auto& v, int l) { c.levelset.point = to_vec(v, l); };
  s["levelset.normal"] = [](auto& c, auto& v, int l) { c.levelset.normal = to_vec(v, l); };
  s["levelset.box"] = [](auto& c, auto& v, int l) {
    const auto b = to_list(v, 4, l);
    c.levelset.box = {b[0], b[1], b[2], b[3]};
  };
  s["levelset.jet"] = [](auto& c, auto& v, int l) {
    const auto b = to_list(v, 2, l);
    c.levelset.jet_x0 = b[0];
    c.levelset.jet_x1 = b[1];
  };
  s["levelset.jet_tip"] = [](auto& c, auto& v, int l) { c.levelset.jet_tip = to_double(v, l); };
  s["levelset.jet_velocity"] = [](auto& c, auto& v, int l) { c.levelset.jet_velocity = to_vec(v, l); };
  s["levelset.bath"] = [](auto& c, auto& v, int l) {
    c.levelset.has_bath = true;
    c.levelset.bath_level = to_double(v, l);
  };
  s["levelset.bath_velocity"] = [](auto& c, auto& v, int l) { c.levelset.bath_velocity = to_vec(v, l); };
  s["levelset.slot"] = [](auto& c, auto& v, int l) {
    const auto b = to_list(v, 2, l);
    c.levelset.slot_width = b[0];
    c.levelset.slot_depth = b[1];
  };

  for (const auto& [phase, plus] : {std::pair{"plus", true}, std::pair{"minus", false}}) {
    const std::string p = std::string("fluid.") + phase;
    s[p + ".rho"] = [plus](auto& c, auto& v, int l) {
      (plus ? c.phys.rho_plus : c.phys.rho_minus) = to_double(v, l);
    };
    if (plus) {
      s[p + ".model"] = [](auto& c, auto& v, int l) {
        c.phys.viscosity_plus.kind = to_enum<ViscosityModel::Kind>(
            v, l, {{"constant", ViscosityModel::Kind::constant}, {"cross", ViscosityModel::Kind::cross}});
      };
      s[p + ".mu"] = [](auto& c, auto& v, int l) { c.phys.viscosity_plus.mu = to_double(v, l); };
      s[p + ".mu0"] = [](auto& c, auto& v, int l) { c.phys.viscosity_plus.mu_0 = to_double(v, l); };
      s[p + ".mu_inf"] = [](auto& c, auto& v, int l) { c.phys.viscosity_plus.mu_inf = to_double(v, l); };
      s[p + ".gamma_c"] = [](auto& c, auto& v, int l) { c.phys.viscosity_plus.gamma_c = to_double(v, l); };
      s[p + ".n"] = [](auto& c, auto& v, int l) { c.phys.viscosity_plus.exponent_n = to_double(v, l); };
    } else {
      s[p + ".mu"] = [](auto& c, auto& v, int l) { c.phys.mu_minus = to_double(v, l); };
    }
  }
  s["fluid.sigma"] = [](auto& c, auto& v, int l) { c.phys.sigma = to_double(v, l); };
  s["gravity"] = [](auto& c, auto& v, int l) { c.phys.gravity = to_vec(v, l); };

  s["num.c_cfl"] = [](auto& c, auto& v, int l) { c.num.c_cfl = to_double(v, l); };
  s["num.c_lambda"] = [](auto& c, auto& v, int l) { c.num.c_lambda = to_double(v, l); };
  s["num.c_h"] = [](auto& c, auto& v, int l) { c.num.c_h = to_double(v, l); };
  s["num.c_s"] = [](auto& c, auto& v, int l) { c.num.c_s = to_double(v, l); };
  s["num.c_r"] = [](auto& c, auto& v, int l) { c.num.c_r = to_double(v, l); };
  s["num.c_c"] = [](auto& c, auto& v, int l) { c.num.c_c = to_double(v, l); };
  s["num.c_lin"] = [](auto& c, auto& v, int l) { c.num.c_lin = to_double(v, l); };
  s["num.c_ent"] = [](auto& c, auto& v, int l) { c.num.c_ent = to_double(v, l); };
  s["num.entropy_p"] = [](auto& c, auto& v, int l) { c.num.entropy_p = to_double(v, l); };
  s["num.c_stab"] = [](auto& c, auto& v, int l) { c.num.c_stab = to_double(v, l); };
  s["num.lin_solver_rel_tol"] = [](auto& c, auto& v, int l) { c.num.lin_solver_rel_tol = to_double(v, l); };
  s["num.lin_solver_max_iter"] = [](auto& c, auto& v, int l) { c.num.lin_solver_max_iter = to_int(v, l); };
  s["num.beta"] = [](auto& c, auto& v, int l) { c.num.beta = to_double(v, l); };

  using M = FlowConfig::Mode;
  using P = FlowConfig::Prescribed;
  s["flow.mode"] = [](auto& c, auto& v, int l) {
    c.flow.mode = to_enum<M>(v, l, {{"navier_stokes", M::navier_stokes}, {"prescribed", M::prescribed}});
  };
  s["flow.velocity"] = [](auto& c, auto& v, int l) {
    c.flow.velocity =
        to_enum<P>(v, l, {{"rotation", P::rotation}, {"vortex", P::vortex}, {"uniform", P::uniform}});
  };
  s["flow.center"] = [](auto& c, auto& v, int l) { c.flow.center = to_vec(v, l); };
  s["flow.omega"] = [](auto& c, auto& v, int l) { c.flow.omega = to_double(v, l); };
  s["flow.period"] = [](auto& c, auto& v, int l) { c.flow.period = to_double(v, l); };
  s["flow.value"] = [](auto& c, auto& v, int l) { c.flow.value = to_vec(v, l); };
  s["flow.advection"] = [](auto& c, auto& v, int l) { c.flow.advection = to_bool(v, l); };

  s["study.reference"] = [](auto& c, auto& v, int l) {
    c.study.reference = to_enum<StudyConfig::Reference>(
        v, l,
        {{"initial", StudyConfig::Reference::initial}, {"tanh_initial", StudyConfig::Reference::tanh_initial}});
  };
  s["study.refine_mesh"] = [](auto& c, auto& v, int l) { c.study.refine_mesh = to_bool(v, l); };

  s["output.every"] = [](auto& c, auto& v, int l) { c.output_every = to_int(v, l); };
  s["output.dir"] = [](auto& c, auto& v, int) { c.output_dir = v; };
  s["metrics.phase"] = [](auto& c, auto& v, int l) {
    c.metrics_phase = to_enum<int>(v, l, {{"plus", 1}, {"minus", -1}});
  };
  return s;
}

bool divides(double length, double h) {
  const double n = std::round(length / h);
  return n >= 1.0 && std::abs(n * h - length) <= 1e-12 * length;
}

double side_length(const Extents& d, int side) {
  return side < 2 ? d.height() : d.width();
}
double side_start(const Extents& d, int side) { return side < 2 ? d.y0 : d.x0; }

}  // namespace

std::string_view side_name(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
    case Side::top: return "top";
  }
  return "?";
}

std::string_view boundary_kind_name(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::dirichlet: return "dirichlet";
    case BoundaryKind::open: return "open";
    case BoundaryKind::slip: return "slip";
    case BoundaryKind::inflow: return "inflow";
  }
  return "?";
}

void validate(const NumericalParams& p) {
  require(p.c_cfl > 0, "C_CFL must be positive");
  require(p.c_lambda >= 0, "C_lambda must be nonnegative");
  require(p.c_h > 0, "C_H must be positive");
  require(p.c_s > 0, "C_S must be positive");
  require(p.c_r > 0, "C_R must be positive");
  require(p.c_c > 0, "C_C must be positive");
  require(p.c_c >= p.c_r, "coarsening threshold below refinement threshold, need C_C ≥ C_R");
  require(p.r_max >= 0, "R_max must be nonnegative");
  require(p.r_max <= 12, "R_max above 12 is not supported");
  require(p.c_lin >= 0, "C_Lin must be nonnegative");
  require(p.c_ent >= 0, "C_Ent must be nonnegative");
  require(p.entropy_p >= 1, "entropy exponent p must be at least 1");
  require(p.c_stab > 0, "C_stab must be positive");
  require(p.lin_solver_rel_tol > 0 && p.lin_solver_rel_tol < 1, "solver tolerance must lie in (0,1)");
  require(p.lin_solver_max_iter > 0, "solver iteration limit must be positive");
  require(p.beta >= 0, "beta must be nonnegative (0 selects min h_K)");
}

void validate(const PhysicalParams& p) {
  require(p.rho_plus > 0 && p.rho_minus > 0, "densities must be positive");
  require(p.sigma >= 0, "surface tension must be nonnegative");
  require(p.mu_minus > 0, "minus-phase viscosity must be positive");
  const auto& v = p.viscosity_plus;
  if (v.kind == ViscosityModel::Kind::constant) {
    require(v.mu > 0, "plus-phase viscosity must be positive");
  } else {
    require(v.mu_inf > 0, "Cross model needs mu_inf > 0");
    require(v.mu_0 >= v.mu_inf, "Cross model needs mu0 ≥ mu_inf");
    require(v.gamma_c > 0, "Cross model needs gamma_c > 0");
    require(v.exponent_n > 0, "Cross model needs n > 0");
  }
}

void validate(const ScenarioConfig& c) {
  validate(c.num);
  validate(c.phys);
  require(c.domain.x1 > c.domain.x0 && c.domain.y1 > c.domain.y0, "domain extents must be nonempty");
  require(c.h0 > 0, "mesh.h0 must be positive");
  require(divides(c.domain.width(), c.h0) && divides(c.domain.height(), c.h0),
          "mesh.h0 must divide both domain side lengths");
  require(c.t_final > 0, "time.t_final must be positive");
  require(c.dt_max > 0, "time.dt_max must be positive");
  require(c.dt >= 0, "time.dt must be nonnegative");
  require(c.first_step_factor > 0 && c.first_step_factor <= 1, "time.first_step_factor must lie in (0,1]");
  require(c.output_every >= 0, "output.every must be nonnegative");
  for (int i = 0; i < kNumSides; ++i) {
    const auto& b = c.bc[i];
    if (b.kind != BoundaryKind::inflow) continue;
    const std::string side(side_name(static_cast<Side>(i)));
    const double s0 = side_start(c.domain, i);
    const double s1 = s0 + side_length(c.domain, i);
    require(b.window_hi > b.window_lo, "inflow window on " + side + " side is empty");
    require(b.window_lo >= s0 - 1e-12 && b.window_hi <= s1 + 1e-12,
            "inflow window on " + side + " side lies outside the side");
  }
  if (c.levelset.shape == LevelSetInit::Shape::circle || c.levelset.shape == LevelSetInit::Shape::zalesak)
    require(c.levelset.radius > 0, "levelset.radius must be positive");
  if (c.levelset.shape == LevelSetInit::Shape::halfplane)
    require(norm(c.levelset.normal) > 0, "levelset.normal must be nonzero");
  if (c.flow.mode == FlowConfig::Mode::prescribed && c.flow.velocity == FlowConfig::Prescribed::vortex)
    require(c.flow.period > 0, "flow.period must be positive");
}

ScenarioConfig parse_scenario(std::string_view text) {
  static const auto setters = make_setters();
  ScenarioConfig c;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (value.empty()) throw ConfigError("empty value for '" + key + "'", line_no);
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'", line_no);
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line_no);
    it->second(c, value, line_no);
  }
  validate(c);
  return c;
}

std::string serialize(const ScenarioConfig& c) {
  std::ostringstream o;
  auto kv = [&o](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
  kv("scenario.name", c.name);
  kv("domain.x0", fmt(c.domain.x0));
  kv("domain.x1", fmt(c.domain.x1));
  kv("domain.y0", fmt(c.domain.y0));
  kv("domain.y1", fmt(c.domain.y1));
  kv("mesh.h0", fmt(c.h0));
  kv("mesh.r_max", std::to_string(c.num.r_max));
  kv("time.t_final", fmt(c.t_final));
  kv("time.dt_max", fmt(c.dt_max));
  kv("time.dt", fmt(c.dt));
  kv("time.first_step_factor", fmt(c.first_step_factor));
  for (int i = 0; i < kNumSides; ++i) {
    const auto& b = c.bc[i];
    const std::string p = "bc." + std::string(side_name(static_cast<Side>(i)));
    kv(p, std::string(boundary_kind_name(b.kind)));
    kv(p + ".velocity", fmt(b.velocity));
    kv(p + ".window", fmt(b.window_lo) + ", " + fmt(b.window_hi));
    kv(p + ".outside", std::string(boundary_kind_name(b.outside)));
    kv(p + ".profile", b.parabolic ? "parabolic" : "uniform");
  }
  const auto& ls = c.levelset;
  static constexpr const char* shapes[] = {"circle", "halfplane", "box", "jet", "zalesak"};
  kv("levelset.init", shapes[static_cast<int>(ls.shape)]);
  kv("levelset.profile", ls.profile == LevelSetInit::Profile::tanh ? "tanh" : "distance");
  kv("levelset.inside", ls.inside_sign > 0 ? "plus" : "minus");
  kv("levelset.center", fmt(ls.center));
  kv("levelset.radius", fmt(ls.radius));
  kv("levelset.point", fmt(ls.point));
  kv("levelset.normal", fmt(ls.normal));
  kv("levelset.box", fmt(ls.box.x0) + ", " + fmt(ls.box.x1) + ", " + fmt(ls.box.y0) + ", " + fmt(ls.box.y1));
  kv("levelset.jet", fmt(ls.jet_x0) + ", " + fmt(ls.jet_x1));
  kv("levelset.jet_tip", fmt(ls.jet_tip));
  kv("levelset.jet_velocity", fmt(ls.jet_velocity));
  if (ls.has_bath) kv("levelset.bath", fmt(ls.bath_level));
  kv("levelset.bath_velocity", fmt(ls.bath_velocity));
  kv("levelset.slot", fmt(ls.slot_width) + ", " + fmt(ls.slot_depth));
  const auto& v = c.phys.viscosity_plus;
  kv("fluid.plus.rho", fmt(c.phys.rho_plus));
  kv("fluid.plus.model", v.kind == ViscosityModel::Kind::cross ? "cross" : "constant");
  kv("fluid.plus.mu", fmt(v.mu));
  kv("fluid.plus.mu0", fmt(v.mu_0));
  kv("fluid.plus.mu_inf", fmt(v.mu_inf));
  kv("fluid.plus.gamma_c", fmt(v.gamma_c));
  kv("fluid.plus.n", fmt(v.exponent_n));
  kv("fluid.minus.rho", fmt(c.phys.rho_minus));
  kv("fluid.minus.mu", fmt(c.phys.mu_minus));
  kv("fluid.sigma", fmt(c.phys.sigma));
  kv("gravity", fmt(c.phys.gravity));
  const auto& n = c.num;
  kv("num.c_cfl", fmt(n.c_cfl));
  kv("num.c_lambda", fmt(n.c_lambda));
  kv("num.c_h", fmt(n.c_h));
  kv("num.c_s", fmt(n.c_s));
  kv("num.c_r", fmt(n.c_r));
  kv("num.c_c", fmt(n.c_c));
  kv("num.c_lin", fmt(n.c_lin));
  kv("num.c_ent", fmt(n.c_ent));
  kv("num.entropy_p", fmt(n.entropy_p));
  kv("num.c_stab", fmt(n.c_stab));
  kv("num.lin_solver_rel_tol", fmt(n.lin_solver_rel_tol));
  kv("num.lin_solver_max_iter", std::to_string(n.lin_solver_max_iter));
  kv("num.beta", fmt(n.beta));
  static constexpr const char* velocities[] = {"rotation", "vortex", "uniform"};
  kv("flow.mode", c.flow.mode == FlowConfig::Mode::prescribed ? "prescribed" : "navier_stokes");
  kv("flow.velocity", velocities[static_cast<int>(c.flow.velocity)]);
  kv("flow.center", fmt(c.flow.center));
  kv("flow.omega", fmt(c.flow.omega));
  kv("flow.period", fmt(c.flow.period));
  kv("flow.value", fmt(c.flow.value));
  kv("flow.advection", fmt(c.flow.advection));
  kv("study.reference", c.study.reference == StudyConfig::Reference::tanh_initial ? "tanh_initial" : "initial");
  kv("study.refine_mesh", fmt(c.study.refine_mesh));
  kv("output.every", std::to_string(c.output_every));
  kv("output.dir", c.output_dir);
  kv("metrics.phase", c.metrics_phase > 0 ? "plus" : "minus");
  return o.str();
}

}  // namespace levelflow
