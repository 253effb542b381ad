#ifndef FNS_CONFIG_HPP
#define FNS_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "fns/common.hpp"
#include "fns/control.hpp"
#include "fns/field.hpp"
#include "fns/grid.hpp"
#include "fns/weights.hpp"

namespace fns {

using json = nlohmann::json;

/** Named space profile, constant in time. */
struct PulseSpec {
  std::string shape = "none";  // none | gaussian | sine
  double amplitude = 0.0;
  double center = 0.0;
  double width = 0.0;
  int mode = 1;
};

struct RunConfig {
  Grid grid;
  bool has_masks = false;
  double omega_a = 0.0, omega_b = 0.0, obs_a = 0.0, obs_b = 0.0;
  bool has_weights = false;
  WeightParams weights;
  complex zeta{0.0, 0.0};
  PulseSpec source;
  PulseSpec initial;
  std::vector<double> epsilons{1e-4};
  ControlMode mode = ControlMode::plain;
  double cg_tol = 1e-8;
  int cg_maxit = 1000;
  double outer_tol = 1e-6;
  int outer_maxit = 10;
  SmallnessCap cap;
  int check_directions = 10;
  std::vector<double> check_taus{1e-2, 5e-3, 2.5e-3};
  std::vector<double> scan_lambdas;
  std::vector<double> scan_mus;
  int scan_samples = 20;
  std::vector<std::pair<int, int>> conv_grids;
  std::uint64_t seed = 1;
  std::string output = "out";
  std::string resolved;  // compact JSON echo for provenance headers

  Mask omega_mask() const { return indicator_mask(grid, omega_a, omega_b); }
  Mask obs_mask() const { return indicator_mask(grid, obs_a, obs_b); }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw config_error("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw config_error("config: unknown key '" + it.key() + "' in " + where);
}

inline double num(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw config_error("config: missing '" + key + "' in " + where);
  if (!j[key].is_number()) throw config_error("config: '" + key + "' in " + where +
                                              " must be a number");
  return j[key].get<double>();
}

inline double num_or(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw config_error("config: '" + key + "' must be a number");
  return j[key].get<double>();
}

inline PulseSpec parse_pulse(const json& j, const std::string& where) {
  check_keys(j, {"shape", "amplitude", "center", "width", "mode"}, where);
  PulseSpec p;
  p.shape = j.value("shape", std::string("none"));
  if (p.shape != "none" && p.shape != "gaussian" && p.shape != "sine")
    throw config_error("config: unknown pulse shape '" + p.shape + "' in " + where);
  p.amplitude = num_or(j, "amplitude", 0.0);
  p.center = num_or(j, "center", 0.0);
  p.width = num_or(j, "width", 0.0);
  p.mode = static_cast<int>(num_or(j, "mode", 1.0));
  if (p.shape == "gaussian" && !(p.width > 0.0))
    throw config_error("config: gaussian pulse needs a positive width in " + where);
  if (p.shape == "sine" && p.mode < 1)
    throw config_error("config: sine pulse needs mode >= 1 in " + where);
  return p;
}

inline std::pair<double, double> parse_interval(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw config_error("config: " + where + " must be [a, b]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  detail::check_keys(j,
                     {"grid", "masks", "weights", "physics", "control", "check", "scan",
                      "convergence", "seed", "output"},
                     "top level");
  RunConfig c;

  if (!j.contains("grid")) throw config_error("config: missing 'grid' block");
  {
    const json& g = j["grid"];
    detail::check_keys(g, {"L", "N", "T", "M"}, "grid");
    c.grid = build_grid(detail::num(g, "L", "grid"),
                        static_cast<int>(detail::num(g, "N", "grid")),
                        detail::num(g, "T", "grid"),
                        static_cast<int>(detail::num(g, "M", "grid")));
  }

  if (j.contains("masks")) {
    const json& m = j["masks"];
    detail::check_keys(m, {"omega", "obs"}, "masks");
    if (!m.contains("omega") || !m.contains("obs"))
      throw config_error("config: masks block needs both 'omega' and 'obs'");
    std::tie(c.omega_a, c.omega_b) = detail::parse_interval(m["omega"], "masks.omega");
    std::tie(c.obs_a, c.obs_b) = detail::parse_interval(m["obs"], "masks.obs");
    c.has_masks = true;
    c.omega_mask();  // validate intervals against the grid now
    c.obs_mask();
  }

  if (j.contains("weights")) {
    const json& w = j["weights"];
    detail::check_keys(w, {"lambda", "mu", "x0"}, "weights");
    c.weights.lambda = detail::num(w, "lambda", "weights");
    c.weights.mu = detail::num(w, "mu", "weights");
    c.weights.x0 = detail::num(w, "x0", "weights");
    c.weights.T = c.grid.T;
    c.weights.L = c.grid.L;
    c.weights.validate();
    c.has_weights = true;
  }

  if (j.contains("physics")) {
    const json& ph = j["physics"];
    detail::check_keys(ph, {"zeta", "source", "initial"}, "physics");
    if (ph.contains("zeta")) {
      const json& z = ph["zeta"];
      if (z.is_number()) {
        c.zeta = complex(z.get<double>(), 0.0);
      } else if (z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number()) {
        c.zeta = complex(z[0].get<double>(), z[1].get<double>());
      } else {
        throw config_error("config: physics.zeta must be a number or [re, im]");
      }
    }
    if (ph.contains("source")) c.source = detail::parse_pulse(ph["source"], "physics.source");
    if (ph.contains("initial")) c.initial = detail::parse_pulse(ph["initial"], "physics.initial");
  }

  if (j.contains("control")) {
    const json& ct = j["control"];
    detail::check_keys(ct,
                       {"epsilons", "mode", "cg_tol", "cg_maxit", "outer_tol", "outer_maxit",
                        "smallness_c", "smallness_cap"},
                       "control");
    if (ct.contains("epsilons")) {
      if (!ct["epsilons"].is_array() || ct["epsilons"].empty())
        throw config_error("config: control.epsilons must be a nonempty array");
      c.epsilons.clear();
      for (const auto& e : ct["epsilons"]) {
        if (!e.is_number() || !(e.get<double>() > 0.0))
          throw config_error("config: control.epsilons entries must be positive numbers");
        c.epsilons.push_back(e.get<double>());
      }
    }
    if (ct.contains("mode")) {
      std::string m = ct["mode"].get<std::string>();
      if (m == "plain")
        c.mode = ControlMode::plain;
      else if (m == "carleman_weighted")
        c.mode = ControlMode::carleman_weighted;
      else
        throw config_error("config: control.mode must be 'plain' or 'carleman_weighted'");
    }
    c.cg_tol = detail::num_or(ct, "cg_tol", c.cg_tol);
    c.cg_maxit = static_cast<int>(detail::num_or(ct, "cg_maxit", c.cg_maxit));
    c.outer_tol = detail::num_or(ct, "outer_tol", c.outer_tol);
    c.outer_maxit = static_cast<int>(detail::num_or(ct, "outer_maxit", c.outer_maxit));
    c.cap.c = detail::num_or(ct, "smallness_c", c.cap.c);
    c.cap.cap = detail::num_or(ct, "smallness_cap", c.cap.cap);
  }

  if (j.contains("check")) {
    const json& ck = j["check"];
    detail::check_keys(ck, {"directions", "taus"}, "check");
    c.check_directions = static_cast<int>(detail::num_or(ck, "directions", 10.0));
    if (c.check_directions < 1)
      throw config_error("config: check.directions must be at least 1");
    if (ck.contains("taus")) {
      c.check_taus.clear();
      for (const auto& t : ck["taus"]) {
        if (!t.is_number() || !(t.get<double>() > 0.0))
          throw config_error("config: check.taus entries must be positive");
        c.check_taus.push_back(t.get<double>());
      }
      if (c.check_taus.empty()) throw config_error("config: check.taus must be nonempty");
    }
  }

  if (j.contains("scan")) {
    const json& sc = j["scan"];
    detail::check_keys(sc, {"lambdas", "mus", "samples"}, "scan");
    if (sc.contains("lambdas"))
      for (const auto& v : sc["lambdas"]) c.scan_lambdas.push_back(v.get<double>());
    if (sc.contains("mus"))
      for (const auto& v : sc["mus"]) c.scan_mus.push_back(v.get<double>());
    c.scan_samples = static_cast<int>(detail::num_or(sc, "samples", 20.0));
    if (c.scan_samples < 1) throw config_error("config: scan.samples must be at least 1");
  }

  if (j.contains("convergence")) {
    const json& cv = j["convergence"];
    detail::check_keys(cv, {"grids"}, "convergence");
    if (!cv.contains("grids") || !cv["grids"].is_array() || cv["grids"].size() < 2)
      throw config_error("config: convergence.grids needs at least two [N, M] pairs");
    int prev_n = 0, prev_m = 0;
    for (const auto& pr : cv["grids"]) {
      if (!pr.is_array() || pr.size() != 2)
        throw config_error("config: convergence.grids entries must be [N, M]");
      int n = pr[0].get<int>(), m = pr[1].get<int>();
      if (n <= prev_n || m <= prev_m)
        throw config_error("config: convergence.grids must refine both N and M");
      c.conv_grids.emplace_back(n, m);
      prev_n = n;
      prev_m = m;
    }
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      throw config_error("config: seed must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = j["output"].get<std::string>();

  c.resolved = j.dump();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/** Spatial profile of a named pulse. */
inline ComplexField pulse_field(const PulseSpec& p, const Grid& g) {
  ComplexField f(g.N, complex(0.0, 0.0));
  if (p.shape == "gaussian") {
    for (int i = 0; i < g.N; ++i) {
      double r = (g.x(i) - p.center) / p.width;
      f[i] = complex(p.amplitude * std::exp(-r * r), 0.0);
    }
  } else if (p.shape == "sine") {
    for (int i = 0; i < g.N; ++i)
      f[i] = complex(p.amplitude * std::sin(p.mode * M_PI * g.x(i) / g.L), 0.0);
  }
  return f;
}

/** Time-constant source built from the pulse profile. */
inline SourceFn pulse_source(const PulseSpec& p, const Grid& g) {
  if (p.shape == "none") return SourceFn();
  ComplexField profile = pulse_field(p, g);
  return [profile](int, double, ComplexField& out) {
    for (size_t i = 0; i < out.size(); ++i) out[i] += profile[i];
  };
}

}  // namespace fns

#endif
