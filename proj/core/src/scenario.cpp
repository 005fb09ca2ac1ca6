#include "uscx/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "uscx/rng.hpp"

namespace uscx {

namespace {

double draw_var(const VarSpec& v, Rng& rng) {
  switch (v.law) {
    case VarLaw::uniform:
      return rng.uniform(v.a, v.b);
    case VarLaw::normal:
      return v.a + v.b * rng.normal();
    case VarLaw::unit_frechet:
      return rng.unit_frechet();
    case VarLaw::two_interval:
      return rng.two_interval_uniform();
  }
  throw std::logic_error("unreachable variable law");
}

double resolve(const Location& loc, const Env& env) {
  return loc.is_var ? env.at(loc.var) : loc.value;
}

void check_expr_vars(const Expr& e, const std::set<std::string>& declared) {
  std::set<std::string> used;
  e.collect_vars(used);
  for (const auto& name : used) {
    if (!declared.count(name)) {
      throw std::invalid_argument("expression mentions undeclared variable '" + name + "'");
    }
  }
}

void validate_shape(const Realization& r) {
  if (r.bodies.size() != r.breaks.size() + 1 || r.at_values.size() != r.breaks.size()) {
    throw std::logic_error("realization shape mismatch");
  }
  double prev = r.domain.lo;
  for (double b : r.breaks) {
    if (!(b > prev && b < r.domain.hi)) throw DegenerateDraw();
    prev = b;
  }
  double prev_e = -std::numeric_limits<double>::infinity();
  for (const auto& [e, expr] : r.exceptions) {
    (void)expr;
    if (!(e >= r.domain.lo && e <= r.domain.hi)) throw DegenerateDraw();
    if (!(e > prev_e)) throw DegenerateDraw();
    if (std::binary_search(r.breaks.begin(), r.breaks.end(), e)) throw DegenerateDraw();
    prev_e = e;
  }
}

// Index of the segment whose open-or-edge interval contains s.
std::size_t segment_index(const Realization& r, double s) {
  return static_cast<std::size_t>(std::upper_bound(r.breaks.begin(), r.breaks.end(), s) -
                                  r.breaks.begin());
}

const Expr* exception_at(const Realization& r, double s) {
  auto it = std::lower_bound(r.exceptions.begin(), r.exceptions.end(), s,
                             [](const auto& p, double v) { return p.first < v; });
  if (it != r.exceptions.end() && it->first == s) return &it->second;
  return nullptr;
}

// Largest one-sided limit of the piecewise-continuous part at s: the max of
// the adjacent segment bodies at a breakpoint, the enclosing body elsewhere.
ExtReal adjacent_limit_max(const Realization& r, double s) {
  auto bt = std::lower_bound(r.breaks.begin(), r.breaks.end(), s);
  if (bt != r.breaks.end() && *bt == s) {
    std::size_t i = static_cast<std::size_t>(bt - r.breaks.begin());
    return max(r.bodies[i].eval(r.env, s), r.bodies[i + 1].eval(r.env, s));
  }
  return r.bodies[segment_index(r, s)].eval(r.env, s);
}

}  // namespace

Scenario::Scenario(Interval domain, std::vector<VarSpec> variables, std::vector<Expr> bodies,
                   std::vector<Breakpoint> breakpoints, std::vector<PointException> exceptions)
    : domain_(domain),
      variables_(std::move(variables)),
      bodies_(std::move(bodies)),
      breakpoints_(std::move(breakpoints)),
      exceptions_(std::move(exceptions)) {
  if (!(domain_.hi > domain_.lo)) throw std::invalid_argument("empty scenario domain");
  if (bodies_.size() != breakpoints_.size() + 1) {
    throw std::invalid_argument("segment count mismatch");
  }
  std::set<std::string> names;
  for (const auto& v : variables_) {
    if (v.name.empty() || !names.insert(v.name).second) {
      throw std::invalid_argument("duplicate variable name");
    }
    if (v.law == VarLaw::uniform && !(v.a < v.b)) {
      throw std::invalid_argument("uniform bounds out of order");
    }
    if (v.law == VarLaw::normal && !(v.b > 0)) {
      throw std::invalid_argument("standard deviation must be positive");
    }
  }
  auto check_location = [&](const Location& loc, bool interior) {
    if (loc.is_var) {
      if (!names.count(loc.var)) throw std::invalid_argument("unknown variable in location");
      return;
    }
    if (!std::isfinite(loc.value)) throw std::invalid_argument("location must be finite");
    if (interior && !(loc.value > domain_.lo && loc.value < domain_.hi)) {
      throw std::invalid_argument("breakpoint outside domain interior");
    }
    if (!interior && !(loc.value >= domain_.lo && loc.value <= domain_.hi)) {
      throw std::invalid_argument("exception location outside domain");
    }
  };
  const Location* prev_const = nullptr;
  for (const auto& bp : breakpoints_) {
    check_location(bp.loc, true);
    check_expr_vars(bp.value, names);
    if (!bp.loc.is_var) {
      if (prev_const && !(prev_const->value < bp.loc.value)) {
        throw std::invalid_argument("breakpoints out of order");
      }
      prev_const = &bp.loc;
    } else {
      prev_const = nullptr;
    }
  }
  for (const auto& ex : exceptions_) {
    check_location(ex.loc, false);
    check_expr_vars(ex.value, names);
  }
  for (const auto& body : bodies_) check_expr_vars(body, names);
}

ExtReal Realization::value_at(double s) const {
  if (!(s >= domain.lo && s <= domain.hi)) {
    throw std::invalid_argument("point outside scenario domain");
  }
  if (const Expr* exc = exception_at(*this, s)) return exc->eval(env, s);
  auto bt = std::lower_bound(breaks.begin(), breaks.end(), s);
  if (bt != breaks.end() && *bt == s) {
    return at_values[static_cast<std::size_t>(bt - breaks.begin())].eval(env, s);
  }
  return bodies[segment_index(*this, s)].eval(env, s);
}

Realization realize(const Scenario& scenario, std::uint64_t seed) {
  Rng rng(seed);
  Realization r;
  r.domain = scenario.domain();
  for (const auto& v : scenario.variables()) r.env[v.name] = draw_var(v, rng);
  r.bodies = scenario.bodies();
  for (const auto& bp : scenario.breakpoints()) {
    double b = resolve(bp.loc, r.env);
    if (!(b > r.domain.lo && b < r.domain.hi)) throw DegenerateDraw();
    if (!r.breaks.empty() && !(b > r.breaks.back())) throw DegenerateDraw();
    r.breaks.push_back(b);
    r.at_values.push_back(bp.value);
  }
  for (const auto& ex : scenario.exceptions()) {
    double e = resolve(ex.loc, r.env);
    if (!(e >= r.domain.lo && e <= r.domain.hi)) throw DegenerateDraw();
    if (std::binary_search(r.breaks.begin(), r.breaks.end(), e)) throw DegenerateDraw();
    r.exceptions.emplace_back(e, ex.value);
  }
  std::sort(r.exceptions.begin(), r.exceptions.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < r.exceptions.size(); ++i) {
    if (!(r.exceptions[i - 1].first < r.exceptions[i].first)) throw DegenerateDraw();
  }
  return r;
}

bool is_usc_trajectory(const Realization& r) {
  validate_shape(r);
  for (std::size_t i = 0; i < r.breaks.size(); ++i) {
    double b = r.breaks[i];
    ExtReal v = r.at_values[i].eval(r.env, b);
    if (v < r.bodies[i].eval(r.env, b) || v < r.bodies[i + 1].eval(r.env, b)) return false;
  }
  for (const auto& [e, expr] : r.exceptions) {
    if (expr.eval(r.env, e) < r.bodies[segment_index(r, e)].eval(r.env, e)) return false;
  }
  return true;
}

bool trajectory_hits(const Realization& r, const CompactProbe& probe) {
  validate_shape(r);
  bool hit = false;
  for (const auto& part : probe.parts) {
    double a = std::max(part.box.lo[0], r.domain.lo);
    double b = std::min(part.box.hi[0], r.domain.hi);
    if (!(a <= b)) throw std::invalid_argument("empty probe box");
    if (hit) continue;
    ExtReal level(part.level);
    for (std::size_t i = 0; i < r.breaks.size(); ++i) {
      if (r.breaks[i] >= a && r.breaks[i] <= b &&
          r.at_values[i].eval(r.env, r.breaks[i]) >= level) {
        hit = true;
      }
    }
    for (const auto& [e, expr] : r.exceptions) {
      if (e >= a && e <= b && expr.eval(r.env, e) >= level) hit = true;
    }
    for (std::size_t i = 0; i < r.bodies.size(); ++i) {
      double lo = i == 0 ? r.domain.lo : r.breaks[i - 1];
      double hi = i == r.breaks.size() ? r.domain.hi : r.breaks[i];
      bool closed_lo = i == 0;
      bool closed_hi = i == r.breaks.size();
      double x0 = std::max(a, lo);
      double x1 = std::min(b, hi);
      bool nonempty = x0 < x1 || (x0 == x1 && (x0 > lo || closed_lo) && (x1 < hi || closed_hi));
      if (!nonempty) continue;
      // A single-point overlap that is an exception does not expose the body.
      if (x0 == x1 && exception_at(r, x0) != nullptr) continue;
      if (r.bodies[i].depends_on_coord()) {
        throw std::logic_error("hit test requires coordinate-free segment bodies");
      }
      if (r.bodies[i].eval(r.env, x0) >= level) hit = true;
    }
  }
  return hit;
}

bool trajectories_differ(const Realization& a, const Realization& b) {
  if (a.domain.lo != b.domain.lo || a.domain.hi != b.domain.hi) {
    throw std::invalid_argument("domain mismatch");
  }
  validate_shape(a);
  validate_shape(b);
  std::vector<double> pts{a.domain.lo, a.domain.hi};
  auto add_critical = [&pts](const Realization& r) {
    pts.insert(pts.end(), r.breaks.begin(), r.breaks.end());
    for (const auto& [e, expr] : r.exceptions) {
      (void)expr;
      pts.push_back(e);
    }
  };
  add_critical(a);
  add_critical(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> probes = pts;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    double m = pts[i - 1] + (pts[i] - pts[i - 1]) / 2;
    if (m > pts[i - 1] && m < pts[i]) probes.push_back(m);
  }
  for (double s : probes) {
    if (a.value_at(s) != b.value_at(s)) return true;
  }
  return false;
}

namespace {

GalleryEntry make_atom() {
  Expr X = Expr::var("X");
  Expr Y = Expr::var("Y");
  Expr S = Expr::coord();
  Expr zero = Expr::constant(ExtReal(0.0));
  std::vector<VarSpec> vars{{"X", VarLaw::uniform, 0.0, 1.0}, {"Y", VarLaw::uniform, 0.0, 1.0}};
  Scenario raw({-1.0, 1.0}, vars, {max(-S, zero) * X + max(S, zero) * Y}, {}, {});
  Scenario tr({-1.0, 1.0}, vars, {X, Y},
              {Breakpoint{Location::at(0.0), Expr::constant(ExtReal(1.0))}}, {});
  return {"atom", raw, tr,
          "standardize through the exact margin family: uniform on [0,|s|] away from the "
          "origin, a point mass at s = 0; the cdf at the point mass sends the value 0 to 1",
          "the standardized value at s = 0 is constantly 1 instead of uniform; every "
          "trajectory stays usc"};
}

GalleryEntry make_lsc_margins() {
  Expr X = Expr::var("X");
  Expr Y = Expr::var("Y");
  std::vector<VarSpec> vars{{"X", VarLaw::uniform, 0.0, 1.0}, {"Y", VarLaw::uniform, 0.0, 1.0}};
  Scenario raw({0.0, 1.0}, vars, {X}, {},
               {PointException{Location::at(1.0), max(X, Y)}});
  Scenario tr({0.0, 1.0}, vars, {X}, {},
              {PointException{Location::at(1.0), max(X, Y) * max(X, Y)}});
  return {"lsc_margins", raw, tr,
          "standardize through the margin family F_s = identity on [0,1] for s < 1 and "
          "F_1(x) = x^2; s -> F_s(x) is lsc but not usc at s = 1",
          "the standardized trajectory fails upper semicontinuity with probability 2/3"};
}

GalleryEntry make_b_not_necessary() {
  Expr X = Expr::var("X");
  std::vector<VarSpec> vars{{"X", VarLaw::normal, 0.0, 1.0}, {"V", VarLaw::uniform, 0.0, 1.0}};
  std::vector<Expr> bodies{X, X - Expr::constant(ExtReal(1.0)), X};
  std::vector<Breakpoint> breaks{{Location::at(0.0), X}, {Location::at_var("V"), X}};
  Scenario raw({-1.0, 1.0}, vars, bodies, breaks, {});
  Scenario tr({-1.0, 1.0}, vars, bodies, breaks, {});
  return {"b_not_necessary", raw, tr,
          "standardize through the exact margin family (standard normal off (0,1), the "
          "matching normal mixture inside) and map back through its quantile; the family is "
          "discontinuous in s, yet Q_s(F_s(x)) = x on the support",
          "the round trip reproduces the trajectory exactly; the non-usc rate is 0"};
}

GalleryEntry make_law_mismatch_1() {
  Expr X = Expr::var("X");
  std::vector<VarSpec> vars{{"X", VarLaw::uniform, 0.0, 1.0}, {"Y", VarLaw::uniform, 0.0, 1.0}};
  Scenario raw({0.0, 1.0}, vars, {X}, {},
               {PointException{Location::at_var("Y"), X + Expr::constant(ExtReal(1.0))}});
  Scenario tr({0.0, 1.0}, vars, {X}, {},
              {PointException{Location::at_var("Y"), Expr::constant(ExtReal::pos_inf())}});
  return {"law_mismatch_1", raw, tr,
          "margins are uniform at every s, so standardization composes the uniform cdf with "
          "its quantile; the exceptional value X + 1 lies above the support and maps through "
          "F = 1 to Q(1) = +inf",
          "one-dimensional margins agree but capacities differ: the probe [0,1] x {x} with "
          "x > 2 is hit with probability 0 before and 1 after"};
}

GalleryEntry make_law_mismatch_2() {
  Expr X = Expr::var("X");
  std::vector<VarSpec> vars{{"X", VarLaw::two_interval}, {"Y", VarLaw::uniform, 0.0, 1.0}};
  Scenario raw({0.0, 1.0}, vars, {X}, {},
               {PointException{Location::at_var("Y"), max(X, Expr::constant(ExtReal(1.5)))}});
  Scenario tr({0.0, 1.0}, vars, {X}, {},
              {PointException{Location::at_var("Y"), max(X, Expr::constant(ExtReal(2.0)))}});
  return {"law_mismatch_2", raw, tr,
          "margins are uniform on [0,1] u [2,3] at every s; the right-continuous quantile "
          "carries the flat stretch of the cdf across the gap, so Q(F(x or 1.5)) = x or 2",
          "trajectory and standardization differ exactly when X <= 1 (probability one half); "
          "capacities over the gap differ"};
}

GalleryEntry make_theta_discontinuous() {
  Expr X = Expr::var("X");
  Expr Y = Expr::var("Y");
  std::vector<VarSpec> vars{{"X", VarLaw::unit_frechet}, {"Y", VarLaw::unit_frechet}};
  Scenario raw({0.0, 1.0}, vars, {X}, {},
               {PointException{Location::at(1.0), max(X, Y)}});
  Scenario tr({0.0, 1.0}, vars, {X}, {},
              {PointException{Location::at(1.0), max(X, Y) * Expr::constant(ExtReal(0.5))}});
  return {"theta_discontinuous", raw, tr,
          "standardize to unit Frechet through GEV margins theta(s) = (1,1,1) for s < 1 and "
          "(1,2,2) at s = 1; theta is discontinuous at s = 1 and the standardized exceptional "
          "value becomes (X v Y)/2",
          "the standardized trajectory fails upper semicontinuity with probability 2/3; the "
          "strict up-jump at s = 1 inverts into a strict violation with probability 1/6"};
}

}  // namespace

const std::vector<std::string>& gallery_ids() {
  static const std::vector<std::string> ids{"atom",           "lsc_margins",
                                            "b_not_necessary", "law_mismatch_1",
                                            "law_mismatch_2",  "theta_discontinuous"};
  return ids;
}

GalleryEntry gallery_entry(const std::string& id) {
  if (id == "atom") return make_atom();
  if (id == "lsc_margins") return make_lsc_margins();
  if (id == "b_not_necessary") return make_b_not_necessary();
  if (id == "law_mismatch_1") return make_law_mismatch_1();
  if (id == "law_mismatch_2") return make_law_mismatch_2();
  if (id == "theta_discontinuous") return make_theta_discontinuous();
  throw std::invalid_argument("unknown gallery entry");
}

namespace {

RateEstimate finish_rate(std::int64_t hits, std::int64_t effective) {
  if (effective == 0) throw std::runtime_error("all samples degenerate");
  double p = static_cast<double>(hits) / static_cast<double>(effective);
  double hw = 1.96 * std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(effective));
  return {p, hw};
}

void require_samples(std::int64_t n_samples) {
  if (n_samples < 100) throw std::invalid_argument("need at least 100 samples");
}

}  // namespace

RateEstimate estimate_nonusc_probability(const GalleryEntry& entry, std::int64_t n_samples,
                                         std::uint64_t seed) {
  require_samples(n_samples);
  std::int64_t bad = 0, effective = 0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    try {
      Realization r = realize(entry.transformed, stream_seed(seed, static_cast<std::uint64_t>(i)));
      ++effective;
      if (!is_usc_trajectory(r)) ++bad;
    } catch (const DegenerateDraw&) {
    }
  }
  return finish_rate(bad, effective);
}

RateEstimate estimate_jump_inversion_probability(const GalleryEntry& entry,
                                                 std::int64_t n_samples, std::uint64_t seed) {
  require_samples(n_samples);
  std::int64_t hits = 0, effective = 0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    std::uint64_t s = stream_seed(seed, static_cast<std::uint64_t>(i));
    try {
      Realization raw = realize(entry.scenario, s);
      Realization tr = realize(entry.transformed, s);
      ++effective;
      std::set<double> locs;
      for (const Realization* r : {&raw, &tr}) {
        locs.insert(r->breaks.begin(), r->breaks.end());
        for (const auto& [e, expr] : r->exceptions) {
          (void)expr;
          locs.insert(e);
        }
      }
      bool inverted = false;
      for (double loc : locs) {
        if (raw.value_at(loc) > adjacent_limit_max(raw, loc) &&
            tr.value_at(loc) < adjacent_limit_max(tr, loc)) {
          inverted = true;
          break;
        }
      }
      if (inverted) ++hits;
    } catch (const DegenerateDraw&) {
    }
  }
  return finish_rate(hits, effective);
}

RateEstimate hypograph_difference_rate(const GalleryEntry& entry, std::int64_t n_samples,
                                       std::uint64_t seed) {
  require_samples(n_samples);
  std::int64_t differ = 0, effective = 0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    std::uint64_t s = stream_seed(seed, static_cast<std::uint64_t>(i));
    try {
      Realization raw = realize(entry.scenario, s);
      Realization tr = realize(entry.transformed, s);
      ++effective;
      if (trajectories_differ(raw, tr)) ++differ;
    } catch (const DegenerateDraw&) {
    }
  }
  return finish_rate(differ, effective);
}

std::pair<double, double> capacities_differ(const GalleryEntry& entry, const CompactProbe& probe,
                                            std::int64_t n_samples, std::uint64_t seed) {
  if (entry.id != "law_mismatch_1" && entry.id != "law_mismatch_2") {
    throw std::invalid_argument("not a law-mismatch entry");
  }
  require_samples(n_samples);
  std::int64_t hit_raw = 0, hit_tr = 0, effective = 0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    std::uint64_t s = stream_seed(seed, static_cast<std::uint64_t>(i));
    try {
      Realization raw = realize(entry.scenario, s);
      Realization tr = realize(entry.transformed, s);
      ++effective;
      if (trajectory_hits(raw, probe)) ++hit_raw;
      if (trajectory_hits(tr, probe)) ++hit_tr;
    } catch (const DegenerateDraw&) {
    }
  }
  if (effective == 0) throw std::runtime_error("all samples degenerate");
  return {static_cast<double>(hit_raw) / static_cast<double>(effective),
          static_cast<double>(hit_tr) / static_cast<double>(effective)};
}

namespace {

const char* law_name(VarLaw law) {
  switch (law) {
    case VarLaw::uniform:
      return "uniform";
    case VarLaw::normal:
      return "normal";
    case VarLaw::unit_frechet:
      return "unit_frechet";
    case VarLaw::two_interval:
      return "two_interval";
  }
  throw std::logic_error("unreachable variable law");
}

VarLaw law_from_name(const std::string& name) {
  if (name == "uniform") return VarLaw::uniform;
  if (name == "normal") return VarLaw::normal;
  if (name == "unit_frechet") return VarLaw::unit_frechet;
  if (name == "two_interval") return VarLaw::two_interval;
  throw std::runtime_error("unknown distribution");
}

nlohmann::json location_to_json(const Location& loc) {
  if (loc.is_var) return nlohmann::json{{"var", loc.var}};
  return nlohmann::json(loc.value);
}

Location location_from_json(const nlohmann::json& j) {
  if (j.is_object()) return Location::at_var(j.at("var").get<std::string>());
  return Location::at(j.get<double>());
}

}  // namespace

nlohmann::json scenario_to_json(const Scenario& scenario) {
  using nlohmann::json;
  json vars = json::array();
  for (const auto& v : scenario.variables()) {
    json jv{{"name", v.name}, {"law", law_name(v.law)}};
    if (v.law == VarLaw::uniform) {
      jv["a"] = v.a;
      jv["b"] = v.b;
    } else if (v.law == VarLaw::normal) {
      jv["mean"] = v.a;
      jv["sd"] = v.b;
    }
    vars.push_back(jv);
  }
  json bodies = json::array();
  for (const auto& body : scenario.bodies()) bodies.push_back(expr_to_json(body));
  json breaks = json::array();
  for (const auto& bp : scenario.breakpoints()) {
    breaks.push_back(json{{"location", location_to_json(bp.loc)}, {"value", expr_to_json(bp.value)}});
  }
  json excs = json::array();
  for (const auto& ex : scenario.exceptions()) {
    excs.push_back(json{{"location", location_to_json(ex.loc)}, {"value", expr_to_json(ex.value)}});
  }
  return json{{"domain", {scenario.domain().lo, scenario.domain().hi}},
              {"variables", vars},
              {"bodies", bodies},
              {"breakpoints", breaks},
              {"exceptions", excs}};
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Interval domain{j.at("domain").at(0).get<double>(), j.at("domain").at(1).get<double>()};
  std::vector<VarSpec> vars;
  for (const auto& jv : j.at("variables")) {
    VarSpec v;
    v.name = jv.at("name").get<std::string>();
    v.law = law_from_name(jv.at("law").get<std::string>());
    if (v.law == VarLaw::uniform) {
      v.a = jv.value("a", 0.0);
      v.b = jv.value("b", 1.0);
    } else if (v.law == VarLaw::normal) {
      v.a = jv.value("mean", 0.0);
      v.b = jv.value("sd", 1.0);
    }
    vars.push_back(std::move(v));
  }
  std::vector<Expr> bodies;
  for (const auto& jb : j.at("bodies")) bodies.push_back(expr_from_json(jb));
  std::vector<Breakpoint> breaks;
  if (j.contains("breakpoints")) {
    for (const auto& jb : j.at("breakpoints")) {
      breaks.push_back({location_from_json(jb.at("location")), expr_from_json(jb.at("value"))});
    }
  }
  std::vector<PointException> excs;
  if (j.contains("exceptions")) {
    for (const auto& je : j.at("exceptions")) {
      excs.push_back({location_from_json(je.at("location")), expr_from_json(je.at("value"))});
    }
  }
  return Scenario(domain, std::move(vars), std::move(bodies), std::move(breaks), std::move(excs));
}

nlohmann::json gallery_record(const GalleryEntry& entry, std::int64_t n_samples,
                              std::uint64_t seed) {
  using nlohmann::json;
  RateEstimate usc = estimate_nonusc_probability(entry, n_samples, seed);
  json j{{"entry", entry.id},        {"n_samples", n_samples}, {"seed", seed},
         {"estimate", usc.estimate}, {"halfwidth", usc.halfwidth}};
  j["transform_description"] = entry.transform_description;
  j["claimed_outcome"] = entry.claimed_outcome;
  bool exceptional = !entry.scenario.breakpoints().empty() ||
                     !entry.scenario.exceptions().empty() ||
                     !entry.transformed.breakpoints().empty() ||
                     !entry.transformed.exceptions().empty();
  if (exceptional) {
    RateEstimate inv = estimate_jump_inversion_probability(entry, n_samples, seed);
    j["jump_inversion_rate"] = inv.estimate;
    j["jump_inversion_halfwidth"] = inv.halfwidth;
  }
  if (entry.id == "law_mismatch_1" || entry.id == "law_mismatch_2") {
    RateEstimate diff = hypograph_difference_rate(entry, n_samples, seed);
    j["hypo_difference_rate"] = diff.estimate;
    j["hypo_difference_halfwidth"] = diff.halfwidth;
  }
  if (entry.id == "atom") {
    Realization tr = realize(entry.transformed, stream_seed(seed, 0));
    j["standardized_value_at_origin"] = tr.value_at(0.0).raw();
  }
  return j;
}

}  // namespace uscx
