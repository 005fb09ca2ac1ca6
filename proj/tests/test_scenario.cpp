#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "uscx/expr.hpp"
#include "uscx/rng.hpp"
#include "uscx/scenario.hpp"

using namespace uscx;

namespace {

CompactProbe interval_probe(double a, double b, double level) {
  return CompactProbe{{ProbePart{Box::interval(a, b), level}}};
}

// Minimal single-segment realization with a constant body.
Realization const_realization(double lo, double hi, double body) {
  Realization r;
  r.domain = {lo, hi};
  r.bodies = {Expr::constant(ExtReal(body))};
  return r;
}

}  // namespace

TEST_CASE("expression evaluation is exact extended-real arithmetic") {
  Expr X = Expr::var("X");
  Expr Y = Expr::var("Y");
  Expr S = Expr::coord();
  Env env{{"X", 2.0}, {"Y", -3.0}};

  CHECK((X + Y * Expr::constant(ExtReal(4.0))).eval(env, 0.0) == ExtReal(-10.0));
  CHECK((X - Y).eval(env, 0.0) == ExtReal(5.0));
  CHECK((-Y).eval(env, 0.0) == ExtReal(3.0));
  CHECK(abs(Y).eval(env, 0.0) == ExtReal(3.0));
  CHECK(max(X, Y).eval(env, 0.0) == ExtReal(2.0));
  CHECK(min(X, Y).eval(env, 0.0) == ExtReal(-3.0));
  CHECK((S * X).eval(env, 1.5) == ExtReal(3.0));
  CHECK(Expr().eval(env, 7.0) == ExtReal(0.0));

  CHECK(S.depends_on_coord());
  CHECK_FALSE((X * Y).depends_on_coord());
  CHECK((X + S).depends_on_coord());

  std::set<std::string> vars;
  (X + S * Y).collect_vars(vars);
  CHECK(vars == std::set<std::string>{"X", "Y"});

  CHECK_THROWS_WITH_AS(Expr::var("Z").eval(env, 0.0).raw(), "unknown variable 'Z'",
                       std::runtime_error);
  CHECK_THROWS_AS(Expr::var(""), std::invalid_argument);
}

TEST_CASE("expression infinities propagate without NaN") {
  Expr inf = Expr::constant(ExtReal::pos_inf());
  Expr ninf = Expr::constant(ExtReal::neg_inf());
  Expr two = Expr::constant(ExtReal(2.0));
  Expr zero = Expr::constant(ExtReal(0.0));
  Env env;

  CHECK((inf + two).eval(env, 0.0).is_pos_inf());
  CHECK((ninf - two).eval(env, 0.0).is_neg_inf());
  CHECK((ninf * two).eval(env, 0.0).is_neg_inf());
  CHECK((ninf * (-two)).eval(env, 0.0).is_pos_inf());
  CHECK(abs(ninf).eval(env, 0.0).is_pos_inf());
  CHECK(max(two, inf).eval(env, 0.0).is_pos_inf());
  CHECK(min(two, inf).eval(env, 0.0) == ExtReal(2.0));
  CHECK((-inf).eval(env, 0.0).is_neg_inf());

  CHECK_THROWS_WITH_AS((inf + ninf).eval(env, 0.0).raw(), "indeterminate extended sum",
                       std::domain_error);
  CHECK_THROWS_WITH_AS((zero * inf).eval(env, 0.0).raw(), "indeterminate extended product",
                       std::domain_error);
}

TEST_CASE("expression JSON round trip preserves values exactly") {
  Expr X = Expr::var("X");
  Expr Y = Expr::var("Y");
  Expr S = Expr::coord();
  Expr e = max(abs(-S + X * Y - Expr::constant(ExtReal(1.0))),
               min(S, Expr::constant(ExtReal(0.25))));
  Expr back = expr_from_json(expr_to_json(e));
  Env env{{"X", 0.7}, {"Y", -2.25}};
  for (double s : {-1.0, -0.3, 0.0, 0.2, 0.9, 1.0}) {
    CHECK(e.eval(env, s) == back.eval(env, s));
  }

  Expr inf = Expr::constant(ExtReal::pos_inf());
  CHECK(expr_from_json(expr_to_json(inf)).eval(env, 0.0).is_pos_inf());
  nlohmann::json j = expr_to_json(inf);
  CHECK(j.at("value").get<std::string>() == "+inf");

  CHECK_THROWS_WITH_AS(expr_from_json(nlohmann::json{{"op", "pow"}}), "unknown expression op",
                       std::runtime_error);
}

TEST_CASE("scenario construction validates its structure") {
  Expr X = Expr::var("X");
  std::vector<VarSpec> vars{{"X", VarLaw::uniform, 0.0, 1.0}};

  CHECK_THROWS_WITH_AS(Scenario({0.0, 0.0}, vars, {X}, {}, {}), "empty scenario domain",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(Scenario({0.0, 1.0}, vars, {X, X}, {}, {}), "segment count mismatch",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      Scenario({0.0, 1.0}, {{"X", VarLaw::uniform, 0.0, 1.0}, {"X", VarLaw::normal, 0.0, 1.0}},
               {X}, {}, {}),
      "duplicate variable name", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      Scenario({0.0, 1.0}, {{"X", VarLaw::uniform, 1.0, 1.0}}, {X}, {}, {}),
      "uniform bounds out of order", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      Scenario({0.0, 1.0}, {{"X", VarLaw::normal, 0.0, 0.0}}, {X}, {}, {}),
      "standard deviation must be positive", std::invalid_argument);
  CHECK_THROWS_WITH_AS(Scenario({0.0, 1.0}, vars, {Expr::var("W")}, {}, {}),
                       "expression mentions undeclared variable 'W'", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      Scenario({0.0, 1.0}, vars, {X, X}, {Breakpoint{Location::at_var("V"), X}}, {}),
      "unknown variable in location", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      Scenario({0.0, 1.0}, vars, {X, X}, {Breakpoint{Location::at(1.0), X}}, {}),
      "breakpoint outside domain interior", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      Scenario({0.0, 1.0}, vars, {X}, {}, {PointException{Location::at(1.5), X}}),
      "exception location outside domain", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      Scenario({0.0, 1.0}, vars, {X, X, X},
               {Breakpoint{Location::at(0.6), X}, Breakpoint{Location::at(0.2), X}}, {}),
      "breakpoints out of order", std::invalid_argument);
}

TEST_CASE("realize is deterministic per seed and draws the declared laws") {
  Expr X = Expr::var("X");
  Scenario sc({0.0, 1.0},
              {{"X", VarLaw::uniform, 0.0, 1.0},
               {"N", VarLaw::normal, 2.0, 0.5},
               {"F", VarLaw::unit_frechet},
               {"T", VarLaw::two_interval}},
              {X}, {}, {});

  Realization a = realize(sc, 42);
  Realization b = realize(sc, 42);
  CHECK(a.env == b.env);
  CHECK(realize(sc, 43).env != a.env);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Realization r = realize(sc, seed);
    double x = r.env.at("X");
    double f = r.env.at("F");
    double t = r.env.at("T");
    CHECK((x >= 0.0 && x < 1.0));
    CHECK(std::isfinite(r.env.at("N")));
    CHECK(f > 0.0);
    CHECK(((t >= 0.0 && t < 1.0) || (t >= 2.0 && t < 3.0)));
  }
}

TEST_CASE("degenerate draws abort the sample") {
  Expr X = Expr::var("X");
  std::vector<VarSpec> vars{{"X", VarLaw::uniform, 0.0, 1.0}};

  // Two exceptions at the same fixed point always collide.
  Scenario collide({0.0, 1.0}, vars, {X}, {},
                   {PointException{Location::at(0.5), X}, PointException{Location::at(0.5), X}});
  CHECK_THROWS_WITH_AS(realize(collide, 1), "degenerate scenario draw", DegenerateDraw);

  // Exception sitting exactly on a breakpoint collides.
  Scenario on_break({0.0, 1.0}, vars, {X, X}, {Breakpoint{Location::at(0.5), X}},
                    {PointException{Location::at(0.5), X}});
  CHECK_THROWS_AS(realize(on_break, 1), DegenerateDraw);

  // A drawn breakpoint left of a fixed one disorders the segments.
  Scenario disorder({0.0, 1.0}, {{"X", VarLaw::uniform, 0.0, 1.0}, {"U", VarLaw::uniform, 0.1, 0.4}},
                    {X, X, X}, {Breakpoint{Location::at(0.5), X}, Breakpoint{Location::at_var("U"), X}},
                    {});
  CHECK_THROWS_AS(realize(disorder, 7), DegenerateDraw);
}

TEST_CASE("value_at picks exception, breakpoint, then segment body") {
  Realization r;
  r.domain = {0.0, 1.0};
  r.bodies = {Expr::constant(ExtReal(1.0)), Expr::constant(ExtReal(2.0)),
              Expr::constant(ExtReal(3.0))};
  r.breaks = {0.3, 0.6};
  r.at_values = {Expr::constant(ExtReal(10.0)), Expr::constant(ExtReal(20.0))};
  r.exceptions = {{0.45, Expr::constant(ExtReal(99.0))}};

  CHECK(r.value_at(0.0) == ExtReal(1.0));
  CHECK(r.value_at(0.3) == ExtReal(10.0));
  CHECK(r.value_at(0.45) == ExtReal(99.0));
  CHECK(r.value_at(0.5) == ExtReal(2.0));
  CHECK(r.value_at(0.6) == ExtReal(20.0));
  CHECK(r.value_at(1.0) == ExtReal(3.0));
  CHECK_THROWS_WITH_AS(r.value_at(1.5).raw(), "point outside scenario domain",
                       std::invalid_argument);
}

TEST_CASE("is_usc_trajectory decides exactly at exceptional points") {
  GalleryEntry lsc = gallery_entry("lsc_margins");

  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    // Raw: exception value X v Y always dominates the base X.
    CHECK(is_usc_trajectory(realize(lsc.scenario, seed)));

    // Standardized: fails exactly when (X v Y)^2 < X.
    Realization tr = realize(lsc.transformed, seed);
    double x = tr.env.at("X");
    double y = tr.env.at("Y");
    double m = std::max(x, y);
    CHECK(is_usc_trajectory(tr) == (m * m >= x));
  }

  // A continuous scenario with no exceptional points is always usc.
  Expr X = Expr::var("X");
  Scenario plain({0.0, 1.0}, {{"X", VarLaw::uniform, 0.0, 1.0}}, {X * Expr::coord()}, {}, {});
  CHECK(is_usc_trajectory(realize(plain, 5)));
}

TEST_CASE("adding an exception equal to the base value preserves the usc verdict") {
  GalleryEntry entry = gallery_entry("b_not_necessary");
  const Scenario& base = entry.scenario;
  Expr X = Expr::var("X");
  // Same trajectory with a redundant exception at s = -0.5 whose value is the
  // enclosing body X.
  Scenario padded(base.domain(), base.variables(), base.bodies(), base.breakpoints(),
                  {PointException{Location::at(-0.5), X}});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CHECK(is_usc_trajectory(realize(base, seed)) == is_usc_trajectory(realize(padded, seed)));
  }
}

TEST_CASE("is_usc_trajectory rejects malformed realizations") {
  Realization r = const_realization(0.0, 1.0, 1.0);
  r.exceptions = {{0.5, Expr::constant(ExtReal(2.0))}, {0.5, Expr::constant(ExtReal(3.0))}};
  CHECK_THROWS_WITH_AS(is_usc_trajectory(r), "degenerate scenario draw", DegenerateDraw);

  Realization shape = const_realization(0.0, 1.0, 1.0);
  shape.breaks = {0.5};
  CHECK_THROWS_WITH_AS(is_usc_trajectory(shape), "realization shape mismatch", std::logic_error);
}

TEST_CASE("trajectory_hits is exact on piecewise constant trajectories") {
  Realization r = const_realization(0.0, 1.0, 2.0);
  CHECK(trajectory_hits(r, interval_probe(0.2, 0.4, 1.5)));
  CHECK_FALSE(trajectory_hits(r, interval_probe(0.2, 0.4, 2.5)));
  CHECK(trajectory_hits(r, interval_probe(0.2, 0.4, 2.0)));
  CHECK_THROWS_WITH_AS(trajectory_hits(r, interval_probe(2.0, 3.0, 1.0)), "empty probe box",
                       std::invalid_argument);

  // A low exception masks the body at a single-point probe.
  Realization dip = const_realization(0.0, 1.0, 2.0);
  dip.exceptions = {{0.3, Expr::constant(ExtReal(0.0))}};
  CHECK_FALSE(trajectory_hits(dip, interval_probe(0.3, 0.3, 1.0)));
  CHECK(trajectory_hits(dip, interval_probe(0.3, 0.3, 0.0)));
  CHECK(trajectory_hits(dip, interval_probe(0.25, 0.35, 1.0)));

  // Breakpoint values are visible to point probes; bodies stay exposed on
  // either side.
  Realization stepped;
  stepped.domain = {0.0, 1.0};
  stepped.bodies = {Expr::constant(ExtReal(0.0)), Expr::constant(ExtReal(0.0))};
  stepped.breaks = {0.5};
  stepped.at_values = {Expr::constant(ExtReal(7.0))};
  CHECK(trajectory_hits(stepped, interval_probe(0.5, 0.5, 5.0)));
  CHECK(trajectory_hits(stepped, interval_probe(0.4, 0.6, 5.0)));
  CHECK_FALSE(trajectory_hits(stepped, interval_probe(0.0, 0.4, 5.0)));
  CHECK(trajectory_hits(stepped, interval_probe(0.0, 0.4, -1.0)));

  // Probes through a +inf exception hit every level.
  Realization spike = const_realization(0.0, 1.0, 0.0);
  spike.exceptions = {{0.5, Expr::constant(ExtReal::pos_inf())}};
  CHECK(trajectory_hits(spike, interval_probe(0.0, 1.0, 1e300)));

  Realization sloped;
  sloped.domain = {0.0, 1.0};
  sloped.bodies = {Expr::coord()};
  CHECK_THROWS_WITH_AS(trajectory_hits(sloped, interval_probe(0.0, 1.0, 0.5)),
                       "hit test requires coordinate-free segment bodies", std::logic_error);

  // Every part is validated even after an earlier part already hit.
  Realization ok = const_realization(0.0, 1.0, 2.0);
  CompactProbe two_parts{{ProbePart{Box::interval(0.0, 1.0), 1.0},
                          ProbePart{Box::interval(5.0, 6.0), 1.0}}};
  CHECK_THROWS_AS(trajectory_hits(ok, two_parts), std::invalid_argument);
}

TEST_CASE("gallery ids are exactly the six named entries") {
  const auto& ids = gallery_ids();
  std::vector<std::string> expected{"atom",           "lsc_margins",
                                    "b_not_necessary", "law_mismatch_1",
                                    "law_mismatch_2",  "theta_discontinuous"};
  CHECK(ids == expected);
  for (const auto& id : ids) {
    GalleryEntry e = gallery_entry(id);
    CHECK(e.id == id);
    CHECK_FALSE(e.transform_description.empty());
    CHECK_FALSE(e.claimed_outcome.empty());
  }
  CHECK_THROWS_WITH_AS(gallery_entry("nope"), "unknown gallery entry", std::invalid_argument);
}

TEST_CASE("every raw gallery realization is usc and coupled to its standardized draw") {
  for (const auto& id : gallery_ids()) {
    GalleryEntry entry = gallery_entry(id);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Realization raw = realize(entry.scenario, seed);
      Realization tr = realize(entry.transformed, seed);
      CHECK(is_usc_trajectory(raw));
      CHECK(raw.env == tr.env);
    }
  }
}

TEST_CASE("non-usc rates match their closed forms") {
  const std::int64_t n = 20000;
  const std::uint64_t seed = 101;

  RateEstimate lsc = estimate_nonusc_probability(gallery_entry("lsc_margins"), n, seed);
  CHECK(std::abs(lsc.estimate - 2.0 / 3.0) < 0.014);  // 4 sigma at n = 20000
  CHECK(lsc.halfwidth > 0.0);

  RateEstimate theta = estimate_nonusc_probability(gallery_entry("theta_discontinuous"), n, seed);
  CHECK(std::abs(theta.estimate - 2.0 / 3.0) < 0.014);

  CHECK(estimate_nonusc_probability(gallery_entry("b_not_necessary"), n, seed).estimate == 0.0);
  CHECK(estimate_nonusc_probability(gallery_entry("atom"), n, seed).estimate == 0.0);
  CHECK(estimate_nonusc_probability(gallery_entry("law_mismatch_1"), n, seed).estimate == 0.0);
  CHECK(estimate_nonusc_probability(gallery_entry("law_mismatch_2"), n, seed).estimate == 0.0);

  // Deterministic given (entry, n, seed).
  RateEstimate again = estimate_nonusc_probability(gallery_entry("lsc_margins"), n, seed);
  CHECK(again.estimate == lsc.estimate);
  CHECK(again.halfwidth == lsc.halfwidth);

  CHECK_THROWS_WITH_AS(estimate_nonusc_probability(gallery_entry("atom"), 99, seed),
                       "need at least 100 samples", std::invalid_argument);
}

TEST_CASE("jump inversion rates match their closed forms") {
  const std::int64_t n = 20000;
  const std::uint64_t seed = 202;

  RateEstimate theta =
      estimate_jump_inversion_probability(gallery_entry("theta_discontinuous"), n, seed);
  CHECK(std::abs(theta.estimate - 1.0 / 6.0) < 0.011);  // 4 sigma

  RateEstimate lsc = estimate_jump_inversion_probability(gallery_entry("lsc_margins"), n, seed);
  CHECK(std::abs(lsc.estimate - 1.0 / 6.0) < 0.011);

  CHECK(estimate_jump_inversion_probability(gallery_entry("atom"), n, seed).estimate == 0.0);
  CHECK(estimate_jump_inversion_probability(gallery_entry("b_not_necessary"), n, seed).estimate ==
        0.0);
  CHECK(estimate_jump_inversion_probability(gallery_entry("law_mismatch_1"), n, seed).estimate ==
        0.0);
}

TEST_CASE("jump inversion events are a subset of non-usc failures") {
  GalleryEntry entry = gallery_entry("theta_discontinuous");
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Realization raw = realize(entry.scenario, seed);
    Realization tr = realize(entry.transformed, seed);
    double x = tr.env.at("X");
    double y = tr.env.at("Y");
    bool inverted = (std::max(x, y) > x) && (std::max(x, y) / 2 < x);
    bool nonusc = !is_usc_trajectory(tr);
    CHECK(is_usc_trajectory(raw));
    if (inverted) CHECK(nonusc);
  }
}

TEST_CASE("hypograph difference rates match their closed forms") {
  const std::int64_t n = 20000;
  const std::uint64_t seed = 303;

  RateEstimate law2 = hypograph_difference_rate(gallery_entry("law_mismatch_2"), n, seed);
  CHECK(std::abs(law2.estimate - 0.5) < 0.015);  // 4 sigma

  CHECK(hypograph_difference_rate(gallery_entry("law_mismatch_1"), n, seed).estimate == 1.0);
  CHECK(hypograph_difference_rate(gallery_entry("b_not_necessary"), n, seed).estimate == 0.0);
}

TEST_CASE("coupled capacities separate the law-mismatch trajectories") {
  const std::int64_t n = 20000;
  const std::uint64_t seed = 404;

  GalleryEntry law1 = gallery_entry("law_mismatch_1");
  auto [p1_raw, p1_tr] = capacities_differ(law1, interval_probe(0.0, 1.0, 2.5), n, seed);
  CHECK(p1_raw == 0.0);
  CHECK(p1_tr == 1.0);

  auto [low_raw, low_tr] = capacities_differ(law1, interval_probe(0.0, 1.0, -1e300), 500, seed);
  CHECK(low_raw == 1.0);
  CHECK(low_tr == 1.0);

  GalleryEntry law2 = gallery_entry("law_mismatch_2");
  auto [p2_raw, p2_tr] = capacities_differ(law2, interval_probe(0.0, 1.0, 1.75), n, seed);
  CHECK(std::abs(p2_raw - 0.5) < 0.015);
  CHECK(p2_tr == 1.0);

  // Above the standardization gap the coupled hits coincide sample by sample.
  auto [q_raw, q_tr] = capacities_differ(law2, interval_probe(0.0, 1.0, 2.5), n, seed);
  CHECK(q_raw == q_tr);
  CHECK(std::abs(q_raw - 0.25) < 0.013);

  CHECK_THROWS_WITH_AS(
      capacities_differ(gallery_entry("atom"), interval_probe(0.0, 1.0, 1.0), n, seed),
      "not a law-mismatch entry", std::invalid_argument);
}

TEST_CASE("standardized trajectories dominate raw ones for law_mismatch_1") {
  GalleryEntry entry = gallery_entry("law_mismatch_1");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Realization raw = realize(entry.scenario, seed);
    Realization tr = realize(entry.transformed, seed);
    double y = raw.env.at("Y");
    CHECK(tr.value_at(y) >= raw.value_at(y));
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      if (s == y) continue;
      CHECK(tr.value_at(s) >= raw.value_at(s));
    }
  }
}

TEST_CASE("atom margins standardize to the constant 1 at the origin") {
  GalleryEntry entry = gallery_entry("atom");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Realization raw = realize(entry.scenario, seed);
    Realization tr = realize(entry.transformed, seed);
    CHECK(raw.value_at(0.0) == ExtReal(0.0));
    CHECK(tr.value_at(0.0) == ExtReal(1.0));
    // Off the origin the raw trajectory scales the uniforms by |s|.
    double x = raw.env.at("X");
    double y = raw.env.at("Y");
    CHECK(raw.value_at(-0.5).raw() == doctest::Approx(0.5 * x).epsilon(1e-15));
    CHECK(raw.value_at(0.5).raw() == doctest::Approx(0.5 * y).epsilon(1e-15));
    CHECK(tr.value_at(-0.5) == ExtReal(x));
    CHECK(tr.value_at(0.5) == ExtReal(y));
  }
}

TEST_CASE("scenario JSON round trip reproduces realizations exactly") {
  for (const auto& id : gallery_ids()) {
    GalleryEntry entry = gallery_entry(id);
    for (const Scenario* sc : {&entry.scenario, &entry.transformed}) {
      Scenario back = scenario_from_json(scenario_to_json(*sc));
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Realization a = realize(*sc, seed);
        Realization b = realize(back, seed);
        CHECK(a.env == b.env);
        CHECK(a.breaks == b.breaks);
        double lo = a.domain.lo, hi = a.domain.hi;
        for (int k = 0; k <= 8; ++k) {
          double s = lo + (hi - lo) * k / 8.0;
          CHECK(a.value_at(s) == b.value_at(s));
        }
      }
    }
  }

  nlohmann::json bad = scenario_to_json(gallery_entry("atom").scenario);
  bad["variables"][0]["law"] = "cauchy";
  CHECK_THROWS_WITH_AS(scenario_from_json(bad), "unknown distribution", std::runtime_error);
}

TEST_CASE("gallery records carry the estimate plus per-entry diagnostics") {
  nlohmann::json rec = gallery_record(gallery_entry("law_mismatch_2"), 500, 99);
  CHECK(rec.at("entry").get<std::string>() == "law_mismatch_2");
  CHECK(rec.at("n_samples").get<std::int64_t>() == 500);
  CHECK(rec.at("seed").get<std::uint64_t>() == 99);
  CHECK(rec.at("estimate").get<double>() == 0.0);
  CHECK(rec.contains("halfwidth"));
  CHECK(rec.contains("hypo_difference_rate"));
  CHECK(rec.contains("jump_inversion_rate"));

  nlohmann::json atom = gallery_record(gallery_entry("atom"), 500, 99);
  CHECK(atom.at("standardized_value_at_origin").get<double>() == 1.0);
  CHECK_FALSE(atom.contains("hypo_difference_rate"));

  // Determinism of the whole record.
  CHECK(gallery_record(gallery_entry("theta_discontinuous"), 500, 3) ==
        gallery_record(gallery_entry("theta_discontinuous"), 500, 3));
}
