#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "uscx/extreal.hpp"
#include "uscx/gev.hpp"
#include "uscx/grid.hpp"
#include "uscx/maxstable.hpp"
#include "uscx/rng.hpp"
#include "uscx/transform.hpp"

using namespace uscx;

namespace {

Domain unit_grid() { return Domain::make1d(0.0, 1.0, 33); }

CompactProbe box_probe(double a, double b, double level) {
  return CompactProbe{{ProbePart{Box::interval(a, b), level}}};
}

// Two-sided KS distance of sorted samples against a cdf.
double ks_distance(std::vector<double> samples, double (*cdf)(double)) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

double frechet_cdf(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

double storm_miss(double a, double b, double r, double x) {
  return std::exp(-(b - a + 2.0 * r) / (2.0 * r * x));
}

// 99% two-sided band for the KS statistic.
double ks_band(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

double binom_sigma(double p, std::size_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(n));
}

std::vector<StairStep> three_plateaus() {
  // values 0.3 | 1.0 | 0.6: each joint keeps the weakly higher side
  return {StairStep{0.4, 0.3, false}, StairStep{0.2, 1.0, true}, StairStep{0.4, 0.6, true}};
}

}  // namespace

TEST_CASE("spectral models validate their parameters and expose constant means") {
  const Domain d = unit_grid();

  const SpectralModel one = SpectralModel::constant_one(d);
  CHECK(one.family() == SpectralModel::Family::constant_one);
  CHECK(one.bound() == 1.0);
  CHECK(one.mean_value() == 1.0);
  CHECK(one.peak_ratio() == 1.0);

  const SpectralModel storm = SpectralModel::storm(d, 0.25, 2.0);
  CHECK(storm.bound() == 2.0);
  // f = h * 2r / (len + 2r), constant over the domain
  CHECK(storm.mean_value() == doctest::Approx(2.0 * 0.5 / 1.5).epsilon(1e-15));
  CHECK(storm.peak_ratio() == doctest::Approx(1.5 / 0.5).epsilon(1e-15));
  CHECK(storm.storm_radius() == 0.25);
  CHECK(storm.storm_height() == 2.0);

  const SpectralModel stair = SpectralModel::staircase(d, three_plateaus());
  CHECK(stair.bound() == 1.0);
  CHECK(stair.mean_value() ==
        doctest::Approx(0.4 * 0.3 + 0.2 * 1.0 + 0.4 * 0.6).epsilon(1e-15));
  CHECK(stair.steps().size() == 3);

  const Domain plane = Domain::make2d(0.0, 1.0, 5, 0.0, 1.0, 5);
  CHECK_NOTHROW(SpectralModel::constant_one(plane));
  CHECK_THROWS_WITH_AS(SpectralModel::storm(plane, 0.25, 1.0),
                       "spectral model needs a one-dimensional domain",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(SpectralModel::staircase(plane, three_plateaus()),
                       "spectral model needs a one-dimensional domain",
                       std::invalid_argument);

  CHECK_THROWS_WITH_AS(SpectralModel::storm(d, 0.0, 1.0), "storm radius must be positive",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(SpectralModel::storm(d, -0.5, 1.0), "storm radius must be positive",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      SpectralModel::storm(d, std::numeric_limits<double>::infinity(), 1.0),
      "storm radius must be positive", std::invalid_argument);
  CHECK_THROWS_WITH_AS(SpectralModel::storm(d, 0.25, 0.0), "storm height must be positive",
                       std::invalid_argument);

  CHECK_THROWS_WITH_AS(SpectralModel::staircase(d, {}),
                       "staircase needs at least one plateau", std::invalid_argument);
  CHECK_THROWS_WITH_AS(SpectralModel::staircase(d, {StairStep{0.0, 1.0, true}}),
                       "plateau width must be positive", std::invalid_argument);
  CHECK_THROWS_WITH_AS(SpectralModel::staircase(d, {StairStep{1.0, -0.1, true}}),
                       "plateau value must be nonnegative", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      SpectralModel::staircase(d, {StairStep{1.0, 0.0, true}, StairStep{1.0, 0.0, true}}),
      "staircase needs a positive plateau", std::invalid_argument);
  // joint between the plateaus keeps the lower (left) value: rejected
  CHECK_THROWS_WITH_AS(
      SpectralModel::staircase(d, {StairStep{1.0, 1.0, true}, StairStep{1.0, 2.0, false}}),
      "staircase jump closed on the lower side", std::invalid_argument);
  // same heights: either closure is fine, including a single plateau
  CHECK_NOTHROW(
      SpectralModel::staircase(d, {StairStep{1.0, 1.0, true}, StairStep{1.0, 1.0, false}}));
  CHECK_NOTHROW(SpectralModel::staircase(d, {StairStep{1.0, 2.0, false}}));
}

TEST_CASE("constant one fields are a single Frechet atom") {
  const MaxStableSampler sampler(SpectralModel::constant_one(unit_grid()), 0);

  SimulateStats stats;
  const GridField field = simulate_simple(sampler, 42, &stats);
  CHECK(stats.atoms == 1);
  // The field is the constant Y_1 = 1/E_1 built from the stream's first draw.
  Rng replay(42);
  const ExtReal expected(1.0 / replay.exponential());
  for (const ExtReal& v : field.values) CHECK(v == expected);

  const std::size_t n = 100000;
  std::vector<double> first_node;
  first_node.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const GridField draw = simulate_simple(sampler, stream_seed(7, i));
    first_node.push_back(draw.values.front().raw());
  }
  CHECK(ks_distance(std::move(first_node), frechet_cdf) < ks_band(n));
}

TEST_CASE("storm margins are unit Frechet at every probed node") {
  const Domain d = unit_grid();
  const MaxStableSampler sampler(SpectralModel::storm(d, 0.25, 2.0), 0);
  const std::size_t n = 100000;
  const std::vector<int> probe_nodes = {0, 8, 16, 24, 32};
  std::vector<std::vector<double>> samples(probe_nodes.size());
  for (auto& bucket : samples) bucket.reserve(n);
  double atoms_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    SimulateStats stats;
    const GridField field = simulate_simple(sampler, stream_seed(11, i), &stats);
    atoms_total += static_cast<double>(stats.atoms);
    for (std::size_t k = 0; k < probe_nodes.size(); ++k) {
      samples[k].push_back(field.at(probe_nodes[k]).raw());
    }
  }
  for (auto& bucket : samples) {
    CHECK(ks_distance(std::move(bucket), frechet_cdf) < ks_band(n));
  }
  // termination stays far from the atom budget
  CHECK(atoms_total / static_cast<double>(n) < 50.0);
  CHECK(atoms_total / static_cast<double>(n) > 1.0);
}

TEST_CASE("staircase margins are unit Frechet") {
  const MaxStableSampler sampler(SpectralModel::staircase(unit_grid(), three_plateaus()), 0);
  const std::size_t n = 30000;
  std::vector<double> mid;
  mid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    mid.push_back(simulate_simple(sampler, stream_seed(501, i)).at(16).raw());
  }
  CHECK(ks_distance(std::move(mid), frechet_cdf) < ks_band(n));
}

TEST_CASE("storm capacities match the closed form") {
  const Domain d = unit_grid();
  struct Setting {
    double r, a, b, x;
  };
  // box ends sit on grid nodes and 2r >= the grid step, so the node-window
  // union is the single interval [a - r, b + r] and the exact integral
  // reduces to (b - a + 2r)/(2rx); single points reduce to the margin 1/x
  const std::vector<Setting> settings = {
      {0.25, 0.25, 0.75, 1.5}, {0.10, 0.00, 0.50, 1.0},  {0.50, 0.50, 0.50, 2.0},
      {0.05, 0.25, 0.3125, 0.8}, {0.25, 0.00, 1.00, 3.0}, {0.125, 0.75, 1.00, 1.0}};
  for (const Setting& s : settings) {
    const SpectralModel model = SpectralModel::storm(d, s.r, 2.0);
    const double closed = capacity_closed_form(model, box_probe(s.a, s.b, s.x), 0, 0);
    CHECK(closed == doctest::Approx(storm_miss(s.a, s.b, s.r, s.x)).epsilon(1e-12));
  }
  // the single-point probe reproduces the Frechet margin miss e^{-1/x}
  const SpectralModel margin_model = SpectralModel::storm(d, 0.5, 2.0);
  CHECK(capacity_closed_form(margin_model, box_probe(0.5, 0.5, 2.0), 0, 0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  // empirical agreement within 3 sigma at 2e4 draws per setting
  const std::size_t n = 20000;
  std::uint64_t base = 900;
  for (const Setting& s : settings) {
    const MaxStableSampler sampler(SpectralModel::storm(d, s.r, 2.0), 0);
    const CapacityEstimate est =
        capacity_empirical(sampler, box_probe(s.a, s.b, s.x), n, base += 13);
    const double target = 1.0 - storm_miss(s.a, s.b, s.r, s.x);
    CHECK(std::abs(est.hit_rate - target) < 3.0 * binom_sigma(target, n));
    CHECK(est.halfwidth_95 ==
          doctest::Approx(1.959963984540054 *
                          std::sqrt(est.hit_rate * (1.0 - est.hit_rate) /
                                    static_cast<double>(n)))
              .epsilon(1e-15));
  }
}

TEST_CASE("capacity closed form covers levels, parts, and families") {
  const Domain d = unit_grid();
  const SpectralModel one = SpectralModel::constant_one(d);

  CHECK(capacity_closed_form(one, box_probe(0.0, 1.0, 2.0), 0, 0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  // two parts: the expectation is the larger reciprocal level
  CompactProbe both;
  both.parts.push_back(ProbePart{Box::interval(0.0, 0.5), 2.0});
  both.parts.push_back(ProbePart{Box::interval(0.5, 1.0), 0.8});
  CHECK(capacity_closed_form(one, both, 0, 0) ==
        doctest::Approx(std::exp(-1.25)).epsilon(1e-15));

  // nonpositive level: the probe is hit surely, miss probability 0 exactly
  CompactProbe low = box_probe(0.0, 1.0, 0.0);
  CHECK(capacity_closed_form(one, low, 0, 0) == 0.0);
  low.parts.push_back(ProbePart{Box::interval(0.0, 1.0), 5.0});
  CHECK(capacity_closed_form(one, low, 0, 0) == 0.0);
  const SpectralModel storm = SpectralModel::storm(d, 0.25, 1.0);
  CHECK(capacity_closed_form(storm, box_probe(0.25, 0.75, -1.0), 0, 0) == 0.0);

  // an empty probe is never hit
  CHECK(capacity_closed_form(one, CompactProbe{}, 0, 0) == 1.0);

  // levels only get harder to reach: the miss probability is nondecreasing
  double previous = 0.0;
  for (const double level : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    const double miss = capacity_closed_form(storm, box_probe(0.25, 0.75, level), 0, 0);
    CHECK(miss >= previous);
    previous = miss;
  }

  // a box squeezed between grid nodes carries no information
  const Box gap = Box::interval(0.26, 0.28);
  CHECK_THROWS_WITH_AS(
      capacity_closed_form(one, CompactProbe{{ProbePart{gap, 1.0}}}, 0, 0),
      "empty probe box", std::invalid_argument);

  // the staircase family estimates the expectation from spectral draws
  const SpectralModel stair = SpectralModel::staircase(d, three_plateaus());
  CHECK_THROWS_WITH_AS(capacity_closed_form(stair, box_probe(0.0, 1.0, 1.0), 0, 0),
                       "need at least one expectation sample", std::invalid_argument);
  const double stair_miss = capacity_closed_form(stair, box_probe(0.25, 0.75, 1.5),
                                                 200000, 31);
  const MaxStableSampler stair_sampler(stair, 0);
  const CapacityEstimate stair_emp =
      capacity_empirical(stair_sampler, box_probe(0.25, 0.75, 1.5), 20000, 77);
  CHECK(std::abs(stair_emp.hit_rate - (1.0 - stair_miss)) <
        3.0 * binom_sigma(1.0 - stair_miss, 20000));
}

TEST_CASE("empirical capacity estimates are reproducible and validated") {
  const Domain d = unit_grid();
  const MaxStableSampler sampler(SpectralModel::storm(d, 0.25, 2.0), 0);
  const CompactProbe probe = box_probe(0.25, 0.75, 1.5);

  CHECK_THROWS_WITH_AS(capacity_empirical(sampler, probe, 99, 1),
                       "need at least 100 samples", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      capacity_empirical(sampler, CompactProbe{{ProbePart{Box::interval(0.3, 0.31), 1.0}}},
                         100, 1),
      "empty probe box", std::invalid_argument);
  CHECK_THROWS_WITH_AS(capacity_empirical(sampler, probe, 100, 1, 0),
                       "thread count must be positive", std::invalid_argument);

  // a level below the sure field minimum is hit every time
  const CapacityEstimate sure = capacity_empirical(sampler, box_probe(0.0, 1.0, 0.0), 200, 5);
  CHECK(sure.hit_rate == 1.0);
  CHECK(sure.halfwidth_95 == 0.0);

  // identical results for every thread count (counter-based streams)
  const CapacityEstimate serial = capacity_empirical(sampler, probe, 600, 21, 1);
  const CapacityEstimate threaded = capacity_empirical(sampler, probe, 600, 21, 3);
  const CapacityEstimate wide = capacity_empirical(sampler, probe, 600, 21, 8);
  CHECK(serial.hit_rate == threaded.hit_rate);
  CHECK(serial.hit_rate == wide.hit_rate);
  CHECK(serial.atoms_mean == threaded.atoms_mean);
  CHECK(serial.atoms_mean == wide.atoms_mean);
}

TEST_CASE("raising a probe level never raises the hit rate under shared seeds") {
  const Domain d = unit_grid();
  const MaxStableSampler sampler(SpectralModel::storm(d, 0.125, 1.0), 0);
  double previous = 2.0;
  for (const double level : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const CapacityEstimate est =
        capacity_empirical(sampler, box_probe(0.25, 0.75, level), 2000, 321);
    CHECK(est.hit_rate <= previous);
    previous = est.hit_rate;
  }
}

TEST_CASE("the stopping rule terminates or reports starvation") {
  const Domain d = unit_grid();
  // constant spectral functions finish after exactly one atom
  const MaxStableSampler one(SpectralModel::constant_one(d), 0);
  const CapacityEstimate est = capacity_empirical(one, box_probe(0.0, 1.0, 1.0), 500, 3);
  CHECK(est.atoms_mean == 1.0);

  // a storm whose windows almost never cover a node cannot stop
  const MaxStableSampler starved(SpectralModel::storm(d, 1e-9, 1.0), 0);
  CHECK_THROWS_WITH_AS(simulate_simple(starved, 4), "stopping rule starved",
                       std::runtime_error);
}

TEST_CASE("storm step fields account for their plateau edges") {
  const Domain d = unit_grid();
  const MaxStableSampler sampler(SpectralModel::storm(d, 0.0625, 1.0), 0);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SimulateStats stats;
    const GridField field = simulate_simple(sampler, stream_seed(888, seed), &stats);
    std::size_t edges = 0;
    std::set<double> levels;
    for (int i = 0; i < d.res(0); ++i) {
      const double v = field.at(i).raw();
      CHECK(v > 0.0);
      CHECK(std::isfinite(v));
      levels.insert(v);
      if (i > 0 && field.at(i) != field.at(i - 1)) ++edges;
    }
    // each storm window contributes at most one plateau with two edges
    CHECK(levels.size() <= stats.atoms);
    CHECK(edges <= 2 * stats.atoms);
    CHECK(stats.atoms < 1000000);
  }
}

TEST_CASE("staircase step fields account for their plateau edges") {
  const Domain d = unit_grid();
  const MaxStableSampler sampler(SpectralModel::staircase(d, three_plateaus()), 0);
  const std::size_t joints = three_plateaus().size() + 1;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SimulateStats stats;
    const GridField field = simulate_simple(sampler, stream_seed(999, seed), &stats);
    std::size_t edges = 0;
    std::set<double> levels;
    for (int i = 0; i < d.res(0); ++i) {
      CHECK(field.at(i).raw() > 0.0);
      levels.insert(field.at(i).raw());
      if (i > 0 && field.at(i) != field.at(i - 1)) ++edges;
    }
    CHECK(levels.size() <= stats.atoms * three_plateaus().size());
    CHECK(edges <= stats.atoms * joints);
  }
}

TEST_CASE("simple max stability holds for constant one in closed form") {
  const MaxStableSampler sampler(SpectralModel::constant_one(unit_grid()), 0);
  const double level = 2.0;
  const std::size_t n_samples = 20000;
  const MaxStabilityReport report = check_simple_max_stability(
      sampler, 3, {box_probe(0.0, 1.0, level)}, n_samples, 2024);
  REQUIRE(report.probes.size() == 1);
  const ProbeStability& row = report.probes[0];
  const double target = 1.0 - std::exp(-3.0 / level);
  CHECK(std::abs(row.p_maxfold - target) < 3.0 * binom_sigma(target, n_samples));
  CHECK(std::abs(row.p_scaled - target) < 3.0 * binom_sigma(target, n_samples));
  CHECK(std::abs(row.z_score) < 3.0);
  CHECK(std::abs(row.z_product) < 3.0);
  // the single branch sees the plain Frechet margin
  const double single_target = 1.0 - std::exp(-1.0 / level);
  CHECK(std::abs(row.p_single - single_target) < 3.0 * binom_sigma(single_target, n_samples));
  CHECK(report.n_copies == 3);
  CHECK(report.n_samples == n_samples);
  CHECK(report.atoms_mean == 1.0);
}

TEST_CASE("one copy compares a field against itself exactly") {
  const MaxStableSampler sampler(SpectralModel::storm(unit_grid(), 0.25, 1.0), 0);
  const MaxStabilityReport report = check_simple_max_stability(
      sampler, 1, {box_probe(0.0, 1.0, 1.0), box_probe(0.25, 0.75, 2.0)}, 500, 17);
  for (const ProbeStability& row : report.probes) {
    CHECK(row.p_maxfold == row.p_scaled);
    CHECK(row.p_maxfold == row.p_single);
    CHECK(row.z_score == 0.0);
    CHECK(row.z_product == 0.0);
  }
}

TEST_CASE("simple max stability holds for the storm within three sigma") {
  const Domain d = unit_grid();
  const SpectralModel model = SpectralModel::storm(d, 0.25, 2.0);
  const MaxStableSampler sampler(model, 0);
  const std::vector<CompactProbe> probes = {
      box_probe(0.25, 0.75, 1.5), box_probe(0.0, 1.0, 3.0), box_probe(0.5, 0.5, 1.0),
      CompactProbe{{ProbePart{Box::interval(0.0, 0.25), 1.0},
                    ProbePart{Box::interval(0.75, 1.0), 2.0}}}};
  const std::size_t n_samples = 30000;
  const MaxStabilityReport report =
      check_simple_max_stability(sampler, 2, probes, n_samples, 55);
  REQUIRE(report.probes.size() == probes.size());
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const ProbeStability& row = report.probes[j];
    CHECK(std::abs(row.z_score) < 3.0);
    CHECK(std::abs(row.z_product) < 3.0);
    // both branches against the squared-miss closed form
    const double miss = capacity_closed_form(model, probes[j], 0, 0);
    const double target = 1.0 - miss * miss;
    CHECK(std::abs(row.p_maxfold - target) < 3.0 * binom_sigma(target, n_samples));
    CHECK(std::abs(row.p_scaled - target) < 3.0 * binom_sigma(target, n_samples));
  }
  CHECK_THROWS_WITH_AS(check_simple_max_stability(sampler, 0, probes, 100, 1),
                       "need at least one copy", std::invalid_argument);
  CHECK_THROWS_WITH_AS(check_simple_max_stability(sampler, 2, probes, 0, 1),
                       "need at least one sample", std::invalid_argument);

  // thread partitioning does not change the counts
  const MaxStabilityReport serial =
      check_simple_max_stability(sampler, 2, probes, 900, 56, 1);
  const MaxStabilityReport threaded =
      check_simple_max_stability(sampler, 2, probes, 900, 56, 4);
  for (std::size_t j = 0; j < probes.size(); ++j) {
    CHECK(serial.probes[j].p_maxfold == threaded.probes[j].p_maxfold);
    CHECK(serial.probes[j].p_scaled == threaded.probes[j].p_scaled);
    CHECK(serial.probes[j].p_single == threaded.probes[j].p_single);
  }
  CHECK(serial.atoms_mean == threaded.atoms_mean);
}

namespace {

ThetaField affine_ramp(const Domain& d) {
  // gamma 0.2 -> 0.8, mu 0 -> 0.5, sigma 1 -> 1.5 across the unit interval
  return ThetaField::affine(d, GevParams{0.2, 0.0, 1.0}, {0.6, 0.0}, {0.5, 0.0},
                            {0.5, 0.0});
}

// Standardized-scale probe equivalent to the native probe (box, x): one part
// per node with the level pulled back through the margin at that node.
CompactProbe pullback_probe(const Domain& d, const ThetaField& theta, double a, double b,
                            double x) {
  CompactProbe probe;
  const auto range = d.index_range(0, a, b);
  for (int i = range[0]; i <= range[1]; ++i) {
    const double s = d.coord(0, i);
    const double f = gev_cdf(x, theta.at_point(s));
    probe.parts.push_back(ProbePart{Box::interval(s, s), -1.0 / std::log(f)});
  }
  return probe;
}

}  // namespace

TEST_CASE("destandardized checks reduce to the simple ones at unit parameters") {
  const Domain d = unit_grid();
  const MaxStableSampler sampler(SpectralModel::storm(d, 0.25, 2.0), 0);
  const ThetaField unit = ThetaField::constant(d, GevParams{1.0, 1.0, 1.0});
  const std::vector<CompactProbe> probes = {box_probe(0.25, 0.75, 1.5),
                                            box_probe(0.0, 1.0, 3.0)};
  const std::size_t n_samples = 4000;
  const MaxStabilityReport simple =
      check_simple_max_stability(sampler, 2, probes, n_samples, 606);
  const MaxStabilityReport dest =
      destandardized_max_stability(sampler, unit, 2, probes, n_samples, 606);
  for (std::size_t j = 0; j < probes.size(); ++j) {
    // the unit-parameter quantile map is the identity up to rounding, so the
    // same seeds give the same hit counts apart from razor-edge flips
    CHECK(std::abs(dest.probes[j].p_maxfold - simple.probes[j].p_maxfold) <= 1e-3);
    CHECK(std::abs(dest.probes[j].p_scaled - simple.probes[j].p_scaled) <= 1e-3);
    CHECK(std::abs(dest.probes[j].p_single - simple.probes[j].p_single) <= 1e-3);
  }
  // the norming pair at unit parameters is (n, 0) exactly
  const Norming pair = norming(2, GevParams{1.0, 1.0, 1.0});
  CHECK(pair.a == 2.0);
  CHECK(pair.b == 0.0);
}

TEST_CASE("destandardized max stability holds for an affine theta ramp") {
  const Domain d = unit_grid();
  const SpectralModel model = SpectralModel::storm(d, 0.25, 2.0);
  const MaxStableSampler sampler(model, 0);
  const ThetaField theta = affine_ramp(d);
  struct NativeProbe {
    double a, b, x;
  };
  const std::vector<NativeProbe> native = {{0.25, 0.75, 2.0}, {0.0, 1.0, 4.0},
                                           {0.5, 0.5, 1.0}};
  std::vector<CompactProbe> probes;
  for (const NativeProbe& p : native) probes.push_back(box_probe(p.a, p.b, p.x));
  const std::size_t n_samples = 30000;
  const MaxStabilityReport report =
      destandardized_max_stability(sampler, theta, 2, probes, n_samples, 4242);
  REQUIRE(report.probes.size() == native.size());
  for (std::size_t j = 0; j < native.size(); ++j) {
    const ProbeStability& row = report.probes[j];
    CHECK(std::abs(row.z_score) < 3.0);
    CHECK(std::abs(row.z_product) < 3.0);
    // native-scale capacities follow from the standardized ones through the
    // node-wise pulled-back levels
    const double miss = capacity_closed_form(
        model, pullback_probe(d, theta, native[j].a, native[j].b, native[j].x), 0, 0);
    const double single_target = 1.0 - miss;
    const double pair_target = 1.0 - miss * miss;
    CHECK(std::abs(row.p_single - single_target) <
          3.0 * binom_sigma(single_target, n_samples));
    CHECK(std::abs(row.p_maxfold - pair_target) <
          3.0 * binom_sigma(pair_target, n_samples));
  }

  const ThetaField broken = ThetaField::table(
      d, std::vector<GevParams>(d.num_nodes(), GevParams{0.3, 0.0, 1.0}), false, 0.0);
  CHECK_THROWS_WITH_AS(destandardized_max_stability(sampler, broken, 2, probes, 100, 1),
                       "theta field not continuous", std::invalid_argument);
}

TEST_CASE("standardizing a destandardized field restores Frechet margins") {
  const Domain d = unit_grid();
  const MaxStableSampler sampler(SpectralModel::storm(d, 0.25, 2.0), 0);
  const ThetaField theta = affine_ramp(d);
  const std::size_t n = 20000;
  std::vector<double> node_values;
  node_values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const GridField simple = simulate_simple(sampler, stream_seed(3030, i));
    const GridField native = gev_destandardize(theta, simple);
    const GridField back = gev_standardize(theta, native);
    node_values.push_back(back.at(24).raw());
    if (i < 50) {
      for (std::size_t k = 0; k < simple.values.size(); ++k) {
        CHECK(back.values[k].raw() ==
              doctest::Approx(simple.values[k].raw()).epsilon(1e-9));
      }
    }
  }
  CHECK(ks_distance(std::move(node_values), frechet_cdf) < ks_band(n));
}

TEST_CASE("spectral models serialize to json and back") {
  const Domain d = unit_grid();
  const std::vector<SpectralModel> models = {
      SpectralModel::constant_one(Domain::make2d(0.0, 1.0, 4, -1.0, 2.0, 5)),
      SpectralModel::storm(d, 0.125, 2.5),
      SpectralModel::staircase(d, three_plateaus())};
  for (const SpectralModel& model : models) {
    const SpectralModel copy = model_from_json(model_to_json(model));
    CHECK(copy.family() == model.family());
    CHECK(copy.domain() == model.domain());
    CHECK(copy.bound() == model.bound());
    CHECK(copy.mean_value() == model.mean_value());
    // identical spectral draws under identical streams
    Rng a(99), b(99);
    std::vector<double> wa, wb;
    model.draw_spectral(a, wa);
    copy.draw_spectral(b, wb);
    CHECK(wa == wb);
  }
  CHECK(model_to_json(models[1])["family"] == "storm");
  CHECK(model_to_json(models[2])["steps"].size() == 3);
  nlohmann::json bad = model_to_json(models[0]);
  bad["family"] = "brownian";
  CHECK_THROWS_WITH_AS(model_from_json(bad), "unknown spectral family",
                       std::invalid_argument);
}
