#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "uscx/expr.hpp"
#include "uscx/grid.hpp"

namespace uscx {

/** Closed interval on which a trajectory lives (a continuum, not a grid). */
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/** Supported variable distributions. */
enum class VarLaw {
  uniform,       // uniform on [a, b)
  normal,        // mean a, standard deviation b
  unit_frechet,  // P[X <= x] = exp(-1/x) on x > 0
  two_interval,  // uniform on [0,1] u [2,3], fair coin between the intervals
};

struct VarSpec {
  std::string name;
  VarLaw law = VarLaw::uniform;
  double a = 0.0;  // uniform lower bound / normal mean
  double b = 1.0;  // uniform upper bound / normal standard deviation
};

/** A point of the domain, fixed or drawn (the realized value of a variable). */
struct Location {
  bool is_var = false;
  double value = 0.0;
  std::string var;

  static Location at(double s) { return Location{false, s, {}}; }
  static Location at_var(std::string name) { return Location{true, 0.0, std::move(name)}; }
};

/** Interior point separating two segment bodies, with its own value. */
struct Breakpoint {
  Location loc;
  Expr value;
};

/** Isolated point whose value overrides the enclosing segment body. */
struct PointException {
  Location loc;
  Expr value;
};

/**
 * Random trajectory on an interval: an ordered list of segment bodies, each
 * continuous in s by the expression grammar, separated by breakpoints that
 * carry their own at-the-point values, plus finitely many isolated point
 * exceptions.  A single-segment scenario with point exceptions is the basic
 * shape "continuous base + exceptional points"; the segmented form covers
 * trajectories whose base itself switches formula at (possibly random)
 * points.  Exceptional locations are almost surely distinct; draws that
 * collide, land outside the domain, or disorder the breakpoints abort the
 * sample (DegenerateDraw).
 */
class Scenario {
 public:
  /**
   * bodies.size() must be breakpoints.size() + 1 (segment bodies in
   * left-to-right order).  Validates that variable names are distinct, that
   * location variables are declared, that every expression mentions only
   * declared variables, and that distribution parameters are admissible.
   */
  Scenario(Interval domain, std::vector<VarSpec> variables, std::vector<Expr> bodies,
           std::vector<Breakpoint> breakpoints, std::vector<PointException> exceptions);

  const Interval& domain() const { return domain_; }
  const std::vector<VarSpec>& variables() const { return variables_; }
  const std::vector<Expr>& bodies() const { return bodies_; }
  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }
  const std::vector<PointException>& exceptions() const { return exceptions_; }

 private:
  Interval domain_;
  std::vector<VarSpec> variables_;
  std::vector<Expr> bodies_;
  std::vector<Breakpoint> breakpoints_;
  std::vector<PointException> exceptions_;
};

/** Thrown when a draw produces coincident or disordered exceptional points. */
struct DegenerateDraw : std::runtime_error {
  DegenerateDraw() : std::runtime_error("degenerate scenario draw") {}
};

/**
 * One realized trajectory: the drawn variable assignment plus the induced
 * piecewise description.  breaks are strictly increasing interior points;
 * bodies has breaks.size() + 1 entries; at_values[i] is the value exactly at
 * breaks[i]; exceptions are sorted by location, disjoint from breaks.
 */
struct Realization {
  Interval domain;
  Env env;
  std::vector<double> breaks;
  std::vector<Expr> bodies;
  std::vector<Expr> at_values;
  std::vector<std::pair<double, Expr>> exceptions;

  /**
   * Trajectory value at s (exception value, breakpoint value, or enclosing
   * segment body).  Throws std::invalid_argument outside the domain
   * ("point outside scenario domain").
   */
  ExtReal value_at(double s) const;
};

/**
 * Draw the variables with Rng(seed) in declaration order and resolve the
 * piecewise structure.  Deterministic per seed; Monte Carlo callers give
 * sample i the seed stream_seed(base_seed, i).  Throws DegenerateDraw when
 * realized breakpoints are not strictly increasing strictly inside the
 * domain, or when exception locations collide with each other, with a
 * breakpoint, or leave the domain.
 */
Realization realize(const Scenario& scenario, std::uint64_t seed);

/**
 * Exact decision: the realized trajectory is upper semicontinuous iff at
 * every breakpoint its value dominates both adjacent segment limits and at
 * every exception it dominates the enclosing segment limit (segment bodies
 * are continuous, so one-sided limits are body evaluations at the point).
 * No tolerance is involved.  Throws DegenerateDraw on coincident or
 * disordered exceptional points.
 */
bool is_usc_trajectory(const Realization& r);

/**
 * Hypograph hit test against a finite union of (interval, level) parts:
 * true when some part's interval contains a point where the trajectory
 * reaches the level.  Exact for segment bodies that do not mention the
 * coordinate (throws std::logic_error "hit test requires coordinate-free
 * segment bodies" otherwise); a part whose interval misses the domain
 * throws std::invalid_argument ("empty probe box").
 */
bool trajectory_hits(const Realization& r, const CompactProbe& probe);

/**
 * True when the two trajectories take different values at some breakpoint,
 * exception, domain endpoint, or midpoint of the refined piece partition.
 * Exact for piecewise coordinate-free trajectories; domains must agree
 * ("domain mismatch").
 */
bool trajectories_differ(const Realization& a, const Realization& b);

/** Monte Carlo proportion with a normal-approximation 95% half-width. */
struct RateEstimate {
  double estimate = 0.0;
  double halfwidth = 0.0;
};

/**
 * Named counterexample: a raw scenario, the exact symbolic form of its
 * marginally standardized trajectory (same variables, same draws), and
 * prose describing the transform and the claimed outcome.  The standardized
 * form is what the estimators realize; its agreement with the numeric
 * transform pipeline is asserted in the transform tests.
 */
struct GalleryEntry {
  std::string id;
  Scenario scenario;
  Scenario transformed;
  std::string transform_description;
  std::string claimed_outcome;
};

/**
 * The six gallery ids: atom, lsc_margins, b_not_necessary, law_mismatch_1,
 * law_mismatch_2, theta_discontinuous.
 */
const std::vector<std::string>& gallery_ids();

/** Build a gallery entry by id ("unknown gallery entry"). */
GalleryEntry gallery_entry(const std::string& id);

/**
 * Proportion of realizations whose standardized trajectory fails
 * is_usc_trajectory, over n_samples >= 100 seeds base..base+n-1
 * ("need at least 100 samples"); degenerate draws are skipped.
 */
RateEstimate estimate_nonusc_probability(const GalleryEntry& entry, std::int64_t n_samples,
                                         std::uint64_t seed);

/**
 * Proportion of realizations with some exceptional point whose raw value
 * strictly exceeds its adjacent segment limit while the standardized value
 * falls strictly below the standardized limit: the rate at which
 * standardization inverts a genuine upward jump into a usc violation.
 */
RateEstimate estimate_jump_inversion_probability(const GalleryEntry& entry,
                                                 std::int64_t n_samples, std::uint64_t seed);

/**
 * Proportion of realizations whose raw and standardized trajectories differ
 * (coupled draws, exact value comparison via trajectories_differ).
 */
RateEstimate hypograph_difference_rate(const GalleryEntry& entry, std::int64_t n_samples,
                                       std::uint64_t seed);

/**
 * Coupled hit probabilities (raw, standardized) for a probe under shared
 * seeds.  Only the law-mismatch entries support this comparison
 * ("not a law-mismatch entry"); n_samples >= 100.
 */
std::pair<double, double> capacities_differ(const GalleryEntry& entry, const CompactProbe& probe,
                                            std::int64_t n_samples, std::uint64_t seed);

/** JSON mirror of the Scenario fields (domain, variables, bodies, breakpoints, exceptions). */
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

/**
 * Result record {entry, n_samples, seed, estimate, halfwidth} for the
 * non-usc rate, with per-entry diagnostic extensions: jump inversion rate
 * for entries with exceptional points, hypograph difference rate for the
 * law-mismatch entries, and the standardized value at s = 0 for atom.
 */
nlohmann::json gallery_record(const GalleryEntry& entry, std::int64_t n_samples,
                              std::uint64_t seed);

}  // namespace uscx
