#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "uscx/gev.hpp"
#include "uscx/grid.hpp"
#include "uscx/rng.hpp"

namespace uscx {

/**
 * One plateau of a staircase template.  Widths are relative and are
 * normalized so the template tiles the domain exactly once; values are the
 * plateau heights.  closed_left fixes the edge convention at this plateau's
 * right edge (the last plateau's right edge is the wrap-around joint with
 * the first): true keeps the left plateau's value at the joint, false the
 * right one.  The joint must keep the weakly higher value, otherwise the
 * sampled step functions would fail upper semicontinuity at plateau edges.
 */
struct StairStep {
  double width = 1.0;
  double value = 1.0;
  bool closed_left = true;
};

/**
 * Law of a nonnegative random field V on the grid with a sure upper bound C
 * and a constant, strictly positive mean f = E[V(s)].  The simulator only
 * ever uses the normalized field W = V/f, whose mean is one at every node
 * and whose sure bound is peak_ratio() = C/f.
 *
 * Families:
 *   constant_one   V = 1 identically (any domain dimension);
 *   storm          V(s) = h on |s - U| <= r and 0 elsewhere, with U uniform
 *                  on the domain enlarged by r on each side, so f = E[V] is
 *                  constant over the domain (one-dimensional domains);
 *   staircase      a fixed plateau template cyclically shifted by a uniform
 *                  offset; realizations are discontinuous step functions
 *                  that keep the weakly higher value at every plateau edge
 *                  (one-dimensional domains).
 */
class SpectralModel {
 public:
  enum class Family { constant_one, storm, staircase };

  static SpectralModel constant_one(const Domain& domain);
  /** Throws on radius or height outside (0, inf). */
  static SpectralModel storm(const Domain& domain, double radius, double height);
  /**
   * Throws on an empty template ("staircase needs at least one plateau"),
   * nonpositive widths, negative values, an all-zero template ("staircase
   * needs a positive plateau"), and joints whose closure flag keeps the
   * lower value ("staircase jump closed on the lower side").
   */
  static SpectralModel staircase(const Domain& domain, std::vector<StairStep> steps);

  Family family() const { return family_; }
  const Domain& domain() const { return domain_; }

  /** Sure bound: V <= bound() almost surely. */
  double bound() const { return bound_; }
  /** The mean f = E[V(s)], constant over the domain for every family. */
  double mean_value() const { return mean_; }
  /** Sure bound of W = V/f; the stopping rule compares y * peak_ratio(). */
  double peak_ratio() const { return bound_ / mean_; }

  /** Sample W = V/f on the grid nodes (out is assigned, one value per node). */
  void draw_spectral(Rng& rng, std::vector<double>& out) const;

  double storm_radius() const { return radius_; }
  double storm_height() const { return height_; }
  const std::vector<StairStep>& steps() const { return steps_; }

 private:
  SpectralModel(Family family, const Domain& domain);

  Family family_;
  Domain domain_;
  double bound_ = 1.0;
  double mean_ = 1.0;
  double radius_ = 0.0;
  double height_ = 0.0;
  std::vector<StairStep> steps_;
  std::vector<double> joints_;  // cumulative plateau edges, 0 .. domain length
};

/**
 * Exact sampler for the simple max-stable field
 *
 *   xi(s) = sup_{i >= 1} Y_i W_i(s),      W_i = V_i / f,
 *
 * where Y_1 > Y_2 > ... are the points of a Poisson process on (0, inf)
 * with intensity y^{-2} dy and the V_i are independent draws of the
 * spectral model.  The points are realized as Y_i = 1/G_i with G_i the
 * partial sums of standard exponentials: G_i are the arrival times of a
 * unit-rate Poisson process on (0, inf), and the map y = 1/t pushes
 * Lebesgue measure dt forward to y^{-2} dy, so {1/G_i} has exactly the
 * required intensity.  Since the Y_i decrease, accumulation can stop as
 * soon as the next atom's largest possible contribution falls below the
 * running field minimum; every node margin is then exactly unit Frechet.
 *
 * base_seed anchors the sampler's counter-based stream discipline: bulk
 * draw i uses Rng(stream_seed(base_seed, i)).  Operations that take their
 * own seed derive per-draw streams from that seed the same way, so results
 * are independent of batching and thread count.
 */
struct MaxStableSampler {
  SpectralModel model;
  std::uint64_t base_seed = 0;

  MaxStableSampler(SpectralModel m, std::uint64_t seed)
      : model(std::move(m)), base_seed(seed) {}

  const Domain& domain() const { return model.domain(); }
};

struct SimulateStats {
  std::size_t atoms = 0;  // spectral functions accumulated before stopping
};

/**
 * One exact draw of the field on the grid.  Throws std::runtime_error
 * ("stopping rule starved") when 10^6 atoms fail to trigger the stopping
 * rule, which signals a mean far below the sure bound.
 */
GridField simulate_simple(const MaxStableSampler& sampler, std::uint64_t seed,
                          SimulateStats* stats = nullptr);

/**
 * Miss probability Pr[hypo xi cap K = empty] = exp(-E[max_j max_{K_j} W / x_j])
 * for a probe K = union of (box_j, level x_j), with the inner max taken over
 * the grid nodes inside box_j.  The expectation is evaluated in closed form
 * for constant_one (max_j 1/x_j) and storm (an exact one-dimensional
 * integral over the storm center), and by Monte Carlo with
 * n_expectation_samples spectral draws for staircase.  A part whose level
 * is <= 0 is hit surely, so the result is 0 exactly; an empty probe is
 * never hit, so the result is 1.  Throws "empty probe box" when a box
 * contains no grid node.
 */
double capacity_closed_form(const SpectralModel& model, const CompactProbe& probe,
                            std::size_t n_expectation_samples, std::uint64_t seed);

struct CapacityEstimate {
  double hit_rate = 0.0;
  double halfwidth_95 = 0.0;  // normal-approximation 95% half-width
  double atoms_mean = 0.0;    // mean atoms per simulation
};

/**
 * Empirical hit rate of the probe over n_samples independent draws
 * (draw i uses Rng(stream_seed(seed, i))).  Requires n_samples >= 100
 * ("need at least 100 samples").  n_threads > 1 splits the draws over
 * worker threads; counts are summed exactly, so the estimate is identical
 * for every thread count.
 */
CapacityEstimate capacity_empirical(const MaxStableSampler& sampler,
                                    const CompactProbe& probe,
                                    std::size_t n_samples, std::uint64_t seed,
                                    int n_threads = 1);

/** Hit-rate comparison of the two sides of the max-stability identity. */
struct ProbeStability {
  double p_maxfold = 0.0;  // node-wise max of n independent fields
  double p_scaled = 0.0;   // one field pushed through the n-fold norming
  double z_score = 0.0;    // pooled two-proportion z between the branches
  double p_single = 0.0;   // the unscaled single field
  double z_product = 0.0;  // miss(single)^n vs miss(scaled), delta-method z
};

struct MaxStabilityReport {
  int n_copies = 1;
  std::size_t n_samples = 0;
  double atoms_mean = 0.0;  // mean atoms per simulation across all branches
  std::vector<ProbeStability> probes;
};

/**
 * Monte Carlo check of the simple max-stability identity: the node-wise
 * maximum of n independent fields has the same law as n times one field.
 * Draw i builds the maxfold branch from streams i*n .. i*n + n - 1 and the
 * scaled branch from stream i*n alone, so n = 1 reports identical branch
 * rates exactly and larger n benefits from the coupling.  Requires n >= 1
 * ("need at least one copy").
 */
MaxStabilityReport check_simple_max_stability(const MaxStableSampler& sampler, int n,
                                              const std::vector<CompactProbe>& probes,
                                              std::size_t n_samples, std::uint64_t seed,
                                              int n_threads = 1);

/**
 * Max-stability check after restoring margins: each simple field is pushed
 * through the pointwise quantile transform for theta, the maxfold branch
 * takes the node-wise max of n such fields, and the scaled branch applies
 * the node-wise affine norming a_{n,theta(s)} x + b_{n,theta(s)} to one
 * field.  theta must be flagged continuous ("theta field not continuous"):
 * a discontinuous theta breaks upper semicontinuity of the transformed
 * field, and the identity is not expected to hold.
 */
MaxStabilityReport destandardized_max_stability(const MaxStableSampler& sampler,
                                                const ThetaField& theta, int n,
                                                const std::vector<CompactProbe>& probes,
                                                std::size_t n_samples, std::uint64_t seed,
                                                int n_threads = 1);

/** Spectral model serialization ("unknown spectral family" on bad input). */
nlohmann::json model_to_json(const SpectralModel& model);
SpectralModel model_from_json(const nlohmann::json& j);

}  // namespace uscx
