#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "uscx/extreal.hpp"
#include "uscx/gev.hpp"

namespace uscx {

/**
 * A right-continuous cdf from a small analytic catalog or an empirical
 * sample.  Every instance answers F(x) = Pr[X <= x], the left limit
 * Pr[X < x], and the right-continuous quantile
 * Q(p) = sup{ x : F(x) <= p } with sup of the empty set -inf and sup of all
 * of R +inf.  Empirical quantiles are exact order-statistic lookups; among
 * the analytic families only normal and mixture quantiles go through
 * bisection (absolute tolerance 1e-12), everything else is closed form.
 */
class RcCdf {
 public:
  enum class Kind {
    uniform01,
    uniform0a,
    normal,
    unit_frechet,
    gev,
    point_mass,
    two_interval_uniform,
    power_uniform,
    mixture,
    empirical,
  };

  /** Uniform on [0,1]. */
  static RcCdf uniform01();
  /** Uniform on [0,a], a > 0. */
  static RcCdf uniform0(double a);
  static RcCdf normal(double mu, double sd);
  /** F(x) = exp(-1/x) for x > 0. */
  static RcCdf unit_frechet();
  static RcCdf gev(const GevParams& theta);
  static RcCdf point_mass(double c);
  /** Uniform on [0,1] union [2,3], half the mass on each interval. */
  static RcCdf two_interval_uniform();
  /** F(x) = x^k on [0,1], k > 0 (law of the max of k iid uniforms for integer k). */
  static RcCdf power_uniform(double k);
  /** w * first + (1-w) * second, w in [0,1]. */
  static RcCdf mixture(double w, RcCdf first, RcCdf second);
  /** Step cdf of a sample (any ExtReal entries, size >= 1); input need not be sorted. */
  static RcCdf empirical(std::vector<ExtReal> samples);

  Kind kind() const { return kind_; }

  double cdf(ExtReal x) const;
  /** Left limit Pr[X < x]. */
  double cdf_left(ExtReal x) const;
  ExtReal quantile(double p) const;

  /** True when the law has no point masses. */
  bool atomless() const;
  /** Locations of point masses (finite list; empty for atomless laws). */
  std::vector<ExtReal> atoms() const;

  /**
   * True when Q is continuous as a map [0,1] -> extended reals: F strictly
   * increasing wherever it is in (0,1) (no support gaps) and the upper tail
   * unbounded, so the convention Q(1) = +inf coincides with the limit.
   */
  bool quantile_continuous() const;

  /** Sorted sample of an empirical cdf. */
  const std::vector<ExtReal>& samples() const;

  friend nlohmann::json cdf_to_json(const RcCdf& cdf);

 private:
  explicit RcCdf(Kind kind) : kind_(kind) {}

  Kind kind_;
  double a_ = 0.0;
  double b_ = 0.0;
  GevParams theta_;
  double weight_ = 0.0;
  std::shared_ptr<const RcCdf> first_;
  std::shared_ptr<const RcCdf> second_;
  std::vector<ExtReal> sorted_;
};

/** The right-continuous quantile function of a cdf. */
struct RcQuantile {
  RcCdf source;
  ExtReal operator()(double p) const { return source.quantile(p); }
};

ExtReal eval_quantile(const RcQuantile& q, double p);

/**
 * Checks the adjunction x <= Q(p) iff Pr[X < x] <= p at one (x, p) pair.
 * Exact for closed-form quantile paths; a discrepancy with
 * |x - Q(p)| <= 1e-9 is forgiven to absorb bisection error on the normal
 * and mixture paths.
 */
bool galois_check(const RcCdf& cdf, ExtReal x, double p);

/**
 * Draws n_samples uniform variates V, forms Q(V), and returns the
 * Kolmogorov-Smirnov distance between the empirical law of Q(V) and the
 * source cdf, scanned two-sidedly at every distinct sample value, every
 * source atom, and +inf (which compares the infinite-output rate with the
 * source tail mass).  Requires n_samples >= 1000.
 */
double quantile_of_uniform_pushforward(const RcQuantile& q,
                                       std::size_t n_samples,
                                       std::uint64_t seed);

/**
 * Finite-tail surrogate of the limsup quantile bound: with tail_max
 * distributed as max of the tail variables, checks
 * Q_max(p) >= max_k Q_k(p) on the grid p in {0, 0.01, ..., 0.99}
 * (tolerance 1e-9 for bisection paths).  The asymptotic statement for an
 * infinite sequence is documented in the README; only this finite check is
 * computable.
 */
bool limsup_quantile_bound(const std::vector<RcCdf>& tail,
                           const RcCdf& tail_max);

/** Loads an empirical cdf from a single-column CSV ("+inf"/"-inf" tokens allowed). */
RcCdf empirical_from_csv(const std::filesystem::path& path);

/**
 * Left limit by shrinking-offset evaluation, F(x - eps) with eps halving
 * until two successive values agree.  Test oracle for cdf_left on analytic
 * families; the member function uses closed forms instead.
 */
double cdf_left_limit_numeric(const RcCdf& cdf, double x);

/**
 * RcCdf JSON: {"family": name, ...} with the family parameters spelled out
 * ("width", "mean"/"sd", "theta" {gamma,mu,sigma}, "at", "exponent",
 * "weight"/"first"/"second" for mixtures, "samples" with "+inf"/"-inf"
 * tokens for empirical cdfs).  Parsing rejects unknown names with
 * "unknown cdf family".
 */
nlohmann::json cdf_to_json(const RcCdf& cdf);
RcCdf cdf_from_json(const nlohmann::json& j);

}  // namespace uscx
