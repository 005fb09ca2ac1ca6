#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "uscx/extreal.hpp"
#include "uscx/grid.hpp"

namespace uscx {

/**
 * Generalized extreme-value parameters theta = (gamma, mu, sigma) with
 * shape gamma, location mu, and scale sigma > 0.
 */
struct GevParams {
  double gamma = 0.0;
  double mu = 0.0;
  double sigma = 1.0;

  GevParams() = default;
  GevParams(double gamma_, double mu_, double sigma_);

  bool operator==(const GevParams&) const = default;
};

/**
 * GEV cdf F(x; theta).  Total on ExtReal: 0 below the lower endpoint when
 * gamma > 0, 1 at and above the upper endpoint when gamma < 0, Gumbel form
 * at gamma = 0.  For 0 < |gamma| < 1e-8 a series form of
 * -(1/gamma) log(1 + gamma w) keeps the evaluation stable.
 */
double gev_cdf(ExtReal x, const GevParams& theta);

/**
 * Closed-form GEV quantile.  p = 0 gives the lower endpoint mu - sigma/gamma
 * when gamma > 0 and -inf otherwise; p = 1 gives the upper endpoint
 * mu - sigma/gamma when gamma < 0 and +inf otherwise.  Throws on p outside
 * [0,1].  Same small-|gamma| series branch as gev_cdf.
 */
ExtReal gev_quantile(double p, const GevParams& theta);

/** Norming constants a_n > 0 and b_n with F^n(a_n x + b_n) = F(x). */
struct Norming {
  double a = 1.0;
  double b = 0.0;
};

/** a_n = n^gamma, b_n = (sigma - gamma mu)(n^gamma - 1)/gamma (sigma log n at gamma = 0). */
Norming norming(std::int64_t n, const GevParams& theta);

/**
 * Max abs deviation over both max-stability identities:
 * F^n(a_n x + b_n) = F(x) over x_grid and Q(p^{1/n}) = a_n Q(p) + b_n over
 * p_grid.  Grids should stay inside the support and (0,1).
 */
double check_max_stability_identity(const GevParams& theta, std::int64_t n,
                                    const std::vector<double>& x_grid,
                                    const std::vector<double>& p_grid);

/**
 * Recover theta from Q(1/e) (= mu), Q(p1), and Q(p2).  gamma solves the
 * ratio equation (Q(p1)-mu)/(Q(p2)-mu) = (x^gamma - 1)/(y^gamma - 1) with
 * x = -1/log p1, y = -1/log p2 (ratio of logs at gamma = 0) by bisection on
 * [-10, 10]; sigma follows from the p1 residual.  Throws
 * "not a GEV quantile triple" when the ratio is unattainable and
 * "degenerate quantile pair" when q_at_p1 = q_at_p2.
 */
GevParams params_from_quantiles(double q_at_e_inv, double q_at_p1,
                                double q_at_p2, double p1, double p2);

/** Default probe probabilities for params_from_quantiles: (1/e, 1/4, 3/4). */
struct QuantileProbes {
  double p_mu;
  double p1;
  double p2;
};
QuantileProbes default_quantile_probes();

/**
 * A field of GEV parameters over a Domain: constant, affine in the
 * coordinates, or tabulated per node.  Constant and affine fields are
 * continuous by construction; a table carries an explicit continuity flag,
 * validated against a per-adjacent-node Lipschitz budget (max componentwise
 * change between grid neighbours).
 */
class ThetaField {
 public:
  enum class Kind { constant, affine, table };

  static ThetaField constant(const Domain& domain, const GevParams& theta);
  /** theta(s) = base + slope_gamma.s etc.; slopes beyond the dimension are ignored. */
  static ThetaField affine(const Domain& domain, const GevParams& base,
                           std::array<double, 2> slope_gamma,
                           std::array<double, 2> slope_mu,
                           std::array<double, 2> slope_sigma);
  static ThetaField table(const Domain& domain, std::vector<GevParams> values,
                          bool continuous, double lipschitz_budget);

  Kind kind() const { return kind_; }
  const Domain& domain() const { return domain_; }
  bool is_continuous() const { return continuous_; }
  double lipschitz_budget() const { return budget_; }

  GevParams at_node(int i0, int i1 = 0) const;
  /** Evaluate at an arbitrary point; table fields require a grid node. */
  GevParams at_point(double s1, double s2 = 0.0) const;

 private:
  ThetaField(Kind kind, const Domain& domain);

  friend nlohmann::json theta_field_to_json(const ThetaField& field);

  Kind kind_;
  Domain domain_;
  GevParams base_;
  std::array<double, 2> slope_gamma_ = {0, 0};
  std::array<double, 2> slope_mu_ = {0, 0};
  std::array<double, 2> slope_sigma_ = {0, 0};
  std::vector<GevParams> values_;
  bool continuous_ = true;
  double budget_ = 0.0;
};

/**
 * ThetaField JSON: {"domain": {...}, "kind": "constant"|"affine"|"table", ...}
 * with "theta" for constant, "base" plus "slopes" {gamma,mu,sigma: [..]} for
 * affine, and "values" plus "continuous" and "lipschitz_budget" for table.
 */
nlohmann::json theta_field_to_json(const ThetaField& field);
ThetaField theta_field_from_json(const nlohmann::json& j);

}  // namespace uscx
