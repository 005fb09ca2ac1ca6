#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "uscx/cdf.hpp"
#include "uscx/expr.hpp"
#include "uscx/gev.hpp"
#include "uscx/grid.hpp"
#include "uscx/scenario.hpp"

namespace uscx {

/**
 * A coordinate-indexed family of margins s -> F_s.  Three shapes: one cdf
 * shared by every coordinate, a GEV cdf driven by a ThetaField, or a
 * segmented family that switches its s-parametric piece at finitely many
 * boundary points (each boundary carrying its own at-the-point cdf, the way
 * scenario breakpoints carry at-the-point values).  The continuity flag is
 * structural: constant families are continuous, GEV families inherit the
 * field's flag, segmented families are treated as discontinuous at their
 * boundaries.
 */
class MarginalFamily {
 public:
  enum class Kind { constant, gev_field, segmented };

  /** One s-parametric cdf, continuous in s on the segment it covers. */
  class Piece {
   public:
    enum class Kind { fixed, uniform_width, mixture_weight };

    static Piece fixed(RcCdf cdf);
    /** Uniform on [0, width(s)]; width must be positive on the segment. */
    static Piece uniform_width(Expr width);
    /** weight(s) * first + (1 - weight(s)) * second, weight(s) in [0,1]. */
    static Piece mixture_weight(Expr weight, RcCdf first, RcCdf second);

    Kind kind() const { return kind_; }
    RcCdf at(double s) const;

   private:
    explicit Piece(Kind kind) : kind_(kind) {}

    friend nlohmann::json family_to_json(const MarginalFamily& family);

    Kind kind_;
    std::shared_ptr<const RcCdf> cdf_;
    std::shared_ptr<const RcCdf> second_;
    Expr param_;
  };

  /** Boundary point of a segmented family with its own at-the-point cdf. */
  struct Boundary {
    double location = 0.0;
    Piece at_value;
  };

  static MarginalFamily constant(RcCdf cdf);
  static MarginalFamily gev_field(ThetaField theta);
  /**
   * pieces.size() must be boundaries.size() + 1 (segments left to right);
   * boundary locations strictly increasing inside [domain.lo, domain.hi].
   */
  static MarginalFamily segmented(Interval domain, std::vector<Piece> pieces,
                                  std::vector<Boundary> boundaries);

  Kind kind() const { return kind_; }
  bool is_continuous() const { return continuous_; }

  /** The margin at a coordinate (s2 only matters for GEV fields over 2d domains). */
  RcCdf at(double s1, double s2 = 0.0) const;

  /** Boundary locations of a segmented family (empty otherwise). */
  std::vector<double> section_breaks() const;

  /** True when every margin F_s is continuous in x and s -> F_s is continuous. */
  bool cdf_side_continuous() const;
  /** True when every quantile Q_s is continuous on [0,1] and s -> Q_s is continuous. */
  bool quantile_side_continuous() const;

 private:
  explicit MarginalFamily(Kind kind) : kind_(kind) {}

  friend nlohmann::json family_to_json(const MarginalFamily& family);

  Kind kind_;
  bool continuous_ = true;
  std::shared_ptr<const RcCdf> cdf_;
  std::shared_ptr<const ThetaField> theta_;
  Interval domain_;
  std::vector<Piece> pieces_;
  std::vector<Boundary> boundaries_;
};

/**
 * MarginalFamily JSON: {"kind":"constant","cdf":...},
 * {"kind":"gev","theta": theta-field json}, or
 * {"kind":"segmented","domain":[lo,hi],"pieces":[...],
 *  "boundaries":[{"location":b,"piece":...}]} with piece json
 * {"kind":"fixed","cdf":...}, {"kind":"uniform_width","width": expr}, or
 * {"kind":"mixture_weight","weight": expr,"first":...,"second":...}.
 * Parsing rejects unknown kinds ("unknown family kind", "unknown piece kind").
 */
nlohmann::json family_to_json(const MarginalFamily& family);
MarginalFamily family_from_json(const nlohmann::json& j);

struct MembershipReport;

/**
 * A pointwise transform U(s, x), built from a closed node grammar: named
 * monotone right-continuous functions of x alone, max/min with a coordinate
 * expression, positive rescaling and finite shifts by coordinate
 * expressions, cdf and quantile maps of a MarginalFamily, GEV
 * standardization and destandardization against a ThetaField, and
 * composition.  Every node is monotone nondecreasing and right-continuous
 * in x with upper semicontinuous s-sections, so applying one to an usc
 * trajectory yields an usc trajectory; validate_membership checks those two
 * properties numerically for maps built elsewhere.
 */
class PointwiseMap {
 public:
  enum class Kind {
    monotone_rc,
    max_with,
    min_with,
    scale,
    shift,
    quantile_map,
    cdf_map,
    gev_standardize,
    gev_destandardize,
    compose,
  };

  /**
   * Named monotone right-continuous map of x: "identity", "clamp01"
   * ((x v 0) ^ 1), "neg_inv_log" (-1/log x on (0,1), 0 at and below 0,
   * +inf at and above 1), "exp", "log" (-inf at and below 0), or "floor".
   * Unknown names throw std::invalid_argument ("unknown monotone map").
   */
  static PointwiseMap monotone_rc(const std::string& name);
  /** Indicator step x >= c (right-continuous; c finite). */
  static PointwiseMap step_at(double c);
  /** x v y(s); y a coordinate expression (no variables). */
  static PointwiseMap max_with(Expr y);
  /** x ^ y(s). */
  static PointwiseMap min_with(Expr y);
  /** a(s) * x; a must evaluate finite and positive wherever applied. */
  static PointwiseMap scale(Expr factor);
  /** x + b(s); b must evaluate finite wherever applied. */
  static PointwiseMap shift(Expr offset);
  /** x -> Q_s((x v 0) ^ 1); the clamp makes the node total on the extended line. */
  static PointwiseMap quantile_map(MarginalFamily family);
  /** x -> F_s(x), with values in [0,1]. */
  static PointwiseMap cdf_map(MarginalFamily family);
  /**
   * x -> -1/log F(x; theta(s)), mapping the theta(s) margin to unit Frechet
   * scale; F = 0 gives 0 and F = 1 gives +inf.
   */
  static PointwiseMap gev_standardize(ThetaField theta);
  /**
   * x -> Q(exp(-1/x); theta(s)), the inverse direction; 0 maps to the lower
   * quantile Q(0) and +inf to Q(1).  Negative inputs throw
   * std::invalid_argument ("negative value in destandardization").
   */
  static PointwiseMap gev_destandardize(ThetaField theta);

  Kind kind() const;

  /** Evaluate at a one-dimensional coordinate. */
  ExtReal operator()(double s, ExtReal x) const;
  /** Evaluate with both coordinates (only GEV nodes read s2). */
  ExtReal at(double s1, double s2, ExtReal x) const;

  /** True when some node reads the coordinate. */
  bool uses_coord() const;

  /**
   * True when U maps trajectories with continuous bodies to trajectories
   * with continuous bodies, so the piecewise description produced by apply
   * has exact one-sided limits.  False for floor and step nodes (jumps in
   * x), for cdf/quantile maps whose family is discontinuous in s or whose
   * margins have atoms or support gaps, and for GEV nodes with
   * non-continuous theta fields.
   */
  bool preserves_continuity() const;

  /** s-locations where some section s -> U(s, x) may jump (family boundaries). */
  std::vector<double> section_breaks() const;

  /** Adapter for Expr::mapped, sharing this map's state. */
  std::shared_ptr<const CoordMap> as_coord_map() const;

  struct Impl;  // node payload, defined in the translation unit

 private:
  explicit PointwiseMap(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  friend PointwiseMap compose(PointwiseMap outer, PointwiseMap inner);
  friend nlohmann::json map_to_json(const PointwiseMap& map);
  friend MembershipReport validate_membership(const PointwiseMap& map, Interval domain,
                                              const std::vector<double>& x_probes,
                                              const std::vector<double>& s_probes);

  std::shared_ptr<const Impl> impl_;
};

/** (outer . inner)(s, x) = outer(s, inner(s, x)); exact functorially under apply. */
PointwiseMap compose(PointwiseMap outer, PointwiseMap inner);

/**
 * PointwiseMap JSON: {"node": kind, ...} with "name" for monotone_rc,
 * "threshold" for step_at, expression trees under "arg"/"factor"/"offset",
 * "family" or "theta" for the distributional nodes, and "outer"/"inner" for
 * compose.  Parsing rejects unknown node names ("unknown map node").
 */
nlohmann::json map_to_json(const PointwiseMap& map);
PointwiseMap map_from_json(const nlohmann::json& j);

/** Node-by-node image of a grid field: out(s) = U(s, z(s)). */
GridField apply(const PointwiseMap& map, const GridField& field);

/**
 * Image of a realized trajectory.  The output keeps the input's breakpoints
 * and exception locations and wraps every body and at-the-point value in
 * the map, so value_at agrees with U(s, input(s)) everywhere.  limits_exact
 * reports map.preserves_continuity(): when true, the wrapped bodies are
 * continuous and is_usc_trajectory decides upper semicontinuity exactly;
 * when false a passing verdict is still trustworthy for monotone maps of
 * usc inputs, but failing ones need an exact symbolic description of the
 * image (the gallery carries one per entry).
 */
struct TransformedTrajectory {
  Realization trajectory;
  bool limits_exact = true;
};
TransformedTrajectory apply(const PointwiseMap& map, const Realization& input);

struct MembershipWitness {
  std::string check;  // "monotone", "right_continuity", or "usc_sections"
  double s = 0.0;
  double x = 0.0;
};

struct MembershipReport {
  bool monotone_rc_ok = true;
  bool usc_sections_ok = true;
  std::vector<MembershipWitness> witnesses;
};

/**
 * Checks the two membership properties of a pointwise transform on probe
 * grids: monotone nondecreasing and right-continuous in x (offsets 1e-3,
 * 1e-6, 1e-9) at every s-probe and family boundary, and upper
 * semicontinuous s-sections.  Sections known continuous by construction
 * pass exactly; segmented families are probed at their boundaries against
 * shrinking one-sided offsets; a GEV node over a table field that is not
 * flagged continuous fails with a witness at its largest parameter jump.
 * Failures are reported with witnesses, never thrown.  Probe grids must be
 * nonempty ("empty probe grid").
 */
MembershipReport validate_membership(const PointwiseMap& map, Interval domain,
                                     const std::vector<double>& x_probes,
                                     const std::vector<double>& s_probes);

/** 64 fixed x-probes covering [-1000, 1000] densely around [-4, 4] and [0, 1]. */
std::vector<double> default_x_probes();
/** 33 equally spaced s-probes spanning the interval. */
std::vector<double> default_s_probes(Interval domain);

/** Margin standardization Z(s) = F_s(xi(s)); uniform margins iff F_s is atomless. */
GridField sklar_forward(const MarginalFamily& family, const GridField& field);
TransformedTrajectory sklar_forward(const MarginalFamily& family, const Realization& input);

/** Margin restoration xi(s) = Q_s((Z(s) v 0) ^ 1). */
GridField sklar_backward(const MarginalFamily& family, const GridField& field);
TransformedTrajectory sklar_backward(const MarginalFamily& family, const Realization& input);

/** Unit Frechet standardization xi*(s) = -1/log F(xi(s); theta(s)). */
GridField gev_standardize(const ThetaField& theta, const GridField& field);
TransformedTrajectory gev_standardize(const ThetaField& theta, const Realization& input);

/** Inverse of gev_standardize; negative inputs throw. */
GridField gev_destandardize(const ThetaField& theta, const GridField& field);
TransformedTrajectory gev_destandardize(const ThetaField& theta, const Realization& input);

/** Essential lower bound of the margins, l(s) = Q_s(0), on the grid nodes. */
GridField lower_bound_field(const MarginalFamily& family, const Domain& domain);

/** xi v l pointwise, the left inverse's clamp to the support. */
GridField clamp_to_lower_bound(const MarginalFamily& family, const GridField& field);

/** The margin family of a gallery entry ("unknown gallery entry" otherwise). */
MarginalFamily gallery_family(const std::string& id);

/**
 * The numeric standardization map of a gallery entry: the cdf map of its
 * family for entries standardized by Sklar's first direction, quantile-
 * after-cdf for the law-mismatch round trips, and -1/log F for the GEV
 * entry.  Applying it to a raw realization agrees pointwise with the
 * entry's symbolic standardized scenario under the same draw.
 */
PointwiseMap gallery_map(const std::string& id);

}  // namespace uscx
