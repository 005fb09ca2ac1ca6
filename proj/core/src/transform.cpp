#include "uscx/transform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

namespace uscx {

namespace {

const Env kEmptyEnv{};

enum class Mono { identity, clamp01, neg_inv_log, exponential, logarithm, floor_, step };

Mono mono_from_name(const std::string& name) {
  if (name == "identity") return Mono::identity;
  if (name == "clamp01") return Mono::clamp01;
  if (name == "neg_inv_log") return Mono::neg_inv_log;
  if (name == "exp") return Mono::exponential;
  if (name == "log") return Mono::logarithm;
  if (name == "floor") return Mono::floor_;
  throw std::invalid_argument("unknown monotone map");
}

ExtReal eval_mono(Mono mono, double threshold, ExtReal x) {
  switch (mono) {
    case Mono::identity:
      return x;
    case Mono::clamp01:
      if (x <= ExtReal(0.0)) return ExtReal(0.0);
      if (x >= ExtReal(1.0)) return ExtReal(1.0);
      return x;
    case Mono::neg_inv_log:
      if (x <= ExtReal(0.0)) return ExtReal(0.0);
      if (x >= ExtReal(1.0)) return ExtReal::pos_inf();
      return ExtReal(-1.0 / std::log(x.raw()));
    case Mono::exponential:
      if (x.is_neg_inf()) return ExtReal(0.0);
      if (x.is_pos_inf()) return x;
      return ExtReal(std::exp(x.raw()));
    case Mono::logarithm:
      if (x <= ExtReal(0.0)) return ExtReal::neg_inf();
      if (x.is_pos_inf()) return x;
      return ExtReal(std::log(x.raw()));
    case Mono::floor_:
      if (!x.is_finite()) return x;
      return ExtReal(std::floor(x.raw()));
    case Mono::step:
      return x >= ExtReal(threshold) ? ExtReal(1.0) : ExtReal(0.0);
  }
  throw std::logic_error("unreachable monotone map");
}

bool mono_continuous(Mono mono) {
  switch (mono) {
    case Mono::floor_:
    case Mono::step:
      return false;
    default:
      return true;
  }
}

void require_coordinate_only(const Expr& e, const char* message) {
  std::set<std::string> vars;
  e.collect_vars(vars);
  if (!vars.empty()) throw std::invalid_argument(message);
}

bool gamma_nonnegative(const ThetaField& theta) {
  const Domain& d = theta.domain();
  for (int i0 = 0; i0 < d.res(0); ++i0) {
    for (int i1 = 0; i1 < d.res(1); ++i1) {
      if (theta.at_node(i0, i1).gamma < 0.0) return false;
    }
  }
  return true;
}

}  // namespace

MarginalFamily::Piece MarginalFamily::Piece::fixed(RcCdf cdf) {
  Piece p(Kind::fixed);
  p.cdf_ = std::make_shared<const RcCdf>(std::move(cdf));
  return p;
}

MarginalFamily::Piece MarginalFamily::Piece::uniform_width(Expr width) {
  require_coordinate_only(width, "family expression mentions variables");
  Piece p(Kind::uniform_width);
  p.param_ = std::move(width);
  return p;
}

MarginalFamily::Piece MarginalFamily::Piece::mixture_weight(Expr weight, RcCdf first,
                                                            RcCdf second) {
  require_coordinate_only(weight, "family expression mentions variables");
  Piece p(Kind::mixture_weight);
  p.param_ = std::move(weight);
  p.cdf_ = std::make_shared<const RcCdf>(std::move(first));
  p.second_ = std::make_shared<const RcCdf>(std::move(second));
  return p;
}

RcCdf MarginalFamily::Piece::at(double s) const {
  switch (kind_) {
    case Kind::fixed:
      return *cdf_;
    case Kind::uniform_width: {
      ExtReal w = param_.eval(kEmptyEnv, s);
      if (!w.is_finite()) throw std::invalid_argument("width must be positive");
      return RcCdf::uniform0(w.raw());
    }
    case Kind::mixture_weight: {
      ExtReal w = param_.eval(kEmptyEnv, s);
      if (!w.is_finite()) throw std::invalid_argument("mixture weight outside [0,1]");
      return RcCdf::mixture(w.raw(), *cdf_, *second_);
    }
  }
  throw std::logic_error("unreachable family piece kind");
}

MarginalFamily MarginalFamily::constant(RcCdf cdf) {
  MarginalFamily f(Kind::constant);
  f.cdf_ = std::make_shared<const RcCdf>(std::move(cdf));
  f.continuous_ = true;
  return f;
}

MarginalFamily MarginalFamily::gev_field(ThetaField theta) {
  MarginalFamily f(Kind::gev_field);
  f.continuous_ = theta.is_continuous();
  f.theta_ = std::make_shared<const ThetaField>(std::move(theta));
  return f;
}

MarginalFamily MarginalFamily::segmented(Interval domain, std::vector<Piece> pieces,
                                         std::vector<Boundary> boundaries) {
  if (!(domain.lo < domain.hi)) throw std::invalid_argument("empty family domain");
  if (pieces.size() != boundaries.size() + 1) {
    throw std::invalid_argument("family piece count mismatch");
  }
  double prev = domain.lo;
  bool first = true;
  for (const Boundary& b : boundaries) {
    if (b.location < domain.lo || b.location > domain.hi) {
      throw std::invalid_argument("family boundary outside domain");
    }
    if (!first && !(b.location > prev)) {
      throw std::invalid_argument("family boundaries out of order");
    }
    prev = b.location;
    first = false;
  }
  MarginalFamily f(Kind::segmented);
  f.continuous_ = boundaries.empty();
  f.domain_ = domain;
  f.pieces_ = std::move(pieces);
  f.boundaries_ = std::move(boundaries);
  return f;
}

RcCdf MarginalFamily::at(double s1, double s2) const {
  switch (kind_) {
    case Kind::constant:
      return *cdf_;
    case Kind::gev_field:
      return RcCdf::gev(theta_->at_point(s1, s2));
    case Kind::segmented: {
      if (s1 < domain_.lo || s1 > domain_.hi) {
        throw std::invalid_argument("point outside family domain");
      }
      std::size_t seg = 0;
      for (const Boundary& b : boundaries_) {
        if (s1 == b.location) return b.at_value.at(s1);
        if (s1 > b.location) ++seg;
      }
      return pieces_[seg].at(s1);
    }
  }
  throw std::logic_error("unreachable family kind");
}

std::vector<double> MarginalFamily::section_breaks() const {
  std::vector<double> out;
  for (const Boundary& b : boundaries_) out.push_back(b.location);
  return out;
}

bool MarginalFamily::cdf_side_continuous() const {
  switch (kind_) {
    case Kind::constant:
      return cdf_->atomless();
    case Kind::gev_field:
      return theta_->is_continuous();
    case Kind::segmented:
      return false;
  }
  throw std::logic_error("unreachable family kind");
}

bool MarginalFamily::quantile_side_continuous() const {
  switch (kind_) {
    case Kind::constant:
      return cdf_->quantile_continuous();
    case Kind::gev_field:
      return theta_->is_continuous() && gamma_nonnegative(*theta_);
    case Kind::segmented:
      return false;
  }
  throw std::logic_error("unreachable family kind");
}

struct PointwiseMap::Impl {
  Kind kind = Kind::monotone_rc;
  std::string name;
  Mono mono = Mono::identity;
  double threshold = 0.0;
  Expr arg;
  std::shared_ptr<const MarginalFamily> family;
  std::shared_ptr<const ThetaField> theta;
  std::shared_ptr<const Impl> outer;
  std::shared_ptr<const Impl> inner;
};

namespace {

ExtReal eval_impl(const PointwiseMap::Impl& im, double s1, double s2, ExtReal x) {
  using Kind = PointwiseMap::Kind;
  switch (im.kind) {
    case Kind::monotone_rc:
      return eval_mono(im.mono, im.threshold, x);
    case Kind::max_with:
      return max(x, im.arg.eval(kEmptyEnv, s1));
    case Kind::min_with:
      return min(x, im.arg.eval(kEmptyEnv, s1));
    case Kind::scale: {
      ExtReal a = im.arg.eval(kEmptyEnv, s1);
      if (!a.is_finite() || !(a.raw() > 0.0)) {
        throw std::invalid_argument("scale factor not positive");
      }
      return scale(x, a.raw());
    }
    case Kind::shift: {
      ExtReal b = im.arg.eval(kEmptyEnv, s1);
      if (!b.is_finite()) throw std::invalid_argument("shift offset must be finite");
      return shift(x, b.raw());
    }
    case Kind::quantile_map: {
      ExtReal p = eval_mono(Mono::clamp01, 0.0, x);
      return im.family->at(s1, s2).quantile(p.raw());
    }
    case Kind::cdf_map:
      return ExtReal(im.family->at(s1, s2).cdf(x));
    case Kind::gev_standardize: {
      double f = gev_cdf(x, im.theta->at_point(s1, s2));
      if (f <= 0.0) return ExtReal(0.0);
      if (f >= 1.0) return ExtReal::pos_inf();
      return ExtReal(-1.0 / std::log(f));
    }
    case Kind::gev_destandardize: {
      if (x < ExtReal(0.0)) {
        throw std::invalid_argument("negative value in destandardization");
      }
      double p;
      if (x.is_pos_inf()) {
        p = 1.0;
      } else if (x.raw() == 0.0) {
        p = 0.0;
      } else {
        p = std::exp(-1.0 / x.raw());
      }
      return gev_quantile(p, im.theta->at_point(s1, s2));
    }
    case Kind::compose:
      return eval_impl(*im.outer, s1, s2, eval_impl(*im.inner, s1, s2, x));
  }
  throw std::logic_error("unreachable map node");
}

bool impl_uses_coord(const PointwiseMap::Impl& im) {
  using Kind = PointwiseMap::Kind;
  switch (im.kind) {
    case Kind::monotone_rc:
      return false;
    case Kind::max_with:
    case Kind::min_with:
    case Kind::scale:
    case Kind::shift:
      return im.arg.depends_on_coord();
    case Kind::quantile_map:
    case Kind::cdf_map:
      if (im.family->kind() == MarginalFamily::Kind::constant) return false;
      return true;
    case Kind::gev_standardize:
    case Kind::gev_destandardize:
      return im.theta->kind() != ThetaField::Kind::constant;
    case Kind::compose:
      return impl_uses_coord(*im.outer) || impl_uses_coord(*im.inner);
  }
  throw std::logic_error("unreachable map node");
}

bool impl_preserves_continuity(const PointwiseMap::Impl& im) {
  using Kind = PointwiseMap::Kind;
  switch (im.kind) {
    case Kind::monotone_rc:
      return mono_continuous(im.mono);
    case Kind::max_with:
    case Kind::min_with:
    case Kind::scale:
    case Kind::shift:
      return true;
    case Kind::quantile_map:
      return im.family->quantile_side_continuous();
    case Kind::cdf_map:
      return im.family->cdf_side_continuous();
    case Kind::gev_standardize:
      return im.theta->is_continuous();
    case Kind::gev_destandardize:
      // The quantile endpoint convention here is gev_quantile's, which is
      // continuous at p = 1 for every gamma, so theta continuity suffices.
      return im.theta->is_continuous();
    case Kind::compose:
      return impl_preserves_continuity(*im.outer) && impl_preserves_continuity(*im.inner);
  }
  throw std::logic_error("unreachable map node");
}

struct SectionScan {
  std::vector<double> breaks;
  const ThetaField* bad_table = nullptr;
};

void scan_sections(const PointwiseMap::Impl& im, SectionScan& out) {
  using Kind = PointwiseMap::Kind;
  switch (im.kind) {
    case Kind::quantile_map:
    case Kind::cdf_map:
      for (double b : im.family->section_breaks()) out.breaks.push_back(b);
      break;
    case Kind::gev_standardize:
    case Kind::gev_destandardize:
      if (!im.theta->is_continuous()) out.bad_table = im.theta.get();
      break;
    case Kind::compose:
      scan_sections(*im.outer, out);
      scan_sections(*im.inner, out);
      break;
    default:
      break;
  }
}

// Coordinate of the largest componentwise parameter jump between adjacent
// nodes; used as the witness location for a non-continuous table field.
double worst_jump_coordinate(const ThetaField& theta) {
  const Domain& d = theta.domain();
  double best = -1.0;
  double where = d.lo(0);
  auto gap = [](const GevParams& a, const GevParams& b) {
    return std::max({std::fabs(a.gamma - b.gamma), std::fabs(a.mu - b.mu),
                     std::fabs(a.sigma - b.sigma)});
  };
  for (int i0 = 0; i0 < d.res(0); ++i0) {
    for (int i1 = 0; i1 < d.res(1); ++i1) {
      if (i0 + 1 < d.res(0)) {
        double g = gap(theta.at_node(i0, i1), theta.at_node(i0 + 1, i1));
        if (g > best) {
          best = g;
          where = d.coord(0, i0 + 1);
        }
      }
      if (i1 + 1 < d.res(1)) {
        double g = gap(theta.at_node(i0, i1), theta.at_node(i0, i1 + 1));
        if (g > best) {
          best = g;
          where = d.coord(0, i0);
        }
      }
    }
  }
  return where;
}

struct MapAction final : CoordMap {
  explicit MapAction(PointwiseMap m) : map(std::move(m)) {}

  ExtReal apply_at(double s, ExtReal x) const override { return map(s, x); }
  bool uses_coord() const override { return map.uses_coord(); }

  PointwiseMap map;
};

}  // namespace

PointwiseMap PointwiseMap::monotone_rc(const std::string& name) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::monotone_rc;
  impl->name = name;
  impl->mono = mono_from_name(name);
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::step_at(double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("threshold must be finite");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::monotone_rc;
  impl->name = "step_at";
  impl->mono = Mono::step;
  impl->threshold = c;
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::max_with(Expr y) {
  require_coordinate_only(y, "map expression mentions variables");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::max_with;
  impl->arg = std::move(y);
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::min_with(Expr y) {
  require_coordinate_only(y, "map expression mentions variables");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::min_with;
  impl->arg = std::move(y);
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::scale(Expr factor) {
  require_coordinate_only(factor, "map expression mentions variables");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::scale;
  impl->arg = std::move(factor);
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::shift(Expr offset) {
  require_coordinate_only(offset, "map expression mentions variables");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::shift;
  impl->arg = std::move(offset);
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::quantile_map(MarginalFamily family) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::quantile_map;
  impl->family = std::make_shared<const MarginalFamily>(std::move(family));
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::cdf_map(MarginalFamily family) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::cdf_map;
  impl->family = std::make_shared<const MarginalFamily>(std::move(family));
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::gev_standardize(ThetaField theta) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::gev_standardize;
  impl->theta = std::make_shared<const ThetaField>(std::move(theta));
  return PointwiseMap(std::move(impl));
}

PointwiseMap PointwiseMap::gev_destandardize(ThetaField theta) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::gev_destandardize;
  impl->theta = std::make_shared<const ThetaField>(std::move(theta));
  return PointwiseMap(std::move(impl));
}

PointwiseMap compose(PointwiseMap outer, PointwiseMap inner) {
  auto impl = std::make_shared<PointwiseMap::Impl>();
  impl->kind = PointwiseMap::Kind::compose;
  impl->outer = outer.impl_;
  impl->inner = inner.impl_;
  return PointwiseMap(std::move(impl));
}

PointwiseMap::Kind PointwiseMap::kind() const { return impl_->kind; }

ExtReal PointwiseMap::operator()(double s, ExtReal x) const {
  return eval_impl(*impl_, s, 0.0, x);
}

ExtReal PointwiseMap::at(double s1, double s2, ExtReal x) const {
  return eval_impl(*impl_, s1, s2, x);
}

bool PointwiseMap::uses_coord() const { return impl_uses_coord(*impl_); }

bool PointwiseMap::preserves_continuity() const {
  return impl_preserves_continuity(*impl_);
}

std::vector<double> PointwiseMap::section_breaks() const {
  SectionScan scan;
  scan_sections(*impl_, scan);
  std::sort(scan.breaks.begin(), scan.breaks.end());
  scan.breaks.erase(std::unique(scan.breaks.begin(), scan.breaks.end()),
                    scan.breaks.end());
  return scan.breaks;
}

std::shared_ptr<const CoordMap> PointwiseMap::as_coord_map() const {
  return std::make_shared<MapAction>(*this);
}

GridField apply(const PointwiseMap& map, const GridField& field) {
  GridField out = field;
  const Domain& d = field.domain;
  for (int i0 = 0; i0 < d.res(0); ++i0) {
    double s1 = d.coord(0, i0);
    for (int i1 = 0; i1 < d.res(1); ++i1) {
      double s2 = d.dim() == 2 ? d.coord(1, i1) : 0.0;
      out.values[d.flat(i0, i1)] = map.at(s1, s2, field.values[d.flat(i0, i1)]);
    }
  }
  return out;
}

TransformedTrajectory apply(const PointwiseMap& map, const Realization& input) {
  std::shared_ptr<const CoordMap> action = map.as_coord_map();
  Realization out;
  out.domain = input.domain;
  out.env = input.env;
  out.breaks = input.breaks;
  out.bodies.reserve(input.bodies.size());
  for (const Expr& body : input.bodies) {
    out.bodies.push_back(Expr::mapped(action, body));
  }
  out.at_values.reserve(input.at_values.size());
  for (const Expr& value : input.at_values) {
    out.at_values.push_back(Expr::mapped(action, value));
  }
  out.exceptions.reserve(input.exceptions.size());
  for (const auto& [loc, value] : input.exceptions) {
    out.exceptions.emplace_back(loc, Expr::mapped(action, value));
  }
  return {std::move(out), map.preserves_continuity()};
}

namespace {

// a >= b - tol on the extended line (tol relative to b's magnitude).
bool ge_with_slack(ExtReal a, ExtReal b, double rel) {
  if (b.is_neg_inf() || a.is_pos_inf()) return true;
  if (a.is_neg_inf() || b.is_pos_inf()) return false;
  return a.raw() >= b.raw() - rel * (1.0 + std::fabs(b.raw()));
}

bool close_rel(ExtReal a, ExtReal b, double rel) {
  if (!a.is_finite() || !b.is_finite()) return a == b;
  return std::fabs(a.raw() - b.raw()) <= rel * (1.0 + std::fabs(b.raw()));
}

}  // namespace

MembershipReport validate_membership(const PointwiseMap& map, Interval domain,
                                     const std::vector<double>& x_probes,
                                     const std::vector<double>& s_probes) {
  if (x_probes.empty() || s_probes.empty()) {
    throw std::invalid_argument("empty probe grid");
  }
  std::vector<double> xs = x_probes;
  std::sort(xs.begin(), xs.end());

  SectionScan scan;
  scan_sections(*map.impl_, scan);
  std::sort(scan.breaks.begin(), scan.breaks.end());
  scan.breaks.erase(std::unique(scan.breaks.begin(), scan.breaks.end()),
                    scan.breaks.end());

  std::vector<double> svals = s_probes;
  for (double b : scan.breaks) {
    if (b >= domain.lo && b <= domain.hi) svals.push_back(b);
  }
  std::sort(svals.begin(), svals.end());
  svals.erase(std::unique(svals.begin(), svals.end()), svals.end());

  MembershipReport report;
  auto witness = [&report](const char* check, double s, double x) {
    if (report.witnesses.size() < 32) report.witnesses.push_back({check, s, x});
  };

  for (double s : svals) {
    if (s < domain.lo || s > domain.hi) continue;
    bool first = true;
    ExtReal prev(0.0);
    for (double x : xs) {
      ExtReal cur = map(s, ExtReal(x));
      if (!first && cur < prev) {
        report.monotone_rc_ok = false;
        witness("monotone", s, x);
      }
      prev = cur;
      first = false;
    }
    for (double x : xs) {
      ExtReal base = map(s, ExtReal(x));
      ExtReal v3 = map(s, ExtReal(x + 1e-3));
      ExtReal v6 = map(s, ExtReal(x + 1e-6));
      ExtReal v9 = map(s, ExtReal(x + 1e-9));
      // Accept agreement at the finest offset, or a strictly decreasing
      // offset ladder (slowly converging continuous quantiles).
      bool ok = close_rel(v9, base, 1e-6) || (v9 < v6 && v6 < v3);
      if (!ok) {
        report.monotone_rc_ok = false;
        witness("right_continuity", s, x);
      }
    }
  }

  if (scan.bad_table != nullptr) {
    report.usc_sections_ok = false;
    witness("usc_sections", worst_jump_coordinate(*scan.bad_table),
            xs[xs.size() / 2]);
  }
  for (double b : scan.breaks) {
    if (b < domain.lo || b > domain.hi) continue;
    for (double x : xs) {
      ExtReal v0 = map(b, ExtReal(x));
      for (double side : {-1.0, 1.0}) {
        double s = b + side * 1e-9;
        if (s < domain.lo || s > domain.hi) continue;
        ExtReal est = map(s, ExtReal(x));
        if (!ge_with_slack(v0, est, 1e-9)) {
          report.usc_sections_ok = false;
          witness("usc_sections", b, x);
          break;
        }
      }
    }
  }
  return report;
}

std::vector<double> default_x_probes() {
  std::vector<double> xs = {-1000.0, -256.0, -64.0, -16.0, -8.0, 8.0,    16.0,
                            64.0,    256.0,  1000.0, -0.9,  -0.1, 0.001,  0.01,
                            0.05,    0.1,    0.15,   0.35,  0.45, 0.55,   0.65,
                            0.85,    0.9,    0.95,   0.99,  1.01, 1.1,    1.9,
                            2.1,     5.0,    6.0};
  for (int i = -16; i <= 16; ++i) xs.push_back(0.25 * i);
  std::sort(xs.begin(), xs.end());
  return xs;
}

std::vector<double> default_s_probes(Interval domain) {
  std::vector<double> out;
  out.reserve(33);
  for (int k = 0; k < 33; ++k) {
    out.push_back(domain.lo + k * (domain.hi - domain.lo) / 32.0);
  }
  out.back() = domain.hi;
  return out;
}

GridField sklar_forward(const MarginalFamily& family, const GridField& field) {
  return apply(PointwiseMap::cdf_map(family), field);
}

TransformedTrajectory sklar_forward(const MarginalFamily& family,
                                    const Realization& input) {
  return apply(PointwiseMap::cdf_map(family), input);
}

GridField sklar_backward(const MarginalFamily& family, const GridField& field) {
  return apply(PointwiseMap::quantile_map(family), field);
}

TransformedTrajectory sklar_backward(const MarginalFamily& family,
                                     const Realization& input) {
  return apply(PointwiseMap::quantile_map(family), input);
}

GridField gev_standardize(const ThetaField& theta, const GridField& field) {
  return apply(PointwiseMap::gev_standardize(theta), field);
}

TransformedTrajectory gev_standardize(const ThetaField& theta,
                                      const Realization& input) {
  return apply(PointwiseMap::gev_standardize(theta), input);
}

GridField gev_destandardize(const ThetaField& theta, const GridField& field) {
  return apply(PointwiseMap::gev_destandardize(theta), field);
}

TransformedTrajectory gev_destandardize(const ThetaField& theta,
                                        const Realization& input) {
  return apply(PointwiseMap::gev_destandardize(theta), input);
}

GridField lower_bound_field(const MarginalFamily& family, const Domain& domain) {
  GridField out(domain);
  for (int i0 = 0; i0 < domain.res(0); ++i0) {
    double s1 = domain.coord(0, i0);
    for (int i1 = 0; i1 < domain.res(1); ++i1) {
      double s2 = domain.dim() == 2 ? domain.coord(1, i1) : 0.0;
      out.values[domain.flat(i0, i1)] = family.at(s1, s2).quantile(0.0);
    }
  }
  return out;
}

GridField clamp_to_lower_bound(const MarginalFamily& family, const GridField& field) {
  return pointwise_max(field, lower_bound_field(family, field.domain));
}

MarginalFamily gallery_family(const std::string& id) {
  using Piece = MarginalFamily::Piece;
  if (id == "atom") {
    std::vector<Piece> pieces{Piece::uniform_width(abs(Expr::coord())),
                              Piece::uniform_width(Expr::coord())};
    std::vector<MarginalFamily::Boundary> bounds{
        {0.0, Piece::fixed(RcCdf::point_mass(0.0))}};
    return MarginalFamily::segmented(Interval{-1.0, 1.0}, std::move(pieces),
                                     std::move(bounds));
  }
  if (id == "lsc_margins") {
    std::vector<Piece> pieces{Piece::fixed(RcCdf::uniform01()),
                              Piece::fixed(RcCdf::uniform01())};
    std::vector<MarginalFamily::Boundary> bounds{
        {1.0, Piece::fixed(RcCdf::power_uniform(2.0))}};
    return MarginalFamily::segmented(Interval{0.0, 1.0}, std::move(pieces),
                                     std::move(bounds));
  }
  if (id == "b_not_necessary") {
    Piece body = Piece::mixture_weight(Expr::constant(ExtReal(1.0)) - Expr::coord(),
                                       RcCdf::normal(-1.0, 1.0), RcCdf::normal(0.0, 1.0));
    std::vector<Piece> pieces{Piece::fixed(RcCdf::normal(0.0, 1.0)), std::move(body)};
    std::vector<MarginalFamily::Boundary> bounds{
        {0.0, Piece::fixed(RcCdf::normal(0.0, 1.0))}};
    return MarginalFamily::segmented(Interval{-1.0, 1.0}, std::move(pieces),
                                     std::move(bounds));
  }
  if (id == "law_mismatch_1") return MarginalFamily::constant(RcCdf::uniform01());
  if (id == "law_mismatch_2") {
    return MarginalFamily::constant(RcCdf::two_interval_uniform());
  }
  if (id == "theta_discontinuous") {
    RcCdf inner = RcCdf::gev(GevParams(1.0, 1.0, 1.0));
    std::vector<Piece> pieces{Piece::fixed(inner), Piece::fixed(inner)};
    std::vector<MarginalFamily::Boundary> bounds{
        {1.0, Piece::fixed(RcCdf::gev(GevParams(1.0, 2.0, 2.0)))}};
    return MarginalFamily::segmented(Interval{0.0, 1.0}, std::move(pieces),
                                     std::move(bounds));
  }
  throw std::invalid_argument("unknown gallery entry");
}

PointwiseMap gallery_map(const std::string& id) {
  MarginalFamily family = gallery_family(id);
  if (id == "atom" || id == "lsc_margins") {
    return PointwiseMap::cdf_map(std::move(family));
  }
  if (id == "theta_discontinuous") {
    return compose(PointwiseMap::monotone_rc("neg_inv_log"),
                   PointwiseMap::cdf_map(std::move(family)));
  }
  PointwiseMap forward = PointwiseMap::cdf_map(family);
  return compose(PointwiseMap::quantile_map(std::move(family)), std::move(forward));
}

namespace {

nlohmann::json piece_fields_json(MarginalFamily::Piece::Kind kind, const RcCdf* cdf,
                                 const RcCdf* second, const Expr& param) {
  nlohmann::json pj;
  switch (kind) {
    case MarginalFamily::Piece::Kind::fixed:
      pj["kind"] = "fixed";
      pj["cdf"] = cdf_to_json(*cdf);
      break;
    case MarginalFamily::Piece::Kind::uniform_width:
      pj["kind"] = "uniform_width";
      pj["width"] = expr_to_json(param);
      break;
    case MarginalFamily::Piece::Kind::mixture_weight:
      pj["kind"] = "mixture_weight";
      pj["weight"] = expr_to_json(param);
      pj["first"] = cdf_to_json(*cdf);
      pj["second"] = cdf_to_json(*second);
      break;
  }
  return pj;
}

}  // namespace

nlohmann::json family_to_json(const MarginalFamily& family) {
  using nlohmann::json;
  json j;
  switch (family.kind_) {
    case MarginalFamily::Kind::constant:
      j["kind"] = "constant";
      j["cdf"] = cdf_to_json(*family.cdf_);
      return j;
    case MarginalFamily::Kind::gev_field:
      j["kind"] = "gev";
      j["theta"] = theta_field_to_json(*family.theta_);
      return j;
    case MarginalFamily::Kind::segmented: {
      j["kind"] = "segmented";
      j["domain"] = {family.domain_.lo, family.domain_.hi};
      json pieces = json::array();
      for (const MarginalFamily::Piece& p : family.pieces_) {
        pieces.push_back(piece_fields_json(p.kind_, p.cdf_.get(), p.second_.get(), p.param_));
      }
      j["pieces"] = std::move(pieces);
      json bounds = json::array();
      for (const MarginalFamily::Boundary& b : family.boundaries_) {
        const MarginalFamily::Piece& p = b.at_value;
        bounds.push_back(json{
            {"location", b.location},
            {"piece", piece_fields_json(p.kind_, p.cdf_.get(), p.second_.get(), p.param_)}});
      }
      j["boundaries"] = std::move(bounds);
      return j;
    }
  }
  throw std::logic_error("unreachable family kind");
}

namespace {

MarginalFamily::Piece piece_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed") return MarginalFamily::Piece::fixed(cdf_from_json(j.at("cdf")));
  if (kind == "uniform_width") {
    return MarginalFamily::Piece::uniform_width(expr_from_json(j.at("width")));
  }
  if (kind == "mixture_weight") {
    return MarginalFamily::Piece::mixture_weight(expr_from_json(j.at("weight")),
                                                 cdf_from_json(j.at("first")),
                                                 cdf_from_json(j.at("second")));
  }
  throw std::runtime_error("unknown piece kind");
}

}  // namespace

MarginalFamily family_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return MarginalFamily::constant(cdf_from_json(j.at("cdf")));
  if (kind == "gev") return MarginalFamily::gev_field(theta_field_from_json(j.at("theta")));
  if (kind == "segmented") {
    Interval domain{j.at("domain").at(0).get<double>(),
                    j.at("domain").at(1).get<double>()};
    std::vector<MarginalFamily::Piece> pieces;
    for (const nlohmann::json& pj : j.at("pieces")) pieces.push_back(piece_from_json(pj));
    std::vector<MarginalFamily::Boundary> bounds;
    for (const nlohmann::json& bj : j.at("boundaries")) {
      bounds.push_back(MarginalFamily::Boundary{bj.at("location").get<double>(),
                                                piece_from_json(bj.at("piece"))});
    }
    return MarginalFamily::segmented(domain, std::move(pieces), std::move(bounds));
  }
  throw std::runtime_error("unknown family kind");
}

nlohmann::json map_to_json(const PointwiseMap& map) {
  using nlohmann::json;
  const PointwiseMap::Impl& im = *map.impl_;
  switch (im.kind) {
    case PointwiseMap::Kind::monotone_rc:
      if (im.mono == Mono::step) {
        return json{{"node", "step_at"}, {"threshold", im.threshold}};
      }
      return json{{"node", "monotone_rc"}, {"name", im.name}};
    case PointwiseMap::Kind::max_with:
      return json{{"node", "max_with"}, {"arg", expr_to_json(im.arg)}};
    case PointwiseMap::Kind::min_with:
      return json{{"node", "min_with"}, {"arg", expr_to_json(im.arg)}};
    case PointwiseMap::Kind::scale:
      return json{{"node", "scale"}, {"factor", expr_to_json(im.arg)}};
    case PointwiseMap::Kind::shift:
      return json{{"node", "shift"}, {"offset", expr_to_json(im.arg)}};
    case PointwiseMap::Kind::quantile_map:
      return json{{"node", "quantile_map"}, {"family", family_to_json(*im.family)}};
    case PointwiseMap::Kind::cdf_map:
      return json{{"node", "cdf_map"}, {"family", family_to_json(*im.family)}};
    case PointwiseMap::Kind::gev_standardize:
      return json{{"node", "gev_standardize"}, {"theta", theta_field_to_json(*im.theta)}};
    case PointwiseMap::Kind::gev_destandardize:
      return json{{"node", "gev_destandardize"},
                  {"theta", theta_field_to_json(*im.theta)}};
    case PointwiseMap::Kind::compose: {
      PointwiseMap outer(im.outer);
      PointwiseMap inner(im.inner);
      return json{{"node", "compose"},
                  {"outer", map_to_json(outer)},
                  {"inner", map_to_json(inner)}};
    }
  }
  throw std::logic_error("unreachable map node");
}

PointwiseMap map_from_json(const nlohmann::json& j) {
  const std::string node = j.at("node").get<std::string>();
  if (node == "monotone_rc") {
    return PointwiseMap::monotone_rc(j.at("name").get<std::string>());
  }
  if (node == "step_at") return PointwiseMap::step_at(j.at("threshold").get<double>());
  if (node == "max_with") return PointwiseMap::max_with(expr_from_json(j.at("arg")));
  if (node == "min_with") return PointwiseMap::min_with(expr_from_json(j.at("arg")));
  if (node == "scale") return PointwiseMap::scale(expr_from_json(j.at("factor")));
  if (node == "shift") return PointwiseMap::shift(expr_from_json(j.at("offset")));
  if (node == "quantile_map") {
    return PointwiseMap::quantile_map(family_from_json(j.at("family")));
  }
  if (node == "cdf_map") return PointwiseMap::cdf_map(family_from_json(j.at("family")));
  if (node == "gev_standardize") {
    return PointwiseMap::gev_standardize(theta_field_from_json(j.at("theta")));
  }
  if (node == "gev_destandardize") {
    return PointwiseMap::gev_destandardize(theta_field_from_json(j.at("theta")));
  }
  if (node == "compose") {
    return compose(map_from_json(j.at("outer")), map_from_json(j.at("inner")));
  }
  throw std::runtime_error("unknown map node");
}

}  // namespace uscx
