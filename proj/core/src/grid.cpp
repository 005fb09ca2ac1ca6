#include "uscx/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uscx {

namespace {

void validate_axis(double lo, double hi, int res) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw std::invalid_argument("Domain: bounds must be finite with lo < hi");
  }
  if (res < 2) {
    throw std::invalid_argument("Domain: resolution below 2");
  }
}

}  // namespace

Domain Domain::make1d(double lo, double hi, int resolution) {
  validate_axis(lo, hi, resolution);
  Domain d;
  d.dim_ = 1;
  d.lo_ = {lo, 0.0};
  d.hi_ = {hi, 0.0};
  d.res_ = {resolution, 1};
  return d;
}

Domain Domain::make2d(double lo0, double hi0, int res0, double lo1, double hi1, int res1) {
  validate_axis(lo0, hi0, res0);
  validate_axis(lo1, hi1, res1);
  Domain d;
  d.dim_ = 2;
  d.lo_ = {lo0, lo1};
  d.hi_ = {hi0, hi1};
  d.res_ = {res0, res1};
  return d;
}

std::array<int, 2> Domain::index_range(int axis, double a, double b) const {
  const int n = res_[axis];
  // Candidate from arithmetic, then corrected by exact coordinate comparisons
  // so floating-point rounding at box edges cannot drop or add a node.
  int first = static_cast<int>(std::ceil((a - lo_[axis]) / step(axis) - 0.5));
  first = std::clamp(first, 0, n);
  while (first < n && coord(axis, first) < a) ++first;
  while (first > 0 && coord(axis, first - 1) >= a) --first;

  int last = static_cast<int>(std::floor((b - lo_[axis]) / step(axis) + 0.5));
  last = std::clamp(last, -1, n - 1);
  while (last >= 0 && coord(axis, last) > b) --last;
  while (last + 1 < n && coord(axis, last + 1) <= b) ++last;

  return {first, last};
}

bool Domain::box_nonempty(const Box& box) const {
  for (int axis = 0; axis < dim_; ++axis) {
    auto [first, last] = index_range(axis, box.lo[axis], box.hi[axis]);
    if (first > last) return false;
  }
  return true;
}

bool hypo_hits(const GridField& field, const CompactProbe& probe) {
  const Domain& d = field.domain;
  for (const ProbePart& part : probe.parts) {
    if (!d.box_nonempty(part.box)) {
      throw std::invalid_argument("hypo_hits: empty probe box");
    }
    auto [f0, l0] = d.index_range(0, part.box.lo[0], part.box.hi[0]);
    auto [f1, l1] = d.dim() == 2 ? d.index_range(1, part.box.lo[1], part.box.hi[1])
                                 : std::array<int, 2>{0, 0};
    const ExtReal level(part.level);
    for (int i0 = f0; i0 <= l0; ++i0) {
      for (int i1 = f1; i1 <= l1; ++i1) {
        if (field.at(i0, i1) >= level) return true;
      }
    }
  }
  return false;
}

GridField pointwise_max(const GridField& a, const GridField& b) {
  if (!(a.domain == b.domain)) {
    throw std::invalid_argument("pointwise_max: domain mismatch");
  }
  GridField out(a.domain);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = max(a.values[i], b.values[i]);
  }
  return out;
}

GridField usc_hull_grid(const GridField& field) {
  const Domain& d = field.domain;
  GridField out(d);
  const int n0 = d.res(0);
  const int n1 = d.res(1);
  for (int i0 = 0; i0 < n0; ++i0) {
    for (int i1 = 0; i1 < n1; ++i1) {
      ExtReal m = field.at(i0, i1);
      for (int o0 = std::max(0, i0 - 1); o0 <= std::min(n0 - 1, i0 + 1); ++o0) {
        for (int o1 = std::max(0, i1 - 1); o1 <= std::min(n1 - 1, i1 + 1); ++o1) {
          m = max(m, field.at(o0, o1));
        }
      }
      out.at(i0, i1) = m;
    }
  }
  return out;
}

ExtReal inf_on_box(const GridField& field, const Box& box) {
  const Domain& d = field.domain;
  if (!d.box_nonempty(box)) {
    throw std::invalid_argument("inf_on_box: empty probe box");
  }
  auto [f0, l0] = d.index_range(0, box.lo[0], box.hi[0]);
  auto [f1, l1] = d.dim() == 2 ? d.index_range(1, box.lo[1], box.hi[1])
                               : std::array<int, 2>{0, 0};
  ExtReal m = ExtReal::pos_inf();
  for (int i0 = f0; i0 <= l0; ++i0) {
    for (int i1 = f1; i1 <= l1; ++i1) {
      m = min(m, field.at(i0, i1));
    }
  }
  return m;
}

namespace {

// a > b + slack on the extended line; infinities compare symbolically.
bool exceeds_with_slack(ExtReal a, ExtReal b, double slack) {
  if (b.is_pos_inf()) return false;
  if (b.is_neg_inf()) return !a.is_neg_inf();
  if (a.is_pos_inf()) return true;
  if (a.is_neg_inf()) return false;
  return a.raw() > b.raw() + slack;
}

// Max of the field over the closed Chebyshev ball of `radius` index steps.
ExtReal ball_max(const GridField& f, int i0, int i1, int radius) {
  const Domain& d = f.domain;
  const int n0 = d.res(0);
  const int n1 = d.res(1);
  ExtReal m = ExtReal::neg_inf();
  for (int o0 = std::max(0, i0 - radius); o0 <= std::min(n0 - 1, i0 + radius); ++o0) {
    for (int o1 = std::max(0, i1 - radius); o1 <= std::min(n1 - 1, i1 + radius); ++o1) {
      m = max(m, f.at(o0, o1));
    }
  }
  return m;
}

}  // namespace

HypoConvergesReport hypo_converges(const std::vector<GridField>& seq,
                                   const GridField& limit,
                                   const HypoConvergesOptions& opts) {
  if (seq.size() < 3) {
    throw std::invalid_argument("hypo_converges: sequence shorter than 3");
  }
  const Domain& d = limit.domain;
  for (const GridField& f : seq) {
    if (!(f.domain == d)) throw std::invalid_argument("hypo_converges: mismatched domains");
  }
  if (opts.radius < 0) throw std::invalid_argument("hypo_converges: negative radius");

  const std::size_t n = seq.size();
  const std::size_t tail_start = n - (n + 2) / 3;  // last ceil(n/3) entries
  const int n0 = d.res(0);
  const int n1 = d.res(1);

  HypoConvergesReport report;

  // Upper branch: tail values may not exceed the limit's neighborhood max.
  for (std::size_t k = tail_start; k < n; ++k) {
    for (int i0 = 0; i0 < n0; ++i0) {
      for (int i1 = 0; i1 < n1; ++i1) {
        ExtReal bound = ball_max(limit, i0, i1, opts.radius);
        if (exceeds_with_slack(seq[k].at(i0, i1), bound, opts.slack)) {
          report.verdict = HypoVerdict::fail_upper;
          report.witness_node = static_cast<long>(d.flat(i0, i1));
          report.witness_seq_index = static_cast<long>(k);
          return report;
        }
      }
    }
  }

  // Lower branch: every tail field must attain the limit nearby.
  for (std::size_t k = tail_start; k < n; ++k) {
    for (int i0 = 0; i0 < n0; ++i0) {
      for (int i1 = 0; i1 < n1; ++i1) {
        ExtReal attained = ball_max(seq[k], i0, i1, opts.radius);
        if (exceeds_with_slack(limit.at(i0, i1), attained, opts.slack)) {
          report.verdict = HypoVerdict::fail_lower;
          report.witness_node = static_cast<long>(d.flat(i0, i1));
          report.witness_seq_index = static_cast<long>(k);
          return report;
        }
      }
    }
  }

  return report;
}

}  // namespace uscx
