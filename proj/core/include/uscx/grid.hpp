#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "uscx/extreal.hpp"

namespace uscx {

/**
 * Axis-aligned closed box, used for probe parts and restriction queries.
 * Axis 1 is ignored on one-dimensional domains.
 */
struct Box {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};

  static Box interval(double a, double b) { return Box{{a, 0.0}, {b, 0.0}}; }
  static Box rect(double a0, double b0, double a1, double b1) {
    return Box{{a0, a1}, {b0, b1}};
  }
};

/**
 * Uniform rectangular grid over a compact interval or rectangle.
 * Nodes along axis k sit at lo[k] + i * step(k), i = 0..res[k]-1, with at
 * least two nodes per axis.  Fields are stored row-major with axis 0 outer.
 */
class Domain {
 public:
  static Domain make1d(double lo, double hi, int resolution);
  static Domain make2d(double lo0, double hi0, int res0, double lo1, double hi1, int res1);

  int dim() const { return dim_; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  int res(int axis) const { return res_[axis]; }

  double step(int axis) const { return (hi_[axis] - lo_[axis]) / (res_[axis] - 1); }
  double coord(int axis, int i) const { return lo_[axis] + i * step(axis); }

  std::size_t num_nodes() const {
    return static_cast<std::size_t>(res_[0]) * static_cast<std::size_t>(res_[1]);
  }
  std::size_t flat(int i0, int i1 = 0) const {
    return static_cast<std::size_t>(i0) * static_cast<std::size_t>(res_[1]) +
           static_cast<std::size_t>(i1);
  }
  std::array<int, 2> unflat(std::size_t idx) const {
    return {static_cast<int>(idx / res_[1]), static_cast<int>(idx % res_[1])};
  }

  // Smallest/largest node index on `axis` whose coordinate lies in [a, b];
  // yields an empty range (first > last) when no node does.
  std::array<int, 2> index_range(int axis, double a, double b) const;

  // True when the closed box contains at least one grid node.
  bool box_nonempty(const Box& box) const;

  friend bool operator==(const Domain& a, const Domain& b) {
    return a.dim_ == b.dim_ && a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.res_ == b.res_;
  }

 private:
  Domain() = default;
  int dim_ = 1;
  std::array<double, 2> lo_{0.0, 0.0};
  std::array<double, 2> hi_{1.0, 0.0};
  std::array<int, 2> res_{2, 1};
};

/** Extended-real-valued function sampled on the nodes of a Domain. */
struct GridField {
  Domain domain;
  std::vector<ExtReal> values;  // row-major, size == domain.num_nodes()

  explicit GridField(const Domain& d, ExtReal fill = ExtReal(0.0))
      : domain(d), values(d.num_nodes(), fill) {}

  ExtReal& at(int i0, int i1 = 0) { return values[domain.flat(i0, i1)]; }
  ExtReal at(int i0, int i1 = 0) const { return values[domain.flat(i0, i1)]; }
};

/**
 * Finite union of (closed box, level) pairs.  The associated hypograph event
 * is "some box contains a point where the field reaches the level".
 */
struct ProbePart {
  Box box;
  double level = 0.0;
};
struct CompactProbe {
  std::vector<ProbePart> parts;
};

/**
 * True when max over the nodes of some part's box reaches that part's level.
 * +inf node values hit every finite level.  Throws std::invalid_argument
 * ("empty probe box") when a part's box contains no grid node.
 */
bool hypo_hits(const GridField& field, const CompactProbe& probe);

/** Node-wise maximum; domains must compare equal ("domain mismatch"). */
GridField pointwise_max(const GridField& a, const GridField& b);

/**
 * One step of the grid upper-semicontinuous hull: each node becomes the max
 * of the closed one-step neighborhood (index offsets in {-1,0,1} per axis).
 * Output dominates the input node-wise; repeated application converges in at
 * most max(resolution) steps.
 */
GridField usc_hull_grid(const GridField& field);

/** Minimum of the field over the nodes inside a closed box ("empty probe box"). */
ExtReal inf_on_box(const GridField& field, const Box& box);

enum class HypoVerdict { pass, fail_upper, fail_lower };

struct HypoConvergesOptions {
  double slack = 1e-9;  // additive tolerance on both branch comparisons
  int radius = 2;       // neighborhood radius in grid steps (Chebyshev)
};

struct HypoConvergesReport {
  HypoVerdict verdict = HypoVerdict::pass;
  // Witness of the first violated branch; -1 when the verdict is pass.
  long witness_node = -1;
  long witness_seq_index = -1;
};

/**
 * Finite surrogate for hypo-convergence of the sequence to the limit,
 * examined on the tail (the last ceil(N/3) fields):
 *
 *   upper: every tail value at node t must be <= the limit's max over the
 *          radius-ball around t, plus slack (no persistent mass above the
 *          limit, allowing one-ball spatial drift);
 *   lower: for every node s and every tail field, the field's max over the
 *          radius-ball around s must be >= limit(s) - slack (the limit's
 *          mass is attained nearby).
 *
 * The verdict reports the first violated branch, upper checked first.
 * Throws on mismatched domains and on sequences shorter than 3.
 */
HypoConvergesReport hypo_converges(const std::vector<GridField>& seq,
                                   const GridField& limit,
                                   const HypoConvergesOptions& opts = {});

}  // namespace uscx
