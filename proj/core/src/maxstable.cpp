#include "uscx/maxstable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>

#include "uscx/expr.hpp"
#include "uscx/io.hpp"
#include "uscx/transform.hpp"

namespace uscx {

namespace {

constexpr std::size_t kAtomBudget = 1000000;
constexpr double kZ95 = 1.959963984540054;

void require_one_dimensional(const Domain& domain) {
  if (domain.dim() != 1) {
    throw std::invalid_argument("spectral model needs a one-dimensional domain");
  }
}

}  // namespace

SpectralModel::SpectralModel(Family family, const Domain& domain)
    : family_(family), domain_(domain) {}

SpectralModel SpectralModel::constant_one(const Domain& domain) {
  SpectralModel model(Family::constant_one, domain);
  model.bound_ = 1.0;
  model.mean_ = 1.0;
  return model;
}

SpectralModel SpectralModel::storm(const Domain& domain, double radius, double height) {
  require_one_dimensional(domain);
  if (!(std::isfinite(radius) && radius > 0.0)) {
    throw std::invalid_argument("storm radius must be positive");
  }
  if (!(std::isfinite(height) && height > 0.0)) {
    throw std::invalid_argument("storm height must be positive");
  }
  SpectralModel model(Family::storm, domain);
  model.radius_ = radius;
  model.height_ = height;
  model.bound_ = height;
  // The center is uniform on the domain enlarged by the radius on each side,
  // so every point of the domain sees the full window: f is constant.
  const double len = domain.hi(0) - domain.lo(0);
  model.mean_ = height * (2.0 * radius) / (len + 2.0 * radius);
  return model;
}

SpectralModel SpectralModel::staircase(const Domain& domain, std::vector<StairStep> steps) {
  require_one_dimensional(domain);
  if (steps.empty()) throw std::invalid_argument("staircase needs at least one plateau");
  double width_total = 0.0;
  double weighted = 0.0;
  double top = 0.0;
  for (const StairStep& step : steps) {
    if (!(std::isfinite(step.width) && step.width > 0.0)) {
      throw std::invalid_argument("plateau width must be positive");
    }
    if (!(std::isfinite(step.value) && step.value >= 0.0)) {
      throw std::invalid_argument("plateau value must be nonnegative");
    }
    width_total += step.width;
    weighted += step.width * step.value;
    top = std::max(top, step.value);
  }
  if (!(weighted > 0.0)) throw std::invalid_argument("staircase needs a positive plateau");
  const std::size_t m = steps.size();
  for (std::size_t k = 0; k < m; ++k) {
    const double left = steps[k].value;
    const double right = steps[(k + 1) % m].value;
    const double kept = steps[k].closed_left ? left : right;
    if (kept < std::max(left, right)) {
      throw std::invalid_argument("staircase jump closed on the lower side");
    }
  }
  SpectralModel model(Family::staircase, domain);
  const double len = domain.hi(0) - domain.lo(0);
  model.joints_.resize(m + 1);
  model.joints_[0] = 0.0;
  double cum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    cum += steps[k].width;
    model.joints_[k + 1] = len * (cum / width_total);
  }
  model.joints_[m] = len;  // pin the far joint against rounding drift
  model.steps_ = std::move(steps);
  model.bound_ = top;
  model.mean_ = weighted / width_total;
  return model;
}

namespace {

// Template value at a position t in [0, len); joints keep the value of the
// side their closure flag names (validated to be the weakly higher one).
double staircase_value_at(const std::vector<StairStep>& steps,
                          const std::vector<double>& joints, double t) {
  const std::size_t m = steps.size();
  const auto it = std::upper_bound(joints.begin(), joints.end(), t);
  const std::size_t idx = static_cast<std::size_t>(it - joints.begin()) - 1;
  if (t == joints[idx]) {
    const std::size_t left = idx == 0 ? m - 1 : idx - 1;
    return steps[left].closed_left ? steps[left].value : steps[idx % m].value;
  }
  return steps[idx].value;
}

}  // namespace

void SpectralModel::draw_spectral(Rng& rng, std::vector<double>& out) const {
  const std::size_t n_nodes = domain_.num_nodes();
  switch (family_) {
    case Family::constant_one:
      out.assign(n_nodes, 1.0);
      return;
    case Family::storm: {
      out.assign(n_nodes, 0.0);
      const double center = rng.uniform(domain_.lo(0) - radius_, domain_.hi(0) + radius_);
      const double peak = peak_ratio();
      const auto range = domain_.index_range(0, center - radius_, center + radius_);
      for (int i = range[0]; i <= range[1]; ++i) {
        out[domain_.flat(i)] = peak;
      }
      return;
    }
    case Family::staircase: {
      out.resize(n_nodes);
      const double len = domain_.hi(0) - domain_.lo(0);
      const double shift = rng.uniform(0.0, len);
      for (int i = 0; i < domain_.res(0); ++i) {
        double t = (domain_.coord(0, i) - domain_.lo(0)) + shift;
        if (t >= len) t -= len;
        out[domain_.flat(i)] = staircase_value_at(steps_, joints_, t) / mean_;
      }
      return;
    }
  }
  throw std::logic_error("unreachable spectral family");
}

GridField simulate_simple(const MaxStableSampler& sampler, std::uint64_t seed,
                          SimulateStats* stats) {
  const SpectralModel& model = sampler.model;
  const Domain& domain = model.domain();
  const std::size_t n_nodes = domain.num_nodes();
  Rng rng(seed);
  std::vector<double> acc(n_nodes, 0.0);
  std::vector<double> w;
  const double peak = model.peak_ratio();
  double gamma = rng.exponential();
  double floor = 0.0;
  std::size_t atoms = 0;
  for (;;) {
    const double y = 1.0 / gamma;
    // No later atom can raise any node: contributions are at most y * peak
    // and the y sequence is strictly decreasing.
    if (y * peak < floor) break;
    if (atoms >= kAtomBudget) throw std::runtime_error("stopping rule starved");
    model.draw_spectral(rng, w);
    for (std::size_t i = 0; i < n_nodes; ++i) acc[i] = std::max(acc[i], y * w[i]);
    floor = *std::min_element(acc.begin(), acc.end());
    ++atoms;
    gamma += rng.exponential();
  }
  if (stats) stats->atoms = atoms;
  GridField field(domain);
  for (std::size_t i = 0; i < n_nodes; ++i) field.values[i] = ExtReal(acc[i]);
  return field;
}

namespace {

void require_probe_boxes(const Domain& domain, const CompactProbe& probe) {
  for (const ProbePart& part : probe.parts) {
    if (!domain.box_nonempty(part.box)) throw std::invalid_argument("empty probe box");
  }
}

std::vector<std::size_t> nodes_in_box(const Domain& domain, const Box& box) {
  const auto r0 = domain.index_range(0, box.lo[0], box.hi[0]);
  std::vector<std::size_t> nodes;
  if (domain.dim() == 1) {
    for (int i = r0[0]; i <= r0[1]; ++i) nodes.push_back(domain.flat(i));
  } else {
    const auto r1 = domain.index_range(1, box.lo[1], box.hi[1]);
    for (int i = r0[0]; i <= r0[1]; ++i) {
      for (int j = r1[0]; j <= r1[1]; ++j) nodes.push_back(domain.flat(i, j));
    }
  }
  return nodes;
}

// Exact E[max_j c_j 1{center in A_j}] for the storm: each A_j is the union
// of the radius windows around the box's nodes, and the integrand is a step
// function of the center, integrated segment by segment.
double storm_expectation(const SpectralModel& model, const CompactProbe& probe) {
  const Domain& domain = model.domain();
  const double r = model.storm_radius();
  const double peak = model.peak_ratio();
  struct Piece {
    double lo, hi, weight;
  };
  std::vector<Piece> pieces;
  std::vector<double> cuts;
  for (const ProbePart& part : probe.parts) {
    const double weight = peak / part.level;
    const auto range = domain.index_range(0, part.box.lo[0], part.box.hi[0]);
    double lo = domain.coord(0, range[0]) - r;
    double hi = domain.coord(0, range[0]) + r;
    for (int i = range[0] + 1; i <= range[1]; ++i) {
      const double s = domain.coord(0, i);
      if (s - r <= hi) {
        hi = s + r;
      } else {
        pieces.push_back({lo, hi, weight});
        lo = s - r;
        hi = s + r;
      }
    }
    pieces.push_back({lo, hi, weight});
  }
  for (const Piece& piece : pieces) {
    cuts.push_back(piece.lo);
    cuts.push_back(piece.hi);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    double value = 0.0;
    for (const Piece& piece : pieces) {
      if (piece.lo <= mid && mid <= piece.hi) value = std::max(value, piece.weight);
    }
    total += value * (cuts[k + 1] - cuts[k]);
  }
  const double len = domain.hi(0) - domain.lo(0);
  return total / (len + 2.0 * r);
}

}  // namespace

double capacity_closed_form(const SpectralModel& model, const CompactProbe& probe,
                            std::size_t n_expectation_samples, std::uint64_t seed) {
  require_probe_boxes(model.domain(), probe);
  if (probe.parts.empty()) return 1.0;
  for (const ProbePart& part : probe.parts) {
    if (!(part.level > 0.0)) return 0.0;  // nonnegative fields hit surely
  }
  switch (model.family()) {
    case SpectralModel::Family::constant_one: {
      double expectation = 0.0;
      for (const ProbePart& part : probe.parts) {
        expectation = std::max(expectation, 1.0 / part.level);
      }
      return std::exp(-expectation);
    }
    case SpectralModel::Family::storm:
      return std::exp(-storm_expectation(model, probe));
    case SpectralModel::Family::staircase: {
      if (n_expectation_samples == 0) {
        throw std::invalid_argument("need at least one expectation sample");
      }
      std::vector<std::vector<std::size_t>> part_nodes;
      part_nodes.reserve(probe.parts.size());
      for (const ProbePart& part : probe.parts) {
        part_nodes.push_back(nodes_in_box(model.domain(), part.box));
      }
      double total = 0.0;
      std::vector<double> w;
      for (std::size_t k = 0; k < n_expectation_samples; ++k) {
        Rng rng(stream_seed(seed, k));
        model.draw_spectral(rng, w);
        double draw_max = 0.0;
        for (std::size_t j = 0; j < probe.parts.size(); ++j) {
          double box_max = 0.0;
          for (const std::size_t node : part_nodes[j]) box_max = std::max(box_max, w[node]);
          draw_max = std::max(draw_max, box_max / probe.parts[j].level);
        }
        total += draw_max;
      }
      return std::exp(-total / static_cast<double>(n_expectation_samples));
    }
  }
  throw std::logic_error("unreachable spectral family");
}

namespace {

// Runs body(state[t], begin, end) over a contiguous partition of [0, n).
// Counts accumulate per slot and are merged by the caller, so the result is
// independent of the thread count.
template <typename State, typename Body>
void run_partitioned(std::size_t n, int n_threads, std::vector<State>& states,
                     const Body& body) {
  const std::size_t slots = states.size();
  if (slots <= 1 || n == 0) {
    body(states[0], std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(slots);
  const std::size_t chunk = (n + slots - 1) / slots;
  for (std::size_t t = 0; t < slots; ++t) {
    const std::size_t begin = std::min(n, t * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    workers.emplace_back([&, t, begin, end] { body(states[t], begin, end); });
  }
  for (std::thread& worker : workers) worker.join();
}

std::size_t clamp_slots(std::size_t n, int n_threads) {
  if (n_threads < 1) throw std::invalid_argument("thread count must be positive");
  return std::max<std::size_t>(1, std::min<std::size_t>(n_threads, n));
}

}  // namespace

CapacityEstimate capacity_empirical(const MaxStableSampler& sampler,
                                    const CompactProbe& probe, std::size_t n_samples,
                                    std::uint64_t seed, int n_threads) {
  if (n_samples < 100) throw std::invalid_argument("need at least 100 samples");
  require_probe_boxes(sampler.domain(), probe);
  struct Counts {
    std::size_t hits = 0;
    std::size_t atoms = 0;
  };
  std::vector<Counts> states(clamp_slots(n_samples, n_threads));
  run_partitioned(n_samples, n_threads, states,
                  [&](Counts& counts, std::size_t begin, std::size_t end) {
                    SimulateStats stats;
                    for (std::size_t i = begin; i < end; ++i) {
                      const GridField field =
                          simulate_simple(sampler, stream_seed(seed, i), &stats);
                      counts.atoms += stats.atoms;
                      if (hypo_hits(field, probe)) ++counts.hits;
                    }
                  });
  std::size_t hits = 0;
  std::size_t atoms = 0;
  for (const auto& counts : states) {
    hits += counts.hits;
    atoms += counts.atoms;
  }
  CapacityEstimate estimate;
  estimate.hit_rate = static_cast<double>(hits) / static_cast<double>(n_samples);
  estimate.halfwidth_95 =
      kZ95 * std::sqrt(estimate.hit_rate * (1.0 - estimate.hit_rate) /
                       static_cast<double>(n_samples));
  estimate.atoms_mean = static_cast<double>(atoms) / static_cast<double>(n_samples);
  return estimate;
}

namespace {

double pooled_two_proportion_z(std::size_t c1, std::size_t c2, std::size_t n) {
  if (c1 == c2) return 0.0;
  const double p1 = static_cast<double>(c1) / static_cast<double>(n);
  const double p2 = static_cast<double>(c2) / static_cast<double>(n);
  const double pooled = (static_cast<double>(c1) + static_cast<double>(c2)) /
                        (2.0 * static_cast<double>(n));
  return (p1 - p2) / std::sqrt(pooled * (1.0 - pooled) * (2.0 / static_cast<double>(n)));
}

// Delta-method z for miss(single)^n against miss(scaled).
double product_identity_z(std::size_t c_single, std::size_t c_scaled, int n,
                          std::size_t n_samples) {
  const double samples = static_cast<double>(n_samples);
  const double p_single = static_cast<double>(c_single) / samples;
  const double p_scaled = static_cast<double>(c_scaled) / samples;
  const double lhs = std::pow(1.0 - p_single, n);
  const double rhs = 1.0 - p_scaled;
  if (lhs == rhs) return 0.0;
  const double slope = static_cast<double>(n) * std::pow(1.0 - p_single, n - 1);
  const double variance = slope * slope * p_single * (1.0 - p_single) / samples +
                          p_scaled * (1.0 - p_scaled) / samples;
  if (!(variance > 0.0)) {
    return lhs > rhs ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
  }
  return (lhs - rhs) / std::sqrt(variance);
}

// Evaluates the norming constant for theta at the coordinate; used to build
// the node-wise affine map a_{n,theta(s)} x + b_{n,theta(s)}.
struct NormingCoord final : CoordMap {
  ThetaField theta;
  std::int64_t copies;
  bool want_scale;

  NormingCoord(ThetaField field, std::int64_t n, bool scale_part)
      : theta(std::move(field)), copies(n), want_scale(scale_part) {}

  ExtReal apply_at(double s, ExtReal) const override {
    const Norming constants = norming(copies, theta.at_point(s));
    return ExtReal(want_scale ? constants.a : constants.b);
  }
  bool uses_coord() const override { return true; }
};

PointwiseMap norming_map(const ThetaField& theta, int n) {
  Expr factor = Expr::mapped(std::make_shared<NormingCoord>(theta, n, true), Expr::coord());
  Expr offset = Expr::mapped(std::make_shared<NormingCoord>(theta, n, false), Expr::coord());
  return compose(PointwiseMap::shift(std::move(offset)),
                 PointwiseMap::scale(std::move(factor)));
}

GridField scale_by_copies(const GridField& field, int n) {
  GridField out = field;
  for (ExtReal& value : out.values) value = scale(value, static_cast<double>(n));
  return out;
}

MaxStabilityReport stability_report(const MaxStableSampler& sampler,
                                    const ThetaField* theta, int n,
                                    const std::vector<CompactProbe>& probes,
                                    std::size_t n_samples, std::uint64_t seed,
                                    int n_threads) {
  if (n < 1) throw std::invalid_argument("need at least one copy");
  if (n_samples == 0) throw std::invalid_argument("need at least one sample");
  if (theta != nullptr && !theta->is_continuous()) {
    throw std::invalid_argument("theta field not continuous");
  }
  for (const CompactProbe& probe : probes) require_probe_boxes(sampler.domain(), probe);
  std::optional<PointwiseMap> affine;
  if (theta != nullptr) affine = norming_map(*theta, n);

  struct Counts {
    std::vector<std::size_t> maxfold, scaled, single;
    std::size_t atoms = 0;
    explicit Counts(std::size_t n_probes)
        : maxfold(n_probes, 0), scaled(n_probes, 0), single(n_probes, 0) {}
  };
  std::vector<Counts> states(clamp_slots(n_samples, n_threads), Counts(probes.size()));
  run_partitioned(
      n_samples, n_threads, states, [&](Counts& counts, std::size_t begin, std::size_t end) {
        SimulateStats stats;
        for (std::size_t i = begin; i < end; ++i) {
          // Copy k of draw i uses stream i*n + k; the scaled branch reuses
          // the first copy, so n = 1 compares a field against itself.
          GridField first = simulate_simple(
              sampler, stream_seed(seed, static_cast<std::uint64_t>(i) * n), &stats);
          counts.atoms += stats.atoms;
          if (theta != nullptr) first = gev_destandardize(*theta, first);
          GridField maxfold = first;
          for (int k = 1; k < n; ++k) {
            GridField copy = simulate_simple(
                sampler, stream_seed(seed, static_cast<std::uint64_t>(i) * n + k), &stats);
            counts.atoms += stats.atoms;
            if (theta != nullptr) copy = gev_destandardize(*theta, copy);
            maxfold = pointwise_max(maxfold, copy);
          }
          const GridField scaled =
              theta != nullptr ? apply(*affine, first) : scale_by_copies(first, n);
          for (std::size_t j = 0; j < probes.size(); ++j) {
            if (hypo_hits(maxfold, probes[j])) ++counts.maxfold[j];
            if (hypo_hits(scaled, probes[j])) ++counts.scaled[j];
            if (hypo_hits(first, probes[j])) ++counts.single[j];
          }
        }
      });

  MaxStabilityReport report;
  report.n_copies = n;
  report.n_samples = n_samples;
  report.probes.resize(probes.size());
  std::size_t atoms = 0;
  for (const auto& counts : states) atoms += counts.atoms;
  report.atoms_mean = static_cast<double>(atoms) /
                      (static_cast<double>(n_samples) * static_cast<double>(n));
  for (std::size_t j = 0; j < probes.size(); ++j) {
    std::size_t c_max = 0, c_scaled = 0, c_single = 0;
    for (const auto& counts : states) {
      c_max += counts.maxfold[j];
      c_scaled += counts.scaled[j];
      c_single += counts.single[j];
    }
    ProbeStability& row = report.probes[j];
    row.p_maxfold = static_cast<double>(c_max) / static_cast<double>(n_samples);
    row.p_scaled = static_cast<double>(c_scaled) / static_cast<double>(n_samples);
    row.p_single = static_cast<double>(c_single) / static_cast<double>(n_samples);
    row.z_score = pooled_two_proportion_z(c_max, c_scaled, n_samples);
    row.z_product = product_identity_z(c_single, c_scaled, n, n_samples);
  }
  return report;
}

}  // namespace

MaxStabilityReport check_simple_max_stability(const MaxStableSampler& sampler, int n,
                                              const std::vector<CompactProbe>& probes,
                                              std::size_t n_samples, std::uint64_t seed,
                                              int n_threads) {
  return stability_report(sampler, nullptr, n, probes, n_samples, seed, n_threads);
}

MaxStabilityReport destandardized_max_stability(const MaxStableSampler& sampler,
                                                const ThetaField& theta, int n,
                                                const std::vector<CompactProbe>& probes,
                                                std::size_t n_samples, std::uint64_t seed,
                                                int n_threads) {
  return stability_report(sampler, &theta, n, probes, n_samples, seed, n_threads);
}

nlohmann::json model_to_json(const SpectralModel& model) {
  nlohmann::json j;
  j["domain"] = domain_to_json(model.domain());
  switch (model.family()) {
    case SpectralModel::Family::constant_one:
      j["family"] = "constant_one";
      return j;
    case SpectralModel::Family::storm:
      j["family"] = "storm";
      j["radius"] = model.storm_radius();
      j["height"] = model.storm_height();
      return j;
    case SpectralModel::Family::staircase: {
      j["family"] = "staircase";
      nlohmann::json steps = nlohmann::json::array();
      for (const StairStep& step : model.steps()) {
        steps.push_back({{"width", step.width},
                         {"value", step.value},
                         {"closed_left", step.closed_left}});
      }
      j["steps"] = std::move(steps);
      return j;
    }
  }
  throw std::logic_error("unreachable spectral family");
}

SpectralModel model_from_json(const nlohmann::json& j) {
  const Domain domain = domain_from_json(j.at("domain"));
  const std::string family = j.at("family").get<std::string>();
  if (family == "constant_one") return SpectralModel::constant_one(domain);
  if (family == "storm") {
    return SpectralModel::storm(domain, j.at("radius").get<double>(),
                                j.at("height").get<double>());
  }
  if (family == "staircase") {
    std::vector<StairStep> steps;
    for (const nlohmann::json& entry : j.at("steps")) {
      StairStep step;
      step.width = entry.at("width").get<double>();
      step.value = entry.at("value").get<double>();
      step.closed_left = entry.at("closed_left").get<bool>();
      steps.push_back(step);
    }
    return SpectralModel::staircase(domain, std::move(steps));
  }
  throw std::invalid_argument("unknown spectral family");
}

}  // namespace uscx
