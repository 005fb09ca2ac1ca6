#include "uscx/cdf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "uscx/io.hpp"
#include "uscx/rng.hpp"

namespace uscx {

namespace {

constexpr double kBisectTol = 1e-12;

double normal_cdf_std(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Smallest x with F(x) > p, which equals sup{x : F(x) <= p} for a cdf.
// Bracket expansion outward from [-1, 1]; robust to flat spots and jumps.
ExtReal bisect_quantile(const RcCdf& c, double p) {
  double lo = -1.0;
  while (c.cdf(ExtReal(lo)) > p) {
    lo *= 2.0;
    if (lo < -1e300) return ExtReal::neg_inf();
  }
  double hi = 1.0;
  while (c.cdf(ExtReal(hi)) <= p) {
    hi *= 2.0;
    if (hi > 1e300) return ExtReal::pos_inf();
  }
  for (int it = 0; it < 2000 && hi - lo > kBisectTol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (c.cdf(ExtReal(mid)) <= p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return ExtReal(0.5 * (lo + hi));
}

// a >= b - tol on the extended line.
bool ge_with_tol(ExtReal a, ExtReal b, double tol) {
  if (a.is_pos_inf() || b.is_neg_inf()) return true;
  if (a.is_neg_inf() || b.is_pos_inf()) return false;
  return a.raw() >= b.raw() - tol;
}

}  // namespace

RcCdf RcCdf::uniform01() { return RcCdf(Kind::uniform01); }

RcCdf RcCdf::uniform0(double a) {
  if (!std::isfinite(a) || !(a > 0.0)) {
    throw std::invalid_argument("width must be positive");
  }
  RcCdf c(Kind::uniform0a);
  c.a_ = a;
  return c;
}

RcCdf RcCdf::normal(double mu, double sd) {
  if (!std::isfinite(mu) || !std::isfinite(sd) || !(sd > 0.0)) {
    throw std::invalid_argument("scale must be positive");
  }
  RcCdf c(Kind::normal);
  c.a_ = mu;
  c.b_ = sd;
  return c;
}

RcCdf RcCdf::unit_frechet() { return RcCdf(Kind::unit_frechet); }

RcCdf RcCdf::gev(const GevParams& theta) {
  RcCdf c(Kind::gev);
  c.theta_ = GevParams(theta.gamma, theta.mu, theta.sigma);
  return c;
}

RcCdf RcCdf::point_mass(double c0) {
  if (!std::isfinite(c0)) throw std::invalid_argument("atom must be finite");
  RcCdf c(Kind::point_mass);
  c.a_ = c0;
  return c;
}

RcCdf RcCdf::two_interval_uniform() { return RcCdf(Kind::two_interval_uniform); }

RcCdf RcCdf::power_uniform(double k) {
  if (!std::isfinite(k) || !(k > 0.0)) {
    throw std::invalid_argument("exponent must be positive");
  }
  RcCdf c(Kind::power_uniform);
  c.a_ = k;
  return c;
}

RcCdf RcCdf::mixture(double w, RcCdf first, RcCdf second) {
  if (!std::isfinite(w) || w < 0.0 || w > 1.0) {
    throw std::invalid_argument("mixture weight outside [0,1]");
  }
  RcCdf c(Kind::mixture);
  c.weight_ = w;
  c.first_ = std::make_shared<const RcCdf>(std::move(first));
  c.second_ = std::make_shared<const RcCdf>(std::move(second));
  return c;
}

RcCdf RcCdf::empirical(std::vector<ExtReal> samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample");
  std::sort(samples.begin(), samples.end());
  RcCdf c(Kind::empirical);
  c.sorted_ = std::move(samples);
  return c;
}

double RcCdf::cdf(ExtReal x) const {
  if (kind_ == Kind::empirical) {
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) /
           static_cast<double>(sorted_.size());
  }
  if (kind_ == Kind::mixture) {
    return weight_ * first_->cdf(x) + (1.0 - weight_) * second_->cdf(x);
  }
  if (x.is_pos_inf()) return 1.0;
  if (x.is_neg_inf()) return 0.0;
  double v = x.raw();
  switch (kind_) {
    case Kind::uniform01:
      return v <= 0.0 ? 0.0 : (v >= 1.0 ? 1.0 : v);
    case Kind::uniform0a:
      return v <= 0.0 ? 0.0 : (v >= a_ ? 1.0 : v / a_);
    case Kind::normal:
      return normal_cdf_std((v - a_) / b_);
    case Kind::unit_frechet:
      return v <= 0.0 ? 0.0 : std::exp(-1.0 / v);
    case Kind::gev:
      return gev_cdf(x, theta_);
    case Kind::point_mass:
      return v >= a_ ? 1.0 : 0.0;
    case Kind::two_interval_uniform:
      if (v < 0.0) return 0.0;
      if (v <= 1.0) return v / 2.0;
      if (v < 2.0) return 0.5;
      if (v <= 3.0) return (v - 1.0) / 2.0;
      return 1.0;
    case Kind::power_uniform:
      return v <= 0.0 ? 0.0 : (v >= 1.0 ? 1.0 : std::pow(v, a_));
    case Kind::mixture:
    case Kind::empirical:
      break;
  }
  throw std::logic_error("unreachable cdf kind");
}

double RcCdf::cdf_left(ExtReal x) const {
  if (kind_ == Kind::empirical) {
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) /
           static_cast<double>(sorted_.size());
  }
  if (kind_ == Kind::mixture) {
    return weight_ * first_->cdf_left(x) + (1.0 - weight_) * second_->cdf_left(x);
  }
  if (x.is_neg_inf()) return 0.0;
  if (kind_ == Kind::point_mass) {
    if (x.is_pos_inf()) return 1.0;
    return x.raw() > a_ ? 1.0 : 0.0;
  }
  // Remaining analytic families are continuous: the left limit is F itself.
  return cdf(x);
}

ExtReal RcCdf::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("quantile probability outside [0,1]");
  }
  // No supported family reaches F > 1 before +inf, so sup{x : F(x) <= 1} is
  // all of R.
  if (p == 1.0) return ExtReal::pos_inf();
  switch (kind_) {
    case Kind::uniform01:
      return ExtReal(p);
    case Kind::uniform0a:
      return ExtReal(a_ * p);
    case Kind::normal:
      if (p == 0.0) return ExtReal::neg_inf();
      return bisect_quantile(*this, p);
    case Kind::unit_frechet:
      if (p == 0.0) return ExtReal(0.0);
      return ExtReal(-1.0 / std::log(p));
    case Kind::gev:
      return gev_quantile(p, theta_);
    case Kind::point_mass:
      return ExtReal(a_);
    case Kind::two_interval_uniform:
      if (p < 0.5) return ExtReal(2.0 * p);
      if (p == 0.5) return ExtReal(2.0);
      return ExtReal(2.0 * p + 1.0);
    case Kind::power_uniform:
      return ExtReal(std::pow(p, 1.0 / a_));
    case Kind::mixture:
      if (p == 0.0) {
        if (weight_ == 1.0) return first_->quantile(0.0);
        if (weight_ == 0.0) return second_->quantile(0.0);
        return min(first_->quantile(0.0), second_->quantile(0.0));
      }
      return bisect_quantile(*this, p);
    case Kind::empirical: {
      std::size_t n = sorted_.size();
      std::size_t i = 0;
      while (i < n) {
        // Advance over ties so comparisons use the full step height.
        std::size_t j = i + 1;
        while (j < n && sorted_[j] == sorted_[i]) ++j;
        double height = static_cast<double>(j) / static_cast<double>(n);
        if (height > p) return sorted_[i];
        i = j;
      }
      return ExtReal::pos_inf();
    }
  }
  throw std::logic_error("unreachable cdf kind");
}

bool RcCdf::atomless() const {
  switch (kind_) {
    case Kind::point_mass:
    case Kind::empirical:
      return false;
    case Kind::mixture:
      if (weight_ == 1.0) return first_->atomless();
      if (weight_ == 0.0) return second_->atomless();
      return first_->atomless() && second_->atomless();
    default:
      return true;
  }
}

bool RcCdf::quantile_continuous() const {
  switch (kind_) {
    case Kind::normal:
    case Kind::unit_frechet:
      return true;
    case Kind::gev:
      // gamma < 0 has a finite upper endpoint, so Q jumps to +inf at p = 1.
      return theta_.gamma >= 0.0;
    case Kind::mixture:
      // A component with full upper tail keeps the mixture cdf strictly
      // increasing above the other component's support, so continuity of
      // both component quantiles transfers to the mixture.
      if (weight_ == 1.0) return first_->quantile_continuous();
      if (weight_ == 0.0) return second_->quantile_continuous();
      return first_->quantile_continuous() && second_->quantile_continuous();
    default:
      // Bounded upper support (uniform, power, point mass, two-interval,
      // empirical) jumps to +inf at p = 1; two-interval also gaps at 1/2.
      return false;
  }
}

std::vector<ExtReal> RcCdf::atoms() const {
  switch (kind_) {
    case Kind::point_mass:
      return {ExtReal(a_)};
    case Kind::empirical: {
      std::vector<ExtReal> out;
      for (const ExtReal& v : sorted_) {
        if (out.empty() || !(out.back() == v)) out.push_back(v);
      }
      return out;
    }
    case Kind::mixture: {
      std::vector<ExtReal> out;
      if (weight_ > 0.0) out = first_->atoms();
      if (weight_ < 1.0) {
        for (const ExtReal& v : second_->atoms()) out.push_back(v);
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    }
    default:
      return {};
  }
}

const std::vector<ExtReal>& RcCdf::samples() const {
  if (kind_ != Kind::empirical) throw std::logic_error("not an empirical cdf");
  return sorted_;
}

ExtReal eval_quantile(const RcQuantile& q, double p) { return q(p); }

bool galois_check(const RcCdf& cdf, ExtReal x, double p) {
  ExtReal q = cdf.quantile(p);
  bool lhs = x <= q;
  bool rhs = cdf.cdf_left(x) <= p;
  if (lhs == rhs) return true;
  // Forgive a boundary disagreement within the bisection tolerance.
  return x.is_finite() && q.is_finite() && std::abs(x.raw() - q.raw()) <= 1e-9;
}

double quantile_of_uniform_pushforward(const RcQuantile& q,
                                       std::size_t n_samples,
                                       std::uint64_t seed) {
  if (n_samples < 1000) {
    throw std::invalid_argument("need at least 1000 samples");
  }
  Rng rng(seed);
  std::vector<ExtReal> xs;
  xs.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    xs.push_back(q(rng.uniform01()));
  }
  std::sort(xs.begin(), xs.end());

  std::vector<ExtReal> cand;
  for (const ExtReal& v : xs) {
    if (cand.empty() || !(cand.back() == v)) cand.push_back(v);
  }
  for (const ExtReal& a : q.source.atoms()) cand.push_back(a);
  cand.push_back(ExtReal::pos_inf());
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  double n = static_cast<double>(n_samples);
  double dist = 0.0;
  for (const ExtReal& c : cand) {
    double fn_le =
        static_cast<double>(std::upper_bound(xs.begin(), xs.end(), c) - xs.begin()) / n;
    double fn_lt =
        static_cast<double>(std::lower_bound(xs.begin(), xs.end(), c) - xs.begin()) / n;
    dist = std::max(dist, std::abs(fn_le - q.source.cdf(c)));
    dist = std::max(dist, std::abs(fn_lt - q.source.cdf_left(c)));
  }
  return dist;
}

bool limsup_quantile_bound(const std::vector<RcCdf>& tail,
                           const RcCdf& tail_max) {
  if (tail.empty()) throw std::invalid_argument("empty tail family");
  for (int i = 0; i < 100; ++i) {
    double p = static_cast<double>(i) / 100.0;
    ExtReal q_max = tail_max.quantile(p);
    ExtReal best = ExtReal::neg_inf();
    for (const RcCdf& c : tail) best = max(best, c.quantile(p));
    if (!ge_with_tol(q_max, best, 1e-9)) return false;
  }
  return true;
}

RcCdf empirical_from_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<ExtReal> samples;
  std::string line;
  bool first_data = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (first_data && line == "value") {
      first_data = false;
      continue;
    }
    first_data = false;
    samples.push_back(extreal_from_token(line));
  }
  if (samples.empty()) throw std::invalid_argument("empty sample file");
  return RcCdf::empirical(std::move(samples));
}

double cdf_left_limit_numeric(const RcCdf& cdf, double x) {
  double eps = 1e-3;
  double prev = cdf.cdf(ExtReal(x - eps));
  for (int it = 0; it < 60; ++it) {
    eps *= 0.5;
    double cur = cdf.cdf(ExtReal(x - eps));
    if (it > 3 && cur == prev) return cur;
    prev = cur;
  }
  return prev;
}

nlohmann::json cdf_to_json(const RcCdf& cdf) {
  nlohmann::json j;
  switch (cdf.kind_) {
    case RcCdf::Kind::uniform01:
      j["family"] = "uniform01";
      break;
    case RcCdf::Kind::uniform0a:
      j["family"] = "uniform0";
      j["width"] = cdf.a_;
      break;
    case RcCdf::Kind::normal:
      j["family"] = "normal";
      j["mean"] = cdf.a_;
      j["sd"] = cdf.b_;
      break;
    case RcCdf::Kind::unit_frechet:
      j["family"] = "unit_frechet";
      break;
    case RcCdf::Kind::gev:
      j["family"] = "gev";
      j["theta"] = {{"gamma", cdf.theta_.gamma},
                    {"mu", cdf.theta_.mu},
                    {"sigma", cdf.theta_.sigma}};
      break;
    case RcCdf::Kind::point_mass:
      j["family"] = "point_mass";
      j["at"] = cdf.a_;
      break;
    case RcCdf::Kind::two_interval_uniform:
      j["family"] = "two_interval_uniform";
      break;
    case RcCdf::Kind::power_uniform:
      j["family"] = "power_uniform";
      j["exponent"] = cdf.a_;
      break;
    case RcCdf::Kind::mixture:
      j["family"] = "mixture";
      j["weight"] = cdf.weight_;
      j["first"] = cdf_to_json(*cdf.first_);
      j["second"] = cdf_to_json(*cdf.second_);
      break;
    case RcCdf::Kind::empirical: {
      j["family"] = "empirical";
      nlohmann::json samples = nlohmann::json::array();
      for (const ExtReal& x : cdf.sorted_) samples.push_back(to_token(x));
      j["samples"] = std::move(samples);
      break;
    }
  }
  return j;
}

RcCdf cdf_from_json(const nlohmann::json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "uniform01") return RcCdf::uniform01();
  if (family == "uniform0") return RcCdf::uniform0(j.at("width").get<double>());
  if (family == "normal") {
    return RcCdf::normal(j.at("mean").get<double>(), j.at("sd").get<double>());
  }
  if (family == "unit_frechet") return RcCdf::unit_frechet();
  if (family == "gev") {
    const nlohmann::json& t = j.at("theta");
    return RcCdf::gev(GevParams(t.at("gamma").get<double>(),
                                t.at("mu").get<double>(),
                                t.at("sigma").get<double>()));
  }
  if (family == "point_mass") return RcCdf::point_mass(j.at("at").get<double>());
  if (family == "two_interval_uniform") return RcCdf::two_interval_uniform();
  if (family == "power_uniform") {
    return RcCdf::power_uniform(j.at("exponent").get<double>());
  }
  if (family == "mixture") {
    return RcCdf::mixture(j.at("weight").get<double>(),
                          cdf_from_json(j.at("first")),
                          cdf_from_json(j.at("second")));
  }
  if (family == "empirical") {
    std::vector<ExtReal> samples;
    for (const nlohmann::json& s : j.at("samples")) {
      samples.push_back(extreal_from_token(s.get<std::string>()));
    }
    return RcCdf::empirical(std::move(samples));
  }
  throw std::runtime_error("unknown cdf family");
}

}  // namespace uscx
