#include "uscx/gev.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "uscx/io.hpp"

namespace uscx {

namespace {

// expm1(g*a)/g, with the g -> 0 limit a; series below |g| = 1e-8 where the
// direct quotient loses digits.
double expm1_over(double g, double a) {
  if (g == 0.0) return a;
  if (std::abs(g) < 1e-8) {
    double ga = g * a;
    return a * (1.0 + ga * 0.5 + ga * ga / 6.0);
  }
  return std::expm1(g * a) / g;
}

}  // namespace

GevParams::GevParams(double gamma_, double mu_, double sigma_)
    : gamma(gamma_), mu(mu_), sigma(sigma_) {
  if (!std::isfinite(gamma) || !std::isfinite(mu) || !std::isfinite(sigma)) {
    throw std::invalid_argument("GEV parameters must be finite");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("scale must be positive");
  }
}

double gev_cdf(ExtReal x, const GevParams& theta) {
  if (x.is_pos_inf()) return 1.0;
  if (x.is_neg_inf()) return 0.0;
  double w = (x.raw() - theta.mu) / theta.sigma;
  if (theta.gamma == 0.0) {
    return std::exp(-std::exp(-w));
  }
  if (std::abs(theta.gamma) < 1e-8) {
    double gw = theta.gamma * w;
    double log_arg = w * (1.0 - gw * 0.5 + gw * gw / 3.0);
    return std::exp(-std::exp(-log_arg));
  }
  double u = 1.0 + theta.gamma * w;
  if (u <= 0.0) return theta.gamma > 0.0 ? 0.0 : 1.0;
  double log_arg = std::log1p(theta.gamma * w) / theta.gamma;
  return std::exp(-std::exp(-log_arg));
}

ExtReal gev_quantile(double p, const GevParams& theta) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("quantile probability outside [0,1]");
  }
  if (p == 0.0) {
    return theta.gamma > 0.0 ? ExtReal(theta.mu - theta.sigma / theta.gamma)
                             : ExtReal::neg_inf();
  }
  if (p == 1.0) {
    return theta.gamma < 0.0 ? ExtReal(theta.mu - theta.sigma / theta.gamma)
                             : ExtReal::pos_inf();
  }
  double a = -std::log(-std::log(p));
  return ExtReal(theta.mu + theta.sigma * expm1_over(theta.gamma, a));
}

Norming norming(std::int64_t n, const GevParams& theta) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  double nd = static_cast<double>(n);
  Norming out;
  out.a = std::pow(nd, theta.gamma);
  // Extended precision keeps the semigroup residuals
  // b_{nm} - (a_m b_n + b_m) well below 1e-12.
  long double g = theta.gamma;
  long double log_n = std::log(static_cast<long double>(nd));
  if (g == 0.0L) {
    out.b = static_cast<double>(theta.sigma * log_n);
    return out;
  }
  long double c = static_cast<long double>(theta.sigma) - g * theta.mu;
  long double scaled;
  if (std::abs(theta.gamma) < 1e-8) {
    long double gl = g * log_n;
    scaled = log_n * (1.0L + gl * 0.5L + gl * gl / 6.0L);
  } else {
    scaled = std::expm1(g * log_n) / g;
  }
  out.b = static_cast<double>(c * scaled);
  return out;
}

double check_max_stability_identity(const GevParams& theta, std::int64_t n,
                                    const std::vector<double>& x_grid,
                                    const std::vector<double>& p_grid) {
  Norming nm = norming(n, theta);
  double worst = 0.0;
  for (double x : x_grid) {
    double lhs =
        std::pow(gev_cdf(ExtReal(nm.a * x + nm.b), theta), static_cast<double>(n));
    double rhs = gev_cdf(ExtReal(x), theta);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  for (double p : p_grid) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("p_grid entry outside (0,1)");
    }
    ExtReal lhs = gev_quantile(std::pow(p, 1.0 / static_cast<double>(n)), theta);
    ExtReal base = gev_quantile(p, theta);
    double rhs = nm.a * base.raw() + nm.b;
    worst = std::max(worst, std::abs(lhs.raw() - rhs));
  }
  return worst;
}

GevParams params_from_quantiles(double q_at_e_inv, double q_at_p1,
                                double q_at_p2, double p1, double p2) {
  if (!std::isfinite(q_at_e_inv) || !std::isfinite(q_at_p1) ||
      !std::isfinite(q_at_p2)) {
    throw std::invalid_argument("quantile values must be finite");
  }
  if (!(p1 > 0.0 && p1 < 1.0) || !(p2 > 0.0 && p2 < 1.0) || p1 == p2) {
    throw std::invalid_argument("probe probabilities must be distinct points of (0,1)");
  }
  double e_inv = std::exp(-1.0);
  if (p1 == e_inv || p2 == e_inv) {
    throw std::invalid_argument("probe probability equals 1/e");
  }
  if (q_at_p1 == q_at_p2) {
    throw std::invalid_argument("degenerate quantile pair");
  }

  double mu = q_at_e_inv;
  double d1 = q_at_p1 - mu;
  double d2 = q_at_p2 - mu;
  double a = std::log(-1.0 / std::log(p1));
  double b = std::log(-1.0 / std::log(p2));
  // Q(p) - mu = sigma * expm1(gamma * log x)/gamma has the sign of log x.
  if (d1 == 0.0 || d2 == 0.0 || (d1 < 0.0) != (a < 0.0) ||
      (d2 < 0.0) != (b < 0.0)) {
    throw std::invalid_argument("not a GEV quantile triple");
  }

  double ratio = d1 / d2;
  auto g = [&](double gamma) {
    return expm1_over(gamma, a) / expm1_over(gamma, b);
  };
  double lo = -10.0;
  double hi = 10.0;
  double g_lo = g(lo);
  double g_hi = g(hi);
  double g_mid = g(0.0);
  bool increasing = g_lo < g_hi;
  bool mid_consistent =
      increasing ? (g_lo < g_mid && g_mid < g_hi) : (g_lo > g_mid && g_mid > g_hi);
  if (!mid_consistent) {
    throw std::runtime_error("ratio not monotone on bracket");
  }
  if (ratio < std::min(g_lo, g_hi) || ratio > std::max(g_lo, g_hi)) {
    throw std::invalid_argument("not a GEV quantile triple");
  }
  for (int it = 0; it < 200 && lo < hi; ++it) {
    double mid = 0.5 * (lo + hi);
    bool below = increasing ? (g(mid) < ratio) : (g(mid) > ratio);
    if (below) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double gamma = 0.5 * (lo + hi);
  double sigma = d1 / expm1_over(gamma, a);
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    throw std::invalid_argument("not a GEV quantile triple");
  }
  return GevParams(gamma, mu, sigma);
}

QuantileProbes default_quantile_probes() {
  return {std::exp(-1.0), 0.25, 0.75};
}

ThetaField::ThetaField(Kind kind, const Domain& domain)
    : kind_(kind), domain_(domain) {}

ThetaField ThetaField::constant(const Domain& domain, const GevParams& theta) {
  ThetaField f(Kind::constant, domain);
  f.base_ = GevParams(theta.gamma, theta.mu, theta.sigma);
  return f;
}

ThetaField ThetaField::affine(const Domain& domain, const GevParams& base,
                              std::array<double, 2> slope_gamma,
                              std::array<double, 2> slope_mu,
                              std::array<double, 2> slope_sigma) {
  ThetaField f(Kind::affine, domain);
  // The base is the value at s = 0, which may sit outside the domain, so
  // only finiteness is required here; positivity of sigma is checked on the
  // domain corners below.
  for (double v : {base.gamma, base.mu, base.sigma, slope_gamma[0],
                   slope_gamma[1], slope_mu[0], slope_mu[1], slope_sigma[0],
                   slope_sigma[1]}) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("GEV parameters must be finite");
    }
  }
  f.base_.gamma = base.gamma;
  f.base_.mu = base.mu;
  f.base_.sigma = base.sigma;
  f.slope_gamma_ = slope_gamma;
  f.slope_mu_ = slope_mu;
  f.slope_sigma_ = slope_sigma;
  // sigma is affine in s, so positivity on the box reduces to the corners.
  for (int c0 = 0; c0 < 2; ++c0) {
    for (int c1 = 0; c1 < (domain.dim() == 2 ? 2 : 1); ++c1) {
      double s1 = c0 == 0 ? domain.lo(0) : domain.hi(0);
      double s2 = domain.dim() == 2 ? (c1 == 0 ? domain.lo(1) : domain.hi(1)) : 0.0;
      double sigma = base.sigma + slope_sigma[0] * s1 + slope_sigma[1] * s2;
      if (!(sigma > 0.0)) {
        throw std::invalid_argument("scale not positive on domain");
      }
    }
  }
  return f;
}

ThetaField ThetaField::table(const Domain& domain, std::vector<GevParams> values,
                             bool continuous, double lipschitz_budget) {
  if (values.size() != static_cast<std::size_t>(domain.num_nodes())) {
    throw std::invalid_argument("table size mismatch");
  }
  for (const GevParams& t : values) {
    if (!(t.sigma > 0.0)) throw std::invalid_argument("scale must be positive");
  }
  ThetaField f(Kind::table, domain);
  f.values_ = std::move(values);
  f.continuous_ = continuous;
  f.budget_ = lipschitz_budget;
  if (continuous) {
    if (!(lipschitz_budget > 0.0)) {
      throw std::invalid_argument("continuity budget must be positive");
    }
    auto gap = [](const GevParams& u, const GevParams& v) {
      return std::max({std::abs(u.gamma - v.gamma), std::abs(u.mu - v.mu),
                       std::abs(u.sigma - v.sigma)});
    };
    int res0 = f.domain_.res(0);
    int res1 = f.domain_.dim() == 2 ? f.domain_.res(1) : 1;
    for (int i0 = 0; i0 < res0; ++i0) {
      for (int i1 = 0; i1 < res1; ++i1) {
        const GevParams& here = f.values_[f.domain_.flat(i0, i1)];
        if (i0 + 1 < res0 &&
            gap(here, f.values_[f.domain_.flat(i0 + 1, i1)]) >= lipschitz_budget) {
          throw std::invalid_argument("continuity budget exceeded");
        }
        if (i1 + 1 < res1 &&
            gap(here, f.values_[f.domain_.flat(i0, i1 + 1)]) >= lipschitz_budget) {
          throw std::invalid_argument("continuity budget exceeded");
        }
      }
    }
  }
  return f;
}

GevParams ThetaField::at_node(int i0, int i1) const {
  if (kind_ == Kind::constant) return base_;
  if (kind_ == Kind::table) return values_[domain_.flat(i0, i1)];
  double s1 = domain_.coord(0, i0);
  double s2 = domain_.dim() == 2 ? domain_.coord(1, i1) : 0.0;
  return at_point(s1, s2);
}

GevParams ThetaField::at_point(double s1, double s2) const {
  switch (kind_) {
    case Kind::constant:
      return base_;
    case Kind::affine:
      return GevParams(base_.gamma + slope_gamma_[0] * s1 + slope_gamma_[1] * s2,
                       base_.mu + slope_mu_[0] * s1 + slope_mu_[1] * s2,
                       base_.sigma + slope_sigma_[0] * s1 + slope_sigma_[1] * s2);
    case Kind::table:
      break;
  }
  // Tables carry values only at grid nodes.
  for (int i0 = 0; i0 < domain_.res(0); ++i0) {
    if (domain_.coord(0, i0) != s1) continue;
    if (domain_.dim() == 1) return values_[domain_.flat(i0, 0)];
    for (int i1 = 0; i1 < domain_.res(1); ++i1) {
      if (domain_.coord(1, i1) == s2) return values_[domain_.flat(i0, i1)];
    }
  }
  throw std::logic_error("table field evaluated off grid");
}

namespace {

nlohmann::json params_to_json(const GevParams& t) {
  return {{"gamma", t.gamma}, {"mu", t.mu}, {"sigma", t.sigma}};
}

GevParams params_from_json(const nlohmann::json& j) {
  return GevParams(j.at("gamma").get<double>(), j.at("mu").get<double>(),
                   j.at("sigma").get<double>());
}

}  // namespace

nlohmann::json theta_field_to_json(const ThetaField& field) {
  nlohmann::json j;
  j["domain"] = domain_to_json(field.domain());
  switch (field.kind()) {
    case ThetaField::Kind::constant:
      j["kind"] = "constant";
      j["theta"] = params_to_json(field.at_node(0, 0));
      break;
    case ThetaField::Kind::affine: {
      j["kind"] = "affine";
      j["base"] = params_to_json(field.base_);
      nlohmann::json slopes;
      for (int axis = 0; axis < field.domain().dim(); ++axis) {
        slopes["gamma"].push_back(field.slope_gamma_[axis]);
        slopes["mu"].push_back(field.slope_mu_[axis]);
        slopes["sigma"].push_back(field.slope_sigma_[axis]);
      }
      j["slopes"] = slopes;
      break;
    }
    case ThetaField::Kind::table: {
      j["kind"] = "table";
      nlohmann::json values = nlohmann::json::array();
      const Domain& d = field.domain();
      int res1 = d.dim() == 2 ? d.res(1) : 1;
      for (int i0 = 0; i0 < d.res(0); ++i0) {
        for (int i1 = 0; i1 < res1; ++i1) {
          values.push_back(params_to_json(field.at_node(i0, i1)));
        }
      }
      j["values"] = std::move(values);
      j["continuous"] = field.is_continuous();
      j["lipschitz_budget"] = field.lipschitz_budget();
      break;
    }
  }
  return j;
}

ThetaField theta_field_from_json(const nlohmann::json& j) {
  Domain domain = domain_from_json(j.at("domain"));
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    return ThetaField::constant(domain, params_from_json(j.at("theta")));
  }
  if (kind == "affine") {
    const nlohmann::json& slopes = j.at("slopes");
    auto load = [&](const char* name) {
      std::array<double, 2> out = {0.0, 0.0};
      const nlohmann::json& arr = slopes.at(name);
      if (!arr.is_array() || arr.size() > 2 ||
          arr.size() != static_cast<std::size_t>(domain.dim())) {
        throw std::invalid_argument("slope arity does not match domain dimension");
      }
      for (std::size_t i = 0; i < arr.size(); ++i) out[i] = arr[i].get<double>();
      return out;
    };
    return ThetaField::affine(domain, params_from_json(j.at("base")),
                              load("gamma"), load("mu"), load("sigma"));
  }
  if (kind == "table") {
    std::vector<GevParams> values;
    for (const nlohmann::json& v : j.at("values")) {
      values.push_back(params_from_json(v));
    }
    return ThetaField::table(domain, std::move(values),
                             j.at("continuous").get<bool>(),
                             j.at("lipschitz_budget").get<double>());
  }
  throw std::invalid_argument("unknown theta field kind");
}

}  // namespace uscx
