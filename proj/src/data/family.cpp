#include "arcl/data/family.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "arcl/numcore/error.hpp"

namespace arcl::data {

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

// ---------------------------------------------------------------------------
// ParameterDomain

ParameterDomain ParameterDomain::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size() || lo.empty()) throw InvalidArgument("box bounds must be non-empty and equal length");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i])) throw InvalidArgument("box lower bound exceeds upper bound");
  }
  ParameterDomain d;
  d.type = Type::kBox;
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  return d;
}

ParameterDomain ParameterDomain::ball(std::vector<double> center, double radius) {
  if (center.empty() || !(radius >= 0.0)) throw InvalidArgument("ball needs a center and a non-negative radius");
  ParameterDomain d;
  d.type = Type::kBall;
  d.center = std::move(center);
  d.radius = radius;
  return d;
}

bool ParameterDomain::contains(const Parameter& theta) const {
  if (theta.size() != dim()) return false;
  if (type == Type::kBox) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (!(theta[i] >= lo[i] && theta[i] <= hi[i])) return false;
    }
    return true;
  }
  return squared_distance(theta, center) <= radius * radius;
}

double ParameterDomain::volume() const {
  if (type == Type::kBox) {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
  }
  const double k = static_cast<double>(center.size());
  return std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0 + 1.0) * std::pow(radius, k);
}

// ---------------------------------------------------------------------------
// Construction

TransformationFamily TransformationFamily::axis_scale(std::size_t data_dim, std::vector<std::size_t> coords,
                                                      ParameterDomain domain, SamplingDistribution pi, bool tied) {
  TransformationFamily f;
  f.kind_ = Kind::kAxisScale;
  f.data_dim_ = data_dim;
  f.coords_ = std::move(coords);
  f.tied_ = tied;
  f.domain_ = std::move(domain);
  f.pi_ = std::move(pi);
  f.validate();
  return f;
}

TransformationFamily TransformationFamily::shift(std::size_t data_dim, std::vector<std::size_t> coords,
                                                 ParameterDomain domain, SamplingDistribution pi, bool tied) {
  TransformationFamily f;
  f.kind_ = Kind::kShift;
  f.data_dim_ = data_dim;
  f.coords_ = std::move(coords);
  f.tied_ = tied;
  f.domain_ = std::move(domain);
  f.pi_ = std::move(pi);
  f.validate();
  return f;
}

TransformationFamily TransformationFamily::rotation(std::size_t data_dim, std::size_t axis_a, std::size_t axis_b,
                                                    ParameterDomain domain, SamplingDistribution pi) {
  TransformationFamily f;
  f.kind_ = Kind::kRotation;
  f.data_dim_ = data_dim;
  f.coords_ = {axis_a, axis_b};
  f.domain_ = std::move(domain);
  f.pi_ = std::move(pi);
  f.validate();
  return f;
}

TransformationFamily TransformationFamily::mask(std::size_t data_dim, std::vector<std::size_t> coords,
                                                std::vector<Parameter> grid) {
  TransformationFamily f;
  f.kind_ = Kind::kMask;
  f.data_dim_ = data_dim;
  f.coords_ = std::move(coords);
  f.domain_ = ParameterDomain::box(std::vector<double>(f.coords_.size(), 0.0), std::vector<double>(f.coords_.size(), 1.0));
  f.grid_ = std::move(grid);
  f.validate();
  return f;
}

TransformationFamily TransformationFamily::composite(std::vector<TransformationFamily> parts) {
  if (parts.empty()) throw InvalidArgument("composite family needs at least one part");
  TransformationFamily f;
  f.kind_ = Kind::kComposite;
  f.data_dim_ = parts.front().data_dim();
  std::vector<double> lo, hi;
  for (const auto& p : parts) {
    if (p.data_dim() != f.data_dim_) throw InvalidArgument("composite parts disagree on data dimension");
    if (p.finite()) throw InvalidArgument("composite parts must be continuous; set a grid on the composite instead");
  }
  f.parts_ = std::move(parts);
  // Theta is the product of the parts' domains; containment is checked per part.
  f.validate();
  return f;
}

TransformationFamily TransformationFamily::with_grid(std::vector<Parameter> grid) const {
  TransformationFamily f = *this;
  f.grid_ = std::move(grid);
  f.validate();
  return f;
}

std::size_t TransformationFamily::parameter_dim() const {
  switch (kind_) {
    case Kind::kAxisScale:
    case Kind::kShift:
      return tied_ ? 1 : coords_.size();
    case Kind::kRotation:
      return 1;
    case Kind::kMask:
      return coords_.size();
    case Kind::kComposite: {
      std::size_t k = 0;
      for (const auto& p : parts_) k += p.parameter_dim();
      return k;
    }
  }
  return 0;
}

void TransformationFamily::validate() const {
  if (data_dim_ == 0) throw InvalidArgument("family data dimension must be positive");
  for (auto c : coords_) {
    if (c >= data_dim_) throw InvalidArgument("family coordinate " + std::to_string(c) + " outside data dimension");
  }
  if (kind_ != Kind::kComposite) {
    if (coords_.empty()) throw InvalidArgument("family must act on at least one coordinate");
    if (kind_ == Kind::kRotation && coords_[0] == coords_[1]) throw InvalidArgument("rotation needs two distinct axes");
    if (domain_.dim() != parameter_dim()) {
      throw InvalidArgument("parameter domain has dimension " + std::to_string(domain_.dim()) + ", family needs " +
                            std::to_string(parameter_dim()));
    }
    if (pi_.type == SamplingDistribution::Type::kTruncatedNormal) {
      if (domain_.type != ParameterDomain::Type::kBox) throw InvalidArgument("truncated normal pi requires a box domain");
      if (pi_.mean.size() != parameter_dim() || pi_.stddev.size() != parameter_dim()) {
        throw InvalidArgument("truncated normal mean/std must match the parameter dimension");
      }
      for (double s : pi_.stddev) {
        if (!(s > 0.0)) throw InvalidArgument("truncated normal std must be positive");
      }
    }
    if (kind_ == Kind::kMask && !grid_) throw InvalidArgument("coordinate-mask families require an explicit grid");
    if (!contains(identity_parameter())) throw InvalidArgument("parameter domain must contain the identity map");
  }
  if (grid_) {
    if (grid_->empty()) throw InvalidArgument("finite grid must not be empty");
    for (const auto& theta : *grid_) {
      if (!contains(theta)) throw InvalidArgument("grid member lies outside the parameter domain");
    }
  }
}

// ---------------------------------------------------------------------------
// Realization

bool TransformationFamily::contains(const Parameter& theta) const {
  if (theta.size() != parameter_dim()) return false;
  if (kind_ != Kind::kComposite) return domain_.contains(theta);
  std::size_t offset = 0;
  for (const auto& p : parts_) {
    const std::size_t k = p.parameter_dim();
    Parameter sub(theta.begin() + offset, theta.begin() + offset + k);
    if (!p.contains(sub)) return false;
    offset += k;
  }
  return true;
}

Parameter TransformationFamily::identity_parameter() const {
  switch (kind_) {
    case Kind::kAxisScale:
    case Kind::kMask:
      return Parameter(parameter_dim(), 1.0);
    case Kind::kShift:
    case Kind::kRotation:
      return Parameter(parameter_dim(), 0.0);
    case Kind::kComposite: {
      Parameter out;
      for (const auto& p : parts_) {
        auto id = p.identity_parameter();
        out.insert(out.end(), id.begin(), id.end());
      }
      return out;
    }
  }
  return {};
}

Transformation TransformationFamily::realize(const Parameter& theta) const {
  if (theta.size() != parameter_dim()) {
    throw ShapeError("family expects " + std::to_string(parameter_dim()) + " parameters, got " +
                     std::to_string(theta.size()));
  }
  auto per_coord = [&](std::size_t i) { return tied_ ? theta[0] : theta[i]; };
  switch (kind_) {
    case Kind::kAxisScale: {
      std::vector<double> s(data_dim_, 1.0);
      for (std::size_t i = 0; i < coords_.size(); ++i) s[coords_[i]] = per_coord(i);
      return Transformation::axis_scale(std::move(s));
    }
    case Kind::kShift: {
      std::vector<double> s(data_dim_, 0.0);
      for (std::size_t i = 0; i < coords_.size(); ++i) s[coords_[i]] = per_coord(i);
      return Transformation::shift(std::move(s));
    }
    case Kind::kMask: {
      std::vector<double> s(data_dim_, 1.0);
      for (std::size_t i = 0; i < coords_.size(); ++i) s[coords_[i]] = theta[i];
      return Transformation::mask(std::move(s));
    }
    case Kind::kRotation:
      return Transformation::rotation(theta[0], coords_[0], coords_[1]);
    case Kind::kComposite: {
      std::vector<Transformation> parts;
      std::size_t offset = 0;
      for (const auto& p : parts_) {
        const std::size_t k = p.parameter_dim();
        parts.push_back(p.realize(Parameter(theta.begin() + offset, theta.begin() + offset + k)));
        offset += k;
      }
      return Transformation::compose(std::move(parts));
    }
  }
  throw InvalidArgument("unknown family kind");
}

std::vector<Transformation> TransformationFamily::grid_members() const {
  if (!grid_) throw InvalidArgument("family has no finite grid");
  std::vector<Transformation> out;
  out.reserve(grid_->size());
  for (const auto& theta : *grid_) out.push_back(realize(theta));
  return out;
}

Parameter TransformationFamily::sample_parameter(Rng& rng) const {
  if (grid_) return (*grid_)[rng.below(grid_->size())];
  if (kind_ == Kind::kComposite) {
    Parameter out;
    for (const auto& p : parts_) {
      auto sub = p.sample_parameter(rng);
      out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
  }
  const std::size_t k = parameter_dim();
  Parameter theta(k);
  if (pi_.type == SamplingDistribution::Type::kTruncatedNormal) {
    for (std::size_t i = 0; i < k; ++i) theta[i] = rng.truncated_normal(pi_.mean[i], pi_.stddev[i], domain_.lo[i], domain_.hi[i]);
    return theta;
  }
  if (domain_.type == ParameterDomain::Type::kBox) {
    for (std::size_t i = 0; i < k; ++i) theta[i] = rng.uniform(domain_.lo[i], domain_.hi[i]);
    return theta;
  }
  for (;;) {
    for (std::size_t i = 0; i < k; ++i) theta[i] = domain_.center[i] + rng.uniform(-domain_.radius, domain_.radius);
    if (domain_.contains(theta)) return theta;
  }
}

double TransformationFamily::lipschitz_bound() const {
  if (grid_) {
    double l = 0.0;
    for (const auto& t : grid_members()) l = std::max(l, t.lipschitz());
    return l;
  }
  switch (kind_) {
    case Kind::kAxisScale: {
      // untouched coordinates keep scale 1
      double l = coords_.size() < data_dim_ ? 1.0 : 0.0;
      for (std::size_t i = 0; i < domain_.dim(); ++i) {
        if (domain_.type == ParameterDomain::Type::kBox) {
          l = std::max({l, std::abs(domain_.lo[i]), std::abs(domain_.hi[i])});
        } else {
          l = std::max(l, std::abs(domain_.center[i]) + domain_.radius);
        }
      }
      return l;
    }
    case Kind::kShift:
    case Kind::kRotation:
    case Kind::kMask:
      return 1.0;
    case Kind::kComposite: {
      double l = 1.0;
      for (const auto& p : parts_) l *= p.lipschitz_bound();
      return l;
    }
  }
  return 1.0;
}

double TransformationFamily::density_floor() const {
  if (grid_) return 1.0 / static_cast<double>(grid_->size());
  if (kind_ == Kind::kComposite) {
    double c = 1.0;
    for (const auto& p : parts_) c *= p.density_floor();
    return c;
  }
  if (pi_.type == SamplingDistribution::Type::kUniform) {
    const double v = domain_.volume();
    return v > 0.0 ? 1.0 / v : 0.0;
  }
  double c = 1.0;
  for (std::size_t i = 0; i < parameter_dim(); ++i) {
    const double mu = pi_.mean[i], s = pi_.stddev[i];
    const double zl = (domain_.lo[i] - mu) / s, zh = (domain_.hi[i] - mu) / s;
    const double mass = normal_cdf(zh) - normal_cdf(zl);
    c *= std::min(normal_pdf(zl), normal_pdf(zh)) / (s * mass);
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::vector<double> json_vec(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

void reject_unknown(const nlohmann::json& spec, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = spec.begin(); it != spec.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InvalidArgument(std::string("unknown key '") + it.key() + "' in " + where);
  }
}

ParameterDomain domain_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"type", "lo", "hi", "center", "radius"}, "family domain");
  const std::string type = j.value("type", "box");
  if (type == "box") return ParameterDomain::box(json_vec(j.at("lo")), json_vec(j.at("hi")));
  if (type == "ball") return ParameterDomain::ball(json_vec(j.at("center")), j.at("radius").get<double>());
  throw InvalidArgument("unknown domain type '" + type + "'");
}

SamplingDistribution pi_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"type", "mean", "std"}, "family pi");
  SamplingDistribution pi;
  const std::string type = j.value("type", "uniform");
  if (type == "uniform") return pi;
  if (type == "truncated-normal") {
    pi.type = SamplingDistribution::Type::kTruncatedNormal;
    pi.mean = json_vec(j.at("mean"));
    pi.stddev = json_vec(j.at("std"));
    return pi;
  }
  throw InvalidArgument("unknown pi type '" + type + "'");
}

}  // namespace

TransformationFamily TransformationFamily::from_json(const nlohmann::json& spec) {
  reject_unknown(spec, {"kind", "dim", "coords", "tied", "domain", "pi", "grid", "parts"}, "family spec");
  const std::string kind = spec.at("kind").get<std::string>();
  std::optional<std::vector<Parameter>> grid;
  if (spec.contains("grid")) grid = spec.at("grid").get<std::vector<Parameter>>();

  TransformationFamily f;
  if (kind == "composite") {
    std::vector<TransformationFamily> parts;
    for (const auto& p : spec.at("parts")) parts.push_back(from_json(p));
    f = composite(std::move(parts));
  } else {
    const std::size_t dim = spec.at("dim").get<std::size_t>();
    auto coords = spec.at("coords").get<std::vector<std::size_t>>();
    if (kind == "coordinate-mask" || kind == "mask") {
      if (!grid) throw InvalidArgument("coordinate-mask families require an explicit grid");
      return mask(dim, std::move(coords), std::move(*grid));
    }
    const auto domain = domain_from_json(spec.at("domain"));
    const auto pi = pi_from_json(spec.value("pi", nlohmann::json::object()));
    const bool tied = spec.value("tied", false);
    if (kind == "axis-scale") {
      f = axis_scale(dim, std::move(coords), domain, pi, tied);
    } else if (kind == "additive-shift" || kind == "shift") {
      f = shift(dim, std::move(coords), domain, pi, tied);
    } else if (kind == "rotation") {
      if (coords.size() != 2) throw InvalidArgument("rotation family needs exactly two coords");
      f = rotation(dim, coords[0], coords[1], domain, pi);
    } else {
      throw InvalidArgument("unknown family kind '" + kind + "'");
    }
  }
  if (grid) f = f.with_grid(std::move(*grid));
  return f;
}

nlohmann::json TransformationFamily::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::kAxisScale: j["kind"] = "axis-scale"; break;
    case Kind::kShift: j["kind"] = "additive-shift"; break;
    case Kind::kRotation: j["kind"] = "rotation"; break;
    case Kind::kMask: j["kind"] = "coordinate-mask"; break;
    case Kind::kComposite: j["kind"] = "composite"; break;
  }
  if (kind_ == Kind::kComposite) {
    j["parts"] = nlohmann::json::array();
    for (const auto& p : parts_) j["parts"].push_back(p.to_json());
  } else {
    j["dim"] = data_dim_;
    j["coords"] = coords_;
    if (tied_) j["tied"] = true;
    if (kind_ != Kind::kMask) {
      if (domain_.type == ParameterDomain::Type::kBox) {
        j["domain"] = {{"type", "box"}, {"lo", domain_.lo}, {"hi", domain_.hi}};
      } else {
        j["domain"] = {{"type", "ball"}, {"center", domain_.center}, {"radius", domain_.radius}};
      }
      if (pi_.type == SamplingDistribution::Type::kUniform) {
        j["pi"] = {{"type", "uniform"}};
      } else {
        j["pi"] = {{"type", "truncated-normal"}, {"mean", pi_.mean}, {"std", pi_.stddev}};
      }
    }
  }
  if (grid_) j["grid"] = *grid_;
  return j;
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<Parameter> sample_parameters(const TransformationFamily& family, std::size_t m, Rng& rng,
                                         SamplingMode mode) {
  if (mode == SamplingMode::kExhaustive) {
    if (!family.finite()) throw InvalidArgument("exhaustive sampling requires a finite grid");
    const auto& grid = *family.grid();
    return std::vector<Parameter>(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(std::min(m, grid.size())));
  }
  std::vector<Parameter> out;
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) out.push_back(family.sample_parameter(rng));
  return out;
}

std::vector<Transformation> sample_transformations(const TransformationFamily& family, std::size_t m, Rng& rng,
                                                   SamplingMode mode) {
  if (m < 2) throw InvalidArgument("view count m must be at least 2 (a positive pair needs two views)");
  std::vector<Transformation> out;
  for (const auto& theta : sample_parameters(family, m, rng, mode)) out.push_back(family.realize(theta));
  return out;
}

std::vector<Transformation> sample_transformations(const TransformationFamily& family, std::size_t m,
                                                   std::uint64_t seed, SamplingMode mode) {
  Rng rng(seed);
  return sample_transformations(family, m, rng, mode);
}

}  // namespace arcl::data
