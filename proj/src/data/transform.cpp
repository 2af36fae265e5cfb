#include "arcl/data/transform.hpp"

#include <algorithm>
#include <cmath>

#include "arcl/numcore/error.hpp"

namespace arcl::data {

const char* kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kAxisScale: return "axis-scale";
    case TransformKind::kRotation: return "rotation";
    case TransformKind::kShift: return "additive-shift";
    case TransformKind::kMask: return "coordinate-mask";
    case TransformKind::kComposition: return "composition";
  }
  return "?";
}

TransformKind parse_kind(const std::string& name) {
  if (name == "axis-scale") return TransformKind::kAxisScale;
  if (name == "rotation") return TransformKind::kRotation;
  if (name == "additive-shift" || name == "shift") return TransformKind::kShift;
  if (name == "coordinate-mask" || name == "mask") return TransformKind::kMask;
  if (name == "composition") return TransformKind::kComposition;
  throw InvalidArgument("unknown transformation kind '" + name + "'");
}

Transformation Transformation::axis_scale(std::vector<double> scales) {
  Transformation t;
  t.kind_ = TransformKind::kAxisScale;
  t.theta_ = std::move(scales);
  return t;
}

Transformation Transformation::rotation(double angle, std::size_t axis_a, std::size_t axis_b) {
  if (axis_a == axis_b) throw InvalidArgument("rotation plane needs two distinct axes");
  Transformation t;
  t.kind_ = TransformKind::kRotation;
  t.theta_ = {angle};
  t.plane_ = {axis_a, axis_b};
  return t;
}

Transformation Transformation::shift(std::vector<double> offsets) {
  Transformation t;
  t.kind_ = TransformKind::kShift;
  t.theta_ = std::move(offsets);
  return t;
}

Transformation Transformation::mask(std::vector<double> keep) {
  Transformation t;
  t.kind_ = TransformKind::kMask;
  t.theta_ = std::move(keep);
  return t;
}

Transformation Transformation::compose(std::vector<Transformation> parts) {
  if (parts.empty()) throw InvalidArgument("composition needs at least one part");
  Transformation t;
  t.kind_ = TransformKind::kComposition;
  t.parts_ = std::move(parts);
  return t;
}

void Transformation::check_dim(std::size_t d) const {
  switch (kind_) {
    case TransformKind::kAxisScale:
    case TransformKind::kShift:
    case TransformKind::kMask:
      if (theta_.size() != d) {
        throw ShapeError(std::string(kind_name(kind_)) + " with " + std::to_string(theta_.size()) +
                         " parameters applied to dimension " + std::to_string(d));
      }
      break;
    case TransformKind::kRotation:
      if (plane_[0] >= d || plane_[1] >= d) {
        throw ShapeError("rotation plane outside dimension " + std::to_string(d));
      }
      break;
    case TransformKind::kComposition:
      for (const auto& p : parts_) p.check_dim(d);
      break;
  }
}

void Transformation::apply(std::span<const double> x, std::span<double> out) const {
  check_dim(x.size());
  if (out.size() != x.size()) throw ShapeError("output span size differs from input");
  switch (kind_) {
    case TransformKind::kAxisScale:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * theta_[i];
      break;
    case TransformKind::kShift:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + theta_[i];
      break;
    case TransformKind::kMask:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = theta_[i] != 0.0 ? x[i] : 0.0;
      break;
    case TransformKind::kRotation: {
      std::copy(x.begin(), x.end(), out.begin());
      if (theta_[0] == 0.0) break;
      const double c = std::cos(theta_[0]), s = std::sin(theta_[0]);
      const double a = x[plane_[0]], b = x[plane_[1]];
      out[plane_[0]] = c * a - s * b;
      out[plane_[1]] = s * a + c * b;
      break;
    }
    case TransformKind::kComposition: {
      std::vector<double> buf(x.begin(), x.end());
      for (const auto& p : parts_) {
        std::vector<double> next(buf.size());
        p.apply(buf, next);
        buf.swap(next);
      }
      std::copy(buf.begin(), buf.end(), out.begin());
      break;
    }
  }
}

std::vector<double> Transformation::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  apply(x, out);
  return out;
}

Tensor Transformation::apply_rows(const Tensor& rows) const {
  Tensor out = Tensor::zeros_like(rows);
  for (std::size_t r = 0; r < rows.rows(); ++r) apply(rows.row(r), out.row(r));
  return out;
}

double Transformation::lipschitz() const {
  switch (kind_) {
    case TransformKind::kAxisScale: {
      double m = 0.0;
      for (double v : theta_) m = std::max(m, std::abs(v));
      return m;
    }
    case TransformKind::kMask: {
      for (double v : theta_) {
        if (v != 0.0) return 1.0;
      }
      return 0.0;
    }
    case TransformKind::kRotation:
    case TransformKind::kShift:
      return 1.0;
    case TransformKind::kComposition: {
      double l = 1.0;
      for (const auto& p : parts_) l *= p.lipschitz();
      return l;
    }
  }
  return 1.0;
}

nlohmann::json Transformation::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_name(kind_);
  if (kind_ == TransformKind::kComposition) {
    j["parts"] = nlohmann::json::array();
    for (const auto& p : parts_) j["parts"].push_back(p.to_json());
  } else {
    j["theta"] = theta_;
  }
  if (kind_ == TransformKind::kRotation) j["plane"] = plane_;
  return j;
}

std::vector<double> apply_transformation(const Transformation& t, std::span<const double> x) { return t.apply(x); }

Dataset induce_domain(const Dataset& dataset, const Transformation& t) {
  t.check_dim(dataset.dim());
  Dataset out = dataset;
  out.samples = t.apply_rows(dataset.samples);
  return out;
}

}  // namespace arcl::data
