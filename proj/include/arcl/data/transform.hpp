#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "arcl/data/dataset.hpp"
#include "json.hpp"

namespace arcl::data {

enum class TransformKind { kAxisScale, kRotation, kShift, kMask, kComposition };

const char* kind_name(TransformKind kind);
TransformKind parse_kind(const std::string& name);

/// A deterministic affine-style map X -> X.
///
///  - axis-scale: x_i * theta_i
///  - rotation:   rotates the (plane[0], plane[1]) coordinates by angle theta_0
///  - shift:      x_i + theta_i
///  - mask:       x_i if theta_i != 0 else 0
///  - composition: parts applied first to last
class Transformation {
 public:
  static Transformation axis_scale(std::vector<double> scales);
  static Transformation rotation(double angle, std::size_t axis_a = 0, std::size_t axis_b = 1);
  static Transformation shift(std::vector<double> offsets);
  static Transformation mask(std::vector<double> keep);
  static Transformation compose(std::vector<Transformation> parts);

  TransformKind kind() const noexcept { return kind_; }
  const std::vector<double>& theta() const noexcept { return theta_; }
  const std::vector<Transformation>& parts() const noexcept { return parts_; }

  /// Throws ShapeError when the map is not defined on dimension d.
  void check_dim(std::size_t d) const;

  void apply(std::span<const double> x, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> x) const;
  /// Applies to every row of an n x d matrix.
  Tensor apply_rows(const Tensor& rows) const;

  /// Operator norm of the linear part (the map's Lipschitz constant).
  double lipschitz() const;

  nlohmann::json to_json() const;

 private:
  TransformKind kind_ = TransformKind::kAxisScale;
  std::vector<double> theta_;
  std::array<std::size_t, 2> plane_{0, 1};
  std::vector<Transformation> parts_;
};

std::vector<double> apply_transformation(const Transformation& t, std::span<const double> x);

/// The dataset with `t` applied to every sample exactly once; labels are
/// carried over unchanged.
Dataset induce_domain(const Dataset& dataset, const Transformation& t);

/// A transformation-induced domain D_A.
struct Domain {
  const Dataset* base = nullptr;
  Transformation transform;

  Dataset realize() const { return induce_domain(*base, transform); }
};

}  // namespace arcl::data
