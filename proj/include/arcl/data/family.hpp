#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arcl/data/transform.hpp"
#include "arcl/numcore/rng.hpp"
#include "json.hpp"

namespace arcl::data {

using Parameter = std::vector<double>;

/// Parameter domain Theta: an axis-aligned box or a Euclidean ball.
struct ParameterDomain {
  enum class Type { kBox, kBall };
  Type type = Type::kBox;
  std::vector<double> lo, hi;  // box
  std::vector<double> center;  // ball
  double radius = 0.0;

  static ParameterDomain box(std::vector<double> lo, std::vector<double> hi);
  static ParameterDomain ball(std::vector<double> center, double radius);

  std::size_t dim() const noexcept { return type == Type::kBox ? lo.size() : center.size(); }
  bool contains(const Parameter& theta) const;
  double volume() const;
};

/// Sampling distribution pi over Theta.
struct SamplingDistribution {
  enum class Type { kUniform, kTruncatedNormal };
  Type type = Type::kUniform;
  std::vector<double> mean, stddev;  // truncated normal only
};

enum class SamplingMode {
  kIid,         // independent draws from pi (grid members uniformly if a grid is set)
  kExhaustive,  // the first m grid members in order, m clamped to the grid size
};

/// A parameterized set of transformations with a sampling distribution.
///
/// Parameters act on `coords` of a `data_dim`-dimensional sample:
///   axis-scale / additive-shift: one parameter per coordinate, or a single
///     shared parameter when `tied`;
///   rotation: one angle, rotating the plane (coords[0], coords[1]);
///   coordinate-mask: one 0/1 flag per coordinate (finite grid required);
///   composite: concatenated parameters of `parts`, applied in order.
class TransformationFamily {
 public:
  enum class Kind { kAxisScale, kRotation, kShift, kMask, kComposite };

  static TransformationFamily axis_scale(std::size_t data_dim, std::vector<std::size_t> coords, ParameterDomain domain,
                                         SamplingDistribution pi, bool tied = false);
  static TransformationFamily shift(std::size_t data_dim, std::vector<std::size_t> coords, ParameterDomain domain,
                                    SamplingDistribution pi, bool tied = false);
  static TransformationFamily rotation(std::size_t data_dim, std::size_t axis_a, std::size_t axis_b,
                                       ParameterDomain domain, SamplingDistribution pi);
  static TransformationFamily mask(std::size_t data_dim, std::vector<std::size_t> coords,
                                   std::vector<Parameter> grid);
  static TransformationFamily composite(std::vector<TransformationFamily> parts);

  /// Finite version of this family restricted to the listed parameters.
  TransformationFamily with_grid(std::vector<Parameter> grid) const;

  static TransformationFamily from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  Kind kind() const noexcept { return kind_; }
  std::size_t data_dim() const noexcept { return data_dim_; }
  std::size_t parameter_dim() const;
  const ParameterDomain& domain() const noexcept { return domain_; }
  const SamplingDistribution& pi() const noexcept { return pi_; }
  const std::optional<std::vector<Parameter>>& grid() const noexcept { return grid_; }
  bool finite() const noexcept { return grid_.has_value(); }

  bool contains(const Parameter& theta) const;
  Transformation realize(const Parameter& theta) const;
  Parameter identity_parameter() const;
  std::vector<Transformation> grid_members() const;

  Parameter sample_parameter(Rng& rng) const;

  /// L_A: maximum operator norm of the realized maps over Theta (or the grid).
  double lipschitz_bound() const;
  /// c_pi: a lower bound on the density of pi over Theta (mass per member
  /// for finite grids).
  double density_floor() const;

 private:
  void validate() const;

  Kind kind_ = Kind::kAxisScale;
  std::size_t data_dim_ = 0;
  std::vector<std::size_t> coords_;
  bool tied_ = false;
  ParameterDomain domain_;
  SamplingDistribution pi_;
  std::optional<std::vector<Parameter>> grid_;
  std::vector<TransformationFamily> parts_;
};

std::vector<Parameter> sample_parameters(const TransformationFamily& family, std::size_t m, Rng& rng,
                                         SamplingMode mode = SamplingMode::kIid);

/// m draws from the family; m < 2 is rejected since a positive pair needs
/// two views.
std::vector<Transformation> sample_transformations(const TransformationFamily& family, std::size_t m, Rng& rng,
                                                   SamplingMode mode = SamplingMode::kIid);
std::vector<Transformation> sample_transformations(const TransformationFamily& family, std::size_t m,
                                                   std::uint64_t seed, SamplingMode mode = SamplingMode::kIid);

}  // namespace arcl::data
