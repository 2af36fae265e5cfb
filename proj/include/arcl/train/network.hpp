#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "arcl/numcore/graph.hpp"
#include "arcl/numcore/tensor.hpp"

namespace arcl::train {

enum class Architecture { kLinear, kMlp2 };
enum class Activation { kTanh, kRelu };

struct NetworkSpec {
  Architecture architecture = Architecture::kMlp2;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 32;
  std::size_t output_dim = 2;
  Activation activation = Activation::kTanh;
  bool normalize_output = true;

  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected; input_dim may be omitted (0) and filled in later.
  static NetworkSpec from_json(const nlohmann::json& j);
};

/// Small feed-forward network used for both the encoder and the projection
/// head. Parameters are stored under "<prefix>.w1", "<prefix>.b1", ... so
/// several networks can share one graph.
class Network {
 public:
  Network() = default;
  Network(NetworkSpec spec, std::string prefix, TensorMap parameters);

  /// Entries uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static Network initialize(const NetworkSpec& spec, std::string prefix, std::uint64_t seed);

  const NetworkSpec& spec() const noexcept { return spec_; }
  const std::string& prefix() const noexcept { return prefix_; }
  const TensorMap& parameters() const noexcept { return params_; }
  TensorMap& parameters() noexcept { return params_; }
  std::vector<std::string> parameter_names() const;

  /// Appends the network to `b` on top of row batch `x`. Parameter nodes are
  /// named with `name_prefix` (defaults to the network's own prefix).
  NodeId append(GraphBuilder& b, NodeId x, const std::string& name_prefix = "") const;

  /// Parameter values renamed under another prefix, for binding a copy.
  TensorMap parameters_as(const std::string& name_prefix) const;

  /// Row-wise forward pass (n x input_dim -> n x output_dim).
  Tensor forward(const Tensor& x) const;
  /// Output before the final normalization.
  Tensor forward_unnormalized(const Tensor& x) const;

  /// Product of layer operator norms; with a normalized output this is
  /// divided by the smallest pre-normalization norm over `reference` rows,
  /// which bounds the Jacobian norm at those points.
  double lipschitz_estimate(const Tensor& reference) const;

 private:
  std::vector<std::string> layer_names() const;

  NetworkSpec spec_;
  std::string prefix_;
  TensorMap params_;
};

/// Encoder plus optional projection head. Only the encoder is kept for
/// downstream evaluation.
struct Model {
  Network encoder;
  bool has_projector = false;
  Network projector;

  static Model initialize(const NetworkSpec& encoder, const NetworkSpec* projector, std::uint64_t seed);

  TensorMap parameters() const;
  void set_parameters(const TensorMap& values);
  /// Appends encoder (and projector) and a final row normalization.
  NodeId append_embedding(GraphBuilder& b, NodeId x, const std::string& name_prefix = "") const;
  /// Unit-norm projected embeddings, as used by the contrastive loss.
  Tensor embed(const Tensor& x) const;
};

}  // namespace arcl::train
