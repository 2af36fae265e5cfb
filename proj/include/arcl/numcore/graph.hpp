#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arcl/numcore/tensor.hpp"

namespace arcl {

using NodeId = std::size_t;
/// Lists of flat indices into a tensor; one list per reduced output entry.
using IndexGroups = std::vector<std::vector<std::size_t>>;
/// Named tensors supplied to (or returned from) a graph.
using TensorMap = std::map<std::string, Tensor>;

enum class OpKind {
  kInput,
  kParameter,
  kConstant,
  kAffine,        // x W^T + b, row-wise
  kTanh,
  kRelu,
  kAdd,
  kSub,
  kMul,
  kScale,         // c * x
  kL2Normalize,   // rows (or the vector) scaled to unit norm
  kGram,          // A B^T (dot product for two vectors)
  kSquaredNorm,   // sum of squares
  kGroupMin,
  kGroupMax,
  kGroupMean,
  kGroupLogSumExp,  // log sum exp(c * x[i]) per group
  kMean,
  kStopGradient,
};

const char* op_name(OpKind kind);

struct Node {
  OpKind kind;
  std::vector<NodeId> args;
  Shape shape;
  std::string name;
  double coefficient = 0.0;
  std::shared_ptr<const IndexGroups> groups;
  std::shared_ptr<const Tensor> constant;
};

/// Immutable computation graph over the fixed operator set.
///
/// Nodes are stored in topological order; a node may only reference nodes
/// created before it. Inputs and parameters are leaves addressed by name;
/// gradients are produced for parameters only. A Graph is safe to share
/// read-only between threads.
class Graph {
 public:
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  NodeId output() const noexcept { return output_; }
  std::vector<std::string> parameter_names() const;
  std::vector<std::string> input_names() const;
  std::string describe(NodeId id) const;

 private:
  friend class GraphBuilder;
  std::vector<Node> nodes_;
  NodeId output_ = 0;
};

class GraphBuilder {
 public:
  NodeId input(std::string name, Shape shape);
  NodeId parameter(std::string name, Shape shape);
  NodeId constant(Tensor value);

  NodeId affine(NodeId x, NodeId weight, NodeId bias);
  NodeId tanh(NodeId x);
  NodeId relu(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId l2_normalize(NodeId x);
  NodeId gram(NodeId a, NodeId b);
  NodeId squared_norm(NodeId x);
  NodeId group_min(NodeId x, IndexGroups groups);
  NodeId group_max(NodeId x, IndexGroups groups);
  NodeId group_mean(NodeId x, IndexGroups groups);
  NodeId group_logsumexp(NodeId x, IndexGroups groups, double c = 1.0);
  NodeId mean(NodeId x);
  NodeId stop_gradient(NodeId x);

  const Shape& shape(NodeId id) const { return nodes_.at(id).shape; }

  /// Finalizes the graph. Every parameter must feed at least one node
  /// (or be the output itself).
  Graph build(NodeId output) const;

 private:
  NodeId push(Node node);
  NodeId grouped(OpKind kind, NodeId x, IndexGroups groups, double c);
  void check_arg(NodeId arg) const;
  [[noreturn]] void fail(OpKind kind, const std::string& msg) const;

  std::vector<Node> nodes_;
};

/// Outcome of a selection node: the chosen flat index per group and the
/// gap to the runner-up (infinity for singleton groups).
struct Selection {
  std::vector<std::size_t> chosen;
  double min_margin = std::numeric_limits<double>::infinity();
};

/// Forward values of every node plus selection bookkeeping.
class Evaluation {
 public:
  const Tensor& value(NodeId id) const { return values_.at(id); }
  const std::vector<Tensor>& values() const noexcept { return values_; }
  const Selection* selection(NodeId id) const;
  /// Smallest selection margin over all min/max nodes.
  double selection_margin() const noexcept;

 private:
  friend Evaluation forward(const Graph&, const TensorMap&);
  std::vector<Tensor> values_;
  std::map<NodeId, Selection> selections_;
};

/// Runs the forward pass. Bindings must provide every input and parameter
/// with the declared shape; extra names are ignored.
Evaluation forward(const Graph& graph, const TensorMap& bindings);

Tensor evaluate(const Graph& graph, const TensorMap& bindings);
Tensor evaluate(const Graph& graph, const TensorMap& bindings, NodeId output);

struct GradientResult {
  double loss = 0.0;
  TensorMap gradients;  // keyed by parameter name
  Evaluation evaluation;
};

/// Reverse-mode derivative of a scalar node with respect to every parameter.
/// Selection nodes route the adjoint to the chosen index only.
GradientResult value_and_gradient(const Graph& graph, const TensorMap& bindings, NodeId loss);
GradientResult value_and_gradient(const Graph& graph, const TensorMap& bindings);

TensorMap gradient(const Graph& graph, const TensorMap& bindings, NodeId loss);
TensorMap gradient(const Graph& graph, const TensorMap& bindings);

}  // namespace arcl
