#include "arcl/numcore/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "arcl/numcore/error.hpp"

namespace arcl {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kConstant: return "constant";
    case OpKind::kAffine: return "affine";
    case OpKind::kTanh: return "tanh";
    case OpKind::kRelu: return "relu";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kL2Normalize: return "l2_normalize";
    case OpKind::kGram: return "gram";
    case OpKind::kSquaredNorm: return "squared_norm";
    case OpKind::kGroupMin: return "group_min";
    case OpKind::kGroupMax: return "group_max";
    case OpKind::kGroupMean: return "group_mean";
    case OpKind::kGroupLogSumExp: return "group_logsumexp";
    case OpKind::kMean: return "mean";
    case OpKind::kStopGradient: return "stop_gradient";
  }
  return "?";
}

std::vector<std::string> Graph::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) {
    if (n.kind == OpKind::kParameter) out.push_back(n.name);
  }
  return out;
}

std::vector<std::string> Graph::input_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) {
    if (n.kind == OpKind::kInput) out.push_back(n.name);
  }
  return out;
}

std::string Graph::describe(NodeId id) const {
  const Node& n = nodes_.at(id);
  std::string s = "node " + std::to_string(id) + " (" + op_name(n.kind);
  if (!n.name.empty()) s += " '" + n.name + "'";
  return s + ")";
}

// ---------------------------------------------------------------------------
// Builder

void GraphBuilder::fail(OpKind kind, const std::string& msg) const {
  throw ShapeError("node " + std::to_string(nodes_.size()) + " (" + op_name(kind) + "): " + msg);
}

void GraphBuilder::check_arg(NodeId arg) const {
  if (arg >= nodes_.size()) throw InvalidArgument("graph argument refers to a node not yet defined");
}

NodeId GraphBuilder::push(Node node) {
  for (NodeId a : node.args) check_arg(a);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId GraphBuilder::input(std::string name, Shape shape) {
  for (const auto& n : nodes_) {
    if ((n.kind == OpKind::kInput || n.kind == OpKind::kParameter) && n.name == name) {
      fail(OpKind::kInput, "duplicate leaf name '" + name + "'");
    }
  }
  return push({OpKind::kInput, {}, std::move(shape), std::move(name)});
}

NodeId GraphBuilder::parameter(std::string name, Shape shape) {
  for (const auto& n : nodes_) {
    if ((n.kind == OpKind::kInput || n.kind == OpKind::kParameter) && n.name == name) {
      fail(OpKind::kParameter, "duplicate leaf name '" + name + "'");
    }
  }
  return push({OpKind::kParameter, {}, std::move(shape), std::move(name)});
}

NodeId GraphBuilder::constant(Tensor value) {
  Node n{OpKind::kConstant, {}, value.shape()};
  n.constant = std::make_shared<const Tensor>(std::move(value));
  return push(std::move(n));
}

NodeId GraphBuilder::affine(NodeId x, NodeId weight, NodeId bias) {
  check_arg(x);
  check_arg(weight);
  check_arg(bias);
  const Shape& xs = shape(x);
  const Shape& ws = shape(weight);
  const Shape& bs = shape(bias);
  if (ws.size() != 2) fail(OpKind::kAffine, "weight must be a matrix, got " + shape_to_string(ws));
  if (bs.size() != 1 || bs[0] != ws[0]) fail(OpKind::kAffine, "bias " + shape_to_string(bs) + " does not match weight " + shape_to_string(ws));
  Shape out;
  if (xs.size() == 1 && xs[0] == ws[1]) {
    out = {ws[0]};
  } else if (xs.size() == 2 && xs[1] == ws[1]) {
    out = {xs[0], ws[0]};
  } else {
    fail(OpKind::kAffine, "input " + shape_to_string(xs) + " incompatible with weight " + shape_to_string(ws));
  }
  return push({OpKind::kAffine, {x, weight, bias}, out});
}

NodeId GraphBuilder::tanh(NodeId x) {
  check_arg(x);
  return push({OpKind::kTanh, {x}, shape(x)});
}

NodeId GraphBuilder::relu(NodeId x) {
  check_arg(x);
  return push({OpKind::kRelu, {x}, shape(x)});
}

NodeId GraphBuilder::add(NodeId a, NodeId b) {
  check_arg(a);
  check_arg(b);
  if (shape(a) != shape(b)) fail(OpKind::kAdd, shape_to_string(shape(a)) + " vs " + shape_to_string(shape(b)));
  return push({OpKind::kAdd, {a, b}, shape(a)});
}

NodeId GraphBuilder::sub(NodeId a, NodeId b) {
  check_arg(a);
  check_arg(b);
  if (shape(a) != shape(b)) fail(OpKind::kSub, shape_to_string(shape(a)) + " vs " + shape_to_string(shape(b)));
  return push({OpKind::kSub, {a, b}, shape(a)});
}

NodeId GraphBuilder::mul(NodeId a, NodeId b) {
  check_arg(a);
  check_arg(b);
  if (shape(a) != shape(b)) fail(OpKind::kMul, shape_to_string(shape(a)) + " vs " + shape_to_string(shape(b)));
  return push({OpKind::kMul, {a, b}, shape(a)});
}

NodeId GraphBuilder::scale(NodeId x, double c) {
  check_arg(x);
  Node n{OpKind::kScale, {x}, shape(x)};
  n.coefficient = c;
  return push(std::move(n));
}

NodeId GraphBuilder::l2_normalize(NodeId x) {
  check_arg(x);
  if (shape(x).size() != 1 && shape(x).size() != 2) fail(OpKind::kL2Normalize, "expects a vector or matrix");
  return push({OpKind::kL2Normalize, {x}, shape(x)});
}

NodeId GraphBuilder::gram(NodeId a, NodeId b) {
  check_arg(a);
  check_arg(b);
  const Shape& as = shape(a);
  const Shape& bs = shape(b);
  Shape out;
  if (as.size() == 1 && bs.size() == 1 && as[0] == bs[0]) {
    out = {};
  } else if (as.size() == 2 && bs.size() == 2 && as[1] == bs[1]) {
    out = {as[0], bs[0]};
  } else {
    fail(OpKind::kGram, shape_to_string(as) + " vs " + shape_to_string(bs));
  }
  return push({OpKind::kGram, {a, b}, out});
}

NodeId GraphBuilder::squared_norm(NodeId x) {
  check_arg(x);
  return push({OpKind::kSquaredNorm, {x}, {}});
}

NodeId GraphBuilder::grouped(OpKind kind, NodeId x, IndexGroups groups, double c) {
  check_arg(x);
  const std::size_t n = shape_size(shape(x));
  if (groups.empty()) fail(kind, "no index groups");
  for (const auto& g : groups) {
    if (g.empty()) fail(kind, "empty index group");
    for (auto i : g) {
      if (i >= n) fail(kind, "index " + std::to_string(i) + " out of range for " + shape_to_string(shape(x)));
    }
  }
  Node node{kind, {x}, {groups.size()}};
  node.coefficient = c;
  node.groups = std::make_shared<const IndexGroups>(std::move(groups));
  return push(std::move(node));
}

NodeId GraphBuilder::group_min(NodeId x, IndexGroups groups) { return grouped(OpKind::kGroupMin, x, std::move(groups), 0.0); }
NodeId GraphBuilder::group_max(NodeId x, IndexGroups groups) { return grouped(OpKind::kGroupMax, x, std::move(groups), 0.0); }
NodeId GraphBuilder::group_mean(NodeId x, IndexGroups groups) { return grouped(OpKind::kGroupMean, x, std::move(groups), 0.0); }
NodeId GraphBuilder::group_logsumexp(NodeId x, IndexGroups groups, double c) {
  return grouped(OpKind::kGroupLogSumExp, x, std::move(groups), c);
}

NodeId GraphBuilder::mean(NodeId x) {
  check_arg(x);
  return push({OpKind::kMean, {x}, {}});
}

NodeId GraphBuilder::stop_gradient(NodeId x) {
  check_arg(x);
  return push({OpKind::kStopGradient, {x}, shape(x)});
}

Graph GraphBuilder::build(NodeId output) const {
  check_arg(output);
  std::vector<bool> used(nodes_.size(), false);
  for (const auto& n : nodes_) {
    for (NodeId a : n.args) used[a] = true;
  }
  used[output] = true;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == OpKind::kParameter && !used[i]) {
      throw InvalidArgument("parameter '" + nodes_[i].name + "' is not referenced by any node");
    }
  }
  Graph g;
  g.nodes_ = nodes_;
  g.output_ = output;
  return g;
}

// ---------------------------------------------------------------------------
// Forward

const Selection* Evaluation::selection(NodeId id) const {
  auto it = selections_.find(id);
  return it == selections_.end() ? nullptr : &it->second;
}

double Evaluation::selection_margin() const noexcept {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [id, s] : selections_) m = std::min(m, s.min_margin);
  return m;
}

namespace {

void normalize_span(std::span<const double> in, std::span<double> out, const Graph& g, NodeId id) {
  const double n = norm(in);
  if (!std::isfinite(n)) throw NumericalError(g.describe(id) + ": " + "vector norm is not finite");
  if (!(n > kNormEpsilon)) {
    throw DegenerateEmbedding(g.describe(id) + ": cannot normalize vector with norm " + std::to_string(n));
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / n;
}

Selection select(const Tensor& x, const IndexGroups& groups, bool take_min, Tensor& out) {
  Selection sel;
  sel.chosen.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::size_t best = groups[g][0];
    for (std::size_t i : groups[g]) {
      const double v = x[i], b = x[best];
      const bool better = take_min ? v < b : v > b;
      if (better || (v == b && i < best)) best = i;
    }
    double runner_up = std::numeric_limits<double>::infinity();
    for (std::size_t i : groups[g]) {
      if (i == best) continue;
      runner_up = std::min(runner_up, std::abs(x[i] - x[best]));
    }
    sel.chosen[g] = best;
    sel.min_margin = std::min(sel.min_margin, runner_up);
    out[g] = x[best];
  }
  return sel;
}

}  // namespace

Evaluation forward(const Graph& graph, const TensorMap& bindings) {
  Evaluation ev;
  const auto& nodes = graph.nodes();
  ev.values_.reserve(nodes.size());
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& n = nodes[id];
    auto arg = [&](std::size_t k) -> const Tensor& { return ev.values_[n.args[k]]; };
    Tensor out(n.shape);
    switch (n.kind) {
      case OpKind::kInput:
      case OpKind::kParameter: {
        auto it = bindings.find(n.name);
        if (it == bindings.end()) throw ShapeError(graph.describe(id) + ": no binding supplied");
        if (it->second.shape() != n.shape) {
          throw ShapeError(graph.describe(id) + ": expected shape " + shape_to_string(n.shape) + ", got " +
                           shape_to_string(it->second.shape()));
        }
        out = it->second;
        break;
      }
      case OpKind::kConstant:
        out = *n.constant;
        break;
      case OpKind::kAffine: {
        const Tensor& x = arg(0);
        const Tensor& w = arg(1);
        const Tensor& b = arg(2);
        const std::size_t rows = x.rank() == 1 ? 1 : x.shape()[0];
        const std::size_t in = w.shape()[1], o = w.shape()[0];
        for (std::size_t r = 0; r < rows; ++r) {
          std::span<const double> xr(x.data().data() + r * in, in);
          for (std::size_t j = 0; j < o; ++j) out[r * o + j] = dot(w.row(j), xr) + b[j];
        }
        break;
      }
      case OpKind::kTanh:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(arg(0)[i]);
        break;
      case OpKind::kRelu:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(arg(0)[i], 0.0);
        break;
      case OpKind::kAdd:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = arg(0)[i] + arg(1)[i];
        break;
      case OpKind::kSub:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = arg(0)[i] - arg(1)[i];
        break;
      case OpKind::kMul:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = arg(0)[i] * arg(1)[i];
        break;
      case OpKind::kScale:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = n.coefficient * arg(0)[i];
        break;
      case OpKind::kL2Normalize: {
        const Tensor& x = arg(0);
        if (x.rank() == 1) {
          normalize_span(x.data(), out.data(), graph, id);
        } else {
          for (std::size_t r = 0; r < x.rows(); ++r) normalize_span(x.row(r), out.row(r), graph, id);
        }
        break;
      }
      case OpKind::kGram: {
        const Tensor& a = arg(0);
        const Tensor& b = arg(1);
        if (a.rank() == 1) {
          out[0] = dot(a.data(), b.data());
        } else {
          const std::size_t nb = b.rows();
          for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t j = 0; j < nb; ++j) out[i * nb + j] = dot(a.row(i), b.row(j));
          }
        }
        break;
      }
      case OpKind::kSquaredNorm:
        out[0] = squared_norm(arg(0).data());
        break;
      case OpKind::kGroupMin:
      case OpKind::kGroupMax:
        ev.selections_[id] = select(arg(0), *n.groups, n.kind == OpKind::kGroupMin, out);
        break;
      case OpKind::kGroupMean: {
        const auto& groups = *n.groups;
        for (std::size_t g = 0; g < groups.size(); ++g) {
          double s = 0.0;
          for (std::size_t i : groups[g]) s += arg(0)[i];
          out[g] = s / static_cast<double>(groups[g].size());
        }
        break;
      }
      case OpKind::kGroupLogSumExp: {
        const auto& groups = *n.groups;
        const Tensor& x = arg(0);
        for (std::size_t g = 0; g < groups.size(); ++g) {
          double mx = -std::numeric_limits<double>::infinity();
          for (std::size_t i : groups[g]) mx = std::max(mx, n.coefficient * x[i]);
          double s = 0.0;
          for (std::size_t i : groups[g]) s += std::exp(n.coefficient * x[i] - mx);
          out[g] = mx + std::log(s);
        }
        break;
      }
      case OpKind::kMean: {
        const Tensor& x = arg(0);
        double s = 0.0;
        for (double v : x.data()) s += v;
        out[0] = s / static_cast<double>(x.size());
        break;
      }
      case OpKind::kStopGradient:
        out = arg(0);
        break;
    }
    if (!out.all_finite()) throw NumericalError(graph.describe(id) + ": produced a non-finite value");
    ev.values_.push_back(std::move(out));
  }
  return ev;
}

Tensor evaluate(const Graph& graph, const TensorMap& bindings) { return evaluate(graph, bindings, graph.output()); }

Tensor evaluate(const Graph& graph, const TensorMap& bindings, NodeId output) {
  auto ev = forward(graph, bindings);
  return ev.value(output);
}

// ---------------------------------------------------------------------------
// Reverse

GradientResult value_and_gradient(const Graph& graph, const TensorMap& bindings) {
  return value_and_gradient(graph, bindings, graph.output());
}

GradientResult value_and_gradient(const Graph& graph, const TensorMap& bindings, NodeId loss) {
  const auto& nodes = graph.nodes();
  if (loss >= nodes.size()) throw InvalidArgument("loss node out of range");
  if (shape_size(nodes[loss].shape) != 1) {
    throw ShapeError(graph.describe(loss) + ": gradient requires a scalar loss, got shape " +
                     shape_to_string(nodes[loss].shape));
  }
  GradientResult result;
  result.evaluation = forward(graph, bindings);
  const Evaluation& ev = result.evaluation;
  result.loss = ev.value(loss).item();

  std::vector<std::optional<Tensor>> adj(nodes.size());
  adj[loss] = Tensor(nodes[loss].shape, {1.0});
  auto accum = [&](NodeId id) -> Tensor& {
    if (!adj[id]) adj[id] = Tensor(nodes[id].shape);
    return *adj[id];
  };

  for (NodeId id = loss + 1; id-- > 0;) {
    if (!adj[id]) continue;
    const Node& n = nodes[id];
    const Tensor& dy = *adj[id];
    const Tensor& y = ev.value(id);
    switch (n.kind) {
      case OpKind::kInput:
      case OpKind::kConstant:
      case OpKind::kStopGradient:
        break;
      case OpKind::kParameter:
        result.gradients[n.name] = dy;
        break;
      case OpKind::kAffine: {
        const Tensor& x = ev.value(n.args[0]);
        const Tensor& w = ev.value(n.args[1]);
        const std::size_t rows = x.rank() == 1 ? 1 : x.shape()[0];
        const std::size_t in = w.shape()[1], o = w.shape()[0];
        Tensor& dx = accum(n.args[0]);
        Tensor& dw = accum(n.args[1]);
        Tensor& db = accum(n.args[2]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < o; ++j) {
            const double g = dy[r * o + j];
            if (g == 0.0) continue;
            db[j] += g;
            for (std::size_t k = 0; k < in; ++k) {
              dx[r * in + k] += g * w[j * in + k];
              dw[j * in + k] += g * x[r * in + k];
            }
          }
        }
        break;
      }
      case OpKind::kTanh: {
        Tensor& dx = accum(n.args[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case OpKind::kRelu: {
        const Tensor& x = ev.value(n.args[0]);
        Tensor& dx = accum(n.args[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += x[i] > 0.0 ? dy[i] : 0.0;
        break;
      }
      case OpKind::kAdd:
      case OpKind::kSub: {
        const double sign = n.kind == OpKind::kAdd ? 1.0 : -1.0;
        {
          Tensor& da = accum(n.args[0]);
          for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
        }
        Tensor& db = accum(n.args[1]);
        for (std::size_t i = 0; i < dy.size(); ++i) db[i] += sign * dy[i];
        break;
      }
      case OpKind::kMul: {
        const Tensor a = ev.value(n.args[0]);
        const Tensor b = ev.value(n.args[1]);
        {
          Tensor& da = accum(n.args[0]);
          for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * b[i];
        }
        Tensor& db = accum(n.args[1]);
        for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * a[i];
        break;
      }
      case OpKind::kScale: {
        Tensor& dx = accum(n.args[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += n.coefficient * dy[i];
        break;
      }
      case OpKind::kL2Normalize: {
        const Tensor& x = ev.value(n.args[0]);
        Tensor& dx = accum(n.args[0]);
        const std::size_t rows = x.rank() == 1 ? 1 : x.rows();
        const std::size_t len = x.size() / rows;
        for (std::size_t r = 0; r < rows; ++r) {
          std::span<const double> xr(x.data().data() + r * len, len);
          std::span<const double> yr(y.data().data() + r * len, len);
          std::span<const double> gr(dy.data().data() + r * len, len);
          const double nrm = norm(xr);
          const double proj = dot(yr, gr);
          for (std::size_t k = 0; k < len; ++k) dx[r * len + k] += (gr[k] - yr[k] * proj) / nrm;
        }
        break;
      }
      case OpKind::kGram: {
        const Tensor a = ev.value(n.args[0]);
        const Tensor b = ev.value(n.args[1]);
        if (a.rank() == 1) {
          {
            Tensor& da = accum(n.args[0]);
            for (std::size_t k = 0; k < a.size(); ++k) da[k] += dy[0] * b[k];
          }
          Tensor& db = accum(n.args[1]);
          for (std::size_t k = 0; k < b.size(); ++k) db[k] += dy[0] * a[k];
        } else {
          const std::size_t na = a.rows(), nb = b.rows(), p = a.cols();
          {
            Tensor& da = accum(n.args[0]);
            for (std::size_t i = 0; i < na; ++i) {
              for (std::size_t j = 0; j < nb; ++j) {
                const double g = dy[i * nb + j];
                if (g == 0.0) continue;
                for (std::size_t k = 0; k < p; ++k) da[i * p + k] += g * b[j * p + k];
              }
            }
          }
          Tensor& db = accum(n.args[1]);
          for (std::size_t i = 0; i < na; ++i) {
            for (std::size_t j = 0; j < nb; ++j) {
              const double g = dy[i * nb + j];
              if (g == 0.0) continue;
              for (std::size_t k = 0; k < p; ++k) db[j * p + k] += g * a[i * p + k];
            }
          }
        }
        break;
      }
      case OpKind::kSquaredNorm: {
        const Tensor& x = ev.value(n.args[0]);
        Tensor& dx = accum(n.args[0]);
        for (std::size_t i = 0; i < x.size(); ++i) dx[i] += 2.0 * x[i] * dy[0];
        break;
      }
      case OpKind::kGroupMin:
      case OpKind::kGroupMax: {
        const Selection* sel = ev.selection(id);
        Tensor& dx = accum(n.args[0]);
        for (std::size_t g = 0; g < sel->chosen.size(); ++g) dx[sel->chosen[g]] += dy[g];
        break;
      }
      case OpKind::kGroupMean: {
        Tensor& dx = accum(n.args[0]);
        const auto& groups = *n.groups;
        for (std::size_t g = 0; g < groups.size(); ++g) {
          const double share = dy[g] / static_cast<double>(groups[g].size());
          for (std::size_t i : groups[g]) dx[i] += share;
        }
        break;
      }
      case OpKind::kGroupLogSumExp: {
        const Tensor& x = ev.value(n.args[0]);
        Tensor& dx = accum(n.args[0]);
        const auto& groups = *n.groups;
        for (std::size_t g = 0; g < groups.size(); ++g) {
          for (std::size_t i : groups[g]) {
            dx[i] += dy[g] * n.coefficient * std::exp(n.coefficient * x[i] - y[g]);
          }
        }
        break;
      }
      case OpKind::kMean: {
        Tensor& dx = accum(n.args[0]);
        const double share = dy[0] / static_cast<double>(dx.size());
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += share;
        break;
      }
    }
  }

  for (const auto& n : nodes) {
    if (n.kind == OpKind::kParameter && !result.gradients.count(n.name)) {
      result.gradients[n.name] = Tensor(n.shape);
    }
  }
  return result;
}

TensorMap gradient(const Graph& graph, const TensorMap& bindings, NodeId loss) {
  return value_and_gradient(graph, bindings, loss).gradients;
}

TensorMap gradient(const Graph& graph, const TensorMap& bindings) {
  return value_and_gradient(graph, bindings).gradients;
}

}  // namespace arcl
