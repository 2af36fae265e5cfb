#include "arcl/train/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "arcl/numcore/error.hpp"
#include "arcl/numcore/linalg.hpp"
#include "arcl/numcore/rng.hpp"

namespace arcl::train {

namespace {

const char* architecture_name(Architecture a) { return a == Architecture::kLinear ? "linear" : "mlp2"; }
const char* activation_name(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

void activate(Tensor& t, Activation a) {
  for (double& v : t.data()) v = a == Activation::kTanh ? std::tanh(v) : std::max(v, 0.0);
}

Tensor affine_rows(const Tensor& x, const Tensor& w, const Tensor& bias) {
  Tensor out = linalg::matmul_nt(x, w);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) += bias[c];
  }
  return out;
}

}  // namespace

void NetworkSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw InvalidArgument("network dimensions must be positive");
  if (architecture == Architecture::kMlp2 && hidden_dim == 0) throw InvalidArgument("hidden width must be positive");
}

nlohmann::json NetworkSpec::to_json() const {
  nlohmann::json j{{"architecture", architecture_name(architecture)},
                   {"input_dim", input_dim},
                   {"output_dim", output_dim},
                   {"normalize_output", normalize_output}};
  if (architecture == Architecture::kMlp2) {
    j["hidden_dim"] = hidden_dim;
    j["activation"] = activation_name(activation);
  }
  return j;
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("network spec must be an object");
  NetworkSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "architecture") {
      const auto name = value.get<std::string>();
      if (name == "linear") {
        s.architecture = Architecture::kLinear;
      } else if (name == "mlp2") {
        s.architecture = Architecture::kMlp2;
      } else {
        throw InvalidArgument("unknown architecture '" + name + "'");
      }
    } else if (key == "activation") {
      const auto name = value.get<std::string>();
      if (name == "tanh") {
        s.activation = Activation::kTanh;
      } else if (name == "relu") {
        s.activation = Activation::kRelu;
      } else {
        throw InvalidArgument("unknown activation '" + name + "'");
      }
    } else if (key == "input_dim") {
      s.input_dim = value.get<std::size_t>();
    } else if (key == "hidden_dim") {
      s.hidden_dim = value.get<std::size_t>();
    } else if (key == "output_dim") {
      s.output_dim = value.get<std::size_t>();
    } else if (key == "normalize_output") {
      s.normalize_output = value.get<bool>();
    } else {
      throw InvalidArgument("unknown network key '" + key + "'");
    }
  }
  return s;
}

Network::Network(NetworkSpec spec, std::string prefix, TensorMap parameters)
    : spec_(spec), prefix_(std::move(prefix)), params_(std::move(parameters)) {
  spec_.validate();
  std::vector<Shape> expected;
  if (spec_.architecture == Architecture::kLinear) {
    expected = {{spec_.output_dim, spec_.input_dim}, {spec_.output_dim}};
  } else {
    expected = {{spec_.hidden_dim, spec_.input_dim},
                {spec_.hidden_dim},
                {spec_.output_dim, spec_.hidden_dim},
                {spec_.output_dim}};
  }
  const auto names = parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = params_.find(names[i]);
    if (it == params_.end()) throw InvalidArgument("missing parameter '" + names[i] + "'");
    if (it->second.shape() != expected[i]) {
      throw ShapeError("parameter '" + names[i] + "' has shape " + shape_to_string(it->second.shape()) + ", expected " +
                       shape_to_string(expected[i]));
    }
  }
}

std::vector<std::string> Network::layer_names() const {
  if (spec_.architecture == Architecture::kLinear) return {"w", "b"};
  return {"w1", "b1", "w2", "b2"};
}

std::vector<std::string> Network::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& l : layer_names()) names.push_back(prefix_ + "." + l);
  return names;
}

Network Network::initialize(const NetworkSpec& spec, std::string prefix, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, prefix));
  auto layer = [&](std::size_t out, std::size_t in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w({out, in});
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    Tensor b({out});
    for (double& v : b.data()) v = rng.uniform(-bound, bound);
    return std::pair{w, b};
  };
  TensorMap params;
  if (spec.architecture == Architecture::kLinear) {
    auto [w, b] = layer(spec.output_dim, spec.input_dim);
    params[prefix + ".w"] = w;
    params[prefix + ".b"] = b;
  } else {
    auto [w1, b1] = layer(spec.hidden_dim, spec.input_dim);
    auto [w2, b2] = layer(spec.output_dim, spec.hidden_dim);
    params[prefix + ".w1"] = w1;
    params[prefix + ".b1"] = b1;
    params[prefix + ".w2"] = w2;
    params[prefix + ".b2"] = b2;
  }
  return Network(spec, std::move(prefix), std::move(params));
}

TensorMap Network::parameters_as(const std::string& name_prefix) const {
  TensorMap out;
  for (const auto& l : layer_names()) out[name_prefix + "." + l] = params_.at(prefix_ + "." + l);
  return out;
}

NodeId Network::append(GraphBuilder& b, NodeId x, const std::string& name_prefix) const {
  const std::string p = name_prefix.empty() ? prefix_ : name_prefix;
  auto param = [&](const std::string& l) { return b.parameter(p + "." + l, params_.at(prefix_ + "." + l).shape()); };
  NodeId h;
  if (spec_.architecture == Architecture::kLinear) {
    h = b.affine(x, param("w"), param("b"));
  } else {
    h = b.affine(x, param("w1"), param("b1"));
    h = spec_.activation == Activation::kTanh ? b.tanh(h) : b.relu(h);
    h = b.affine(h, param("w2"), param("b2"));
  }
  return spec_.normalize_output ? b.l2_normalize(h) : h;
}

Tensor Network::forward_unnormalized(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != spec_.input_dim) {
    throw ShapeError("network expects rows of width " + std::to_string(spec_.input_dim) + ", got " +
                     shape_to_string(x.shape()));
  }
  if (spec_.architecture == Architecture::kLinear) {
    return affine_rows(x, params_.at(prefix_ + ".w"), params_.at(prefix_ + ".b"));
  }
  Tensor h = affine_rows(x, params_.at(prefix_ + ".w1"), params_.at(prefix_ + ".b1"));
  activate(h, spec_.activation);
  return affine_rows(h, params_.at(prefix_ + ".w2"), params_.at(prefix_ + ".b2"));
}

Tensor Network::forward(const Tensor& x) const {
  Tensor out = forward_unnormalized(x);
  return spec_.normalize_output ? l2_normalize_rows(out) : out;
}

double Network::lipschitz_estimate(const Tensor& reference) const {
  double bound = 1.0;
  if (spec_.architecture == Architecture::kLinear) {
    bound = linalg::spectral_norm(params_.at(prefix_ + ".w"));
  } else {
    bound = linalg::spectral_norm(params_.at(prefix_ + ".w1")) * linalg::spectral_norm(params_.at(prefix_ + ".w2"));
  }
  if (!spec_.normalize_output) return bound;
  const Tensor raw = forward_unnormalized(reference);
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < raw.rows(); ++r) smallest = std::min(smallest, norm(raw.row(r)));
  if (!(smallest > kNormEpsilon)) throw DegenerateEmbedding("embedding norm vanishes on the reference set");
  return bound / smallest;
}

Model Model::initialize(const NetworkSpec& encoder, const NetworkSpec* projector, std::uint64_t seed) {
  Model m;
  m.encoder = Network::initialize(encoder, "encoder", seed);
  if (projector) {
    NetworkSpec ps = *projector;
    if (ps.input_dim == 0) ps.input_dim = encoder.output_dim;
    if (ps.input_dim != encoder.output_dim) throw ShapeError("projector input width must equal encoder output width");
    m.has_projector = true;
    m.projector = Network::initialize(ps, "projector", seed);
  }
  return m;
}

TensorMap Model::parameters() const {
  TensorMap out = encoder.parameters();
  if (has_projector) out.insert(projector.parameters().begin(), projector.parameters().end());
  return out;
}

void Model::set_parameters(const TensorMap& values) {
  for (auto& [name, t] : encoder.parameters()) t = values.at(name);
  if (has_projector) {
    for (auto& [name, t] : projector.parameters()) t = values.at(name);
  }
}

NodeId Model::append_embedding(GraphBuilder& b, NodeId x, const std::string& name_prefix) const {
  const std::string pre = name_prefix.empty() ? "" : name_prefix + ".";
  NodeId z = encoder.append(b, x, pre + encoder.prefix());
  if (has_projector) z = projector.append(b, z, pre + projector.prefix());
  const bool normalized = has_projector ? projector.spec().normalize_output : encoder.spec().normalize_output;
  return normalized ? z : b.l2_normalize(z);
}

Tensor Model::embed(const Tensor& x) const {
  Tensor z = encoder.forward(x);
  if (has_projector) z = projector.forward(z);
  const bool normalized = has_projector ? projector.spec().normalize_output : encoder.spec().normalize_output;
  return normalized ? z : l2_normalize_rows(z);
}

}  // namespace arcl::train
