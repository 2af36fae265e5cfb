#include "arcl/train/trainer.hpp"

#include <cmath>
#include <numeric>

#include "arcl/losses/alignment.hpp"
#include "arcl/numcore/rng.hpp"

namespace arcl::train {

using losses::LossSpec;
using losses::Objective;

void OptConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("learning rate must be non-negative and finite");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (batch_size < 2) throw InvalidArgument("batch size N must be at least 2");
  if (epochs < 1) throw InvalidArgument("epoch count T must be at least 1");
}

nlohmann::json OptConfig::to_json() const {
  return {{"lr", lr},
          {"schedule", schedule == LrSchedule::kConstant ? "constant" : "cosine"},
          {"momentum", momentum},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed}};
}

OptConfig OptConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("optimizer config must be an object");
  OptConfig o;
  for (const auto& [key, value] : j.items()) {
    if (key == "lr") {
      o.lr = value.get<double>();
    } else if (key == "schedule") {
      const auto s = value.get<std::string>();
      if (s == "constant") {
        o.schedule = LrSchedule::kConstant;
      } else if (s == "cosine") {
        o.schedule = LrSchedule::kCosine;
      } else {
        throw InvalidArgument("unknown lr schedule '" + s + "'");
      }
    } else if (key == "momentum") {
      o.momentum = value.get<double>();
    } else if (key == "batch_size") {
      o.batch_size = value.get<std::size_t>();
    } else if (key == "epochs") {
      o.epochs = value.get<std::size_t>();
    } else if (key == "seed") {
      o.seed = value.get<std::uint64_t>();
    } else {
      throw InvalidArgument("unknown optimizer key '" + key + "'");
    }
  }
  return o;
}

nlohmann::json MoCoConfig::to_json() const {
  return {{"queue_capacity", queue_capacity}, {"key_momentum", key_momentum}, {"enqueue_all_views", enqueue_all_views}};
}

MoCoConfig MoCoConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("moco config must be an object");
  MoCoConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "queue_capacity") {
      c.queue_capacity = value.get<std::size_t>();
    } else if (key == "key_momentum") {
      c.key_momentum = value.get<double>();
    } else if (key == "enqueue_all_views") {
      c.enqueue_all_views = value.get<bool>();
    } else {
      throw InvalidArgument("unknown moco key '" + key + "'");
    }
  }
  return c;
}

nlohmann::json DivergenceSnapshot::to_json() const {
  nlohmann::json norms = nlohmann::json::object();
  for (const auto& [name, v] : parameter_norms) norms[name] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("non-finite");
  return {{"epoch", epoch}, {"batch", batch}, {"lr", lr}, {"parameter_norms", norms}, {"detail", detail}};
}

TrainingDiverged::TrainingDiverged(DivergenceSnapshot snapshot)
    : NumericalError("training diverged at epoch " + std::to_string(snapshot.epoch) + ", batch " +
                     std::to_string(snapshot.batch) + " (lr " + std::to_string(snapshot.lr) + "): " + snapshot.detail),
      snapshot_(std::move(snapshot)) {}

TensorMap key_parameters(const Model& model) {
  TensorMap out = model.encoder.parameters_as("key." + model.encoder.prefix());
  if (model.has_projector) {
    TensorMap p = model.projector.parameters_as("key." + model.projector.prefix());
    out.insert(p.begin(), p.end());
  }
  return out;
}

TrainingGraph build_training_graph(const Model& model, std::size_t n, const LossSpec& spec, std::size_t queue_size) {
  spec.validate();
  const std::size_t m = spec.views;
  GraphBuilder b;
  TrainingGraph tg;
  const NodeId x = b.input("views", {n * m, model.encoder.spec().input_dim});
  tg.query_embedding = model.append_embedding(b, x);
  if (spec.objective == Objective::kMoCoArCL) {
    if (queue_size == 0) throw InvalidArgument("MoCo objective needs a non-empty queue");
    const std::size_t p = b.shape(tg.query_embedding).at(1);
    tg.key_embedding = model.append_embedding(b, x, "key");
    const NodeId queue = b.input("queue", {queue_size, p});
    tg.nodes = losses::add_moco_objective(b, tg.query_embedding, tg.key_embedding, queue, n, spec);
  } else {
    tg.nodes = losses::add_simclr_objective(b, tg.query_embedding, n, spec);
  }
  tg.graph = b.build(tg.nodes.loss);
  return tg;
}

namespace {

std::map<std::string, double> parameter_norms(const TensorMap& params) {
  std::map<std::string, double> out;
  for (const auto& [name, t] : params) out[name] = norm(t.data());
  return out;
}

bool all_finite(const TensorMap& m) {
  for (const auto& [name, t] : m) {
    if (!t.all_finite()) return false;
  }
  return true;
}

}  // namespace

TrainResult train(Model model, const data::Dataset& dataset, const data::TransformationFamily& family,
                  const LossSpec& spec, const OptConfig& opt, const MoCoConfig& moco, const MonitorConfig& monitor) {
  spec.validate();
  opt.validate();
  dataset.validate();
  if (dataset.dim() != model.encoder.spec().input_dim) {
    throw ShapeError("dataset dimension " + std::to_string(dataset.dim()) + " does not match encoder input " +
                     std::to_string(model.encoder.spec().input_dim));
  }
  if (family.data_dim() != dataset.dim()) {
    throw ShapeError("family acts on dimension " + std::to_string(family.data_dim()) + ", dataset has " +
                     std::to_string(dataset.dim()));
  }
  if (dataset.size() < 2) throw InvalidArgument("training needs at least two samples");

  const std::size_t m = spec.views;
  const bool use_moco = spec.objective == Objective::kMoCoArCL;
  const std::size_t d = dataset.dim();

  TrainResult result;
  TensorMap params = model.parameters();
  TensorMap velocity;
  if (use_moco) {
    if (!(moco.key_momentum >= 0.0 && moco.key_momentum < 1.0)) throw InvalidArgument("key momentum must lie in [0, 1)");
    const std::size_t p = model.embed(dataset.samples.reshaped({dataset.size(), d})).cols();
    result.moco.key_parameters = key_parameters(model);
    result.moco.queue = KeyQueue::random(moco.queue_capacity, p, derive_seed(opt.seed, "queue"));
    result.moco.momentum = moco.key_momentum;
    result.moco.enqueue_all_views = moco.enqueue_all_views;
  }

  std::map<std::size_t, TrainingGraph> graphs;
  auto graph_for = [&](std::size_t n) -> const TrainingGraph& {
    auto it = graphs.find(n);
    if (it == graphs.end()) {
      it = graphs.emplace(n, build_training_graph(model, n, spec, use_moco ? moco.queue_capacity : 0)).first;
    }
    return it->second;
  };

  data::Dataset monitor_set;
  if (monitor.samples > 0) {
    std::vector<std::size_t> rows(std::min(monitor.samples, dataset.size()));
    std::iota(rows.begin(), rows.end(), 0);
    monitor_set = dataset.subset(rows);
  }
  const std::size_t monitor_views = std::max<std::size_t>(2, monitor.views ? monitor.views : m);
  const std::uint64_t monitor_seed = derive_seed(opt.seed, "monitor");

  Rng rng(derive_seed(opt.seed, "train"));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    const double lr = learning_rate(opt.schedule, opt.lr, epoch, opt.epochs);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += opt.batch_size, ++batch) {
      const std::size_t n = std::min(opt.batch_size, order.size() - start);
      if (n < 2) break;
      Tensor views({n * m, d});
      for (std::size_t i = 0; i < n; ++i) {
        const auto x = dataset.samples.row(order[start + i]);
        const auto ts = data::sample_transformations(family, m, rng);
        for (std::size_t j = 0; j < m; ++j) ts[j].apply(x, views.row(i * m + j));
      }

      auto fail = [&](const std::string& detail) {
        DivergenceSnapshot s{epoch + 1, batch, lr, parameter_norms(params), detail};
        throw TrainingDiverged(std::move(s));
      };

      const TrainingGraph& tg = graph_for(n);
      TensorMap bindings = params;
      bindings["views"] = views;
      if (use_moco) {
        bindings.insert(result.moco.key_parameters.begin(), result.moco.key_parameters.end());
        bindings["queue"] = result.moco.queue.contents();
      }
      GradientResult gr;
      try {
        gr = value_and_gradient(tg.graph, bindings, tg.nodes.loss);
      } catch (const NumericalError& e) {
        fail(e.what());
      } catch (const DegenerateEmbedding& e) {
        fail(e.what());
      }
      if (!std::isfinite(gr.loss)) fail("non-finite loss");

      TensorMap grads;
      for (const auto& [name, _] : params) grads[name] = gr.gradients.at(name);
      if (!all_finite(grads)) fail("non-finite gradient");
      sgd_step(params, grads, lr, opt.momentum, velocity);
      if (!all_finite(params)) fail("non-finite parameter after update");

      if (use_moco) {
        momentum_update(result.moco.key_parameters, params, result.moco.momentum);
        const Tensor& keys = gr.evaluation.value(tg.key_embedding);
        if (result.moco.enqueue_all_views) {
          result.moco.queue.push(keys);
        } else {
          Tensor first({n, keys.cols()});
          for (std::size_t i = 0; i < n; ++i) std::copy(keys.row(i * m).begin(), keys.row(i * m).end(), first.row(i).begin());
          result.moco.queue.push(first);
        }
      }
      loss_sum += gr.loss;
      ++batches;
    }

    model.set_parameters(params);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    rec.lr = lr;
    if (monitor.samples > 0) {
      const losses::FeatureMap f = [&model](const Tensor& x) { return model.encoder.forward(x); };
      rec.ar_hat = losses::ar_loss_empirical(f, monitor_set, family, monitor_views, monitor_seed);
      rec.alignment = losses::alignment_loss(f, monitor_set, family, 1, monitor_seed).mean;
    }
    result.history.push_back(rec);
  }
  result.model = std::move(model);
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,loss,ar_hat,alignment,lr\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << data::format_double(r.loss) << ',' << data::format_double(r.ar_hat) << ','
        << data::format_double(r.alignment) << ',' << data::format_double(r.lr) << '\n';
  }
}

}  // namespace arcl::train
