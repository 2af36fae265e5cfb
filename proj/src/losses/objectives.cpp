#include "arcl/losses/objectives.hpp"

#include <cmath>

#include "arcl/numcore/error.hpp"

namespace arcl::losses {

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::kInfoNCE: return "infonce";
    case Objective::kArCL: return "arcl";
    case Objective::kAAL: return "aal";
    case Objective::kMoCoArCL: return "moco-arcl";
  }
  return "?";
}

Objective parse_objective(const std::string& name) {
  if (name == "infonce") return Objective::kInfoNCE;
  if (name == "arcl") return Objective::kArCL;
  if (name == "aal") return Objective::kAAL;
  if (name == "moco-arcl" || name == "moco_arcl") return Objective::kMoCoArCL;
  throw InvalidArgument("unknown objective '" + name + "'");
}

void LossSpec::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InvalidArgument("temperature must be positive");
  if (views < 2) throw InvalidArgument("view count m must be at least 2");
  if (!(lambda_reg >= 0.0)) throw InvalidArgument("lambda_reg must be non-negative");
  if (objective == Objective::kInfoNCE && views != 2) {
    throw InvalidArgument("InfoNCE is a two-view objective; use m = 2 (or the aal/arcl objectives for m > 2)");
  }
}

ViewBatch ViewBatch::from_rows(const Tensor& rows, std::size_t n, std::size_t m) {
  if (rows.rank() != 2 || rows.rows() != n * m) throw ShapeError("view rows must be (N*m) x p");
  ViewBatch vb;
  vb.embeddings = rows.reshaped({n, m, rows.cols()});
  vb.origin_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) vb.origin_ids[i] = i;
  return vb;
}

void ViewBatch::validate() const {
  if (embeddings.rank() != 3) throw ShapeError("view batch must be N x m x p");
  if (views() < 2) throw InvalidArgument("view batch needs m >= 2");
  const Tensor r = rows();
  for (std::size_t i = 0; i < r.rows(); ++i) {
    if (std::abs(norm(r.row(i)) - 1.0) > 1e-9) throw InvalidArgument("view embeddings must be unit-norm");
  }
}

IndexGroups positive_groups(std::size_t n, std::size_t m, PairSet pairs) {
  const std::size_t width = n * m;
  IndexGroups groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        if (j == k || (pairs == PairSet::kUnordered && k < j)) continue;
        groups[i].push_back((i * m + j) * width + (i * m + k));
      }
    }
  }
  return groups;
}

IndexGroups simclr_negative_groups(std::size_t n, std::size_t m) {
  const std::size_t width = n * m;
  IndexGroups groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = i * m;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) groups[i].push_back(row * width + j * m);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) groups[i].push_back(row * width + j * m + 1);
    }
  }
  return groups;
}

IndexGroups queue_negative_groups(std::size_t n, std::size_t m, std::size_t queue_size) {
  IndexGroups groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < queue_size; ++q) groups[i].push_back(i * m * queue_size + q);
  }
  return groups;
}

namespace {

ObjectiveNodes finish(GraphBuilder& b, NodeId positive, NodeId lse, const LossSpec& spec) {
  ObjectiveNodes out;
  out.positive = positive;
  out.uniformity = lse;
  out.alignment_term = b.scale(b.mean(positive), 1.0 / spec.temperature);
  out.uniformity_term = b.mean(lse);
  out.loss = b.sub(b.scale(out.uniformity_term, spec.lambda_reg), out.alignment_term);
  return out;
}

}  // namespace

ObjectiveNodes add_simclr_objective(GraphBuilder& b, NodeId z, std::size_t n, const LossSpec& spec) {
  spec.validate();
  if (spec.objective == Objective::kMoCoArCL) throw InvalidArgument("MoCo objective needs the two-branch builder");
  if (n < 2) throw InvalidArgument("contrastive batch needs N >= 2 for negatives");
  const std::size_t m = spec.views;
  if (b.shape(z).size() != 2 || b.shape(z)[0] != n * m) throw ShapeError("view rows must be (N*m) x p");
  const NodeId sim = b.gram(z, z);
  auto groups = positive_groups(n, m, PairSet::kUnordered);
  const NodeId positive = spec.objective == Objective::kArCL ? b.group_min(sim, std::move(groups))
                                                             : b.group_mean(sim, std::move(groups));
  const NodeId lse = b.group_logsumexp(sim, simclr_negative_groups(n, m), 1.0 / spec.temperature);
  return finish(b, positive, lse, spec);
}

ObjectiveNodes add_moco_objective(GraphBuilder& b, NodeId zq, NodeId zk, NodeId queue, std::size_t n,
                                  const LossSpec& spec) {
  spec.validate();
  const std::size_t m = spec.views;
  if (b.shape(zq) != b.shape(zk) || b.shape(zq).size() != 2 || b.shape(zq)[0] != n * m) {
    throw ShapeError("query/key rows must both be (N*m) x p");
  }
  if (b.shape(queue).size() != 2 || b.shape(queue)[0] == 0) throw InvalidArgument("queue must be non-empty");
  const std::size_t q = b.shape(queue)[0];
  const NodeId cross = b.gram(zq, b.stop_gradient(zk));
  const NodeId positive = b.group_min(cross, positive_groups(n, m, PairSet::kOrdered));
  const NodeId qsim = b.gram(zq, b.stop_gradient(queue));
  const NodeId lse = b.group_logsumexp(qsim, queue_negative_groups(n, m, q), 1.0 / spec.temperature);
  return finish(b, positive, lse, spec);
}

namespace {

BatchLoss collect(const Evaluation& ev, const ObjectiveNodes& nodes, std::size_t n, std::size_t m, bool decode) {
  BatchLoss out;
  out.total = ev.value(nodes.loss).item();
  out.alignment = ev.value(nodes.alignment_term).item();
  out.uniformity = ev.value(nodes.uniformity_term).item();
  const Tensor& pos = ev.value(nodes.positive);
  out.positive.assign(pos.data().begin(), pos.data().end());
  if (decode) {
    const Selection* sel = ev.selection(nodes.positive);
    const std::size_t width = n * m;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t flat = sel->chosen[i];
      out.selected.emplace_back(flat / width - i * m, flat % width - i * m);
    }
  }
  return out;
}

BatchLoss single_branch(const ViewBatch& views, LossSpec spec) {
  views.validate();
  spec.views = views.views();
  const std::size_t n = views.samples(), m = views.views();
  if (n < 2) throw InvalidArgument("contrastive batch needs N >= 2 for negatives");
  GraphBuilder b;
  const NodeId z = b.input("z", {n * m, views.dim()});
  const auto nodes = add_simclr_objective(b, z, n, spec);
  const Graph g = b.build(nodes.loss);
  const auto ev = forward(g, {{"z", views.rows()}});
  auto out = collect(ev, nodes, n, m, spec.objective == Objective::kArCL);
  if (spec.objective == Objective::kInfoNCE) out.selected.assign(n, {0, 1});
  return out;
}

}  // namespace

BatchLoss infonce_batch(const ViewBatch& views, double temperature) {
  if (views.embeddings.rank() == 3 && views.views() != 2) throw InvalidArgument("InfoNCE takes exactly two views");
  return single_branch(views, {Objective::kInfoNCE, temperature, 2, 1.0});
}

BatchLoss arcl_batch(const ViewBatch& views, double temperature) {
  return single_branch(views, {Objective::kArCL, temperature, 2, 1.0});
}

BatchLoss aal_batch(const ViewBatch& views, double temperature) {
  return single_branch(views, {Objective::kAAL, temperature, 2, 1.0});
}

BatchLoss batch_loss(const ViewBatch& views, const LossSpec& spec) { return single_branch(views, spec); }

BatchLoss moco_arcl_batch(const ViewBatch& query, const ViewBatch& key, const Tensor& queue, double temperature) {
  query.validate();
  key.validate();
  if (query.embeddings.shape() != key.embeddings.shape()) throw ShapeError("query and key batches differ in shape");
  if (queue.rank() != 2 || queue.rows() == 0) throw InvalidArgument("queue must be non-empty");
  if (queue.cols() != query.dim()) throw ShapeError("queue dimension differs from embedding dimension");
  const std::size_t n = query.samples(), m = query.views();
  LossSpec spec{Objective::kMoCoArCL, temperature, m, 1.0};
  GraphBuilder b;
  const NodeId zq = b.input("zq", {n * m, query.dim()});
  const NodeId zk = b.input("zk", {n * m, query.dim()});
  const NodeId qu = b.input("queue", queue.shape());
  const auto nodes = add_moco_objective(b, zq, zk, qu, n, spec);
  const Graph g = b.build(nodes.loss);
  const auto ev = forward(g, {{"zq", query.rows()}, {"zk", key.rows()}, {"queue", queue}});
  return collect(ev, nodes, n, m, true);
}

}  // namespace arcl::losses
