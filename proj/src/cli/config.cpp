#include "arcl/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "arcl/data/generators.hpp"
#include "arcl/numcore/error.hpp"
#include "arcl/numcore/rng.hpp"

namespace arcl::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw SchemaError("unknown key '" + it.key() + "' in " + where);
  }
}

// Runs `fn`, turning library and json errors into schema errors tagged with
// the section they came from.
template <typename Fn>
auto in_section(const std::string& section, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const SchemaError&) {
    throw;
  } catch (const json::exception& e) {
    throw SchemaError(section + ": " + e.what());
  } catch (const Error& e) {
    throw SchemaError(section + ": " + e.what());
  }
}

// Validates a generator spec by building an instance of it (at most 4096
// rows); returns the sample dimension.
std::size_t checked_dim(const json& spec, const std::string& where) {
  return in_section(where, [&] {
    if (!spec.is_object()) throw SchemaError(where + " must be an object");
    json probe = spec;
    const auto n = spec.at("n").get<long long>();
    if (n <= 0) throw SchemaError(where + ": n must be positive");
    probe["n"] = std::min<long long>(n, 4096);
    return data::generate(probe, 0).dim();
  });
}

DomainSpec parse_domain(const json& j, const data::TransformationFamily& family, std::size_t index) {
  const std::string where = "evaluation.domains[" + std::to_string(index) + "]";
  reject_unknown(j, {"name", "theta", "dataset"}, where);
  DomainSpec d;
  d.name = in_section(where, [&] { return j.at("name").get<std::string>(); });
  if (d.name.empty()) throw SchemaError(where + ": empty name");
  if (j.contains("theta") == j.contains("dataset")) {
    throw SchemaError(where + ": exactly one of 'theta' and 'dataset' is required");
  }
  if (j.contains("theta")) {
    const auto& t = j.at("theta");
    if (t.is_string()) {
      if (t.get<std::string>() != "identity") throw SchemaError(where + ": theta must be a list or \"identity\"");
      d.theta = family.identity_parameter();
    } else {
      d.theta = in_section(where, [&] { return t.get<data::Parameter>(); });
      if (!family.contains(*d.theta)) throw SchemaError(where + ": theta outside the family's parameter set");
    }
  } else {
    checked_dim(j.at("dataset"), where + ".dataset");
    d.dataset = j.at("dataset");
  }
  return d;
}

json domain_to_json(const DomainSpec& d) {
  json j{{"name", d.name}};
  if (d.theta) j["theta"] = *d.theta;
  if (d.dataset) j["dataset"] = *d.dataset;
  return j;
}

DiagnosticsSpec parse_diagnostics(const json& j) {
  reject_unknown(j,
                 {"grid", "grid_size", "views", "repeats", "view_mode", "delta", "transformation_samples", "c1", "c2",
                  "repetitions", "alignment_pair_draws", "samples", "epsilon", "toy_n"},
                 "evaluation.diagnostics");
  return in_section("evaluation.diagnostics", [&] {
    DiagnosticsSpec d;
    d.grid = j.value("grid", d.grid);
    d.grid_size = j.value("grid_size", d.grid_size);
    d.views = j.value("views", d.views);
    d.repeats = j.value("repeats", d.repeats);
    d.view_mode = j.value("view_mode", d.view_mode);
    d.delta = j.value("delta", d.delta);
    d.transformation_samples = j.value("transformation_samples", d.transformation_samples);
    d.c1 = j.value("c1", d.c1);
    d.c2 = j.value("c2", d.c2);
    d.repetitions = j.value("repetitions", d.repetitions);
    d.alignment_pair_draws = j.value("alignment_pair_draws", d.alignment_pair_draws);
    d.samples = j.value("samples", d.samples);
    d.epsilon = j.value("epsilon", d.epsilon);
    d.toy_n = j.value("toy_n", d.toy_n);
    if (d.grid_size < 2) throw SchemaError("evaluation.diagnostics: grid_size must be at least 2");
    if (d.view_mode != "iid" && d.view_mode != "exhaustive") {
      throw SchemaError("evaluation.diagnostics: view_mode must be iid or exhaustive");
    }
    if (d.views.empty()) throw SchemaError("evaluation.diagnostics: views must be non-empty");
    if (d.repeats == 0 || d.repetitions == 0 || d.alignment_pair_draws == 0) {
      throw SchemaError("evaluation.diagnostics: counts must be positive");
    }
    if (!(d.delta >= 0.0)) throw SchemaError("evaluation.diagnostics: delta must be non-negative");
    if (!(d.epsilon > 0.0)) throw SchemaError("evaluation.diagnostics: epsilon must be positive");
    return d;
  });
}

json diagnostics_to_json(const DiagnosticsSpec& d) {
  return json{{"grid", d.grid},
              {"grid_size", d.grid_size},
              {"views", d.views},
              {"repeats", d.repeats},
              {"view_mode", d.view_mode},
              {"delta", d.delta},
              {"transformation_samples", d.transformation_samples},
              {"c1", d.c1},
              {"c2", d.c2},
              {"repetitions", d.repetitions},
              {"alignment_pair_draws", d.alignment_pair_draws},
              {"samples", d.samples},
              {"epsilon", d.epsilon},
              {"toy_n", d.toy_n}};
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

losses::LossSpec loss_from_json(const json& j) {
  reject_unknown(j, {"objective", "temperature", "views", "lambda_reg"}, "loss");
  return in_section("loss", [&] {
    losses::LossSpec s;
    if (j.contains("objective")) s.objective = losses::parse_objective(j.at("objective").get<std::string>());
    s.temperature = j.value("temperature", s.temperature);
    s.views = j.value("views", s.views);
    s.lambda_reg = j.value("lambda_reg", s.lambda_reg);
    s.validate();
    return s;
  });
}

json loss_to_json(const losses::LossSpec& s) {
  return json{{"objective", losses::objective_name(s.objective)},
              {"temperature", s.temperature},
              {"views", s.views},
              {"lambda_reg", s.lambda_reg}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"schema", "version", "name", "seed", "dataset", "family", "encoder", "projector", "loss",
                  "optimizer", "moco", "monitor", "evaluation", "output"},
                 "config");
  if (j.value("schema", std::string(kConfigSchema)) != kConfigSchema) {
    throw SchemaError("config: schema must be \"" + std::string(kConfigSchema) + "\"");
  }
  if (!j.contains("version")) throw SchemaError("config: missing 'version'");
  if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kConfigVersion) {
    throw SchemaError("config: unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  }
  for (const char* required : {"dataset", "family", "encoder"}) {
    if (!j.contains(required)) throw SchemaError(std::string("config: missing '") + required + "'");
  }

  ExperimentConfig c;
  c.name = in_section("name", [&] { return j.value("name", std::string()); });
  c.seed = in_section("seed", [&] { return j.value("seed", std::uint64_t{0}); });
  c.output = in_section("output", [&] { return j.value("output", std::string()); });

  c.dataset = j.at("dataset");
  const std::size_t dim = checked_dim(c.dataset, "dataset");

  c.family = in_section("family", [&] { return data::TransformationFamily::from_json(j.at("family")); });
  if (c.family.data_dim() != dim) {
    throw SchemaError("family: acts on dimension " + std::to_string(c.family.data_dim()) + " but the dataset has " +
                      std::to_string(dim));
  }
  c.family_json = c.family.to_json();

  c.encoder = in_section("encoder", [&] { return train::NetworkSpec::from_json(j.at("encoder")); });
  if (c.encoder.input_dim == 0) c.encoder.input_dim = dim;
  if (c.encoder.input_dim != dim) throw SchemaError("encoder: input_dim does not match the dataset dimension");
  in_section("encoder", [&] { c.encoder.validate(); return 0; });

  if (j.contains("projector") && !j.at("projector").is_null()) {
    auto p = in_section("projector", [&] { return train::NetworkSpec::from_json(j.at("projector")); });
    if (p.input_dim == 0) p.input_dim = c.encoder.output_dim;
    if (p.input_dim != c.encoder.output_dim) throw SchemaError("projector: input_dim must equal encoder output_dim");
    in_section("projector", [&] { p.validate(); return 0; });
    c.projector = p;
  }

  c.loss = loss_from_json(j.value("loss", json::object()));

  if (j.contains("optimizer")) {
    reject_unknown(j.at("optimizer"), {"lr", "schedule", "momentum", "batch_size", "epochs"}, "optimizer");
  }
  c.optimizer = in_section("optimizer", [&] {
    auto o = train::OptConfig::from_json(j.value("optimizer", json::object()));
    o.validate();
    return o;
  });

  if (j.contains("moco")) {
    reject_unknown(j.at("moco"), {"queue_capacity", "key_momentum", "enqueue_all_views"}, "moco");
  }
  c.moco = in_section("moco", [&] { return train::MoCoConfig::from_json(j.value("moco", json::object())); });
  if (c.moco.queue_capacity == 0) throw SchemaError("moco: queue_capacity must be positive");
  if (!(c.moco.key_momentum >= 0.0 && c.moco.key_momentum < 1.0)) {
    throw SchemaError("moco: key_momentum must be in [0, 1)");
  }

  const json monitor = j.value("monitor", json::object());
  reject_unknown(monitor, {"samples", "views"}, "monitor");
  in_section("monitor", [&] {
    c.monitor.samples = monitor.value("samples", c.monitor.samples);
    c.monitor.views = monitor.value("views", c.monitor.views);
    return 0;
  });

  const json ev = j.value("evaluation", json::object());
  reject_unknown(ev, {"dataset", "features", "intercept", "domains", "diagnostics"}, "evaluation");
  if (ev.contains("dataset")) {
    c.evaluation.dataset = ev.at("dataset");
    if (checked_dim(*c.evaluation.dataset, "evaluation.dataset") != dim) {
      throw SchemaError("evaluation.dataset: dimension differs from the training dataset");
    }
  }
  in_section("evaluation", [&] {
    c.evaluation.features = ev.value("features", c.evaluation.features);
    c.evaluation.intercept = ev.value("intercept", c.evaluation.intercept);
    return 0;
  });
  if (c.evaluation.features != "encoder" && c.evaluation.features != "embedding") {
    throw SchemaError("evaluation.features must be \"encoder\" or \"embedding\"");
  }
  if (ev.contains("domains")) {
    if (!ev.at("domains").is_array()) throw SchemaError("evaluation.domains must be a list");
    std::size_t i = 0;
    for (const auto& d : ev.at("domains")) {
      c.evaluation.domains.push_back(parse_domain(d, c.family, i++));
      if (c.evaluation.domains.back().dataset &&
          checked_dim(*c.evaluation.domains.back().dataset, "evaluation.domains") != dim) {
        throw SchemaError("evaluation.domains: dataset dimension differs from the training dataset");
      }
    }
  } else {
    c.evaluation.domains.push_back({"identity", c.family.identity_parameter(), std::nullopt});
  }
  for (std::size_t a = 0; a < c.evaluation.domains.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (c.evaluation.domains[a].name == c.evaluation.domains[b].name) {
        throw SchemaError("evaluation.domains: duplicate name '" + c.evaluation.domains[a].name + "'");
      }
    }
  }
  c.evaluation.diagnostics = parse_diagnostics(ev.value("diagnostics", json::object()));
  for (const auto& theta : c.evaluation.diagnostics.grid) {
    if (!c.family.contains(theta)) throw SchemaError("evaluation.diagnostics.grid: member outside the family");
  }

  // Canonical document. The output directory is left out so that the hash,
  // and every file that embeds it, does not depend on where a run is written.
  json doc{{"schema", kConfigSchema},
           {"version", kConfigVersion},
           {"name", c.name},
           {"seed", c.seed},
           {"dataset", c.dataset},
           {"family", c.family_json},
           {"encoder", c.encoder.to_json()},
           {"projector", c.projector ? c.projector->to_json() : json(nullptr)},
           {"loss", loss_to_json(c.loss)},
           {"optimizer", c.optimizer.to_json()},
           {"moco", c.moco.to_json()},
           {"monitor", {{"samples", c.monitor.samples}, {"views", c.monitor.views}}}};
  doc["optimizer"].erase("seed");
  json evaluation{{"features", c.evaluation.features},
                  {"intercept", c.evaluation.intercept},
                  {"domains", json::array()},
                  {"diagnostics", diagnostics_to_json(c.evaluation.diagnostics)}};
  if (c.evaluation.dataset) evaluation["dataset"] = *c.evaluation.dataset;
  for (const auto& d : c.evaluation.domains) evaluation["domains"].push_back(domain_to_json(d));
  doc["evaluation"] = evaluation;
  c.document = doc;
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  document["seed"] = s;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(document.dump()); }

std::string ExperimentConfig::label() const {
  if (!name.empty()) return name;
  return std::string(losses::objective_name(loss.objective)) + "-m" + std::to_string(loss.views);
}

std::uint64_t ExperimentConfig::stage_seed(const std::string& stage) const { return derive_seed(seed, stage); }

}  // namespace arcl::cli
