#include "arcl/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "arcl/data/generators.hpp"
#include "arcl/data/transform.hpp"
#include "arcl/eval/probe.hpp"
#include "arcl/eval/sigma_delta.hpp"
#include "arcl/numcore/error.hpp"
#include "arcl/numcore/rng.hpp"
#include "arcl/train/checkpoint.hpp"

namespace arcl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string fmt(double v) { return data::format_double(v); }

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

json stamped(json report, const std::string& hash, std::uint64_t seed) {
  report["config_hash"] = hash;
  report["seed"] = seed;
  return report;
}

std::string csv_stamp(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

std::vector<std::size_t> require_labels(const data::Dataset& ds, const std::string& what) {
  if (!ds.labeled()) throw InvalidArgument(what + " is unlabeled; probes need class labels");
  return *ds.labels;
}

data::Dataset first_rows(const data::Dataset& ds, std::size_t samples) {
  if (samples == 0 || samples >= ds.size()) return ds;
  std::vector<std::size_t> rows(samples);
  for (std::size_t i = 0; i < samples; ++i) rows[i] = i;
  return ds.subset(rows);
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// Everything a command learned that goes into manifest.json.
struct Manifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  json stage_seeds = json::object();
  json extra = json::object();
};

void write_manifest(const fs::path& dir, const Manifest& m, double seconds) {
  const fs::path path = dir / "manifest.json";
  json doc = json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      doc = json::parse(in);
    } catch (const json::exception&) {
      doc = json::object();
    }
    if (!doc.is_object()) doc = json::object();
  }
  doc["tool"] = "arcl";
  doc["version"] = kToolVersion;
  doc["formats"] = {{"config", kConfigVersion}, {"checkpoint", 1}};
  json run{{"config_hash", m.config_hash},
           {"seed", m.seed},
           {"artifacts", m.artifacts},
           {"stage_seeds", m.stage_seeds},
           {"wall_clock_seconds", seconds},
           {"finished_at", utc_now()}};
  for (const auto& [k, v] : m.extra.items()) run[k] = v;
  doc["runs"][m.command] = run;
  write_file(path, doc.dump(2) + "\n");
}

json stage_seeds(const ExperimentConfig& c, std::initializer_list<const char*> stages) {
  json j = json::object();
  for (const char* s : stages) j[s] = c.stage_seed(s);
  return j;
}

// Probe data of a domain.
struct DomainDraws {
  data::Dataset fit;
  data::Dataset test;
};

DomainDraws domain_draws(const ExperimentConfig& c, const DomainSpec& d) {
  if (d.dataset) {
    return {data::generate(*d.dataset, c.stage_seed("domain-fit/" + d.name)),
            data::generate(*d.dataset, c.stage_seed("domain-test/" + d.name))};
  }
  const json& base = c.evaluation.dataset ? *c.evaluation.dataset : c.dataset;
  const auto t = c.family.realize(*d.theta);
  return {data::induce_domain(data::generate(base, c.stage_seed("domain-fit")), t),
          data::induce_domain(data::generate(base, c.stage_seed("domain-test")), t)};
}

double feature_lipschitz(const ExperimentConfig& c, const train::Model& model, const Tensor& x) {
  const double enc = model.encoder.lipschitz_estimate(x);
  if (c.evaluation.features == "encoder" || !model.has_projector) return enc;
  return enc * model.projector.lipschitz_estimate(model.encoder.forward(x));
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw SchemaError("expected a comma-separated list of positive integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw SchemaError("empty list '" + text + "'");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(item, &pos);
      if (pos != item.size() || item[0] == '-') throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw SchemaError("expected a comma-separated list of seeds, got '" + text + "'");
    }
  }
  if (out.empty()) throw SchemaError("empty seed list");
  return out;
}

// Role names of the diagnostics, with the alternative names accepted on the
// command line.
std::string canonical_diagnostic(const std::string& which) {
  static const std::map<std::string, std::string> aliases{
      {"toy", "toy"},
      {"counterexample", "toy"},
      {"lemma1", "augmented-risk"},
      {"augmented-risk", "augmented-risk"},
      {"theorem1", "center-margin"},
      {"center-margin", "center-margin"},
      {"theorem2", "risk-gap"},
      {"risk-gap", "risk-gap"},
      {"sigma-delta", "sigma-delta"},
      {"view-scaling", "view-scaling"},
  };
  const auto it = aliases.find(which);
  if (it == aliases.end()) throw SchemaError("unknown diagnostic '" + which + "'");
  return it->second;
}

// Command-line state shared by the subcommands.
struct Options {
  std::vector<std::string> configs;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string format = "json";
  std::string checkpoint;
  std::string which;
  double epsilon = 0.0;
  bool epsilon_set = false;
  std::size_t n = 0;
  std::string m_list;
  std::size_t repeats = 0;
  double delta = -1.0;
  std::string seeds;
};

ExperimentConfig load_config(const Options& o) {
  if (o.configs.empty()) throw SchemaError("--config is required");
  if (o.configs.size() > 1) throw SchemaError("this command takes a single --config");
  auto c = ExperimentConfig::load(o.configs.front());
  if (o.seed_set) c.set_seed(o.seed);
  return c;
}

fs::path output_dir(const Options& o, const ExperimentConfig* c) {
  if (!o.out.empty()) return o.out;
  if (c && !c->output.empty()) return c->output;
  throw SchemaError("no output directory: pass --out or set 'output' in the config");
}

train::Model load_checkpoint_for(const Options& o, const fs::path& dir) {
  const fs::path path = o.checkpoint.empty() ? dir / "checkpoint.json" : fs::path(o.checkpoint);
  if (!fs::exists(path)) throw InvalidArgument("checkpoint '" + path.string() + "' not found (pass --checkpoint)");
  return train::load_model(path);
}

// --------------------------------------------------------------------------

int cmd_gen(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto c = load_config(o);
  const fs::path dir = output_dir(o, &c);
  const auto ds = training_data(c);
  const fs::path file = dir / "dataset.csv";
  write_file(file, data::format_dataset(ds, {{"config_hash", c.hash()}, {"master_seed", c.seed}}));
  out << file.string() << "\n";
  Manifest m{"gen", c.hash(), c.seed, {"dataset.csv"}, stage_seeds(c, {"data"}), {}};
  write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto c = load_config(o);
  const fs::path dir = output_dir(o, &c);
  Manifest m{"train", c.hash(), c.seed, {}, stage_seeds(c, {"data", "init", "train"}), {}};
  train::TrainResult result;
  try {
    result = run_training(c);
  } catch (const train::TrainingDiverged& e) {
    write_file(dir / "divergence.json", stamped(e.snapshot().to_json(), c.hash(), c.seed).dump(2) + "\n");
    m.artifacts = {"divergence.json"};
    m.extra["status"] = "diverged";
    write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    throw;
  }
  fs::create_directories(dir);
  train::save_model(dir / "checkpoint.json", result.model,
                    {{"config_hash", c.hash()}, {"seed", c.seed}, {"config", c.document}});
  std::ostringstream csv;
  csv << csv_stamp(c.hash(), c.seed);
  train::write_history_csv(csv, result.history);
  write_file(dir / "history.csv", csv.str());
  m.artifacts = {"checkpoint.json", "checkpoint.bin", "history.csv"};
  for (const auto& a : m.artifacts) out << (dir / a).string() << "\n";
  write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return kExitOk;
}

int cmd_probe(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto c = load_config(o);
  const fs::path dir = output_dir(o, &c);
  const auto model = load_checkpoint_for(o, dir);
  const auto summary = probe_domains(c, model);

  Manifest m{"probe", c.hash(), c.seed, {}, stage_seeds(c, {"domain-fit", "domain-test"}), {}};
  if (o.format == "json") {
    write_file(dir / "probe.json", stamped(summary.to_json(), c.hash(), c.seed).dump(2) + "\n");
    m.artifacts.push_back("probe.json");
  } else {
    std::ostringstream csv;
    csv << csv_stamp(c.hash(), c.seed);
    csv << "domain,kind,fit_size,test_size,fit_accuracy,test_accuracy,test_square_risk\n";
    for (const auto& d : summary.domains) {
      csv << d.name << ',' << d.kind << ',' << d.fit_size << ',' << d.test_size << ',' << fmt(d.fit_accuracy) << ','
          << fmt(d.test_accuracy) << ',' << fmt(d.test_square_risk) << '\n';
    }
    write_file(dir / "probe.csv", csv.str());
    m.artifacts.push_back("probe.csv");
    if (summary.transfer) {
      std::ostringstream t;
      t << csv_stamp(c.hash(), c.seed);
      summary.transfer->write_csv(t);
      write_file(dir / "transfer.csv", t.str());
      m.artifacts.push_back("transfer.csv");
    }
  }
  for (const auto& a : m.artifacts) out << (dir / a).string() << "\n";
  write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return kExitOk;
}

int cmd_diagnose(const Options& o, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const std::string which = canonical_diagnostic(o.which);

  // The closed-form counterexample needs no config or model.
  if (which == "toy") {
    std::optional<ExperimentConfig> c;
    if (!o.configs.empty()) c = load_config(o);
    double eps = c ? c->evaluation.diagnostics.epsilon : 0.04;
    std::size_t n = c ? c->evaluation.diagnostics.toy_n : 100000;
    std::uint64_t seed = c ? c->seed : 0;
    if (o.epsilon_set) eps = o.epsilon;
    if (o.n > 0) n = o.n;
    if (o.seed_set) seed = o.seed;
    if (!(eps > 0.0) || !std::isfinite(eps)) throw SchemaError("--epsilon must be positive");
    const std::string hash = fnv1a_hex(json{{"diagnostic", "toy"}, {"epsilon", eps}, {"n", n}}.dump());
    const fs::path dir = output_dir(o, c ? &*c : nullptr);
    const auto report = eval::toy_counterexample(eps, n, seed);
    Manifest m{"diagnose-toy", hash, seed, {}, {{"data", derive_seed(seed, "data")}}, {}};
    if (o.format == "json") {
      write_file(dir / "toy.json", stamped(report.to_json(), hash, seed).dump(2) + "\n");
      m.artifacts.push_back("toy.json");
    } else {
      std::ostringstream csv;
      csv << csv_stamp(hash, seed) << "source,quantity,value,standard_error\n";
      csv << "analytic,align," << fmt(report.analytic_alignment) << ",0\n";
      csv << "analytic,risk0," << fmt(report.analytic_risk_identity) << ",0\n";
      csv << "analytic,risk1," << fmt(report.analytic_risk_scaled) << ",0\n";
      csv << "empirical,align," << fmt(report.empirical_alignment.mean) << ','
          << fmt(report.empirical_alignment.standard_error) << '\n';
      csv << "empirical,risk0," << fmt(report.empirical_risk_identity) << ",\n";
      csv << "empirical,risk1," << fmt(report.empirical_risk_scaled) << ",\n";
      write_file(dir / "toy.csv", csv.str());
      m.artifacts.push_back("toy.csv");
    }
    for (const auto& a : m.artifacts) out << (dir / a).string() << "\n";
    write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return kExitOk;
  }

  auto c = load_config(o);
  auto& diag = c.evaluation.diagnostics;
  if (o.delta >= 0.0) diag.delta = o.delta;
  if (o.repeats > 0) diag.repeats = o.repeats;
  if (!o.m_list.empty()) diag.views = parse_list(o.m_list);
  const fs::path dir = output_dir(o, &c);
  const auto ds = evaluation_data(c, diag.samples);
  Manifest m{"diagnose-" + which, c.hash(), c.seed, {}, stage_seeds(c, {"eval-data"}), {}};

  json report_json;
  std::string csv_body;
  int code = kExitOk;

  if (which == "sigma-delta") {
    const auto sd = eval::estimate_sigma_delta(ds, c.family, diag.delta, diag.transformation_samples,
                                               c.stage_seed("sigma-delta"));
    m.stage_seeds["sigma-delta"] = c.stage_seed("sigma-delta");
    report_json = sd.to_json();
    std::ostringstream csv;
    csv << "class,size,subset_size,sigma,method\n";
    const auto members = ds.class_members();
    for (std::size_t k = 0; k < sd.class_sigma.size(); ++k) {
      csv << k << ',' << members[k].size() << ',' << sd.subsets[k].size() << ',' << fmt(sd.class_sigma[k]) << ','
          << sd.method[k] << '\n';
    }
    csv_body = csv.str();
  } else {
    const auto model = load_checkpoint_for(o, dir);
    const auto f = feature_map(c, model);
    const std::size_t classes = ds.class_count;
    const auto labels = require_labels(ds, "evaluation data");
    eval::BoundReport report;
    if (which == "risk-gap") {
      const auto fam = finite_family(c);
      eval::ProbeOptions po;
      po.intercept = false;
      const auto head = eval::linear_probe_sq(f(ds.samples), labels, classes, po).head;
      report = eval::risk_gap_check(f, head, ds, fam);
      if (report.pass && !*report.pass) code = kExitBound;
    } else if (which == "view-scaling") {
      const auto fam = finite_family(c);
      const auto mode = diag.view_mode == "exhaustive" ? data::SamplingMode::kExhaustive : data::SamplingMode::kIid;
      const auto table = eval::view_scaling_study(f, ds, fam, diag.views, diag.repeats, c.stage_seed("view-scaling"),
                                                  mode);
      m.stage_seeds["view-scaling"] = c.stage_seed("view-scaling");
      report_json = table.to_json();
      std::ostringstream csv;
      table.write_csv(csv);
      csv_body = csv.str();
    } else {
      const auto sd = eval::estimate_sigma_delta(ds, c.family, diag.delta, diag.transformation_samples,
                                                 c.stage_seed("sigma-delta"));
      eval::AugmentedOptions ao;
      ao.repetitions = diag.repetitions;
      ao.alignment_pair_draws = diag.alignment_pair_draws;
      ao.seed = c.stage_seed("augment");
      ao.lipschitz = feature_lipschitz(c, model, ds.samples);
      m.stage_seeds["sigma-delta"] = c.stage_seed("sigma-delta");
      m.stage_seeds["augment"] = ao.seed;
      if (which == "augmented-risk") {
        const auto aug = eval::augmented_features(f, ds, c.family, ao.repetitions, ao.seed);
        eval::ProbeOptions po;
        po.intercept = false;
        const auto head = eval::linear_probe_sq(aug.features, aug.labels, classes, po).head;
        report = eval::augmented_risk_report(f, head, ds, c.family, sd, ao);
      } else {
        report = eval::center_margin_diagnostics(f, ds, c.family, sd, diag.c1, diag.c2, ao);
      }
    }
    if (report_json.is_null()) {
      report_json = report.to_json();
      std::ostringstream csv;
      report.write_csv(csv);
      csv_body = csv.str();
    }
  }

  const std::string base = which;
  if (o.format == "json") {
    write_file(dir / (base + ".json"), stamped(report_json, c.hash(), c.seed).dump(2) + "\n");
    m.artifacts.push_back(base + ".json");
  } else {
    write_file(dir / (base + ".csv"), csv_stamp(c.hash(), c.seed) + csv_body);
    m.artifacts.push_back(base + ".csv");
  }
  for (const auto& a : m.artifacts) out << (dir / a).string() << "\n";
  if (code == kExitBound) {
    m.extra["status"] = "bound-violated";
    err << "arcl: " << which << " bound check failed\n";
  }
  write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return code;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (o.configs.empty()) throw SchemaError("compare needs at least one --config");
  std::vector<ExperimentConfig> configs;
  for (const auto& path : o.configs) configs.push_back(ExperimentConfig::load(path));
  std::vector<std::uint64_t> seeds;
  if (!o.seeds.empty()) {
    seeds = parse_seeds(o.seeds);
  } else if (o.seed_set) {
    seeds = {o.seed};
  } else {
    seeds = {configs.front().seed};
  }
  const fs::path dir = output_dir(o, &configs.front());
  const auto table = compare_runs(configs, seeds);

  std::string joined;
  for (const auto& h : table.config_hashes) joined += h;
  const std::string hash = fnv1a_hex(joined);
  Manifest m{"compare", hash, seeds.front(), {}, json::object(), {{"seeds", seeds}, {"configs", table.config_hashes}}};
  if (o.format == "json") {
    write_file(dir / "compare.json", stamped(table.to_json(), hash, seeds.front()).dump(2) + "\n");
    m.artifacts.push_back("compare.json");
  } else {
    std::ostringstream csv;
    csv << csv_stamp(hash, seeds.front());
    table.write_csv(csv);
    write_file(dir / "compare.csv", csv.str());
    m.artifacts.push_back("compare.csv");
  }
  for (const auto& a : m.artifacts) out << (dir / a).string() << "\n";
  write_manifest(dir, m, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

data::Dataset training_data(const ExperimentConfig& c) { return data::generate(c.dataset, c.stage_seed("data")); }

data::Dataset evaluation_data(const ExperimentConfig& c, std::size_t samples) {
  const json& spec = c.evaluation.dataset ? *c.evaluation.dataset : c.dataset;
  return first_rows(data::generate(spec, c.stage_seed("eval-data")), samples);
}

train::TrainResult run_training(const ExperimentConfig& c) {
  const auto ds = training_data(c);
  auto model = train::Model::initialize(c.encoder, c.projector ? &*c.projector : nullptr, c.stage_seed("init"));
  auto opt = c.optimizer;
  opt.seed = c.stage_seed("train");
  return train::train(std::move(model), ds, c.family, c.loss, opt, c.moco, c.monitor);
}

losses::FeatureMap feature_map(const ExperimentConfig& c, const train::Model& model) {
  if (c.evaluation.features == "embedding") {
    return [model](const Tensor& x) { return model.embed(x); };
  }
  return [model](const Tensor& x) { return model.encoder.forward(x); };
}

json ProbeSummary::to_json() const {
  json j{{"domains", json::array()}, {"worst_accuracy", worst_accuracy}};
  for (const auto& d : domains) {
    j["domains"].push_back({{"name", d.name},
                            {"kind", d.kind},
                            {"fit_size", d.fit_size},
                            {"test_size", d.test_size},
                            {"fit_accuracy", d.fit_accuracy},
                            {"test_accuracy", d.test_accuracy},
                            {"test_square_risk", d.test_square_risk}});
  }
  j["transfer"] = transfer ? transfer->to_json() : json(nullptr);
  return j;
}

ProbeSummary probe_domains(const ExperimentConfig& c, const train::Model& model) {
  const auto f = feature_map(c, model);
  eval::ProbeOptions po;
  po.intercept = c.evaluation.intercept;
  ProbeSummary s;
  std::vector<data::Transformation> transforms;
  std::vector<std::string> transform_names;
  for (const auto& d : c.evaluation.domains) {
    const auto draws = domain_draws(c, d);
    const auto fit_labels = require_labels(draws.fit, "domain '" + d.name + "'");
    const auto test_labels = require_labels(draws.test, "domain '" + d.name + "'");
    const std::size_t classes = std::max(draws.fit.class_count, draws.test.class_count);
    const Tensor f_fit = f(draws.fit.samples);
    const Tensor f_test = f(draws.test.samples);
    const auto probe = eval::linear_probe_sq(f_fit, fit_labels, classes, po);
    DomainAccuracy a;
    a.name = d.name;
    a.kind = d.theta ? "transformation" : "dataset";
    a.fit_size = draws.fit.size();
    a.test_size = draws.test.size();
    a.fit_accuracy = 1.0 - eval::risk_01(probe.head, f_fit, fit_labels);
    a.test_accuracy = 1.0 - eval::risk_01(probe.head, f_test, test_labels);
    a.test_square_risk = eval::square_risk(probe.head, f_test, test_labels);
    s.worst_accuracy = std::min(s.worst_accuracy, a.test_accuracy);
    s.domains.push_back(a);
    if (d.theta) {
      transforms.push_back(c.family.realize(*d.theta));
      transform_names.push_back(d.name);
    }
  }
  if (!transforms.empty()) {
    const json& base = c.evaluation.dataset ? *c.evaluation.dataset : c.dataset;
    auto report = eval::domain_risk_report(f, data::generate(base, c.stage_seed("domain-fit")), transforms, po);
    report.domains = transform_names;
    s.transfer = std::move(report);
  }
  return s;
}

const ComparisonRow& ComparisonTable::row(const std::string& method, const std::string& domain) const {
  for (const auto& r : rows) {
    if (r.method == method && r.domain == domain) return r;
  }
  throw InvalidArgument("no comparison row for (" + method + ", " + domain + ")");
}

json ComparisonTable::to_json() const {
  json j{{"seeds", seeds}, {"config_hashes", config_hashes}, {"rows", json::array()}};
  for (const auto& r : rows) {
    j["rows"].push_back({{"method", r.method},
                         {"domain", r.domain},
                         {"seeds", r.seeds},
                         {"mean_accuracy", r.mean},
                         {"std_accuracy", r.stddev},
                         {"values", r.values}});
  }
  return j;
}

void ComparisonTable::write_csv(std::ostream& out) const {
  out << "method,domain,seeds,mean_accuracy,std_accuracy\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.domain << ',' << r.seeds << ',' << fmt(r.mean) << ',' << fmt(r.stddev) << '\n';
  }
}

ComparisonTable compare_runs(const std::vector<ExperimentConfig>& configs, const std::vector<std::uint64_t>& seeds) {
  if (configs.empty()) throw InvalidArgument("compare_runs needs at least one config");
  if (seeds.empty()) throw InvalidArgument("compare_runs needs at least one seed");
  std::vector<std::string> domain_names;
  for (const auto& d : configs.front().evaluation.domains) domain_names.push_back(d.name);
  for (std::size_t a = 0; a < configs.size(); ++a) {
    std::vector<std::string> names;
    for (const auto& d : configs[a].evaluation.domains) names.push_back(d.name);
    if (names != domain_names) throw SchemaError("compared configs must list the same evaluation domains");
    for (std::size_t b = 0; b < a; ++b) {
      if (configs[a].label() == configs[b].label()) {
        throw SchemaError("compared configs need distinct labels ('" + configs[a].label() +
                          "' repeats); set 'name'");
      }
    }
  }

  ComparisonTable t;
  t.seeds = seeds;
  for (const auto& base : configs) {
    t.config_hashes.push_back(base.hash());
    std::vector<std::vector<double>> per_domain(domain_names.size());
    std::vector<double> worst;
    for (const auto seed : seeds) {
      ExperimentConfig c = base;
      c.set_seed(seed);
      const auto result = run_training(c);
      const auto summary = probe_domains(c, result.model);
      for (std::size_t d = 0; d < domain_names.size(); ++d) per_domain[d].push_back(summary.domains[d].test_accuracy);
      worst.push_back(summary.worst_accuracy);
    }
    auto add = [&](const std::string& domain, const std::vector<double>& values) {
      ComparisonRow r;
      r.method = base.label();
      r.domain = domain;
      r.seeds = values.size();
      for (double v : values) r.mean += v;
      r.mean /= static_cast<double>(values.size());
      r.stddev = sample_stddev(values);
      r.values = values;
      t.rows.push_back(std::move(r));
    };
    for (std::size_t d = 0; d < domain_names.size(); ++d) add(domain_names[d], per_domain[d]);
    add("worst", worst);
  }
  return t;
}

data::TransformationFamily finite_family(const ExperimentConfig& c) {
  const auto& diag = c.evaluation.diagnostics;
  if (!diag.grid.empty()) return c.family.with_grid(diag.grid);
  if (c.family.finite()) return c.family;
  const auto& dom = c.family.domain();
  if (c.family.kind() == data::TransformationFamily::Kind::kComposite ||
      dom.type != data::ParameterDomain::Type::kBox) {
    throw SchemaError("exact worst-case quantities need a finite family: set evaluation.diagnostics.grid");
  }
  const std::size_t q = dom.dim();
  const std::size_t k = diag.grid_size;
  double total = 1.0;
  for (std::size_t i = 0; i < q; ++i) total *= static_cast<double>(k);
  if (total > 4096.0) {
    throw SchemaError("grid_size^dim exceeds 4096 members; set evaluation.diagnostics.grid explicitly");
  }
  std::vector<data::Parameter> grid;
  std::vector<std::size_t> idx(q, 0);
  for (std::size_t n = 0; n < static_cast<std::size_t>(total); ++n) {
    data::Parameter theta(q);
    for (std::size_t i = 0; i < q; ++i) {
      theta[i] = dom.lo[i] + (dom.hi[i] - dom.lo[i]) * static_cast<double>(idx[i]) / static_cast<double>(k - 1);
    }
    grid.push_back(std::move(theta));
    for (std::size_t i = 0; i < q; ++i) {
      if (++idx[i] < k) break;
      idx[i] = 0;
    }
  }
  return c.family.with_grid(std::move(grid));
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Augmentation-robust contrastive learning lab"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    auto* seed = sub->add_option("--seed", o.seed, "Master seed (overrides the config)");
    seed->each([&](const std::string&) { o.seed_set = true; });
  };

  auto* gen = app.add_subcommand("gen", "Generate the configured dataset");
  gen->add_option("--config", o.configs, "Experiment config")->required()->expected(1);
  add_common(gen);

  auto* train_cmd = app.add_subcommand("train", "Train an encoder; writes checkpoint and history");
  train_cmd->add_option("--config", o.configs, "Experiment config")->required()->expected(1);
  add_common(train_cmd);

  auto* probe = app.add_subcommand("probe", "Fit linear probes on the evaluation domains");
  probe->add_option("--config", o.configs, "Experiment config")->required()->expected(1);
  probe->add_option("--checkpoint", o.checkpoint, "Checkpoint manifest (default OUT/checkpoint.json)");
  add_common(probe);

  auto* diagnose = app.add_subcommand("diagnose", "Bound reports and estimators");
  diagnose
      ->add_option("which", o.which,
                   "toy | augmented-risk | center-margin | risk-gap | sigma-delta | view-scaling "
                   "(also lemma1, theorem1, theorem2)")
      ->required();
  diagnose->add_option("--config", o.configs, "Experiment config")->expected(1);
  diagnose->add_option("--checkpoint", o.checkpoint, "Checkpoint manifest (default OUT/checkpoint.json)");
  diagnose->add_option("--epsilon", o.epsilon, "Counterexample epsilon")->each([&](const std::string&) {
    o.epsilon_set = true;
  });
  diagnose->add_option("--n", o.n, "Counterexample sample size");
  diagnose->add_option("--m", o.m_list, "View counts, comma separated");
  diagnose->add_option("--repeats", o.repeats, "View-scaling repeats");
  diagnose->add_option("--delta", o.delta, "Concentration radius");
  add_common(diagnose);

  auto* compare = app.add_subcommand("compare", "Train and probe several configs over shared seeds");
  compare->add_option("--config", o.configs, "Experiment config (repeatable)")->required();
  compare->add_option("--seeds", o.seeds, "Master seeds, comma separated");
  add_common(compare);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "arcl: " << e.what() << "\n";
    return kExitSchema;
  }

  try {
    if (gen->parsed()) return cmd_gen(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (probe->parsed()) return cmd_probe(o, out);
    if (diagnose->parsed()) return cmd_diagnose(o, out, err);
    if (compare->parsed()) return cmd_compare(o, out);
  } catch (const SchemaError& e) {
    err << "arcl: schema error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const BoundViolation& e) {
    err << "arcl: " << e.what() << "\n";
    return kExitBound;
  } catch (const NumericalError& e) {
    err << "arcl: numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DegenerateEmbedding& e) {
    err << "arcl: numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "arcl: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}

}  // namespace arcl::cli
