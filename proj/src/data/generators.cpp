#include "arcl/data/generators.hpp"

#include "arcl/numcore/error.hpp"
#include "arcl/numcore/rng.hpp"

namespace arcl::data {

Dataset make_toy_axis_dataset(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("toy dataset needs n >= 1");
  Rng rng(seed);
  Dataset ds;
  ds.samples = Tensor({n, 2});
  ds.labels.emplace(n);
  ds.class_count = 2;
  for (std::size_t i = 0; i < n; ++i) {
    ds.samples.at(i, 0) = rng.normal();
    ds.samples.at(i, 1) = rng.normal();
    (*ds.labels)[i] = ds.samples.at(i, 0) >= 0.0 ? 1 : 0;
  }
  ds.generator = {{"generator", "toy"}, {"n", n}};
  ds.seed = seed;
  return ds;
}

Dataset make_gaussian_mixture(std::size_t classes, std::size_t dim, double separation, double cluster_std,
                              std::size_t n, std::uint64_t seed) {
  if (classes < 2) throw InvalidArgument("mixture needs K >= 2");
  if (dim < 2) throw InvalidArgument("mixture needs d >= 2");
  if (n < classes) throw InvalidArgument("mixture needs n >= K");
  if (dim < classes) throw InvalidArgument("orthogonal class means need d >= K");
  if (!(cluster_std >= 0.0)) throw InvalidArgument("cluster_std must be non-negative");
  Rng rng(seed);
  Dataset ds;
  ds.samples = Tensor({n, dim});
  ds.labels.emplace(n);
  ds.class_count = classes;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % classes;
    (*ds.labels)[i] = k;
    for (std::size_t j = 0; j < dim; ++j) {
      ds.samples.at(i, j) = (j == k ? separation : 0.0) + cluster_std * rng.normal();
    }
  }
  ds.generator = {{"generator", "mixture"}, {"n", n}, {"K", classes}, {"d", dim},
                  {"separation", separation}, {"cluster_std", cluster_std}};
  ds.seed = seed;
  return ds;
}

Dataset make_concat_shortcut_dataset(std::size_t n, double corr, std::uint64_t seed, const ShortcutSpec& spec) {
  if (!(corr >= 0.0 && corr <= 1.0)) throw InvalidArgument("corr must lie in [0, 1]");
  if (n == 0) throw InvalidArgument("shortcut dataset needs n >= 1");
  if (spec.shortcut_dim == 0 || spec.core_dim == 0) throw InvalidArgument("block dimensions must be positive");
  Rng rng(seed);
  const std::size_t d = spec.shortcut_dim + spec.core_dim;
  Dataset ds;
  ds.samples = Tensor({n, d});
  ds.labels.emplace(n);
  ds.class_count = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = rng.bernoulli(0.5) ? 1 : 0;
    const bool follows = rng.bernoulli(corr);
    const std::size_t coin = rng.bernoulli(0.5) ? 1 : 0;
    const std::size_t s = follows ? y : coin;
    (*ds.labels)[i] = y;
    const double ys = y ? 1.0 : -1.0, ss = s ? 1.0 : -1.0;
    for (std::size_t j = 0; j < spec.shortcut_dim; ++j) {
      ds.samples.at(i, j) = (j == 0 ? ss * spec.shortcut_separation : 0.0) + spec.noise_std * rng.normal();
    }
    for (std::size_t j = 0; j < spec.core_dim; ++j) {
      ds.samples.at(i, spec.shortcut_dim + j) = (j == 0 ? ys * spec.core_separation : 0.0) + spec.noise_std * rng.normal();
    }
  }
  ds.generator = {{"generator", "shortcut"},
                  {"n", n},
                  {"corr", corr},
                  {"shortcut_dim", spec.shortcut_dim},
                  {"core_dim", spec.core_dim},
                  {"shortcut_separation", spec.shortcut_separation},
                  {"core_separation", spec.core_separation},
                  {"noise_std", spec.noise_std}};
  ds.seed = seed;
  return ds;
}

namespace {

void reject_unknown(const nlohmann::json& spec, std::initializer_list<const char*> allowed) {
  for (auto it = spec.begin(); it != spec.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InvalidArgument("unknown key '" + it.key() + "' in dataset spec");
  }
}

}  // namespace

Dataset generate(const nlohmann::json& spec, std::uint64_t seed) {
  if (!spec.is_object()) throw InvalidArgument("dataset spec must be an object");
  const std::string kind = spec.at("generator").get<std::string>();
  const auto n_signed = spec.at("n").get<long long>();
  if (n_signed <= 0) throw InvalidArgument("dataset spec: n must be positive");
  const auto n = static_cast<std::size_t>(n_signed);
  if (kind == "toy") {
    reject_unknown(spec, {"generator", "n"});
    return make_toy_axis_dataset(n, seed);
  }
  if (kind == "mixture") {
    reject_unknown(spec, {"generator", "n", "K", "d", "separation", "cluster_std"});
    return make_gaussian_mixture(spec.at("K").get<std::size_t>(), spec.at("d").get<std::size_t>(),
                                 spec.value("separation", 5.0), spec.value("cluster_std", 1.0), n, seed);
  }
  if (kind == "shortcut") {
    reject_unknown(spec, {"generator", "n", "corr", "shortcut_dim", "core_dim", "shortcut_separation",
                          "core_separation", "noise_std"});
    ShortcutSpec s;
    s.shortcut_dim = spec.value("shortcut_dim", s.shortcut_dim);
    s.core_dim = spec.value("core_dim", s.core_dim);
    s.shortcut_separation = spec.value("shortcut_separation", s.shortcut_separation);
    s.core_separation = spec.value("core_separation", s.core_separation);
    s.noise_std = spec.value("noise_std", s.noise_std);
    return make_concat_shortcut_dataset(n, spec.at("corr").get<double>(), seed, s);
  }
  throw InvalidArgument("unknown dataset generator '" + kind + "'");
}

}  // namespace arcl::data
