#include "arcl/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "arcl/numcore/error.hpp"

namespace arcl::train {

namespace {

void put_le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& manifest, const Checkpoint& checkpoint) {
  auto blob = manifest;
  blob.replace_extension(".bin");
  std::ofstream out(blob, std::ios::binary);
  if (!out) throw Error("cannot write " + blob.string());
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : checkpoint.parameters) {
    entries.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}, {"count", t.size()}});
    for (double v : t.values()) put_le(out, v);
    offset += t.size();
  }
  if (!out) throw Error("failed writing " + blob.string());
  nlohmann::json m{{"format", "arcl-checkpoint"},
                   {"version", 1},
                   {"blob", blob.filename().string()},
                   {"encoding", "float64-le"},
                   {"parameters", entries},
                   {"metadata", checkpoint.metadata}};
  std::ofstream mf(manifest);
  if (!mf) throw Error("cannot write " + manifest.string());
  mf << m.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
  std::ifstream mf(manifest);
  if (!mf) throw Error("cannot read " + manifest.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != "arcl-checkpoint") throw InvalidArgument("not a checkpoint manifest");
  auto blob = manifest.parent_path() / m.at("blob").get<std::string>();
  std::ifstream in(blob, std::ios::binary);
  if (!in) throw Error("cannot read " + blob.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Checkpoint c;
  c.metadata = m.value("metadata", nlohmann::json::object());
  for (const auto& e : m.at("parameters")) {
    const auto shape = e.at("shape").get<Shape>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto count = e.at("count").get<std::size_t>();
    if (shape_size(shape) != count || (offset + count) * 8 > bytes.size()) {
      throw InvalidArgument("checkpoint entry '" + e.at("name").get<std::string>() + "' is inconsistent with the blob");
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = get_le(bytes.data() + 8 * (offset + i));
    c.parameters[e.at("name").get<std::string>()] = Tensor(shape, std::move(values));
  }
  return c;
}

void save_model(const std::filesystem::path& manifest, const Model& model, nlohmann::json metadata) {
  metadata["model"] = {{"encoder", model.encoder.spec().to_json()}};
  if (model.has_projector) metadata["model"]["projector"] = model.projector.spec().to_json();
  save_checkpoint(manifest, {model.parameters(), metadata});
}

Model load_model(const std::filesystem::path& manifest) {
  Checkpoint c = load_checkpoint(manifest);
  const auto& spec = c.metadata.at("model");
  Model m;
  auto pick = [&](const std::string& prefix) {
    TensorMap out;
    for (const auto& [name, t] : c.parameters) {
      if (name.rfind(prefix + ".", 0) == 0) out[name] = t;
    }
    return out;
  };
  m.encoder = Network(NetworkSpec::from_json(spec.at("encoder")), "encoder", pick("encoder"));
  if (spec.contains("projector")) {
    m.has_projector = true;
    m.projector = Network(NetworkSpec::from_json(spec.at("projector")), "projector", pick("projector"));
  }
  return m;
}

}  // namespace arcl::train
