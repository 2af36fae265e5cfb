#include "arcl/data/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "arcl/numcore/error.hpp"

namespace arcl::data {

void Dataset::validate() const {
  if (samples.rank() != 2) throw InvalidArgument("dataset samples must be an n x d matrix");
  if (size() < 1) throw InvalidArgument("dataset must contain at least one sample");
  if (!samples.all_finite()) throw InvalidArgument("dataset contains non-finite values");
  if (labels) {
    if (labels->size() != size()) throw InvalidArgument("label count does not match sample count");
    for (auto y : *labels) {
      if (y >= class_count) {
        throw InvalidArgument("label " + std::to_string(y) + " outside [0, " + std::to_string(class_count) + ")");
      }
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  const std::size_t d = dim();
  out.samples = Tensor({rows.size(), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = samples.row(rows[r]);
    std::copy(src.begin(), src.end(), out.samples.row(r).begin());
  }
  if (labels) {
    out.labels.emplace();
    for (auto r : rows) out.labels->push_back((*labels)[r]);
  }
  out.class_count = class_count;
  out.generator = generator;
  out.seed = seed;
  return out;
}

std::vector<std::vector<std::size_t>> Dataset::class_members() const {
  if (!labels) throw InvalidArgument("dataset is unlabeled");
  std::vector<std::vector<std::size_t>> members(class_count);
  for (std::size_t i = 0; i < size(); ++i) members[(*labels)[i]].push_back(i);
  return members;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_dataset(const Dataset& ds, const nlohmann::json& extra) {
  ds.validate();
  nlohmann::json meta = extra;
  meta["n"] = ds.size();
  meta["d"] = ds.dim();
  meta["K"] = ds.class_count;
  meta["seed"] = ds.seed;
  meta["labeled"] = ds.labeled();
  meta["generator"] = ds.generator;
  std::string out = "#JSON" + meta.dump() + "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto row = ds.samples.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    if (ds.labels) out += ',' + std::to_string((*ds.labels)[i]);
    out += '\n';
  }
  return out;
}

void write_dataset(const std::string& path, const Dataset& ds, const nlohmann::json& extra) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << format_dataset(ds, extra);
}

namespace {

double parse_number(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("malformed number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#JSON", 0) != 0) {
    throw InvalidArgument("dataset file must start with a #JSON metadata line");
  }
  const auto meta = nlohmann::json::parse(line.substr(5));
  const std::size_t n = meta.at("n"), d = meta.at("d");
  Dataset ds;
  ds.class_count = meta.at("K");
  ds.seed = meta.value("seed", std::uint64_t{0});
  ds.generator = meta.value("generator", nlohmann::json::object());
  const bool labeled = meta.value("labeled", true);
  ds.samples = Tensor({n, d});
  if (labeled) ds.labels.emplace();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= n) throw InvalidArgument("more rows than declared n");
    std::size_t col = 0, start = 0;
    const std::size_t expected = d + (labeled ? 1 : 0);
    while (start <= line.size()) {
      auto end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      std::string_view cell(line.data() + start, end - start);
      if (col >= expected) throw InvalidArgument("row " + std::to_string(row) + " has too many columns");
      if (col < d) {
        ds.samples.at(row, col) = parse_number(cell);
      } else {
        ds.labels->push_back(static_cast<std::size_t>(parse_number(cell)));
      }
      ++col;
      start = end + 1;
    }
    if (col != expected) throw InvalidArgument("row " + std::to_string(row) + " has too few columns");
    ++row;
  }
  if (row != n) throw InvalidArgument("declared n=" + std::to_string(n) + " but read " + std::to_string(row) + " rows");
  ds.validate();
  return ds;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_dataset(ss.str());
}

}  // namespace arcl::data
