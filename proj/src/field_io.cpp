#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coxbayes/covariates.hpp"
#include "coxbayes/error.hpp"
#include "coxbayes/io.hpp"

namespace coxbayes {

Json to_json(const CovarianceKernel& kernel) {
  Json j{{"family", to_string(kernel.family)}, {"length_scale", kernel.length_scale}};
  if (kernel.family == KernelFamily::Cauchy) j["tail_exponent"] = kernel.tail_exponent;
  return j;
}

CovarianceKernel kernel_from_json(const Json& j) {
  CovarianceKernel k;
  k.family = kernel_family_from_string(j.at("family").get<std::string>());
  k.length_scale = j.at("length_scale").get<double>();
  if (j.contains("tail_exponent")) k.tail_exponent = j.at("tail_exponent").get<double>();
  return k;
}

Json to_json(const MarkLaw& marks) {
  if (marks.kind == MarkLaw::Kind::Uniform) return {{"law", "uniform"}, {"low", marks.low}, {"high", marks.high}};
  return {{"law", "discrete"}, {"values", marks.values}, {"probs", marks.probs}};
}

MarkLaw mark_law_from_json(const Json& j) {
  MarkLaw m;
  const auto law = j.at("law").get<std::string>();
  if (law == "uniform") {
    m.kind = MarkLaw::Kind::Uniform;
    m.low = j.value("low", 0.0);
    m.high = j.value("high", 1.0);
  } else if (law == "discrete") {
    m.kind = MarkLaw::Kind::Discrete;
    m.values = j.at("values").get<std::vector<double>>();
    m.probs = j.at("probs").get<std::vector<double>>();
  } else {
    throw DomainError("unknown mark law '" + law + "'");
  }
  return m;
}

Json to_json(const GeneratorDescriptor& generator) {
  return std::visit(
      [](const auto& g) -> Json {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, GaussianGenerator>) {
          Json kernels = Json::array();
          for (const auto& k : g.kernels) kernels.push_back(to_json(k));
          return {{"type", "gaussian"},
                  {"kernels", kernels},
                  {"transform", g.transform == Transform::NormalCdf ? "normal_cdf" : "identity"},
                  {"method", g.method}};
        } else if constexpr (std::is_same_v<G, VoronoiGenerator>) {
          return {{"type", "voronoi"},       {"rate", g.rate},        {"marks", to_json(g.marks)},
                  {"margin", g.margin},      {"retries", g.retries}, {"seed_count", g.seed_count}};
        } else {
          return {{"type", "explicit"}};
        }
      },
      generator);
}

GeneratorDescriptor generator_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "gaussian") {
    GaussianGenerator g;
    for (const auto& k : j.at("kernels")) g.kernels.push_back(kernel_from_json(k));
    g.transform = j.at("transform").get<std::string>() == "normal_cdf" ? Transform::NormalCdf : Transform::Identity;
    g.method = j.value("method", "");
    return g;
  }
  if (type == "voronoi") {
    VoronoiGenerator g;
    g.rate = j.at("rate").get<double>();
    g.marks = mark_law_from_json(j.at("marks"));
    g.margin = j.at("margin").get<double>();
    g.retries = j.value("retries", 0);
    g.seed_count = j.value("seed_count", std::size_t{0});
    return g;
  }
  return ExplicitGenerator{};
}

Json to_json(const StationaryMeasure& nu) {
  return std::visit(
      [](const auto& m) -> Json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, UniformBoxMeasure>)
          return {{"type", "uniform"}, {"low", m.low}, {"high", m.high}};
        else if constexpr (std::is_same_v<M, DiscreteMeasure>)
          return {{"type", "discrete"}, {"values", m.values}, {"probs", m.probs}};
        else
          return {{"type", "standard_normal"}};
      },
      nu);
}

StationaryMeasure stationary_measure_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "uniform") return UniformBoxMeasure{j.at("low").get<double>(), j.at("high").get<double>()};
  if (type == "discrete")
    return DiscreteMeasure{j.at("values").get<std::vector<double>>(), j.at("probs").get<std::vector<double>>()};
  if (type == "standard_normal") return StandardNormalMeasure{};
  throw DomainError("unknown stationary measure '" + type + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

}  // namespace

void save_field(const CovariateField& field, const std::filesystem::path& stem) {
  Json header{{"format", "coxbayes-field"},
              {"version", 1},
              {"byte_order", "little"},
              {"dtype", "float64"},
              {"window", {{"dim", field.grid.dim()}, {"volume", field.grid.window().volume}}},
              {"cells_per_axis", field.grid.cells_per_axis()},
              {"dim_d", field.dim_d},
              {"seed", field.seed},
              {"generator", to_json(field.generator)},
              {"stationary_measure", to_json(field.nu)}};
  auto json_path = stem;
  json_path += ".json";
  auto bin_path = stem;
  bin_path += ".bin";
  write_text(json_path, header.dump(2) + "\n");
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw Error("cannot write " + bin_path.string());
  for (double v : field.values) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
}

CovariateField load_field(const std::filesystem::path& stem) {
  auto json_path = stem;
  json_path += ".json";
  auto bin_path = stem;
  bin_path += ".bin";
  const Json header = Json::parse(read_text(json_path));
  if (header.value("format", "") != "coxbayes-field") throw Error(json_path.string() + " is not a field header");
  const Window w = make_window(header.at("window").at("dim").get<int>(), header.at("window").at("volume").get<double>());
  const Grid grid(w, header.at("cells_per_axis").get<std::size_t>());
  CovariateField f;
  f.grid = grid;
  f.dim_d = header.at("dim_d").get<int>();
  f.seed = header.at("seed").get<std::uint64_t>();
  f.generator = generator_from_json(header.at("generator"));
  f.nu = stationary_measure_from_json(header.at("stationary_measure"));
  const std::string raw = read_text(bin_path);
  const std::size_t count = grid.cell_count() * static_cast<std::size_t>(f.dim_d);
  if (raw.size() != count * 8) throw Error(bin_path.string() + " has the wrong size for its header");
  f.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, raw.data() + 8 * i, 8);
    f.values[i] = std::bit_cast<double>(to_little(bits));
  }
  return f;
}

}  // namespace coxbayes
