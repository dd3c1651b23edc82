#include "coxbayes/pointproc.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "coxbayes/error.hpp"
#include "coxbayes/io.hpp"
#include "coxbayes/rng.hpp"

namespace coxbayes {

NodeCounts& NodeCounts::operator+=(const NodeCounts& other) {
  if (other.counts.size() != counts.size()) throw InvariantError("adding counts from different trees");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

std::vector<double> intensity_raster(const IntensityFn& rho, const CovariateField& field) {
  std::vector<double> raster(field.cell_count());
  for (std::size_t c = 0; c < raster.size(); ++c) {
    const double v = rho(field.at(c));
    if (!(v >= 0.0) || !std::isfinite(v)) {
      std::ostringstream msg;
      msg << "intensity " << v << " at cell " << c << " is not a finite nonnegative number";
      throw InvariantError(msg.str());
    }
    raster[c] = v;
  }
  return raster;
}

PointPattern sample_cox(std::span<const double> raster, const Grid& grid, std::uint64_t seed) {
  if (raster.size() != grid.cell_count()) throw InvariantError("raster does not match grid");
  PointPattern p;
  p.grid = grid;
  p.seed = seed;
  p.cell_counts.assign(grid.cell_count(), 0);
  Rng rng(seed);
  const int dim = grid.dim();
  std::vector<double> lo(dim);
  for (std::size_t c = 0; c < raster.size(); ++c) {
    if (raster[c] < 0.0) throw InvariantError("negative intensity in raster");
    const std::uint64_t k = raster[c] > 0.0 ? rng.poisson(raster[c] * grid.cell_volume()) : 0;
    p.cell_counts[c] = k;
    if (k == 0) continue;
    grid.center(c, lo);
    for (int a = 0; a < dim; ++a) lo[a] -= 0.5 * grid.spacing();
    for (std::uint64_t i = 0; i < k; ++i) {
      for (int a = 0; a < dim; ++a) p.coords.push_back(lo[a] + rng.uniform() * grid.spacing());
      p.cell_of_point.push_back(c);
    }
  }
  return p;
}

PointPattern make_pattern(const Grid& grid, std::vector<double> coords, std::uint64_t seed) {
  const auto d = static_cast<std::size_t>(grid.dim());
  if (coords.size() % d != 0) throw DomainError("coordinate count is not a multiple of the dimension");
  PointPattern p;
  p.grid = grid;
  p.seed = seed;
  p.coords = std::move(coords);
  p.cell_counts.assign(grid.cell_count(), 0);
  const Window& w = grid.window();
  for (std::size_t i = 0; i < p.coords.size() / d; ++i) {
    const std::span<const double> x(p.coords.data() + i * d, d);
    for (double v : x)
      if (v < w.lower() || v > w.upper()) throw DomainError("point outside the window");
    const std::size_t c = grid.locate(x);
    p.cell_of_point.push_back(c);
    ++p.cell_counts[c];
  }
  return p;
}

LogLikelihood log_likelihood(std::span<const double> raster, const Grid& grid, const PointPattern& pattern) {
  LogLikelihood r;
  double integral = 0.0;
  for (double v : raster) integral += v;
  integral *= grid.cell_volume();
  double points = 0.0;
  for (std::size_t c = 0; c < raster.size(); ++c) {
    if (pattern.cell_counts[c] == 0) continue;
    if (!(raster[c] > 0.0)) {
      r.zero_intensity_at_point = true;
      r.value = -std::numeric_limits<double>::infinity();
      return r;
    }
    points += static_cast<double>(pattern.cell_counts[c]) * std::log(raster[c]);
  }
  r.value = points - integral;
  return r;
}

LogLikelihood log_likelihood(const IntensityFn& rho, const CovariateField& field, const PointPattern& pattern) {
  return log_likelihood(intensity_raster(rho, field), field.grid, pattern);
}

NodeCounts bin_counts(const PointPattern& pattern, const CovariateField& field, const PartitionTree& tree) {
  if (pattern.cell_counts.size() != field.cell_count()) throw InvariantError("pattern and field grids differ");
  NodeCounts n;
  n.max_level = tree.max_level();
  n.counts.assign(tree.node_count(), 0);
  const std::size_t leaf_base = (std::size_t{1} << tree.max_level()) - 1;
  for (std::size_t c = 0; c < field.cell_count(); ++c) {
    if (pattern.cell_counts[c] == 0) continue;
    const auto z = field.at(c);
    for (double v : z)
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("covariate value outside [0,1]^d");
    n.counts[leaf_base + tree.locate_at(z, tree.max_level()).bits] += pattern.cell_counts[c];
  }
  for (std::size_t i = leaf_base; i-- > 0;) n.counts[i] = n.counts[2 * i + 1] + n.counts[2 * i + 2];
  return n;
}

void save_pattern(const PointPattern& pattern, const std::filesystem::path& stem, const std::string& generator_hash) {
  auto csv = stem;
  csv += ".csv";
  auto meta = stem;
  meta += ".json";
  std::ostringstream out;
  out.precision(17);
  const int d = pattern.grid.dim();
  for (int a = 0; a < d; ++a) out << (a ? "," : "") << "x" << a;
  out << "\n";
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const auto x = pattern.point(i);
    for (int a = 0; a < d; ++a) out << (a ? "," : "") << x[a];
    out << "\n";
  }
  write_text(csv, out.str());
  Json j{{"format", "coxbayes-points"},
         {"seed", pattern.seed},
         {"window", {{"dim", d}, {"volume", pattern.grid.window().volume}}},
         {"cells_per_axis", pattern.grid.cells_per_axis()},
         {"count", pattern.size()},
         {"generator_hash", generator_hash}};
  write_text(meta, j.dump(2) + "\n");
}

PointPattern load_pattern(const std::filesystem::path& stem) {
  auto csv = stem;
  csv += ".csv";
  auto meta = stem;
  meta += ".json";
  const Json j = Json::parse(read_text(meta));
  const Window w = make_window(j.at("window").at("dim").get<int>(), j.at("window").at("volume").get<double>());
  const Grid grid(w, j.at("cells_per_axis").get<std::size_t>());
  std::istringstream in(read_text(csv));
  std::string line;
  std::getline(in, line);
  std::vector<double> coords;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) coords.push_back(std::stod(cell));
  }
  return make_pattern(grid, std::move(coords), j.at("seed").get<std::uint64_t>());
}

}  // namespace coxbayes
