#include "coxbayes/geometry.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <sstream>

#include "coxbayes/error.hpp"

namespace coxbayes {

namespace {
constexpr int kMaxCovariateDim = 8;
}

double Window::side() const { return std::pow(volume, 1.0 / dim); }

Window make_window(int dim, double volume) {
  if (dim < 1 || dim > 3) throw DomainError("window dimension must be 1, 2 or 3");
  if (!(volume > 0.0)) throw DomainError("window volume must be positive");
  return Window{dim, volume};
}

Grid::Grid(Window window, std::size_t cells_per_axis)
    : window_(window), cells_per_axis_(cells_per_axis) {
  if (cells_per_axis == 0) throw DomainError("grid needs at least one cell per axis");
  cell_count_ = 1;
  for (int a = 0; a < window_.dim; ++a) cell_count_ *= cells_per_axis_;
  spacing_ = window_.side() / static_cast<double>(cells_per_axis_);
  cell_volume_ = window_.volume / static_cast<double>(cell_count_);
}

Grid Grid::with_spacing(Window window, double spacing) {
  if (!(spacing > 0.0)) throw DomainError("grid spacing must be positive");
  const double cells = std::max(1.0, std::round(window.side() / spacing));
  return Grid(window, static_cast<std::size_t>(cells));
}

void Grid::unravel(std::size_t cell, std::span<std::size_t> coords) const {
  for (int a = window_.dim - 1; a >= 0; --a) {
    coords[a] = cell % cells_per_axis_;
    cell /= cells_per_axis_;
  }
}

std::size_t Grid::ravel(std::span<const std::size_t> coords) const {
  std::size_t cell = 0;
  for (int a = 0; a < window_.dim; ++a) cell = cell * cells_per_axis_ + coords[a];
  return cell;
}

void Grid::center(std::size_t cell, std::span<double> x) const {
  const double lo = window_.lower();
  for (int a = window_.dim - 1; a >= 0; --a) {
    const std::size_t c = cell % cells_per_axis_;
    cell /= cells_per_axis_;
    x[a] = lo + (static_cast<double>(c) + 0.5) * spacing_;
  }
}

std::size_t Grid::locate(std::span<const double> x) const {
  const double lo = window_.lower();
  std::size_t cell = 0;
  for (int a = 0; a < window_.dim; ++a) {
    double c = std::floor((x[a] - lo) / spacing_);
    c = std::clamp(c, 0.0, static_cast<double>(cells_per_axis_ - 1));
    cell = cell * cells_per_axis_ + static_cast<std::size_t>(c);
  }
  return cell;
}

NodeIndex NodeIndex::from_id(std::size_t id) {
  const int level = std::bit_width(id + 1) - 1;
  return {level, static_cast<std::uint64_t>(id + 1 - (std::size_t{1} << level))};
}

std::string NodeIndex::to_string() const {
  std::string s = "(";
  for (int i = level - 1; i >= 0; --i) {
    s += ((bits >> i) & 1u) ? '1' : '0';
    if (i > 0) s += ',';
  }
  return s + ")";
}

bool Box::contains(std::span<const double> z) const {
  for (std::size_t a = 0; a < lower.size(); ++a) {
    if (z[a] < lower[a]) return false;
    if (upper[a] >= 1.0 ? z[a] > upper[a] : z[a] >= upper[a]) return false;
  }
  return true;
}

double Box::diameter() const {
  double s = 0.0;
  for (std::size_t a = 0; a < lower.size(); ++a) s += (upper[a] - lower[a]) * (upper[a] - lower[a]);
  return std::sqrt(s);
}

PartitionTree::PartitionTree(int dim_d, int max_level) : dim_(dim_d), max_level_(max_level) {
  if (dim_d < 1 || dim_d > kMaxCovariateDim)
    throw DomainError("covariate dimension must be between 1 and 8");
  if (max_level < 1) throw DomainError("partition depth must be at least 1");
  if (max_level >= 24 || node_count() > kNodeBudget)
    throw DomainError("partition depth " + std::to_string(max_level) +
                      " exceeds the node budget of 2^24 nodes");
}

Box PartitionTree::bin(NodeIndex node) const {
  Box box{std::vector<double>(dim_, 0.0), std::vector<double>(dim_, 1.0)};
  for (int l = 1; l <= node.level; ++l) {
    const int a = split_axis(l);
    const double mid = 0.5 * (box.lower[a] + box.upper[a]);
    const bool right = (node.bits >> (node.level - l)) & 1u;
    (right ? box.lower[a] : box.upper[a]) = mid;
  }
  return box;
}

double PartitionTree::diameter(NodeIndex node) const { return bin(node).diameter(); }

double PartitionTree::diameter_constant() const { return 2.0 * std::sqrt(static_cast<double>(dim_)); }

NodeIndex PartitionTree::locate_at(std::span<const double> z, int level) const {
  std::array<double, kMaxCovariateDim> lo{};
  std::array<double, kMaxCovariateDim> hi{};
  for (int a = 0; a < dim_; ++a) hi[a] = 1.0;
  std::uint64_t bits = 0;
  for (int l = 1; l <= level; ++l) {
    const int a = split_axis(l);
    const double mid = 0.5 * (lo[a] + hi[a]);
    if (z[a] >= mid) {
      bits = (bits << 1) | 1u;
      lo[a] = mid;
    } else {
      bits <<= 1;
      hi[a] = mid;
    }
  }
  return {level, bits};
}

std::vector<NodeIndex> PartitionTree::locate(std::span<const double> z) const {
  if (z.size() < static_cast<std::size_t>(dim_)) throw DomainError("point has too few coordinates");
  for (int a = 0; a < dim_; ++a) {
    if (!(z[a] >= 0.0 && z[a] <= 1.0)) {
      std::ostringstream msg;
      msg << "covariate coordinate " << z[a] << " outside [0,1]";
      throw DomainError(msg.str());
    }
  }
  const NodeIndex leaf = locate_at(z, max_level_);
  std::vector<NodeIndex> path(max_level_);
  for (int l = 1; l <= max_level_; ++l) path[l - 1] = {l, leaf.bits >> (max_level_ - l)};
  return path;
}

PartitionTree build_partition(int dim_d, int max_level) { return PartitionTree(dim_d, max_level); }

}  // namespace coxbayes
