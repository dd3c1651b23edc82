#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace coxbayes {

/// Observation window: the cube [-side/2, side/2]^D of volume n. It contains
/// [-r n^{1/D}, r n^{1/D}]^D for every r < 1/2, so it grows uniformly in all
/// directions.
struct Window {
  int dim = 1;
  double volume = 1.0;

  double side() const;
  double lower() const { return -0.5 * side(); }
  double upper() const { return 0.5 * side(); }
  double half_side() const { return 0.5 * side(); }
};

Window make_window(int dim, double volume);

/// Regular grid of cells_per_axis^D cells over a window. Cells are indexed in
/// row-major order with axis 0 slowest.
class Grid {
 public:
  Grid() = default;
  Grid(Window window, std::size_t cells_per_axis);

  /// Grid whose spacing is as close as possible to `spacing` (at least one cell).
  static Grid with_spacing(Window window, double spacing);

  const Window& window() const { return window_; }
  int dim() const { return window_.dim; }
  std::size_t cells_per_axis() const { return cells_per_axis_; }
  std::size_t cell_count() const { return cell_count_; }
  double spacing() const { return spacing_; }
  double cell_volume() const { return cell_volume_; }

  /// Per-axis integer coordinates of a cell.
  void unravel(std::size_t cell, std::span<std::size_t> coords) const;
  std::size_t ravel(std::span<const std::size_t> coords) const;
  void center(std::size_t cell, std::span<double> x) const;
  /// Cell containing x; coordinates on the upper face map to the last cell.
  std::size_t locate(std::span<const double> x) const;

 private:
  Window window_;
  std::size_t cells_per_axis_ = 1;
  std::size_t cell_count_ = 1;
  double spacing_ = 1.0;
  double cell_volume_ = 1.0;
};

/// Index of a bin in the dyadic partition: a string of `level` bits, the
/// first split being the most significant bit.
struct NodeIndex {
  int level = 0;
  std::uint64_t bits = 0;

  static NodeIndex root() { return {}; }
  static NodeIndex from_id(std::size_t id);

  /// Position in heap order: root 0, children of i at 2i+1 (bit 0) and 2i+2 (bit 1).
  std::size_t id() const { return ((std::size_t{1} << level) - 1) + bits; }
  NodeIndex child(int bit) const { return {level + 1, (bits << 1) | static_cast<std::uint64_t>(bit)}; }
  NodeIndex left() const { return child(0); }
  NodeIndex right() const { return child(1); }
  NodeIndex parent() const { return {level - 1, bits >> 1}; }
  NodeIndex twin() const { return {level, bits ^ 1u}; }
  int last_bit() const { return static_cast<int>(bits & 1u); }
  bool is_root() const { return level == 0; }
  std::string to_string() const;

  friend bool operator==(const NodeIndex&, const NodeIndex&) = default;
};

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  bool contains(std::span<const double> z) const;
  double diameter() const;
};

inline constexpr std::size_t kNodeBudget = std::size_t{1} << 24;

/// Dyadic binary partition of [0,1]^d. Level l splits axis (l-1) mod d at the
/// bin midpoint. Bins are half-open except on the face where a coordinate is 1,
/// so every point of [0,1]^d has a unique bin at each level.
class PartitionTree {
 public:
  PartitionTree(int dim_d, int max_level);

  int dim() const { return dim_; }
  int max_level() const { return max_level_; }
  /// Nodes at levels 0..max_level.
  std::size_t node_count() const { return (std::size_t{2} << max_level_) - 1; }
  /// Nodes at levels 0..max_level-1 (those with children).
  std::size_t internal_count() const { return (std::size_t{1} << max_level_) - 1; }

  /// Axis split when going from level-1 to `level`.
  int split_axis(int level) const { return (level - 1) % dim_; }
  Box bin(NodeIndex node) const;
  double diameter(NodeIndex node) const;
  /// C_d in diam(B) <= C_d 2^{-l/d}.
  double diameter_constant() const;

  /// Path eps_1(z), ..., eps_L(z). Throws DomainError for coordinates outside [0,1].
  std::vector<NodeIndex> locate(std::span<const double> z) const;
  /// Level-`level` node containing z (no domain check).
  NodeIndex locate_at(std::span<const double> z, int level) const;

 private:
  int dim_;
  int max_level_;
};

PartitionTree build_partition(int dim_d, int max_level);

}  // namespace coxbayes
