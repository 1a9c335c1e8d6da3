#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "lpr/error.hpp"
#include "lpr/projection.hpp"

namespace lpr {

using PositionMatrix = Eigen::Matrix<float, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// N global descriptors with the metadata retrieval needs: one world
/// position and one frame id per row. Labels are empty until a place
/// assignment runs; afterwards labels.size() == rows.
struct DescriptorSet {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> vectors;  // N x D
  PositionMatrix positions;                                                       // N x 3
  std::vector<std::uint32_t> frame_ids;                                           // N
  std::vector<std::int32_t> labels;  // empty, or one class id per row

  Eigen::Index size() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
  bool has_labels() const { return !labels.empty(); }
};

/// Binary descriptor container, magic "DSC1":
///   magic[4], N u32, D u32  (little-endian),
///   N*D float32 descriptor rows (row-major),
///   N*3 float32 positions,
///   N   u32 frame ids.
/// Total size is exactly 12 + N*(4*D + 16) bytes. Round-trips bit-exactly.
/// Throws IoError (unreadable), BadMagic (wrong magic), TruncatedFile
/// (any size mismatch against the declared N, D).
DescriptorSet load_descriptors(const std::filesystem::path& path);

/// Writes the container format above. Labels are not persisted.
/// Throws ShapeMismatch if positions/frame_ids disagree with N,
/// IoError on write failure.
void save_descriptors(const DescriptorSet& set, const std::filesystem::path& path);

/// Imports descriptors from CSV: one row per descriptor, comma-separated
/// decimals, the final 3 columns being the x,y,z position. Frame ids are
/// the 0-based row index. Throws IoError (unreadable) or ParseError
/// (non-numeric token, ragged rows, fewer than 4 columns).
DescriptorSet load_descriptors_csv(const std::filesystem::path& path);

/// Reference descriptor for tests and small-scale runs: per channel, the
/// column-mean profile over non-empty pixels (length width), then the
/// magnitudes of the first target_dim/num_channels DFT coefficients of that
/// profile, all channels concatenated and L2-normalized (zero vectors stay
/// zero). Rotation of the scene about z shifts the profile circularly, so
/// the output is invariant to that rotation up to projection quantization.
/// Throws DimensionError if target_dim is not a positive multiple of the
/// channel count, EmptySet if the view has no channels.
Eigen::VectorXf baseline_descriptor(const PseudoGlobalView& view, int target_dim);

/// Greedy leader clustering of xy positions: scanning rows in order, a row
/// joins the first earlier leader within `radius` meters (planar distance),
/// otherwise becomes the leader of a new class. Returns dense class ids,
/// one per row, deterministic for a fixed row order.
std::vector<std::int32_t> assign_place_classes(const PositionMatrix& positions,
                                               double radius);

}  // namespace lpr
