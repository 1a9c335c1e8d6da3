#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "lpr/error.hpp"

namespace lpr {

/// One LiDAR return: sensor-frame coordinates plus reflectance.
struct Point {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float intensity = 0.f;
};

/// A single scan. Coordinates of stored points are always finite;
/// the reader drops non-finite records on load.
struct PointCloud {
  std::vector<Point> points;
  std::uint32_t frame_id = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Rigid sensor pose: rotation (orthonormal 3x3) plus translation in meters.
/// Pose sources without explicit time get the frame index as timestamp.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  std::optional<double> timestamp;

  /// Largest absolute entry of R^T R - I; 0 for a perfectly orthonormal R.
  double orthonormality_error() const;
};

/// An ordered sequence of scans with one pose per scan.
/// scan_paths and poses always have equal length; frame i of the
/// sequence refers to scan_paths[i] / poses[i].
struct ScanSequence {
  std::vector<std::filesystem::path> scan_paths;
  std::vector<Pose> poses;

  std::size_t size() const { return scan_paths.size(); }
};

/// Reads a binary scan file of packed little-endian float32
/// (x, y, z, intensity) records. An empty file yields an empty cloud.
/// Throws IoError if the file cannot be read, MalformedScan if its byte
/// length is not a multiple of one record (message names the path).
PointCloud read_kitti_scan(const std::filesystem::path& path);

/// Writes a cloud in the same packed binary layout read_kitti_scan expects.
/// Round-trips bit-exactly. Throws IoError on write failure.
void write_kitti_scan(const PointCloud& cloud, const std::filesystem::path& path);

/// Reads a whitespace-separated pose file: one line per frame, 12 numbers
/// forming the first three rows of a 4x4 homogeneous transform in row-major
/// order. Blank lines are skipped; anything else that is not exactly 12
/// numeric tokens raises MalformedPose naming the line. Timestamps are the
/// 0-based frame index. Throws IoError if the file cannot be read.
std::vector<Pose> read_pose_file(const std::filesystem::path& path);

/// Position of the sensor in the world frame: the pose translation.
Eigen::Vector3d scan_position(const Pose& pose);

/// Lists "*.bin" files under scan_dir in lexicographic filename order and
/// pairs them with the poses from pose_file. Throws IoError if scan_dir is
/// not a directory, ConfigError if the scan and pose counts differ.
ScanSequence load_scan_sequence(const std::filesystem::path& scan_dir,
                                const std::filesystem::path& pose_file);

}  // namespace lpr
