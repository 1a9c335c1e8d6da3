#include "lpr/scan_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace lpr {

namespace {

constexpr std::size_t kPointRecordBytes = 4 * sizeof(float);

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failed on " + path.string());
  }
  return std::move(buffer).str();
}

}  // namespace

double Pose::orthonormality_error() const {
  const Eigen::Matrix3d residual =
      rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  return residual.cwiseAbs().maxCoeff();
}

PointCloud read_kitti_scan(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() % kPointRecordBytes != 0) {
    throw MalformedScan(path.string() + ": size " + std::to_string(bytes.size()) +
                        " is not a multiple of " + std::to_string(kPointRecordBytes) +
                        "-byte point records");
  }

  PointCloud cloud;
  const std::size_t n = bytes.size() / kPointRecordBytes;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point p;
    std::memcpy(&p, bytes.data() + i * kPointRecordBytes, kPointRecordBytes);
    // The cloud invariant is finite coordinates; silently skip junk returns.
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      continue;
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

void write_kitti_scan(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  for (const Point& p : cloud.points) {
    char record[kPointRecordBytes];
    std::memcpy(record, &p, kPointRecordBytes);
    out.write(record, kPointRecordBytes);
  }
  out.flush();
  if (!out) {
    throw IoError("write failed on " + path.string());
  }
}

std::vector<Pose> read_pose_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }

  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::vector<double> values;
    std::string token;
    while (tokens >> token) {
      std::size_t consumed = 0;
      double value = 0.0;
      try {
        value = std::stod(token, &consumed);
      } catch (const std::exception&) {
        throw MalformedPose(path.string() + ":" + std::to_string(line_no) +
                            ": token '" + token + "' is not a number");
      }
      if (consumed != token.size()) {
        throw MalformedPose(path.string() + ":" + std::to_string(line_no) +
                            ": token '" + token + "' is not a number");
      }
      values.push_back(value);
    }
    if (values.empty()) {
      continue;  // blank line
    }
    if (values.size() != 12) {
      throw MalformedPose(path.string() + ":" + std::to_string(line_no) + ": expected 12 values, found " +
                          std::to_string(values.size()));
    }

    // Row-major 3x4: three rotation columns then the translation per row.
    Pose pose;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        pose.rotation(row, col) = values[row * 4 + col];
      }
      pose.translation(row) = values[row * 4 + 3];
    }
    pose.timestamp = static_cast<double>(poses.size());
    poses.push_back(pose);
  }
  if (in.bad()) {
    throw IoError("read failed on " + path.string());
  }
  return poses;
}

Eigen::Vector3d scan_position(const Pose& pose) { return pose.translation; }

ScanSequence load_scan_sequence(const std::filesystem::path& scan_dir,
                                const std::filesystem::path& pose_file) {
  std::error_code ec;
  if (!std::filesystem::is_directory(scan_dir, ec)) {
    throw IoError(scan_dir.string() + " is not a readable directory");
  }

  ScanSequence seq;
  for (const auto& entry : std::filesystem::directory_iterator(scan_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      seq.scan_paths.push_back(entry.path());
    }
  }
  std::sort(seq.scan_paths.begin(), seq.scan_paths.end(),
            [](const std::filesystem::path& a, const std::filesystem::path& b) {
              return a.filename().string() < b.filename().string();
            });

  seq.poses = read_pose_file(pose_file);
  if (seq.poses.size() != seq.scan_paths.size()) {
    throw ConfigError("scan/pose count mismatch: " +
                      std::to_string(seq.scan_paths.size()) + " scans in " +
                      scan_dir.string() + " vs " + std::to_string(seq.poses.size()) +
                      " poses in " + pose_file.string());
  }
  return seq;
}

}  // namespace lpr
