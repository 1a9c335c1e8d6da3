#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lpr/error.hpp"
#include "lpr/scan_io.hpp"

namespace lpr {

enum class ViewKind { RangeView, BirdsEyeView };

/// Half-open value interval [low, high).
struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double v) const { return v >= low && v < high; }
  std::string label() const;
};

/// Geometry of the projected images and the layer partitions.
struct ProjectionConfig {
  int width = 900;
  int height = 64;
  double fov_up_deg = 3.0;    // elevation of the top image row, degrees
  double fov_down_deg = 25.0; // |elevation| of the bottom image row, degrees
  double max_range = 80.0;    // meters; points beyond it are discarded
  std::vector<Interval> range_intervals;  // radial slices for range layers
  std::vector<Interval> height_intervals; // z slices for top-down layers

  /// Throws ConfigError on non-positive sizes/field of view/max_range or
  /// intervals that are empty, unordered, or non-contiguous.
  void validate() const;

  /// 32-beam configuration: 60 m range, 15 m radial slices, 4 m height
  /// slices from -4 m to 12 m, +30.67/-10.67 degree field of view.
  static ProjectionConfig nclt();

  /// 64-beam configuration: 80 m range, 20 m radial slices, height slices
  /// (-3,-1.5,0,1.5,5) m, +3/-25 degree field of view.
  static ProjectionConfig kitti();
};

/// A single projected image. Each pixel holds a depth statistic in meters
/// (or height for top-down views); empty pixels hold exactly 0.0.
struct ViewImage {
  Eigen::MatrixXd values;  // height x width
  ViewKind kind = ViewKind::RangeView;
  std::string layer_tag = "FULL";  // interval label, or FULL for no slice

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
};

/// The stacked multi-layer image: all top-down layers followed by all
/// range layers, every channel sharing one (height, width).
struct PseudoGlobalView {
  std::vector<ViewImage> channels;

  std::size_t channel_count() const { return channels.size(); }
};

/// Image column for azimuth atan2(y, x):
/// u = floor((1 - atan2(y,x)/pi) / 2 * width) wrapped into [0, width).
int azimuth_column(double x, double y, int width);

/// Spherical range projection. Keeps points with range in (1e-6, max_range];
/// row from elevation asin(z/r) mapped across the field of view (clamped to
/// the image), column from azimuth. A pixel stores the MINIMUM range of the
/// points that land on it.
ViewImage project_range_view(const PointCloud& cloud, const ProjectionConfig& cfg);

/// Polar top-down projection. Keeps points with planar radius
/// hypot(x,y) <= max_range; row from radius mapped linearly across
/// [0, max_range) (clamped), column from azimuth. A pixel stores the
/// MAXIMUM z of the points that land on it.
ViewImage project_birds_eye_view(const PointCloud& cloud, const ProjectionConfig& cfg);

/// One range image per cfg.range_intervals entry, restricted to points whose
/// 3-D range lies in the interval, plus a final unrestricted FULL image.
std::vector<ViewImage> multilayer_range_view(const PointCloud& cloud,
                                             const ProjectionConfig& cfg);

/// One top-down image per cfg.height_intervals entry, restricted to points
/// whose z lies in the interval, plus a final unrestricted FULL image.
std::vector<ViewImage> multilayer_birds_eye_view(const PointCloud& cloud,
                                                 const ProjectionConfig& cfg);

/// Stacks top-down layers then range layers into one multi-channel view.
/// Throws ShapeMismatch if any channel disagrees on (height, width) or a
/// layer list is empty.
PseudoGlobalView build_pseudo_global_view(std::vector<ViewImage> birds_eye_layers,
                                          std::vector<ViewImage> range_layers);

/// Debug dump: 16-bit binary PGM (big-endian samples, per the format), pixel
/// value = round(meters * 256) clamped to [0, 65535].
void write_pgm16(const ViewImage& image, const std::filesystem::path& path);

}  // namespace lpr
