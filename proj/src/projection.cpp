#include "lpr/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace lpr {

namespace {

std::string format_number(double v) {
  std::ostringstream out;
  out << v;  // shortest default formatting, e.g. 15 or 1.5
  return out.str();
}

std::vector<Interval> make_intervals(const std::vector<double>& breakpoints) {
  std::vector<Interval> out;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    out.push_back({breakpoints[i], breakpoints[i + 1]});
  }
  return out;
}

void validate_intervals(const std::vector<Interval>& intervals, const char* name) {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (!(intervals[i].low < intervals[i].high)) {
      throw ConfigError(std::string(name) + " interval " + intervals[i].label() +
                        " is empty or inverted");
    }
    if (i > 0 && intervals[i].low != intervals[i - 1].high) {
      throw ConfigError(std::string(name) + " intervals " + intervals[i - 1].label() +
                        " and " + intervals[i].label() + " are not contiguous");
    }
  }
}

}  // namespace

std::string Interval::label() const {
  return "[" + format_number(low) + "," + format_number(high) + ")";
}

void ProjectionConfig::validate() const {
  if (width <= 0 || height <= 0) {
    throw ConfigError("image size must be positive, got " + std::to_string(width) +
                      "x" + std::to_string(height));
  }
  if (fov_up_deg + fov_down_deg <= 0.0) {
    throw ConfigError("vertical field of view must be positive");
  }
  if (max_range <= 0.0) {
    throw ConfigError("max_range must be positive");
  }
  validate_intervals(range_intervals, "range");
  validate_intervals(height_intervals, "height");
}

ProjectionConfig ProjectionConfig::nclt() {
  ProjectionConfig cfg;
  cfg.width = 900;
  cfg.height = 32;
  cfg.fov_up_deg = 30.67;
  cfg.fov_down_deg = 10.67;
  cfg.max_range = 60.0;
  cfg.range_intervals = make_intervals({0.0, 15.0, 30.0, 45.0, 60.0});
  cfg.height_intervals = make_intervals({-4.0, 0.0, 4.0, 8.0, 12.0});
  return cfg;
}

ProjectionConfig ProjectionConfig::kitti() {
  ProjectionConfig cfg;
  cfg.width = 900;
  cfg.height = 64;
  cfg.fov_up_deg = 3.0;
  cfg.fov_down_deg = 25.0;
  cfg.max_range = 80.0;
  cfg.range_intervals = make_intervals({0.0, 20.0, 40.0, 60.0, 80.0});
  cfg.height_intervals = make_intervals({-3.0, -1.5, 0.0, 1.5, 5.0});
  return cfg;
}

int azimuth_column(double x, double y, int width) {
  const double yaw = std::atan2(y, x);  // (-pi, pi]
  const double col = std::floor((1.0 - yaw / std::numbers::pi) * 0.5 *
                                static_cast<double>(width));
  // yaw = -pi maps to exactly `width`; the wrap folds it back onto column 0.
  auto wrapped = static_cast<std::int64_t>(col) % width;
  if (wrapped < 0) {
    wrapped += width;
  }
  return static_cast<int>(wrapped);
}

ViewImage project_range_view(const PointCloud& cloud, const ProjectionConfig& cfg) {
  cfg.validate();
  ViewImage img;
  img.kind = ViewKind::RangeView;
  img.values = Eigen::MatrixXd::Zero(cfg.height, cfg.width);

  // The row fraction is formed in degrees: the pinned boundary cases then
  // hit exact binary ratios instead of wobbling on unit conversions.
  const double fov_deg = cfg.fov_up_deg + cfg.fov_down_deg;
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;

  for (const Point& p : cloud.points) {
    const double x = p.x, y = p.y, z = p.z;
    const double r = std::sqrt(x * x + y * y + z * z);
    if (r <= 1e-6 || r > cfg.max_range) {
      continue;
    }
    const int u = azimuth_column(x, y, cfg.width);
    // Guard z/r against rounding just past +-1 before asin.
    const double pitch_deg = std::asin(std::clamp(z / r, -1.0, 1.0)) * kRadToDeg;
    const double row = std::floor(
        (1.0 - (pitch_deg + cfg.fov_up_deg) / fov_deg) * cfg.height);
    const int v = static_cast<int>(
        std::clamp(row, 0.0, static_cast<double>(cfg.height - 1)));

    double& cell = img.values(v, u);
    if (cell == 0.0 || r < cell) {
      cell = r;  // keep the closest return per pixel
    }
  }
  return img;
}

ViewImage project_birds_eye_view(const PointCloud& cloud, const ProjectionConfig& cfg) {
  cfg.validate();
  ViewImage img;
  img.kind = ViewKind::BirdsEyeView;
  img.values = Eigen::MatrixXd::Zero(cfg.height, cfg.width);

  // z values may legitimately be <= 0, so the empty-pixel sentinel needs a
  // separate occupancy mask rather than comparisons against 0.0.
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> occupied =
      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(cfg.height,
                                                                        cfg.width);

  for (const Point& p : cloud.points) {
    const double x = p.x, y = p.y, z = p.z;
    const double radius = std::hypot(x, y);
    if (radius > cfg.max_range) {
      continue;
    }
    const int u = azimuth_column(x, y, cfg.width);
    const double row = std::floor(radius / cfg.max_range * cfg.height);
    const int v = static_cast<int>(
        std::clamp(row, 0.0, static_cast<double>(cfg.height - 1)));

    double& cell = img.values(v, u);
    if (!occupied(v, u) || z > cell) {
      cell = z;  // keep the highest return per pixel
    }
    occupied(v, u) = 1;
  }

  // Re-impose the empty sentinel where the max-z ended up exactly 0.0 anyway.
  for (int v = 0; v < cfg.height; ++v) {
    for (int u = 0; u < cfg.width; ++u) {
      if (!occupied(v, u)) {
        img.values(v, u) = 0.0;
      }
    }
  }
  return img;
}

std::vector<ViewImage> multilayer_range_view(const PointCloud& cloud,
                                             const ProjectionConfig& cfg) {
  cfg.validate();
  std::vector<ViewImage> layers;
  layers.reserve(cfg.range_intervals.size() + 1);
  for (const Interval& interval : cfg.range_intervals) {
    PointCloud slice;
    slice.frame_id = cloud.frame_id;
    for (const Point& p : cloud.points) {
      const double r = std::sqrt(double(p.x) * p.x + double(p.y) * p.y +
                                 double(p.z) * p.z);
      if (interval.contains(r)) {
        slice.points.push_back(p);
      }
    }
    ViewImage img = project_range_view(slice, cfg);
    img.layer_tag = interval.label();
    layers.push_back(std::move(img));
  }
  layers.push_back(project_range_view(cloud, cfg));  // FULL
  return layers;
}

std::vector<ViewImage> multilayer_birds_eye_view(const PointCloud& cloud,
                                                 const ProjectionConfig& cfg) {
  cfg.validate();
  std::vector<ViewImage> layers;
  layers.reserve(cfg.height_intervals.size() + 1);
  for (const Interval& interval : cfg.height_intervals) {
    PointCloud slice;
    slice.frame_id = cloud.frame_id;
    for (const Point& p : cloud.points) {
      if (interval.contains(p.z)) {
        slice.points.push_back(p);
      }
    }
    ViewImage img = project_birds_eye_view(slice, cfg);
    img.layer_tag = interval.label();
    layers.push_back(std::move(img));
  }
  layers.push_back(project_birds_eye_view(cloud, cfg));  // FULL
  return layers;
}

PseudoGlobalView build_pseudo_global_view(std::vector<ViewImage> birds_eye_layers,
                                          std::vector<ViewImage> range_layers) {
  if (birds_eye_layers.empty() || range_layers.empty()) {
    throw ShapeMismatch("both layer lists must be non-empty");
  }
  PseudoGlobalView view;
  view.channels.reserve(birds_eye_layers.size() + range_layers.size());
  for (auto* source : {&birds_eye_layers, &range_layers}) {
    for (ViewImage& img : *source) {
      view.channels.push_back(std::move(img));
    }
  }
  const int h = view.channels.front().height();
  const int w = view.channels.front().width();
  for (const ViewImage& img : view.channels) {
    if (img.height() != h || img.width() != w) {
      throw ShapeMismatch("channel size " + std::to_string(img.height()) + "x" +
                          std::to_string(img.width()) + " does not match " +
                          std::to_string(h) + "x" + std::to_string(w));
    }
  }
  return view;
}

void write_pgm16(const ViewImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << "P5\n" << image.width() << " " << image.height() << "\n65535\n";
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      const long long scaled = std::llround(image.values(v, u) * 256.0);
      const auto sample =
          static_cast<std::uint16_t>(std::clamp<long long>(scaled, 0, 65535));
      const char bytes[2] = {static_cast<char>(sample >> 8),
                             static_cast<char>(sample & 0xff)};
      out.write(bytes, 2);
    }
  }
  out.flush();
  if (!out) {
    throw IoError("write failed on " + path.string());
  }
}

}  // namespace lpr
