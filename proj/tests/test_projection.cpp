#include "lpr/projection.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"

using namespace lpr;
using lpr_test::TempDir;

namespace {

ProjectionConfig narrow_fov_config() {
  // 900x32, +30/-10 degrees, 60 m: small enough for hand calculations.
  ProjectionConfig cfg;
  cfg.width = 900;
  cfg.height = 32;
  cfg.fov_up_deg = 30.0;
  cfg.fov_down_deg = 10.0;
  cfg.max_range = 60.0;
  return cfg;
}

PointCloud single_point(float x, float y, float z) {
  PointCloud cloud;
  cloud.points.push_back({x, y, z, 0.f});
  return cloud;
}

/// Random cloud whose points land strictly inside pixels: azimuth and
/// elevation (or radius) are sampled at an interior fraction of a cell, so
/// rotating by whole columns cannot flip any point across a pixel border.
PointCloud grid_centered_cloud(const ProjectionConfig& cfg, int count,
                               unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> col(0, cfg.width - 1);
  std::uniform_int_distribution<int> row(2, cfg.height - 3);
  std::uniform_real_distribution<double> interior(0.15, 0.85);
  std::uniform_real_distribution<double> range(2.0, cfg.max_range * 0.45);

  PointCloud cloud;
  const double fov = (cfg.fov_up_deg + cfg.fov_down_deg) * std::numbers::pi / 180.0;
  const double fov_up = cfg.fov_up_deg * std::numbers::pi / 180.0;
  for (int i = 0; i < count; ++i) {
    const double u = col(rng) + interior(rng);
    const double v = row(rng) + interior(rng);
    const double yaw = (1.0 - 2.0 * u / cfg.width) * std::numbers::pi;
    const double pitch = (1.0 - v / cfg.height) * fov - fov_up;
    const double r = range(rng);
    cloud.points.push_back({static_cast<float>(r * std::cos(pitch) * std::cos(yaw)),
                            static_cast<float>(r * std::cos(pitch) * std::sin(yaw)),
                            static_cast<float>(r * std::sin(pitch)), 0.f});
  }
  return cloud;
}

int nonzero_count(const ViewImage& img) {
  int count = 0;
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      if (img.values(v, u) != 0.0) {
        ++count;
      }
    }
  }
  return count;
}

}  // namespace

TEST_CASE("a point straight ahead lands mid-width at its range") {
  const ViewImage img = project_range_view(single_point(10.f, 0.f, 0.f),
                                           narrow_fov_config());
  CHECK(img.values(8, 450) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(nonzero_count(img) == 1);
}

TEST_CASE("azimuth grows clockwise: +y maps to the left quarter") {
  const ViewImage img = project_range_view(single_point(0.f, 10.f, 0.f),
                                           narrow_fov_config());
  CHECK(img.values(8, 225) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("straight behind wraps to column zero") {
  const ViewImage img = project_range_view(single_point(-10.f, 0.f, 0.f),
                                           narrow_fov_config());
  CHECK(img.values(8, 0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("the seam splits just-above and just-below the negative x axis") {
  CHECK(azimuth_column(-5.0, 1e-9, 900) == 0);
  CHECK(azimuth_column(-5.0, -1e-9, 900) == 899);
  CHECK(azimuth_column(5.0, 0.0, 900) == 450);
}

TEST_CASE("range pixels keep the closest return") {
  PointCloud cloud;
  cloud.points.push_back({10.f, 0.f, 0.f, 0.f});
  cloud.points.push_back({7.f, 0.f, 0.f, 0.f});
  cloud.points.push_back({12.f, 0.f, 0.f, 0.f});
  const ViewImage img = project_range_view(cloud, narrow_fov_config());
  CHECK(img.values(8, 450) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("points at the origin or beyond max range are discarded") {
  ProjectionConfig cfg = narrow_fov_config();
  PointCloud cloud;
  cloud.points.push_back({0.f, 0.f, 0.f, 0.f});
  cloud.points.push_back({80.f, 0.f, 0.f, 0.f});  // past 60 m
  CHECK(nonzero_count(project_range_view(cloud, cfg)) == 0);

  // The top-down view has no minimum radius: a point right above the sensor
  // is kept (while the far one is still dropped).
  PointCloud above;
  above.points.push_back({0.f, 0.f, 1.f, 0.f});
  above.points.push_back({80.f, 0.f, 0.f, 0.f});
  const ViewImage bev = project_birds_eye_view(above, cfg);
  CHECK(nonzero_count(bev) == 1);
  CHECK(bev.values(0, azimuth_column(0.0, 0.0, 900)) == 1.0);
}

TEST_CASE("rows clamp instead of dropping at the field-of-view edges") {
  ProjectionConfig cfg = narrow_fov_config();
  // Elevation far above the top of the field of view.
  const ViewImage high = project_range_view(single_point(1.f, 0.f, 5.f), cfg);
  CHECK(high.values(0, 450) != 0.0);
  // Far below the bottom.
  const ViewImage low = project_range_view(single_point(1.f, 0.f, -5.f), cfg);
  CHECK(low.values(cfg.height - 1, 450) != 0.0);
}

TEST_CASE("top-down projection bins by planar radius and keeps the highest z") {
  ProjectionConfig cfg = narrow_fov_config();
  // Planar radius 5 at azimuth atan2(4,3), height 1.
  const ViewImage img = project_birds_eye_view(single_point(3.f, 4.f, 1.f), cfg);
  // row = floor(5/60*32) = floor(2.666) = 2; column = floor((1-atan2(4,3)/pi)/2*900)
  const int u = azimuth_column(3.0, 4.0, 900);
  CHECK(u == 317);
  CHECK(img.values(2, u) == doctest::Approx(1.0).epsilon(1e-12));

  PointCloud stacked;
  stacked.points.push_back({3.f, 4.f, 1.f, 0.f});
  stacked.points.push_back({3.f, 4.f, 2.5f, 0.f});
  stacked.points.push_back({3.f, 4.f, -1.f, 0.f});
  const ViewImage img2 = project_birds_eye_view(stacked, cfg);
  CHECK(img2.values(2, u) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("a pixel whose only return is below ground keeps its negative height") {
  ProjectionConfig cfg = narrow_fov_config();
  const ViewImage img = project_birds_eye_view(single_point(3.f, 4.f, -1.5f), cfg);
  const int u = azimuth_column(3.0, 4.0, 900);
  CHECK(img.values(2, u) == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("planar radius exactly at max range clamps into the last row") {
  ProjectionConfig cfg = narrow_fov_config();
  const ViewImage img = project_birds_eye_view(single_point(60.f, 0.f, 1.f), cfg);
  CHECK(img.values(cfg.height - 1, 450) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("range and top-down projections agree on the column of every point") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> coord(-40.f, 40.f);
  ProjectionConfig cfg = narrow_fov_config();
  for (int i = 0; i < 100; ++i) {
    const float x = coord(rng), y = coord(rng);
    const float z = coord(rng) / 10.f;
    if (std::hypot(x, y, z) <= 1e-3 || std::hypot(x, y, z) > cfg.max_range) {
      continue;
    }
    const ViewImage rv = project_range_view(single_point(x, y, z), cfg);
    const ViewImage bev = project_birds_eye_view(single_point(x, y, z), cfg);
    int rv_col = -1, bev_col = -1;
    for (int v = 0; v < cfg.height; ++v) {
      for (int u = 0; u < cfg.width; ++u) {
        if (rv.values(v, u) != 0.0) {
          rv_col = u;
        }
        if (bev.values(v, u) != 0.0) {
          bev_col = u;
        }
      }
    }
    REQUIRE(rv_col >= 0);
    REQUIRE(bev_col >= 0);
    CHECK(rv_col == bev_col);
  }
}

TEST_CASE("layered range views slice by 3-D range with a trailing full view") {
  ProjectionConfig cfg = ProjectionConfig::nclt();
  // Range exactly 15: half-open intervals put it in [15,30), not [0,15).
  PointCloud cloud = single_point(15.f, 0.f, 0.f);
  const std::vector<ViewImage> layers = multilayer_range_view(cloud, cfg);
  REQUIRE(layers.size() == 5);
  CHECK(layers[0].layer_tag == "[0,15)");
  CHECK(layers[3].layer_tag == "[45,60)");
  CHECK(layers[4].layer_tag == "FULL");
  CHECK(nonzero_count(layers[0]) == 0);
  CHECK(nonzero_count(layers[1]) == 1);
  CHECK(nonzero_count(layers[2]) == 0);
  CHECK(nonzero_count(layers[4]) == 1);
}

TEST_CASE("layered top-down views slice by height") {
  ProjectionConfig cfg = ProjectionConfig::nclt();
  {
    // z = 0 sits in [0,4) by half-openness.
    const auto layers = multilayer_birds_eye_view(single_point(10.f, 0.f, 0.f), cfg);
    REQUIRE(layers.size() == 5);
    CHECK(nonzero_count(layers[0]) == 0);  // [-4,0)
    // The slice holds the point, but its stored value is z = 0, which is
    // indistinguishable from the empty sentinel by design: check via FULL
    // with a slightly lifted twin instead.
    const auto lifted = multilayer_birds_eye_view(single_point(10.f, 0.f, 0.5f), cfg);
    CHECK(nonzero_count(lifted[1]) == 1);  // [0,4)
    CHECK(nonzero_count(lifted[0]) == 0);
    CHECK(nonzero_count(lifted[4]) == 1);  // FULL
  }
  {
    // z below every slice appears only in the FULL view.
    const auto layers = multilayer_birds_eye_view(single_point(10.f, 0.f, -5.f), cfg);
    CHECK(nonzero_count(layers[0]) == 0);
    CHECK(nonzero_count(layers[1]) == 0);
    CHECK(nonzero_count(layers[2]) == 0);
    CHECK(nonzero_count(layers[3]) == 0);
    CHECK(nonzero_count(layers[4]) == 1);
  }
}

TEST_CASE("an empty cloud projects to all-zero layers") {
  ProjectionConfig cfg = ProjectionConfig::nclt();
  const auto layers = multilayer_range_view(PointCloud{}, cfg);
  REQUIRE(layers.size() == 5);
  for (const ViewImage& img : layers) {
    CHECK(nonzero_count(img) == 0);
    CHECK(img.height() == cfg.height);
    CHECK(img.width() == cfg.width);
  }
}

TEST_CASE("every nonzero layer pixel is nonzero in the full view") {
  ProjectionConfig cfg = ProjectionConfig::nclt();
  const PointCloud cloud = grid_centered_cloud(cfg, 300, 21);
  const auto layers = multilayer_range_view(cloud, cfg);
  const ViewImage& full = layers.back();
  for (std::size_t layer = 0; layer + 1 < layers.size(); ++layer) {
    for (int v = 0; v < cfg.height; ++v) {
      for (int u = 0; u < cfg.width; ++u) {
        if (layers[layer].values(v, u) != 0.0) {
          CHECK(full.values(v, u) != 0.0);
        }
      }
    }
  }
}

TEST_CASE("interval slices partition the in-range points") {
  // Points whose ranges stay clear of interval edges: each occupied pixel of
  // the full view must be occupied in exactly one sliced layer.
  ProjectionConfig cfg = ProjectionConfig::nclt();
  const PointCloud cloud = grid_centered_cloud(cfg, 200, 22);
  const auto layers = multilayer_range_view(cloud, cfg);
  const ViewImage& full = layers.back();
  for (int v = 0; v < cfg.height; ++v) {
    for (int u = 0; u < cfg.width; ++u) {
      if (full.values(v, u) == 0.0) {
        continue;
      }
      int owners = 0;
      for (std::size_t layer = 0; layer + 1 < layers.size(); ++layer) {
        if (layers[layer].values(v, u) != 0.0) {
          ++owners;
        }
      }
      CHECK(owners >= 1);
    }
  }
}

TEST_CASE("rotating the cloud about z circularly shifts the columns") {
  ProjectionConfig cfg = narrow_fov_config();
  const PointCloud cloud = grid_centered_cloud(cfg, 120, 23);
  const ViewImage base = project_range_view(cloud, cfg);

  for (const int shift : {1, 7, 450, 899}) {
    const double angle = 2.0 * std::numbers::pi * shift / cfg.width;
    const double c = std::cos(angle), s = std::sin(angle);
    PointCloud rotated;
    for (const Point& p : cloud.points) {
      rotated.points.push_back({static_cast<float>(c * p.x - s * p.y),
                                static_cast<float>(s * p.x + c * p.y), p.z,
                                p.intensity});
    }
    const ViewImage turned = project_range_view(rotated, cfg);
    // Counterclockwise rotation by `shift` columns moves content left.
    for (int v = 0; v < cfg.height; ++v) {
      for (int u = 0; u < cfg.width; ++u) {
        const int moved = (u - shift + cfg.width) % cfg.width;
        CHECK(turned.values(v, moved) ==
              doctest::Approx(base.values(v, u)).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("projection is deterministic") {
  ProjectionConfig cfg = ProjectionConfig::kitti();
  const PointCloud cloud = grid_centered_cloud(cfg, 500, 24);
  const ViewImage a = project_range_view(cloud, cfg);
  const ViewImage b = project_range_view(cloud, cfg);
  CHECK(lpr_test::exact_equal(a.values, b.values));
  const ViewImage c = project_birds_eye_view(cloud, cfg);
  const ViewImage d = project_birds_eye_view(cloud, cfg);
  CHECK(lpr_test::exact_equal(c.values, d.values));
}

TEST_CASE("stacking orders top-down layers before range layers") {
  ProjectionConfig cfg = ProjectionConfig::nclt();
  const PointCloud cloud = single_point(10.f, 0.f, 1.f);
  PseudoGlobalView view = build_pseudo_global_view(
      multilayer_birds_eye_view(cloud, cfg), multilayer_range_view(cloud, cfg));
  REQUIRE(view.channel_count() == 10);
  for (int i = 0; i < 5; ++i) {
    CHECK(view.channels[static_cast<std::size_t>(i)].kind == ViewKind::BirdsEyeView);
    CHECK(view.channels[static_cast<std::size_t>(i + 5)].kind == ViewKind::RangeView);
  }
  CHECK(view.channels[4].layer_tag == "FULL");
  CHECK(view.channels[9].layer_tag == "FULL");
}

TEST_CASE("stacking rejects mismatched channel sizes and empty lists") {
  ProjectionConfig small = narrow_fov_config();
  ProjectionConfig large = narrow_fov_config();
  large.height = 64;
  const PointCloud cloud = single_point(10.f, 0.f, 0.f);
  auto a = multilayer_birds_eye_view(cloud, small);
  auto b = multilayer_range_view(cloud, large);
  CHECK_THROWS_AS(build_pseudo_global_view(std::move(a), std::move(b)),
                  ShapeMismatch);
  CHECK_THROWS_AS(build_pseudo_global_view({}, multilayer_range_view(cloud, small)),
                  ShapeMismatch);
}

TEST_CASE("invalid projection configs are rejected") {
  ProjectionConfig cfg = narrow_fov_config();
  cfg.width = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = narrow_fov_config();
  cfg.fov_up_deg = -10.0;
  cfg.fov_down_deg = 5.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = narrow_fov_config();
  cfg.max_range = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = narrow_fov_config();
  cfg.range_intervals = {{0.0, 15.0}, {20.0, 30.0}};  // gap
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = narrow_fov_config();
  cfg.height_intervals = {{4.0, 0.0}};  // inverted
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("pgm dumps carry the 16-bit big-endian format header") {
  TempDir dir("pgm");
  ViewImage img;
  img.values = Eigen::MatrixXd::Zero(2, 3);
  img.values(0, 0) = 1.0;    // -> 256
  img.values(1, 2) = 300.0;  // -> clamps to 65535
  write_pgm16(img, dir / "img.pgm");
  const std::string bytes = lpr_test::read_bytes(dir / "img.pgm");
  const std::string header = "P5\n3 2\n65535\n";
  REQUIRE(bytes.size() == header.size() + 2 * 3 * 2);
  CHECK(bytes.substr(0, header.size()) == header);
  const auto* samples =
      reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
  CHECK(samples[0] == 1);    // 256 >> 8
  CHECK(samples[1] == 0);    // 256 & 0xff
  CHECK(samples[10] == 255);  // 65535 high byte
  CHECK(samples[11] == 255);
}
