#include "lpr/descriptor_store.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"

using namespace lpr;
using lpr_test::TempDir;

namespace {

DescriptorSet make_random_set(Eigen::Index n, Eigen::Index d, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> normal(0.f, 1.f);
  DescriptorSet set;
  set.vectors.resize(n, d);
  set.positions.resize(n, 3);
  set.frame_ids.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      set.vectors(i, j) = normal(rng);
    }
    for (int j = 0; j < 3; ++j) {
      set.positions(i, j) = normal(rng) * 50.f;
    }
    set.frame_ids[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i * 3);
  }
  return set;
}

ViewImage constant_image(int h, int w, double value) {
  ViewImage img;
  img.values = Eigen::MatrixXd::Constant(h, w, value);
  return img;
}

/// Direct-form DFT magnitudes of a column profile; quadratic-time oracle.
std::vector<double> dft_magnitudes(const Eigen::VectorXd& profile, int coefficients) {
  const auto w = static_cast<int>(profile.size());
  std::vector<double> out;
  for (int k = 0; k < coefficients; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int n = 0; n < w; ++n) {
      acc += profile(n) * std::exp(std::complex<double>(
                              0.0, -2.0 * std::numbers::pi * k * n / w));
    }
    out.push_back(std::abs(acc));
  }
  return out;
}

}  // namespace

TEST_CASE("descriptor container round trip is bit exact") {
  TempDir dir("dsc");
  const DescriptorSet set = make_random_set(17, 29, 5);
  save_descriptors(set, dir / "set.dsc");
  const DescriptorSet back = load_descriptors(dir / "set.dsc");
  REQUIRE(back.size() == set.size());
  REQUIRE(back.dim() == set.dim());
  CHECK(lpr_test::exact_equal(back.vectors, set.vectors));
  CHECK(lpr_test::exact_equal(back.positions, set.positions));
  CHECK(back.frame_ids == set.frame_ids);
  CHECK_FALSE(back.has_labels());

  // Saving the loaded copy reproduces the file byte for byte.
  save_descriptors(back, dir / "again.dsc");
  CHECK(lpr_test::read_bytes(dir / "set.dsc") ==
        lpr_test::read_bytes(dir / "again.dsc"));
}

TEST_CASE("container size follows the declared layout exactly") {
  TempDir dir("dsc");
  const Eigen::Index n = 2, d = 768;
  save_descriptors(make_random_set(n, d, 6), dir / "set.dsc");
  CHECK(std::filesystem::file_size(dir / "set.dsc") ==
        12 + static_cast<std::uintmax_t>(n) * (4 * d + 12 + 4));
}

TEST_CASE("an empty descriptor set round trips") {
  TempDir dir("dsc");
  save_descriptors(make_random_set(0, 16, 7), dir / "empty.dsc");
  const DescriptorSet back = load_descriptors(dir / "empty.dsc");
  CHECK(back.size() == 0);
  CHECK(back.dim() == 16);
}

TEST_CASE("wrong magic bytes are rejected") {
  TempDir dir("dsc");
  lpr_test::write_text(dir / "bad.dsc", std::string("NOPE") + std::string(8, '\0'));
  CHECK_THROWS_AS(load_descriptors(dir / "bad.dsc"), BadMagic);
}

TEST_CASE("byte counts that disagree with the header are rejected") {
  TempDir dir("dsc");
  const DescriptorSet set = make_random_set(2, 4, 8);
  save_descriptors(set, dir / "set.dsc");
  std::string bytes = lpr_test::read_bytes(dir / "set.dsc");

  lpr_test::write_text(dir / "short.dsc", bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(load_descriptors(dir / "short.dsc"), TruncatedFile);

  lpr_test::write_text(dir / "long.dsc", bytes + "xx");
  CHECK_THROWS_AS(load_descriptors(dir / "long.dsc"), TruncatedFile);

  lpr_test::write_text(dir / "tiny.dsc", "DS");
  CHECK_THROWS_AS(load_descriptors(dir / "tiny.dsc"), TruncatedFile);
}

TEST_CASE("saving rejects inconsistent row counts") {
  TempDir dir("dsc");
  DescriptorSet set = make_random_set(3, 4, 9);
  set.frame_ids.pop_back();
  CHECK_THROWS_AS(save_descriptors(set, dir / "bad.dsc"), ShapeMismatch);
}

TEST_CASE("csv import splits descriptor columns from trailing positions") {
  TempDir dir("csv");
  lpr_test::write_text(dir / "d.csv",
                       "1.0, 2.0, 3.0, 10.0, 20.0, 30.0\n"
                       "\n"
                       "4.0, 5.0, 6.0, 40.0, 50.0, 60.0\n");
  const DescriptorSet set = load_descriptors_csv(dir / "d.csv");
  REQUIRE(set.size() == 2);
  REQUIRE(set.dim() == 3);
  CHECK(set.vectors(0, 0) == 1.0f);
  CHECK(set.vectors(1, 2) == 6.0f);
  CHECK(set.positions(0, 0) == 10.0f);
  CHECK(set.positions(1, 2) == 60.0f);
  CHECK(set.frame_ids == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("csv import rejects ragged or non-numeric rows") {
  TempDir dir("csv");
  lpr_test::write_text(dir / "ragged.csv", "1,2,3,4,5\n1,2,3,4\n");
  CHECK_THROWS_AS(load_descriptors_csv(dir / "ragged.csv"), ParseError);
  lpr_test::write_text(dir / "alpha.csv", "1,2,three,4\n");
  CHECK_THROWS_AS(load_descriptors_csv(dir / "alpha.csv"), ParseError);
  lpr_test::write_text(dir / "narrow.csv", "1,2,3\n");
  CHECK_THROWS_AS(load_descriptors_csv(dir / "narrow.csv"), ParseError);
}

TEST_CASE("all-empty channels produce the zero descriptor") {
  PseudoGlobalView view;
  view.channels.push_back(constant_image(4, 8, 0.0));
  view.channels.push_back(constant_image(4, 8, 0.0));
  const Eigen::VectorXf desc = baseline_descriptor(view, 8);
  REQUIRE(desc.size() == 8);
  CHECK(desc.isZero(0.f));
}

TEST_CASE("a constant image concentrates all energy in the DC coefficient") {
  PseudoGlobalView view;
  view.channels.push_back(constant_image(4, 16, 2.5));
  const Eigen::VectorXf desc = baseline_descriptor(view, 4);
  REQUIRE(desc.size() == 4);
  CHECK(desc(0) == doctest::Approx(1.f).epsilon(1e-6));
  for (int k = 1; k < 4; ++k) {
    CHECK(std::abs(desc(k)) < 1e-6f);
  }
}

TEST_CASE("the descriptor matches a direct DFT of the column profile") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> value(0.5, 5.0);
  ViewImage img;
  img.values = Eigen::MatrixXd::Zero(6, 32);
  for (int u = 0; u < 32; ++u) {
    for (int v = 0; v < 6; ++v) {
      if ((u + v) % 3 != 0) {
        img.values(v, u) = value(rng);
      }
    }
  }
  // Oracle profile: mean over nonzero pixels per column.
  Eigen::VectorXd profile = Eigen::VectorXd::Zero(32);
  for (int u = 0; u < 32; ++u) {
    double sum = 0.0;
    int count = 0;
    for (int v = 0; v < 6; ++v) {
      if (img.values(v, u) != 0.0) {
        sum += img.values(v, u);
        ++count;
      }
    }
    profile(u) = count ? sum / count : 0.0;
  }
  const std::vector<double> oracle = dft_magnitudes(profile, 8);
  double norm_sq = 0.0;
  for (const double m : oracle) {
    norm_sq += m * m;
  }
  const double norm = std::sqrt(norm_sq);

  PseudoGlobalView view;
  view.channels.push_back(img);
  const Eigen::VectorXf desc = baseline_descriptor(view, 8);
  REQUIRE(desc.size() == 8);
  for (int k = 0; k < 8; ++k) {
    CHECK(desc(k) == doctest::Approx(oracle[static_cast<std::size_t>(k)] / norm)
                         .epsilon(1e-5));
  }
}

TEST_CASE("circularly shifting every channel leaves the descriptor unchanged") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> value(0.5, 5.0);
  PseudoGlobalView a, b;
  const int w = 24, h = 5, shift = 7;
  for (int c = 0; c < 2; ++c) {
    ViewImage img;
    img.values = Eigen::MatrixXd::Zero(h, w);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        if ((u * 31 + v * 17 + c) % 4 != 0) {
          img.values(v, u) = value(rng);
        }
      }
    }
    ViewImage shifted;
    shifted.values = Eigen::MatrixXd::Zero(h, w);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        shifted.values(v, (u + shift) % w) = img.values(v, u);
      }
    }
    a.channels.push_back(std::move(img));
    b.channels.push_back(std::move(shifted));
  }
  const Eigen::VectorXf da = baseline_descriptor(a, 12);
  const Eigen::VectorXf db = baseline_descriptor(b, 12);
  REQUIRE(da.size() == db.size());
  for (Eigen::Index i = 0; i < da.size(); ++i) {
    CHECK(std::abs(da(i) - db(i)) <= 1e-5f);
  }
}

TEST_CASE("descriptor length must divide evenly across channels") {
  PseudoGlobalView view;
  view.channels.push_back(constant_image(2, 8, 1.0));
  view.channels.push_back(constant_image(2, 8, 1.0));
  view.channels.push_back(constant_image(2, 8, 1.0));
  CHECK_THROWS_AS(baseline_descriptor(view, 8), DimensionError);  // 8 % 3 != 0
  CHECK_THROWS_AS(baseline_descriptor(view, 0), DimensionError);
  CHECK_THROWS_AS(baseline_descriptor(PseudoGlobalView{}, 8), EmptySet);
}

TEST_CASE("place classes: distant rows open new classes, near rows join") {
  PositionMatrix positions(4, 3);
  positions << 0.f, 0.f, 0.f,    //
      3.f, 0.f, 5.f,             // planar distance 3 <= 5, z ignored
      100.f, 0.f, 0.f,           //
      101.f, 1.f, 0.f;
  const auto labels = assign_place_classes(positions, 5.0);
  CHECK(labels == std::vector<std::int32_t>{0, 0, 1, 1});
}

TEST_CASE("membership uses the class leader, not the latest member") {
  // Chained positions: 4 joins 0's class, 8 is 4 m from the member at 4 but
  // 8 m from the leader at 0, so it opens a new class.
  PositionMatrix positions(3, 3);
  positions << 0.f, 0.f, 0.f, 4.f, 0.f, 0.f, 8.f, 0.f, 0.f;
  const auto labels = assign_place_classes(positions, 5.0);
  CHECK(labels == std::vector<std::int32_t>{0, 0, 1});
}

TEST_CASE("boundary distance joins the class (inclusive radius)") {
  PositionMatrix positions(2, 3);
  positions << 0.f, 0.f, 0.f, 5.f, 0.f, 0.f;
  CHECK(assign_place_classes(positions, 5.0) == std::vector<std::int32_t>{0, 0});
}

TEST_CASE("class ids are dense and every member sits within radius of its leader") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<float> coord(-80.f, 80.f);
  PositionMatrix positions(200, 3);
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    positions(i, 0) = coord(rng);
    positions(i, 1) = coord(rng);
    positions(i, 2) = coord(rng);
  }
  const double radius = 10.0;
  const auto labels = assign_place_classes(positions, radius);
  REQUIRE(labels.size() == 200);

  std::int32_t max_label = -1;
  std::vector<Eigen::Index> leader_row;  // first row of each class
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    const std::int32_t label = labels[static_cast<std::size_t>(i)];
    if (label > max_label) {
      CHECK(label == max_label + 1);  // dense, in first-appearance order
      max_label = label;
      leader_row.push_back(i);
    } else {
      const Eigen::Index leader = leader_row[static_cast<std::size_t>(label)];
      const float dx = positions(i, 0) - positions(leader, 0);
      const float dy = positions(i, 1) - positions(leader, 1);
      CHECK(std::sqrt(double(dx) * dx + double(dy) * dy) <= radius + 1e-9);
    }
  }
  CHECK(assign_place_classes(positions, radius) == labels);  // deterministic
}
