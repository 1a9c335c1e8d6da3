#include "lpr/descriptor_store.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace lpr {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', '1'};

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

std::uint32_t read_u32(const char* p) {
  std::uint32_t v = 0;
  std::memcpy(&v, p, sizeof(v));
  return v;  // file and host are both little-endian
}

float parse_float_token(const std::string& token, const std::filesystem::path& path,
                        std::size_t line_no) {
  float value = 0.f;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": token '" +
                     token + "' is not a number");
  }
  return value;
}

}  // namespace

DescriptorSet load_descriptors(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 4) {
    throw TruncatedFile(path.string() + ": too short for a magic header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagic(path.string() + ": not a descriptor container");
  }
  if (bytes.size() < 12) {
    throw TruncatedFile(path.string() + ": header cut off");
  }
  const std::uint64_t n = read_u32(bytes.data() + 4);
  const std::uint64_t d = read_u32(bytes.data() + 8);
  const std::uint64_t expected = 12 + n * (4 * d + 12 + 4);
  if (bytes.size() != expected) {
    throw TruncatedFile(path.string() + ": payload is " +
                        std::to_string(bytes.size()) + " bytes, header declares " +
                        std::to_string(expected));
  }

  DescriptorSet set;
  set.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  set.positions.resize(static_cast<Eigen::Index>(n), 3);
  set.frame_ids.resize(n);

  const char* cursor = bytes.data() + 12;
  std::memcpy(set.vectors.data(), cursor, n * d * sizeof(float));
  cursor += n * d * sizeof(float);
  std::memcpy(set.positions.data(), cursor, n * 3 * sizeof(float));
  cursor += n * 3 * sizeof(float);
  std::memcpy(set.frame_ids.data(), cursor, n * sizeof(std::uint32_t));
  return set;
}

void save_descriptors(const DescriptorSet& set, const std::filesystem::path& path) {
  const auto n = set.vectors.rows();
  if (set.positions.rows() != n || static_cast<Eigen::Index>(set.frame_ids.size()) != n) {
    throw ShapeMismatch("descriptor rows (" + std::to_string(n) + "), positions (" +
                        std::to_string(set.positions.rows()) + ") and frame ids (" +
                        std::to_string(set.frame_ids.size()) + ") disagree");
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  const auto n32 = static_cast<std::uint32_t>(n);
  const auto d32 = static_cast<std::uint32_t>(set.vectors.cols());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&n32), 4);
  out.write(reinterpret_cast<const char*>(&d32), 4);
  out.write(reinterpret_cast<const char*>(set.vectors.data()),
            static_cast<std::streamsize>(sizeof(float)) * n * set.vectors.cols());
  out.write(reinterpret_cast<const char*>(set.positions.data()),
            static_cast<std::streamsize>(sizeof(float)) * n * 3);
  out.write(reinterpret_cast<const char*>(set.frame_ids.data()),
            static_cast<std::streamsize>(sizeof(std::uint32_t)) * n);
  out.flush();
  if (!out) {
    throw IoError("write failed on " + path.string());
  }
}

DescriptorSet load_descriptors_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }

  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;  // blank line
    }
    std::vector<float> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      // trim surrounding whitespace
      const auto first = cell.find_first_not_of(" \t\r");
      const auto last = cell.find_last_not_of(" \t\r");
      if (first == std::string::npos) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": empty cell");
      }
      row.push_back(parse_float_token(cell.substr(first, last - first + 1), path,
                                      line_no));
    }
    if (row.size() < 4) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": need at least 1 descriptor column plus 3 position columns");
    }
    if (width == 0) {
      width = row.size();
    } else if (row.size() != width) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": row has " +
                       std::to_string(row.size()) + " columns, expected " +
                       std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) {
    throw IoError("read failed on " + path.string());
  }

  DescriptorSet set;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(width == 0 ? 0 : width - 3);
  set.vectors.resize(n, d);
  set.positions.resize(n, 3);
  set.frame_ids.resize(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      set.vectors(i, j) = rows[i][static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < 3; ++j) {
      set.positions(i, j) = rows[i][width - 3 + j];
    }
    set.frame_ids[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
  }
  return set;
}

Eigen::VectorXf baseline_descriptor(const PseudoGlobalView& view, int target_dim) {
  const auto channels = static_cast<int>(view.channels.size());
  if (channels == 0) {
    throw EmptySet("view has no channels");
  }
  if (target_dim <= 0 || target_dim % channels != 0) {
    throw DimensionError("target dimension " + std::to_string(target_dim) +
                         " is not a positive multiple of " +
                         std::to_string(channels) + " channels");
  }
  const int per_channel = target_dim / channels;

  Eigen::VectorXd descriptor(target_dim);
  Eigen::Index offset = 0;
  for (const ViewImage& img : view.channels) {
    const int w = img.width();
    const int h = img.height();

    // Column profile: mean over occupied pixels, 0 where the column is empty.
    Eigen::VectorXd profile = Eigen::VectorXd::Zero(w);
    for (int u = 0; u < w; ++u) {
      double sum = 0.0;
      int count = 0;
      for (int v = 0; v < h; ++v) {
        const double value = img.values(v, u);
        if (value != 0.0) {
          sum += value;
          ++count;
        }
      }
      profile(u) = count > 0 ? sum / count : 0.0;
    }

    // Magnitudes of the leading DFT coefficients; scene rotation about z
    // circularly shifts the profile and leaves these magnitudes unchanged.
    for (int k = 0; k < per_channel; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int n = 0; n < w; ++n) {
        const double angle = -2.0 * std::numbers::pi * k * n / w;
        acc += profile(n) * std::complex<double>(std::cos(angle), std::sin(angle));
      }
      descriptor(offset + k) = std::abs(acc);
    }
    offset += per_channel;
  }

  const double norm = descriptor.norm();
  if (norm > 0.0) {
    descriptor /= norm;
  }
  return descriptor.cast<float>();
}

std::vector<std::int32_t> assign_place_classes(const PositionMatrix& positions,
                                               double radius) {
  std::vector<std::int32_t> labels(static_cast<std::size_t>(positions.rows()), 0);
  std::vector<Eigen::Vector2d> leaders;
  const double radius_sq = radius * radius;
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    const Eigen::Vector2d xy(positions(i, 0), positions(i, 1));
    std::int32_t label = -1;
    for (std::size_t c = 0; c < leaders.size(); ++c) {
      if ((xy - leaders[c]).squaredNorm() <= radius_sq) {
        label = static_cast<std::int32_t>(c);
        break;  // first (oldest) leader wins
      }
    }
    if (label < 0) {
      label = static_cast<std::int32_t>(leaders.size());
      leaders.push_back(xy);
    }
    labels[static_cast<std::size_t>(i)] = label;
  }
  return labels;
}

}  // namespace lpr
