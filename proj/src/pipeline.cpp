#include "lpr/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lpr/descriptor_store.hpp"
#include "lpr/evaluation.hpp"
#include "lpr/metric_index.hpp"
#include "lpr/scan_io.hpp"

namespace lpr {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("value '" + value + "' for " + key + " is not a number");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("value '" + value + "' for " + key + " is not an integer");
  }
  return out;
}

/// "0,15,30,45,60" -> the four contiguous intervals between the breakpoints.
std::vector<Interval> parse_breakpoints(const std::string& key,
                                        const std::string& value) {
  std::vector<double> points;
  std::istringstream cells(value);
  std::string cell;
  while (std::getline(cells, cell, ',')) {
    points.push_back(parse_double(key, trim(cell)));
  }
  if (points.size() < 2) {
    throw ConfigError(key + " needs at least two breakpoints");
  }
  std::vector<Interval> intervals;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    intervals.push_back({points[i], points[i + 1]});
  }
  return intervals;
}

void ensure_output_dir(const PipelineConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + cfg.output_dir.string() +
                  ": " + ec.message());
  }
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (path.empty()) {
    throw ConfigError(std::string(what) + " is not configured");
  }
  if (!std::filesystem::exists(path)) {
    throw ConfigError(std::string(what) + " " + path.string() + " does not exist");
  }
}

PositionMatrix positions_from_poses(const std::vector<Pose>& poses) {
  PositionMatrix positions(static_cast<Eigen::Index>(poses.size()), 3);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    positions.row(static_cast<Eigen::Index>(i)) =
        scan_position(poses[i]).cast<float>().transpose();
  }
  return positions;
}

PseudoGlobalView project_frame(const PointCloud& cloud, const ProjectionConfig& cfg) {
  return build_pseudo_global_view(multilayer_birds_eye_view(cloud, cfg),
                                  multilayer_range_view(cloud, cfg));
}

}  // namespace

void apply_config_override(PipelineConfig& cfg, const std::string& key,
                           const std::string& value) {
  if (key == "dataset.scan_dir") {
    cfg.scan_dir = value;
  } else if (key == "dataset.pose_file") {
    cfg.pose_file = value;
  } else if (key == "projection.preset") {
    if (value == "nclt") {
      cfg.projection = ProjectionConfig::nclt();
    } else if (value == "kitti") {
      cfg.projection = ProjectionConfig::kitti();
    } else {
      throw ConfigError("unknown projection preset '" + value + "'");
    }
  } else if (key == "projection.w") {
    cfg.projection.width = parse_int(key, value);
  } else if (key == "projection.h") {
    cfg.projection.height = parse_int(key, value);
  } else if (key == "projection.fov_up") {
    cfg.projection.fov_up_deg = parse_double(key, value);
  } else if (key == "projection.fov_down") {
    cfg.projection.fov_down_deg = parse_double(key, value);
  } else if (key == "projection.max_range") {
    cfg.projection.max_range = parse_double(key, value);
  } else if (key == "projection.range_intervals") {
    cfg.projection.range_intervals = parse_breakpoints(key, value);
  } else if (key == "projection.height_intervals") {
    cfg.projection.height_intervals = parse_breakpoints(key, value);
  } else if (key == "descriptor.source") {
    if (value != "baseline" && value != "external") {
      throw ConfigError("descriptor.source must be 'baseline' or 'external'");
    }
    cfg.descriptor_source = value;
  } else if (key == "descriptor.path") {
    cfg.descriptor_path = value;
  } else if (key == "descriptor.dim") {
    cfg.descriptor_dim = parse_int(key, value);
  } else if (key == "mapvlm.d1") {
    cfg.mapvlm.d1 = parse_int(key, value);
  } else if (key == "mapvlm.d2") {
    cfg.mapvlm.d2 = parse_int(key, value);
  } else if (key == "mapvlm.k_neighbor") {
    cfg.mapvlm.k_neighbor = parse_int(key, value);
  } else if (key == "mapvlm.reg_epsilon_scale") {
    cfg.mapvlm.reg_epsilon_scale = parse_double(key, value);
  } else if (key == "mapvlm.min_class_size") {
    cfg.mapvlm.min_class_size = parse_int(key, value);
  } else if (key == "class_radius") {
    cfg.class_radius = parse_double(key, value);
  } else if (key == "eval.gt_radius") {
    cfg.gt_radius = parse_double(key, value);
  } else if (key == "eval.exclusion_frames") {
    cfg.exclusion_frames = parse_int(key, value);
  } else if (key == "output.dir") {
    cfg.output_dir = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }

  PipelineConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    }
    apply_config_override(cfg, key, value);
  }
  if (in.bad()) {
    throw IoError("read failed on " + path.string());
  }
  return cfg;
}

void cmd_project(const PipelineConfig& cfg) {
  require_file(cfg.scan_dir, "scan directory");
  require_file(cfg.pose_file, "pose file");
  cfg.projection.validate();

  const ScanSequence seq = load_scan_sequence(cfg.scan_dir, cfg.pose_file);
  ensure_output_dir(cfg);
  const std::filesystem::path pgv_dir = cfg.output_dir / "pgv";
  std::error_code ec;
  std::filesystem::create_directories(pgv_dir, ec);
  if (ec) {
    throw IoError("cannot create " + pgv_dir.string() + ": " + ec.message());
  }

  std::ofstream manifest(cfg.output_dir / "manifest.csv", std::ios::trunc);
  if (!manifest) {
    throw IoError("cannot open " + (cfg.output_dir / "manifest.csv").string() +
                  " for writing");
  }
  manifest << "frame_id,scan_path,channels\n";

  std::size_t channels = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    PointCloud cloud = read_kitti_scan(seq.scan_paths[i]);
    cloud.frame_id = static_cast<std::uint32_t>(i);
    const PseudoGlobalView view = project_frame(cloud, cfg.projection);
    channels = view.channel_count();
    for (std::size_t c = 0; c < view.channels.size(); ++c) {
      char name[40];
      std::snprintf(name, sizeof(name), "%06zu_c%02zu.pgm", i, c);
      write_pgm16(view.channels[c], pgv_dir / name);
    }
    manifest << i << "," << seq.scan_paths[i].string() << "," << channels << "\n";
  }
  manifest.flush();
  if (!manifest) {
    throw IoError("write failed on the manifest");
  }
  std::cout << "projected " << seq.size() << " scans (" << channels
            << " channels each) into " << pgv_dir.string() << "\n";
}

void cmd_describe(const PipelineConfig& cfg) {
  ensure_output_dir(cfg);
  const std::filesystem::path out_path = cfg.output_dir / "descriptors.dsc";
  DescriptorSet set;

  if (cfg.descriptor_source == "baseline") {
    require_file(cfg.scan_dir, "scan directory");
    require_file(cfg.pose_file, "pose file");
    cfg.projection.validate();

    const ScanSequence seq = load_scan_sequence(cfg.scan_dir, cfg.pose_file);
    set.vectors.resize(static_cast<Eigen::Index>(seq.size()), cfg.descriptor_dim);
    set.positions = positions_from_poses(seq.poses);
    set.frame_ids.resize(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      PointCloud cloud = read_kitti_scan(seq.scan_paths[i]);
      cloud.frame_id = static_cast<std::uint32_t>(i);
      const PseudoGlobalView view = project_frame(cloud, cfg.projection);
      set.vectors.row(static_cast<Eigen::Index>(i)) =
          baseline_descriptor(view, cfg.descriptor_dim).transpose();
      set.frame_ids[i] = static_cast<std::uint32_t>(i);
    }
  } else if (cfg.descriptor_source == "external") {
    require_file(cfg.descriptor_path, "descriptor file");
    set = cfg.descriptor_path.extension() == ".csv"
              ? load_descriptors_csv(cfg.descriptor_path)
              : load_descriptors(cfg.descriptor_path);
    if (set.dim() != cfg.descriptor_dim) {
      throw DimensionError("descriptor file has dimension " +
                           std::to_string(set.dim()) + ", configured dimension is " +
                           std::to_string(cfg.descriptor_dim));
    }
    if (!cfg.pose_file.empty()) {
      require_file(cfg.pose_file, "pose file");
      const std::vector<Pose> poses = read_pose_file(cfg.pose_file);
      if (static_cast<Eigen::Index>(poses.size()) != set.size()) {
        throw ConfigError("pose count " + std::to_string(poses.size()) +
                          " does not match descriptor count " +
                          std::to_string(set.size()));
      }
      set.positions = positions_from_poses(poses);
    }
  } else {
    throw ConfigError("descriptor.source must be 'baseline' or 'external'");
  }

  save_descriptors(set, out_path);
  std::cout << "wrote " << set.size() << " descriptors (dim " << set.dim() << ") to "
            << out_path.string() << "\n";
}

void cmd_fit_metric(const PipelineConfig& cfg,
                    const std::filesystem::path& descriptor_override) {
  const std::filesystem::path desc_path = descriptor_override.empty()
                                              ? cfg.output_dir / "descriptors.dsc"
                                              : descriptor_override;
  require_file(desc_path, "descriptor file");

  DescriptorSet set = load_descriptors(desc_path);
  set.labels = assign_place_classes(set.positions, cfg.class_radius);

  FitInfo info;
  const MetricModel model = fit(set, cfg.mapvlm, &info);

  ensure_output_dir(cfg);
  const std::filesystem::path model_path = cfg.output_dir / "metric.spd";
  save_metric(model, model_path);

  const double kept_variance = info.total_variance > 0.0
                                   ? model.pca_eigenvalues.sum() / info.total_variance
                                   : 0.0;
  std::cout << "fitted on " << info.samples_used << " descriptors in "
            << info.classes_used << " classes (" << info.samples_dropped
            << " dropped)\n";
  char line[64];
  std::snprintf(line, sizeof(line), "kept variance fraction: %.4f\n", kept_variance);
  std::cout << line;
  std::cout << "leading eigenvalues:";
  const auto head = std::min<Eigen::Index>(5, model.lfda_eigenvalues.size());
  for (Eigen::Index i = 0; i < head; ++i) {
    std::snprintf(line, sizeof(line), " %.6g", model.lfda_eigenvalues(i));
    std::cout << line;
  }
  std::cout << "\nwrote " << model_path.string() << "\n";
}

void cmd_evaluate(const PipelineConfig& cfg, const std::filesystem::path& query_path,
                  const std::filesystem::path& db_path,
                  const std::filesystem::path& model_path, const std::string& mode,
                  bool euclidean) {
  if (mode != "place" && mode != "loop") {
    throw ConfigError("mode must be 'place' or 'loop', got '" + mode + "'");
  }
  require_file(query_path, "query descriptor file");
  require_file(db_path, "database descriptor file");

  const DescriptorSet query_set = load_descriptors(query_path);
  const DescriptorSet db_set = load_descriptors(db_path);
  if (query_set.dim() != db_set.dim()) {
    throw ShapeMismatch("query dimension " + std::to_string(query_set.dim()) +
                        " does not match database dimension " +
                        std::to_string(db_set.dim()));
  }

  MetricModel model;
  if (euclidean) {
    model = MetricModel::identity(db_set.dim());
  } else {
    require_file(model_path, "metric model file");
    model = load_metric(model_path);
  }

  const MetricIndex index = build_index(db_set, model);
  const auto one_percent =
      static_cast<int>(std::max<Eigen::Index>(1, (db_set.size() + 99) / 100));
  const int budget = std::max(20, one_percent);

  std::vector<std::vector<Neighbor>> results;
  results.reserve(static_cast<std::size_t>(query_set.size()));
  for (Eigen::Index q = 0; q < query_set.size(); ++q) {
    const Eigen::VectorXd descriptor =
        query_set.vectors.row(q).cast<double>().transpose();
    results.push_back(query_knn(index, descriptor, budget));
  }

  // Loop closure searches one trajectory against its own past; place
  // recognition matches across sessions, so nearby frame ids mean nothing.
  const bool same_sequence = mode == "loop";
  const double radius = cfg.gt_radius.value_or(same_sequence ? 5.0 : 10.0);
  const GroundTruth gt =
      build_ground_truth(query_set.positions, query_set.frame_ids, db_set.positions,
                         db_set.frame_ids, radius, cfg.exclusion_frames,
                         same_sequence);

  const EvalReport report = evaluate_results(results, gt, db_set.size());
  if (query_set.size() == 0) {
    std::cerr << "warning: query set is empty; every metric is vacuously zero\n";
  }

  ensure_output_dir(cfg);
  write_report(report, cfg.output_dir / "report.txt", cfg.output_dir / "pr_curve.csv");

  std::ofstream results_csv(cfg.output_dir / "results.csv", std::ios::trunc);
  if (!results_csv) {
    throw IoError("cannot open " + (cfg.output_dir / "results.csv").string() +
                  " for writing");
  }
  results_csv << "query_id,rank,frame_id,distance\n";
  char line[96];
  for (std::size_t q = 0; q < results.size(); ++q) {
    for (std::size_t rank = 0; rank < results[q].size(); ++rank) {
      std::snprintf(line, sizeof(line), "%u,%zu,%u,%.9f\n",
                    query_set.frame_ids[q], rank + 1, results[q][rank].frame_id,
                    results[q][rank].distance);
      results_csv << line;
    }
  }
  results_csv.flush();
  if (!results_csv) {
    throw IoError("write failed on results.csv");
  }

  std::cout << format_report(report);
}

void cmd_mine(const PipelineConfig& cfg, const std::filesystem::path& descriptor_path,
              const std::filesystem::path& model_path, double margin, bool hinge) {
  require_file(descriptor_path, "descriptor file");
  require_file(model_path, "metric model file");

  const DescriptorSet set = load_descriptors(descriptor_path);
  const MetricModel model = load_metric(model_path);
  const std::vector<std::int32_t> labels =
      assign_place_classes(set.positions, cfg.class_radius);

  // Map every descriptor once; metric distances are Euclidean afterwards.
  const MetricIndex index = build_index(set, model);

  ensure_output_dir(cfg);
  std::ofstream out(cfg.output_dir / "triplets.csv", std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + (cfg.output_dir / "triplets.csv").string() +
                  " for writing");
  }
  out << "query_id,pos_id,neg_id,loss\n";

  std::size_t mined = 0;
  std::size_t skipped = 0;
  const auto n = set.size();
  for (Eigen::Index q = 0; q < n; ++q) {
    Eigen::Index hardest_pos = -1, hardest_neg = -1;
    double pos_dist = -1.0, neg_dist = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == q) {
        continue;
      }
      const double dist = (index.transformed.row(j) - index.transformed.row(q)).norm();
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(q)]) {
        if (dist > pos_dist) {  // strict: ties keep the earliest index
          pos_dist = dist;
          hardest_pos = j;
        }
      } else if (hardest_neg < 0 || dist < neg_dist) {
        neg_dist = dist;
        hardest_neg = j;
      }
    }
    if (hardest_pos < 0 || hardest_neg < 0) {
      ++skipped;  // no same-class partner or no other class at all
      continue;
    }
    double loss = margin + pos_dist - neg_dist;
    if (hinge) {
      loss = std::max(0.0, loss);
    }
    char line[96];
    std::snprintf(line, sizeof(line), "%u,%u,%u,%.9f\n",
                  set.frame_ids[static_cast<std::size_t>(q)],
                  set.frame_ids[static_cast<std::size_t>(hardest_pos)],
                  set.frame_ids[static_cast<std::size_t>(hardest_neg)], loss);
    out << line;
    ++mined;
  }
  out.flush();
  if (!out) {
    throw IoError("write failed on triplets.csv");
  }
  std::cout << "mined " << mined << " triplets (" << skipped
            << " queries skipped) into "
            << (cfg.output_dir / "triplets.csv").string() << "\n";
}

}  // namespace lpr
