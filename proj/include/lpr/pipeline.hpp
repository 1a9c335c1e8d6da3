#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "lpr/error.hpp"
#include "lpr/mapvlm.hpp"
#include "lpr/projection.hpp"

namespace lpr {

/// Everything the command-line pipeline reads from its config file.
/// Flat "key = value" lines; '#' starts a comment; later keys override
/// earlier ones; unknown keys are errors.
struct PipelineConfig {
  // dataset.*
  std::filesystem::path scan_dir;
  std::filesystem::path pose_file;

  // projection.* (projection.preset = nclt|kitti loads a bundle first)
  ProjectionConfig projection = ProjectionConfig::kitti();

  // descriptor.*
  std::string descriptor_source = "baseline";  // baseline | external
  std::filesystem::path descriptor_path;       // external input file
  int descriptor_dim = 768;

  // mapvlm.*
  MapvlmConfig mapvlm;

  // place classes for fitting / mining
  double class_radius = 5.0;

  // eval.*
  std::optional<double> gt_radius;  // defaults per mode when unset
  int exclusion_frames = 100;

  // output.*
  std::filesystem::path output_dir = "out";
};

/// Parses a config file. Throws IoError (unreadable), ParseError (bad
/// syntax/number), ConfigError (unknown key, invalid value).
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Applies one "section.key=value" override (same grammar as a config line).
void apply_config_override(PipelineConfig& cfg, const std::string& key,
                           const std::string& value);

/// Subcommands. Each throws a typed lpr::Error on failure; the CLI driver
/// maps that to a nonzero exit status.

/// Projects every scan of the configured sequence, writing per-channel
/// 16-bit PGM dumps under output_dir/pgv/ and a frame manifest CSV.
/// Validates that scan_dir and pose_file exist before any work.
void cmd_project(const PipelineConfig& cfg);

/// Computes (or imports) descriptors for the sequence and writes them to
/// output_dir/descriptors.dsc. Source "baseline" projects scans and applies
/// the reference descriptor; "external" loads descriptor_path (binary
/// container or CSV by extension), validates the dimension against
/// descriptor.dim, joins positions from the pose file when the counts
/// match, and re-saves.
void cmd_describe(const PipelineConfig& cfg);

/// Fits the metric on a descriptor file (default
/// output_dir/descriptors.dsc): assigns place classes by class_radius,
/// runs the learning chain, writes output_dir/metric.spd, and prints the
/// spectrum head plus the kept-variance fraction.
void cmd_fit_metric(const PipelineConfig& cfg,
                    const std::filesystem::path& descriptor_override = {});

/// Retrieval + metrics. mode is "place" (cross-session: no frame exclusion,
/// default radius 10 m) or "loop" (single trajectory: frame exclusion
/// applies, default radius 5 m); cfg.gt_radius overrides the default.
/// euclidean = true scores with the identity metric and needs no model.
/// Writes report.txt, pr_curve.csv, and per-query results.csv under
/// output_dir and prints the report.
void cmd_evaluate(const PipelineConfig& cfg, const std::filesystem::path& query_path,
                  const std::filesystem::path& db_path,
                  const std::filesystem::path& model_path, const std::string& mode,
                  bool euclidean);

/// Hardest-triplet mining over one descriptor file: place classes from
/// class_radius, each query paired with its hardest same-class positive and
/// hardest other-class negative under the model; writes
/// output_dir/triplets.csv rows (query_id, pos_id, neg_id, loss).
void cmd_mine(const PipelineConfig& cfg, const std::filesystem::path& descriptor_path,
              const std::filesystem::path& model_path, double margin, bool hinge);

}  // namespace lpr
