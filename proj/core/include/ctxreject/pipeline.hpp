// Copyright 2026 The ctxreject Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxreject/classifier.hpp"
#include "ctxreject/config.hpp"
#include "ctxreject/features.hpp"
#include "ctxreject/image.hpp"
#include "ctxreject/inference.hpp"
#include "ctxreject/metrics.hpp"
#include "ctxreject/msgraph.hpp"
#include "ctxreject/segmentation.hpp"

namespace ctxreject {

/// One training pixel; the label is one-based as in the CSV format.
struct TrainPixel {
  int x = 0;
  int y = 0;
  int label = 0;
};

using TrainingSpec = std::vector<TrainPixel>;

/// CSV with header `pixel_x,pixel_y,class_label`.
TrainingSpec read_training_spec(const std::string& path);
void write_training_spec(const std::string& path, const TrainingSpec& spec);

/// Picks `per_class` random finest-scale superpixels of every class present
/// in the truth map (fewer if a class has fewer superpixels) and emits one
/// pixel of each. Deterministic in `seed`.
TrainingSpec random_training_spec(const Partition& finest, const LabelMap& truth, int per_class,
                                  std::uint64_t seed);

/// Like random_training_spec but draws `total` superpixels uniformly from
/// every labeled superpixel regardless of class.
TrainingSpec random_training_spec_total(const Partition& finest, const LabelMap& truth, int total,
                                        std::uint64_t seed);

/// Segmentation, features and the similarity graph for one image.
struct Scene {
  std::vector<Partition> partitions;
  std::vector<FeatureMatrix> app_features;
  std::vector<FeatureMatrix> sim_features;
  MultiscaleGraph graph;

  /// Application features of every graph node, stacked scale by scale.
  Eigen::MatrixXd stacked_app_features() const;
};

Scene build_scene(const Image& img, const PipelineConfig& cfg);

/// Training superpixels (finest scale) and their labels, after collapsing
/// several pixels in one superpixel by majority.
TrainingSet training_set_from_spec(const Scene& scene, const TrainingSpec& spec, int num_classes);

struct TrainedModel {
  Regressor regressor;
  LorsalTrace trace;
  bool degenerate_bandwidth = false;
  Eigen::MatrixXd posteriors;  ///< num_nodes x N
  std::vector<int> train_nodes;
};

TrainedModel train_and_predict(const Scene& scene, const TrainingSet& ts, const PipelineConfig& cfg);

struct LabelingResult {
  Eigen::MatrixXd risks;  ///< num_nodes x (N + 1)
  Labeling labeling;      ///< final labels, reject allowed
  Labeling base;          ///< labels without rejection, used to judge correctness
  ExpansionStats stats;
};

LabelingResult infer_labels(const Scene& scene, const Eigen::MatrixXd& posteriors,
                            const LabelSet& labels, const PipelineConfig& cfg);

struct ClassRow {
  int label = 0;  ///< one-based
  int train_samples = 0;
  double test_samples = 0;
  double rejected_samples = 0;
  Metric phi;
  Metric accuracy;
  double quality = 0;
};

struct Evaluation {
  MetricsSummary overall;
  std::vector<ClassRow> per_class;
  std::vector<std::string> flags;
};

/// Scores the finest-scale labeling against pixel ground truth, excluding
/// training superpixels.
Evaluation evaluate_labeling(const Scene& scene, const LabelingResult& result,
                             const LabelMap& truth, const LabelSet& labels,
                             const std::vector<int>& train_nodes, bool pixel_weighted);

/// Everything computed by one in-memory pipeline run.
struct PipelineResult {
  PipelineConfig config;
  LabelSet labels{1};
  Scene scene;
  TrainingSet training;
  TrainedModel model;
  LabelingResult labeling;
  std::optional<Evaluation> evaluation;
  std::vector<std::pair<std::string, double>> timings_ms;
};

/// Runs segmentation, features, graph, training, posteriors, risks and
/// inference, then evaluation when `truth` is given.
PipelineResult run_pipeline(const PipelineConfig& cfg, const Image& img,
                            const std::optional<LabelMap>& truth, const TrainingSpec& spec);

/// Distinct non-black RGB colours for classes 1..N.
std::vector<std::array<std::uint8_t, 3>> default_palette(int num_classes);

/// Paints each pixel with its superpixel's label colour and rejected
/// superpixels black. Throws ConfigError if a palette colour is black or
/// the palette is too short.
Rgb8Image render_label_map(std::span<const Label> scale_labels, const Partition& part,
                           const LabelSet& labels,
                           const std::vector<std::array<std::uint8_t, 3>>& palette);

/// Label slice of a multiscale labeling for one scale.
std::vector<Label> scale_labels(const MultiscaleGraph& graph, const Labeling& lab, int scale);

struct OutputFile {
  std::string name;
  std::string sha256;
};

struct RunManifest {
  std::string config_text;
  std::vector<std::pair<std::string, std::string>> input_digests;  ///< path, sha256
  std::vector<std::pair<std::string, double>> timings_ms;
  std::vector<OutputFile> outputs;
  std::uint64_t seed = 0;
};

struct PipelinePaths {
  std::string image;
  std::string truth;  ///< may be empty
  std::string train;  ///< empty: drawn from the truth map (train_per_class, seed)
  std::string out_dir;
  bool no_eval = false;
};

/// File-level driver behind the `pipeline` subcommand. Writes per-scale
/// label CSVs and PNGs, risks, graph, regressor, metrics.json, config.txt
/// and manifest.json into `out_dir`. On error every file it created is
/// removed before the exception propagates.
RunManifest run_pipeline_files(const PipelineConfig& cfg, const PipelinePaths& paths);

/// Metrics report as JSON text (stable key order and number formatting).
std::string metrics_json(const PipelineConfig& cfg, const Evaluation& eval);

struct SweepSpec {
  std::vector<double> alphas;
  std::vector<double> rhos;
  int repeats = 1;
  bool scales_sweep = false;  ///< also tabulate mean Q against number of scales
};

struct SweepRow {
  double alpha = 0;
  double rho = 0;
  int repeat = 0;
  int num_scales = 0;
  MetricsSummary metrics;
};

/// Runs the (alpha, rho) grid for `repeats` random training sets drawn with
/// seeds cfg.seed + repeat. Segmentation and training are shared across
/// the grid within one repeat. Rows come back in grid order.
std::vector<SweepRow> sweep(const PipelineConfig& cfg, const Image& img, const LabelMap& truth,
                            const SweepSpec& spec, int workers = 1);

/// Writes sweep.csv and sweep_mean.csv (and sweep_scales.csv when present)
/// into `out_dir`; returns the written file names.
std::vector<std::string> write_sweep_tables(const std::string& out_dir,
                                            const std::vector<SweepRow>& rows);

struct SyntheticScene {
  Image image;
  LabelMap truth;
};

/// Piecewise-constant image over a random Voronoi layout plus Gaussian
/// noise, clamped to [0, 1]. Every region has one class; its colour is the
/// class colour blended with a random other class by a weight drawn from
/// [0, overlap], so larger overlaps produce ambiguous regions.
SyntheticScene make_synthetic(int width, int height, int num_classes, double noise_sigma,
                              std::uint64_t seed, int num_regions = 12, double overlap = 0.0);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace ctxreject
