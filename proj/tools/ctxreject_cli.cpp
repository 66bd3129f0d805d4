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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ctxreject/errors.hpp"
#include "ctxreject/pipeline.hpp"
#include "ctxreject/risk.hpp"

namespace fs = std::filesystem;
using namespace ctxreject;

namespace {

struct Common {
  std::string config;
  std::string image;
  std::string truth;
  std::string train;
  std::string out;
  std::string scales;
  std::uint64_t seed = 0;
  double alpha = NAN;
  double rho = NAN;
  bool seed_set = false;
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad integer list '" + text + "'");
    }
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number list '" + text + "'");
    }
  }
  return out;
}

/// Config file first, then command-line overrides.
PipelineConfig resolve_config(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (!std::isnan(c.alpha)) cfg.alpha = c.alpha;
  if (!std::isnan(c.rho)) cfg.rho = c.rho;
  if (c.seed_set) cfg.seed = c.seed;
  if (!c.scales.empty()) cfg.mss_list = parse_int_list(c.scales);
  require_valid(cfg);
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool needs_image = true) {
  app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  auto* img = app->add_option("--image", c.image, "input image (PNG or PPM)");
  if (needs_image) img->required();
  app->add_option("--scales", c.scales, "comma-separated minimum superpixel sizes");
  app->add_option("--alpha", c.alpha, "contextual index");
  app->add_option("--rho", c.rho, "rejection cost");
  app->add_option_function<std::uint64_t>(
      "--seed",
      [&c](const std::uint64_t& s) {
        c.seed = s;
        c.seed_set = true;
      },
      "random seed");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

int num_classes_for(const PipelineConfig& cfg, const std::vector<int>& labels) {
  if (cfg.num_classes > 0) return cfg.num_classes;
  if (!cfg.superclasses.empty()) return static_cast<int>(cfg.superclasses.size());
  int n = 0;
  for (int l : labels) n = std::max(n, l);
  if (n < 1) throw DataError("cannot infer the number of classes");
  return n;
}

LabelSet label_set_for(const PipelineConfig& cfg, int n) {
  if (cfg.superclasses.empty()) return LabelSet(n);
  if (static_cast<int>(cfg.superclasses.size()) != n)
    throw ConfigError("superclasses needs one entry per class");
  return LabelSet(cfg.superclasses);
}

void write_labels_csv(const std::string& path, int scale, const std::vector<Label>& labs) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << "scale,superpixel_id,label\n";
  for (size_t i = 0; i < labs.size(); ++i) f << scale << ',' << i << ',' << (labs[i] + 1) << '\n';
}

std::vector<Label> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<Label> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string scale, id, label;
    std::getline(ss, scale, ',');
    std::getline(ss, id, ',');
    std::getline(ss, label, ',');
    try {
      const int i = std::stoi(id);
      if (i != static_cast<int>(out.size())) throw DataError(path + ": superpixel ids out of order");
      out.push_back(std::stoi(label) - 1);
    } catch (const std::invalid_argument&) {
      throw DataError(path + ": malformed row '" + line + "'");
    }
  }
  return out;
}

int cmd_segment(const Common& c) {
  const PipelineConfig cfg = resolve_config(c);
  const Image img = read_image(c.image);
  ensure_dir(c.out);
  const auto parts =
      multiscale_partition(img, {cfg.seg_k, cfg.seg_sigma}, std::span<const int>(cfg.mss_list));
  for (const auto& p : parts) {
    const std::string s = std::to_string(p.scale_index);
    write_partition(join(c.out, "partition_scale" + s + ".png"),
                    join(c.out, "partition_scale" + s + ".csv"), p);
    std::cout << "scale " << s << " (mss " << cfg.mss_list[p.scale_index - 1]
              << "): " << p.num_superpixels << " superpixels\n";
  }
  return 0;
}

int cmd_graph(const Common& c) {
  const PipelineConfig cfg = resolve_config(c);
  const Scene scene = build_scene(read_image(c.image), cfg);
  ensure_dir(c.out);
  write_graph_csv(join(c.out, "graph.csv"), scene.graph);
  for (size_t s = 0; s < scene.sim_features.size(); ++s)
    write_feature_matrix_csv(join(c.out, "features_scale" + std::to_string(s + 1) + ".csv"),
                             scene.sim_features[s]);
  const auto problems = validate_graph(scene.graph, std::max(cfg.v_intrascale, cfg.v_interscale));
  for (const auto& p : problems) std::cerr << "graph: " << p << '\n';
  std::cout << scene.graph.num_nodes() << " nodes, " << scene.graph.intrascale_edges.size()
            << " intrascale edges, " << scene.graph.interscale_edges.size()
            << " interscale edges\n";
  return problems.empty() ? 0 : 4;
}

int cmd_train(const Common& c) {
  const PipelineConfig cfg = resolve_config(c);
  const Scene scene = build_scene(read_image(c.image), cfg);
  const TrainingSpec spec = read_training_spec(c.train);
  std::vector<int> labels;
  for (const auto& t : spec) labels.push_back(t.label);
  const int n = num_classes_for(cfg, labels);
  const TrainingSet ts = training_set_from_spec(scene, spec, n);
  const TrainedModel model = train_and_predict(scene, ts, cfg);
  ensure_dir(c.out);
  save_regressor(join(c.out, "regressor"), model.regressor, cfg.seed);
  std::ofstream trace(join(c.out, "lorsal_trace.csv"));
  trace << "iteration,objective\n" << std::setprecision(17);
  for (size_t i = 0; i < model.trace.objective.size(); ++i)
    trace << i << ',' << model.trace.objective[i] << '\n';
  std::cout << ts.size() << " training superpixels, " << n << " classes, nnz(W) = "
            << count_nonzero(model.regressor.W) << ", " << model.trace.outer_iterations
            << " outer iterations\n";
  return 0;
}

int cmd_classify(const Common& c, const std::string& model_prefix) {
  const PipelineConfig cfg = resolve_config(c);
  const Scene scene = build_scene(read_image(c.image), cfg);
  const Regressor reg = load_regressor(model_prefix);
  if (reg.train_features.cols() != scene.app_features.front().dim())
    throw DataError("regressor feature dimension does not match the image features");
  const int n = reg.num_classes();
  if (cfg.num_classes > 0 && cfg.num_classes != n)
    throw ConfigError("num_classes disagrees with the regressor");
  const LabelSet labels = label_set_for(cfg, n);
  const Eigen::MatrixXd post = mlr_posteriors(reg, scene.stacked_app_features());
  const LabelingResult res = infer_labels(scene, post, labels, cfg);
  ensure_dir(c.out);
  const auto palette = default_palette(n);
  for (int s = 1; s <= scene.graph.num_scales(); ++s) {
    const auto labs = scale_labels(scene.graph, res.labeling, s);
    write_labels_csv(join(c.out, "labels_scale" + std::to_string(s) + ".csv"), s, labs);
    write_png(join(c.out, "labelmap_scale" + std::to_string(s) + ".png"),
              render_label_map(labs, scene.partitions[s - 1], labels, palette));
  }
  write_labels_csv(join(c.out, "base_scale1.csv"), 1, scale_labels(scene.graph, res.base, 1));
  std::ofstream f(join(c.out, "risks.csv"));
  f << "scale,superpixel_id";
  for (int k = 1; k <= n + 1; ++k) f << ",r_" << k;
  f << '\n' << std::setprecision(17);
  for (int v = 0; v < scene.graph.num_nodes(); ++v) {
    f << scene.graph.node_scale[v] << ',' << scene.graph.node_local[v];
    for (int k = 0; k <= n; ++k) f << ',' << res.risks(v, k);
    f << '\n';
  }
  std::cout << "labeled " << scene.graph.num_nodes() << " nodes in " << res.stats.cycles
            << " expansion cycles\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& labels_dir) {
  const PipelineConfig cfg = resolve_config(c);
  const Image img = read_image(c.image);
  const LabelMap truth = read_label_map(c.truth);
  const Partition finest = oversegment(img, {cfg.seg_k, cfg.seg_sigma}, cfg.mss_list.front());
  Scene scene;
  scene.partitions = {finest};
  scene.graph.scale_offset = {0, finest.num_superpixels};
  LabelingResult res;
  res.labeling = read_labels_csv(join(labels_dir, "labels_scale1.csv"));
  res.base = read_labels_csv(join(labels_dir, "base_scale1.csv"));
  if (static_cast<int>(res.labeling.size()) != finest.num_superpixels ||
      res.base.size() != res.labeling.size())
    throw DataError("label files do not match the finest partition");
  std::vector<int> labels = truth.labels;
  int n = num_classes_for(cfg, labels);
  for (Label l : res.base) n = std::max(n, l + 1);
  const LabelSet ls = label_set_for(cfg, n);
  std::vector<int> train_nodes;
  if (!c.train.empty()) {
    const TrainingSpec spec = read_training_spec(c.train);
    for (const auto& t : spec) {
      if (t.x < 0 || t.y < 0 || t.x >= finest.width || t.y >= finest.height)
        throw DataError("training pixel outside the image");
      train_nodes.push_back(finest.assignment[t.y * finest.width + t.x]);
    }
    std::sort(train_nodes.begin(), train_nodes.end());
    train_nodes.erase(std::unique(train_nodes.begin(), train_nodes.end()), train_nodes.end());
  }
  const Evaluation ev = evaluate_labeling(scene, res, truth, ls, train_nodes, cfg.pixel_weighted);
  ensure_dir(c.out);
  std::ofstream(join(c.out, "metrics.json")) << metrics_json(cfg, ev);
  std::cout << "A = " << ev.overall.accuracy.value << "  r = " << ev.overall.rejected
            << "  Q = " << ev.overall.quality << "  phi = " << ev.overall.phi.value << '\n';
  return 0;
}

int cmd_pipeline(const Common& c, bool no_eval) {
  const PipelineConfig cfg = resolve_config(c);
  const RunManifest m = run_pipeline_files(cfg, {c.image, c.truth, c.train, c.out, no_eval});
  for (const auto& [stage, ms] : m.timings_ms)
    std::cout << std::left << std::setw(22) << stage << std::fixed << std::setprecision(1) << ms
              << " ms\n";
  std::cout << m.outputs.size() + 1 << " files written to " << c.out << '\n';
  const fs::path metrics = fs::path(c.out) / "metrics.json";
  if (!no_eval && fs::exists(metrics)) std::cout << std::ifstream(metrics).rdbuf();
  return 0;
}

int cmd_sweep(const Common& c, const std::string& alphas, const std::string& rhos, int repeats,
              int workers, bool scales_sweep) {
  const PipelineConfig cfg = resolve_config(c);
  SweepSpec spec;
  spec.alphas = parse_double_list(alphas);
  spec.rhos = parse_double_list(rhos);
  spec.repeats = repeats;
  spec.scales_sweep = scales_sweep;
  const auto rows =
      sweep(cfg, read_image(c.image), read_label_map(c.truth), spec, std::max(1, workers));
  ensure_dir(c.out);
  std::ofstream(join(c.out, "config.txt")) << config_to_text(cfg);
  for (const auto& f : write_sweep_tables(c.out, rows)) std::cout << "wrote " << join(c.out, f) << '\n';
  return 0;
}

int cmd_make_synthetic(const std::string& out, int width, int height, int classes, double noise,
                       int regions, double overlap, std::uint64_t seed) {
  const SyntheticScene s = make_synthetic(width, height, classes, noise, seed, regions, overlap);
  ensure_dir(out);
  write_png(join(out, "image.png"), to_rgb8(s.image));
  write_label_map_png(join(out, "truth.png"), s.truth);
  std::cout << "wrote " << join(out, "image.png") << " and " << join(out, "truth.png") << '\n';
  return 0;
}

int cmd_make_train(const Common& c, int per_class, int total) {
  const PipelineConfig cfg = resolve_config(c);
  const Image img = read_image(c.image);
  const LabelMap truth = read_label_map(c.truth);
  if (truth.width != img.width() || truth.height != img.height())
    throw DataError("ground truth and image sizes differ");
  const Partition finest = oversegment(img, {cfg.seg_k, cfg.seg_sigma}, cfg.mss_list.front());
  const TrainingSpec spec = total > 0
                                ? random_training_spec_total(finest, truth, total, cfg.seed)
                                : random_training_spec(finest, truth, per_class, cfg.seed);
  write_training_spec(c.out, spec);
  std::cout << spec.size() << " training pixels written to " << c.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual classification with rejection over multiscale superpixel graphs"};
  app.require_subcommand(1);
  Common c;

  auto* seg = app.add_subcommand("segment", "multiscale oversegmentation");
  add_common(seg, c);
  seg->add_option("--out", c.out, "output directory")->required();

  auto* graph = app.add_subcommand("graph", "multiscale similarity graph");
  add_common(graph, c);
  graph->add_option("--out", c.out, "output directory")->required();

  auto* train = app.add_subcommand("train", "fit the sparse kernel regressor");
  add_common(train, c);
  train->add_option("--train", c.train, "training spec CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", c.out, "output directory")->required();

  std::string model;
  auto* classify = app.add_subcommand("classify", "posteriors, risks and contextual labeling");
  add_common(classify, c);
  classify->add_option("--model", model, "regressor prefix written by 'train'")->required();
  classify->add_option("--out", c.out, "output directory")->required();

  std::string labels_dir;
  auto* evaluate = app.add_subcommand("evaluate", "score a labeling against ground truth");
  add_common(evaluate, c);
  evaluate->add_option("--truth", c.truth, "ground-truth label map")->required();
  evaluate->add_option("--labels", labels_dir, "directory written by 'classify'")->required();
  evaluate->add_option("--train", c.train, "training spec (excluded from scoring)");
  evaluate->add_option("--out", c.out, "output directory")->required();

  bool no_eval = false;
  auto* pipe = app.add_subcommand("pipeline", "run every stage and write all outputs");
  add_common(pipe, c);
  pipe->add_option("--truth", c.truth, "ground-truth label map");
  pipe->add_option("--train", c.train, "training spec CSV (default: drawn from --truth)");
  pipe->add_option("--out", c.out, "output directory")->required();
  pipe->add_flag("--no-eval", no_eval, "skip evaluation");

  std::string alphas = "0,0.2,0.4,0.58,0.8", rhos = "0.2,0.3,0.46,0.6,1";
  int repeats = 1, workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool scales_sweep = false;
  auto* sw = app.add_subcommand("sweep", "grid over alpha and rho with repeated training draws");
  add_common(sw, c);
  sw->add_option("--truth", c.truth, "ground-truth label map")->required();
  sw->add_option("--out", c.out, "output directory")->required();
  sw->add_option("--alphas", alphas, "comma-separated alpha values");
  sw->add_option("--rhos", rhos, "comma-separated rho values");
  sw->add_option("--repeats", repeats, "training draws (seeds seed..seed+repeats-1)");
  sw->add_option("--workers", workers, "worker threads");
  sw->add_flag("--scales-sweep", scales_sweep, "also vary the number of scales");

  int width = 256, height = 256, classes = 3, regions = 12;
  double noise = 0.15, overlap = 0.0;
  std::uint64_t syn_seed = 0;
  auto* syn = app.add_subcommand("make-synthetic", "piecewise-constant test image with truth");
  syn->add_option("--out", c.out, "output directory")->required();
  syn->add_option("--width", width);
  syn->add_option("--height", height);
  syn->add_option("--classes", classes);
  syn->add_option("--regions", regions);
  syn->add_option("--noise", noise, "Gaussian noise sigma");
  syn->add_option("--overlap", overlap, "maximum blend of a region towards another class");
  syn->add_option("--seed", syn_seed);

  int per_class = 10, total = 0;
  auto* mt = app.add_subcommand("make-train", "random training spec from a truth map");
  add_common(mt, c);
  mt->add_option("--truth", c.truth, "ground-truth label map")->required();
  mt->add_option("--out", c.out, "output CSV")->required();
  auto* pc = mt->add_option("--per-class", per_class, "superpixels per class");
  mt->add_option("--total", total, "superpixels in total")->excludes(pc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*seg) return cmd_segment(c);
    if (*graph) return cmd_graph(c);
    if (*train) return cmd_train(c);
    if (*classify) return cmd_classify(c, model);
    if (*evaluate) return cmd_evaluate(c, labels_dir);
    if (*pipe) return cmd_pipeline(c, no_eval);
    if (*sw) return cmd_sweep(c, alphas, rhos, repeats, workers, scales_sweep);
    if (*syn) return cmd_make_synthetic(c.out, width, height, classes, noise, regions, overlap, syn_seed);
    if (*mt) return cmd_make_train(c, per_class, total);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
