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

#include "ctxreject/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "ctxreject/errors.hpp"
#include "ctxreject/risk.hpp"
#include "json.hpp"

namespace ctxreject {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Training specs

TrainingSpec read_training_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open training spec '" + path + "'");
  TrainingSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.find_first_not_of("0123456789,- ") != std::string::npos) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
      throw DataError(path + ":" + std::to_string(line_no) + ": expected pixel_x,pixel_y,class_label");
    try {
      spec.push_back({std::stoi(a), std::stoi(b), std::stoi(c)});
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": not an integer");
    }
  }
  return spec;
}

void write_training_spec(const std::string& path, const TrainingSpec& spec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "pixel_x,pixel_y,class_label\n";
  for (const auto& t : spec) out << t.x << ',' << t.y << ',' << t.label << '\n';
}

TrainingSpec random_training_spec(const Partition& finest, const LabelMap& truth, int per_class,
                                  std::uint64_t seed) {
  const auto majority = majority_label(finest, truth);
  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < finest.num_superpixels; ++i)
    if (majority[i] != kUnlabeled) by_class[majority[i]].push_back(i);
  // First pixel (raster order) of each superpixel carrying its label.
  std::vector<int> rep(finest.num_superpixels, -1);
  for (int p = 0; p < static_cast<int>(finest.assignment.size()); ++p) {
    const int id = finest.assignment[p];
    if (rep[id] < 0 && majority[id] != kUnlabeled && truth.labels[p] == majority[id] + 1) rep[id] = p;
  }
  std::mt19937_64 rng(seed);
  TrainingSpec spec;
  for (auto& [cls, ids] : by_class) {
    // Portable Fisher-Yates: std::shuffle's draw sequence is library-specific.
    for (int i = static_cast<int>(ids.size()) - 1; i > 0; --i)
      std::swap(ids[i], ids[rng() % static_cast<std::uint64_t>(i + 1)]);
    const int take = std::min<int>(per_class, static_cast<int>(ids.size()));
    std::vector<int> chosen(ids.begin(), ids.begin() + take);
    std::sort(chosen.begin(), chosen.end());
    for (int id : chosen) spec.push_back({rep[id] % finest.width, rep[id] / finest.width, cls + 1});
  }
  return spec;
}

TrainingSpec random_training_spec_total(const Partition& finest, const LabelMap& truth, int total,
                                        std::uint64_t seed) {
  const auto majority = majority_label(finest, truth);
  std::vector<int> ids;
  std::vector<int> rep(finest.num_superpixels, -1);
  for (int i = 0; i < finest.num_superpixels; ++i)
    if (majority[i] != kUnlabeled) ids.push_back(i);
  for (int p = 0; p < static_cast<int>(finest.assignment.size()); ++p) {
    const int id = finest.assignment[p];
    if (rep[id] < 0 && majority[id] != kUnlabeled && truth.labels[p] == majority[id] + 1) rep[id] = p;
  }
  std::mt19937_64 rng(seed);
  for (int i = static_cast<int>(ids.size()) - 1; i > 0; --i)
    std::swap(ids[i], ids[rng() % static_cast<std::uint64_t>(i + 1)]);
  ids.resize(std::min<size_t>(ids.size(), static_cast<size_t>(std::max(total, 0))));
  std::sort(ids.begin(), ids.end());
  TrainingSpec spec;
  for (int id : ids) spec.push_back({rep[id] % finest.width, rep[id] / finest.width, majority[id] + 1});
  return spec;
}

// ---------------------------------------------------------------------------
// Stages

Eigen::MatrixXd Scene::stacked_app_features() const {
  int rows = 0;
  for (const auto& f : app_features) rows += f.num_rows();
  Eigen::MatrixXd out(rows, app_features.front().dim());
  int at = 0;
  for (const auto& f : app_features) {
    out.middleRows(at, f.num_rows()) = f.rows;
    at += f.num_rows();
  }
  return out;
}

Scene build_scene(const Image& img, const PipelineConfig& cfg) {
  Scene scene;
  scene.partitions =
      multiscale_partition(img, {cfg.seg_k, cfg.seg_sigma}, std::span<const int>(cfg.mss_list));
  const FeatureImage app = pixel_features(img, FeatureKind::kApplication, cfg.feature_plugin);
  const FeatureImage sim = pixel_features(img, FeatureKind::kSimilarity);
  for (const auto& part : scene.partitions) {
    scene.app_features.push_back(superpixel_stats(part, app, FeatureKind::kApplication));
    scene.sim_features.push_back(superpixel_stats(part, sim, FeatureKind::kSimilarity));
  }
  scene.graph = assemble_graph(scene.partitions, scene.sim_features,
                               {cfg.gamma, cfg.v_intrascale, cfg.v_interscale, cfg.prune_min_weight});
  return scene;
}

TrainingSet training_set_from_spec(const Scene& scene, const TrainingSpec& spec, int num_classes) {
  const Partition& finest = scene.partitions.front();
  std::map<int, std::map<int, int>> votes;  // superpixel -> label -> count
  for (const auto& t : spec) {
    if (t.x < 0 || t.y < 0 || t.x >= finest.width || t.y >= finest.height)
      throw DataError("training pixel (" + std::to_string(t.x) + "," + std::to_string(t.y) +
                      ") outside the image");
    if (t.label < 1 || t.label > num_classes)
      throw DataError("training label " + std::to_string(t.label) + " outside 1.." +
                      std::to_string(num_classes));
    ++votes[finest.assignment[t.y * finest.width + t.x]][t.label];
  }
  if (votes.empty()) throw DataError("empty training set");
  TrainingSet ts;
  ts.num_classes = num_classes;
  ts.features.resize(static_cast<Eigen::Index>(votes.size()), scene.app_features.front().dim());
  std::vector<int> per_class(num_classes, 0);
  for (const auto& [id, counts] : votes) {
    int best = 0, best_count = 0;
    for (const auto& [label, count] : counts)
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    ts.features.row(ts.size()) = scene.app_features.front().rows.row(id);
    ts.indices.push_back(id);
    ts.labels.push_back(best - 1);
    ++per_class[best - 1];
  }
  for (int c = 0; c < num_classes; ++c)
    if (per_class[c] == 0)
      std::cerr << "warning: class " << (c + 1) << " has no training samples\n";
  return ts;
}

TrainedModel train_and_predict(const Scene& scene, const TrainingSet& ts,
                               const PipelineConfig& cfg) {
  TrainedModel model;
  const Eigen::MatrixXd all = scene.stacked_app_features();
  const BandwidthResult bw = select_bandwidth(ts.features, all);
  if (bw.degenerate)
    std::cerr << "warning: all feature vectors coincide; RBF bandwidth set to 1\n";
  model.degenerate_bandwidth = bw.degenerate;
  LorsalParams lp{cfg.lambda, cfg.lorsal_max_outer, cfg.lorsal_tol,
                  cfg.admm_mu, cfg.admm_max_inner,  cfg.admm_tol};
  model.regressor = lorsal_train(ts, bw.h, lp, &model.trace);
  model.posteriors = mlr_posteriors(model.regressor, all);
  if (!model.posteriors.allFinite()) throw NumericalError("posteriors are not finite");
  model.train_nodes = ts.indices;  // finest scale: global index == local id
  return model;
}

LabelingResult infer_labels(const Scene& scene, const Eigen::MatrixXd& posteriors,
                            const LabelSet& labels, const PipelineConfig& cfg) {
  LabelingResult out;
  const CostMatrix cm = build_cost_matrix(labels, cfg.g, cfg.rho);
  out.risks = risk_table(posteriors, cm);
  EnergyProblem prob = EnergyProblem::from_risks(labels, out.risks, scene.graph, cfg.alpha,
                                                 cfg.psi_c, cfg.psi_r, cfg.epsilon);
  out.labeling = alpha_expansion(prob, cfg.max_cycles, &out.stats);
  if (cfg.metric_base == "context") {
    prob.set_reject_allowed(false);
    out.base = alpha_expansion(prob, cfg.max_cycles);
  } else {
    out.base.resize(out.risks.rows());
    for (int i = 0; i < out.risks.rows(); ++i)
      out.base[i] = argmin_label(out.risks.row(i).head(labels.num_classes()).transpose());
  }
  return out;
}

namespace {

std::vector<std::string> metric_flags(const Metric& accuracy, const Metric& phi) {
  std::vector<std::string> flags;
  if (!accuracy.defined()) flags.push_back("A:" + accuracy.flag);
  if (!phi.defined()) flags.push_back("phi:" + phi.flag);
  if (std::isinf(phi.value)) flags.push_back("phi:infinite");
  return flags;
}

}  // namespace

Evaluation evaluate_labeling(const Scene& scene, const LabelingResult& result,
                             const LabelMap& truth, const LabelSet& labels,
                             const std::vector<int>& train_nodes, bool pixel_weighted) {
  const Partition& finest = scene.partitions.front();
  const auto majority = majority_label(finest, truth);
  const auto sizes = finest.sizes();
  std::vector<char> is_train(finest.num_superpixels, 0);
  for (int t : train_nodes) is_train[t] = 1;
  std::vector<Label> pred, base, gt;
  std::vector<double> weights;
  for (int i = 0; i < finest.num_superpixels; ++i) {
    if (is_train[i] || majority[i] == kUnlabeled) continue;
    if (majority[i] >= labels.num_classes())
      throw DataError("ground-truth label exceeds the number of classes");
    const int node = scene.graph.node(1, i);
    pred.push_back(result.labeling[node]);
    base.push_back(result.base[node]);
    gt.push_back(majority[i]);
    weights.push_back(pixel_weighted ? sizes[i] : 1.0);
  }
  Evaluation ev;
  ev.overall = summarize(confusion_counts(pred, base, gt, labels, weights));
  ev.flags = metric_flags(ev.overall.accuracy, ev.overall.phi);
  for (int c = 0; c < labels.num_classes(); ++c) {
    std::vector<Label> p, b, t;
    std::vector<double> w;
    for (size_t i = 0; i < gt.size(); ++i) {
      if (gt[i] != c) continue;
      p.push_back(pred[i]);
      b.push_back(base[i]);
      t.push_back(gt[i]);
      w.push_back(weights[i]);
    }
    const auto s = summarize(confusion_counts(p, b, t, labels, w));
    ClassRow row;
    row.label = c + 1;
    row.train_samples = 0;
    row.test_samples = s.counts.n;
    row.rejected_samples = s.counts.cr + s.counts.ir;
    row.phi = s.phi;
    row.accuracy = s.accuracy;
    row.quality = s.quality;
    ev.per_class.push_back(row);
  }
  const auto train_majority = majority;
  for (int tnode : train_nodes) {
    const int m = train_majority[tnode];
    if (m != kUnlabeled && m < labels.num_classes()) ++ev.per_class[m].train_samples;
  }
  return ev;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Runs one stage, prefixing any library error with the stage name.
template <class F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

LabelSet make_label_set(const PipelineConfig& cfg, int num_classes) {
  if (cfg.superclasses.empty()) return LabelSet(num_classes);
  if (static_cast<int>(cfg.superclasses.size()) != num_classes)
    throw ConfigError("superclasses needs one entry per class");
  return LabelSet(cfg.superclasses);
}

int infer_num_classes(const PipelineConfig& cfg, const TrainingSpec& spec,
                      const std::optional<LabelMap>& truth) {
  if (cfg.num_classes > 0) return cfg.num_classes;
  if (!cfg.superclasses.empty()) return static_cast<int>(cfg.superclasses.size());
  int n = 0;
  for (const auto& t : spec) n = std::max(n, t.label);
  if (truth)
    for (int l : truth->labels) n = std::max(n, l);
  if (n < 1) throw DataError("cannot infer the number of classes");
  return n;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, const Image& img,
                            const std::optional<LabelMap>& truth, const TrainingSpec& spec) {
  require_valid(cfg);
  if (truth && (truth->width != img.width() || truth->height != img.height()))
    throw DataError("ground truth and image sizes differ");
  PipelineResult res;
  res.config = cfg;
  const int n = infer_num_classes(cfg, spec, truth);
  res.labels = make_label_set(cfg, n);

  auto t0 = Clock::now();
  res.scene = run_stage("segmentation", [&] { return build_scene(img, cfg); });
  res.timings_ms.emplace_back("similarity_analysis", ms_since(t0));

  t0 = Clock::now();
  res.training = run_stage("training", [&] { return training_set_from_spec(res.scene, spec, n); });
  res.model = run_stage("training", [&] { return train_and_predict(res.scene, res.training, cfg); });
  res.timings_ms.emplace_back("classification", ms_since(t0));

  t0 = Clock::now();
  res.labeling = run_stage("inference", [&] {
    return infer_labels(res.scene, res.model.posteriors, res.labels, cfg);
  });
  res.timings_ms.emplace_back("contextual_rejection", ms_since(t0));

  if (truth) {
    t0 = Clock::now();
    res.evaluation = run_stage("evaluation", [&] {
      return evaluate_labeling(res.scene, res.labeling, *truth, res.labels,
                               res.model.train_nodes, cfg.pixel_weighted);
    });
    res.timings_ms.emplace_back("evaluation", ms_since(t0));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Rendering

std::vector<std::array<std::uint8_t, 3>> default_palette(int num_classes) {
  static const std::array<std::uint8_t, 3> base[] = {
      {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},   {245, 130, 48},
      {145, 30, 180},  {70, 240, 240},  {240, 50, 230},  {210, 245, 60},  {250, 190, 212},
      {0, 128, 128},   {220, 190, 255}, {170, 110, 40},  {255, 250, 200}, {128, 0, 0},
      {170, 255, 195}, {128, 128, 0},   {255, 215, 180}, {0, 0, 128},     {128, 128, 128}};
  std::vector<std::array<std::uint8_t, 3>> out;
  for (int c = 0; c < num_classes; ++c) {
    if (c < 20) {
      out.push_back(base[c]);
    } else {
      // Deterministic extra colours, kept away from black.
      const auto h = static_cast<std::uint32_t>(c) * 2654435761u;
      out.push_back({static_cast<std::uint8_t>(64 + (h & 0x7f)),
                     static_cast<std::uint8_t>(64 + ((h >> 8) & 0x7f)),
                     static_cast<std::uint8_t>(64 + ((h >> 16) & 0x7f))});
    }
  }
  return out;
}

Rgb8Image render_label_map(std::span<const Label> scale_labels, const Partition& part,
                           const LabelSet& labels,
                           const std::vector<std::array<std::uint8_t, 3>>& palette) {
  if (static_cast<int>(palette.size()) < labels.num_classes())
    throw ConfigError("palette does not cover every class");
  for (int c = 0; c < labels.num_classes(); ++c)
    if (palette[c][0] == 0 && palette[c][1] == 0 && palette[c][2] == 0)
      throw ConfigError("palette colour of class " + std::to_string(c + 1) +
                        " is black, which is reserved for rejection");
  if (static_cast<int>(scale_labels.size()) != part.num_superpixels)
    throw DataError("labeling and partition sizes differ");
  Rgb8Image img{part.width, part.height, std::vector<std::uint8_t>(part.assignment.size() * 3, 0)};
  for (size_t p = 0; p < part.assignment.size(); ++p) {
    const Label l = scale_labels[part.assignment[p]];
    if (labels.is_reject(l)) continue;
    for (int c = 0; c < 3; ++c) img.data[3 * p + c] = palette[l][c];
  }
  return img;
}

std::vector<Label> scale_labels(const MultiscaleGraph& graph, const Labeling& lab, int scale) {
  const auto first = lab.begin() + graph.scale_offset[scale - 1];
  return {first, first + graph.scale_size(scale)};
}

// ---------------------------------------------------------------------------
// Digests

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

// ---------------------------------------------------------------------------
// File driver

namespace {

nlohmann::ordered_json metric_value(const Metric& m) {
  if (std::isfinite(m.value)) return m.value;
  return nullptr;
}

nlohmann::ordered_json config_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  std::istringstream in(config_to_text(cfg));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

/// Tracks created files so a failed run leaves nothing behind.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& name : names_) fs::remove(dir_ / name, ec);
  }
  std::string add(const std::string& name) {
    names_.push_back(name);
    return (dir_ / name).string();
  }
  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

}  // namespace

std::string metrics_json(const PipelineConfig& cfg, const Evaluation& eval) {
  nlohmann::ordered_json j;
  const auto& o = eval.overall;
  j["A"] = metric_value(o.accuracy);
  j["r"] = o.rejected;
  j["Q"] = o.quality;
  j["phi"] = metric_value(o.phi);
  j["counts"] = {{"n", o.counts.n},   {"cn", o.counts.cn}, {"in", o.counts.in},
                 {"cr", o.counts.cr}, {"ir", o.counts.ir}};
  j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& row : eval.per_class) {
    nlohmann::ordered_json r;
    r["class"] = row.label;
    r["train_samples"] = row.train_samples;
    r["test_samples"] = row.test_samples;
    r["rejected_samples"] = row.rejected_samples;
    r["rejection_quality"] = metric_value(row.phi);
    r["nonrejected_accuracy"] = metric_value(row.accuracy);
    r["classification_quality"] = row.quality;
    r["flags"] = metric_flags(row.accuracy, row.phi);
    j["per_class"].push_back(r);
  }
  j["flags"] = eval.flags;
  j["config"] = config_json(cfg);
  return j.dump(2) + "\n";
}

RunManifest run_pipeline_files(const PipelineConfig& cfg, const PipelinePaths& paths) {
  require_valid(cfg);
  RunManifest manifest;
  manifest.config_text = config_to_text(cfg);
  manifest.seed = cfg.seed;

  const Image img = run_stage("input", [&] { return read_image(paths.image); });
  manifest.input_digests.emplace_back(paths.image, sha256_file(paths.image));
  std::optional<LabelMap> truth;
  if (!paths.no_eval || (paths.train.empty() && !paths.truth.empty())) {
    if (paths.truth.empty())
      throw DataError("input: no ground truth given (use --no-eval to skip evaluation)");
    truth = run_stage("input", [&] { return read_label_map(paths.truth); });
    manifest.input_digests.emplace_back(paths.truth, sha256_file(paths.truth));
  }
  TrainingSpec spec;
  if (!paths.train.empty()) {
    spec = run_stage("input", [&] { return read_training_spec(paths.train); });
    manifest.input_digests.emplace_back(paths.train, sha256_file(paths.train));
  } else {
    if (!truth) throw DataError("input: a training spec or a ground truth map is required");
    spec = run_stage("training", [&] {
      const Partition finest = oversegment(img, {cfg.seg_k, cfg.seg_sigma}, cfg.mss_list.front());
      return random_training_spec(finest, *truth, cfg.train_per_class, cfg.seed);
    });
  }
  if (paths.no_eval) truth.reset();

  const PipelineResult res = run_pipeline(cfg, img, truth, spec);
  manifest.timings_ms = res.timings_ms;

  std::error_code ec;
  fs::create_directories(paths.out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + paths.out_dir + "'");
  OutputSet out(paths.out_dir);
  const auto t0 = Clock::now();
  const int n = res.labels.num_classes();
  const auto& graph = res.scene.graph;
  const auto palette = default_palette(n);

  {
    std::ofstream f(out.add("config.txt"));
    f << manifest.config_text;
  }
  if (paths.train.empty()) write_training_spec(out.add("train.csv"), spec);
  for (int s = 1; s <= graph.num_scales(); ++s) {
    const auto labs = scale_labels(graph, res.labeling.labeling, s);
    std::ofstream f(out.add("labels_scale" + std::to_string(s) + ".csv"));
    f << "scale,superpixel_id,label\n";
    for (size_t i = 0; i < labs.size(); ++i) f << s << ',' << i << ',' << (labs[i] + 1) << '\n';
    f.close();
    write_png(out.add("labelmap_scale" + std::to_string(s) + ".png"),
              render_label_map(labs, res.scene.partitions[s - 1], res.labels, palette));
  }
  {
    std::ofstream f(out.add("risks.csv"));
    f << "scale,superpixel_id";
    for (int k = 1; k <= n + 1; ++k) f << ",r_" << k;
    f << '\n' << std::setprecision(17);
    for (int v = 0; v < graph.num_nodes(); ++v) {
      f << graph.node_scale[v] << ',' << graph.node_local[v];
      for (int k = 0; k <= n; ++k) f << ',' << res.labeling.risks(v, k);
      f << '\n';
    }
  }
  write_graph_csv(out.add("graph.csv"), graph);
  out.add("regressor_W.csv");
  out.add("regressor_train.csv");
  out.add("regressor_meta.txt");
  save_regressor((out.dir() / "regressor").string(), res.model.regressor, cfg.seed);
  if (res.evaluation) {
    std::ofstream f(out.add("metrics.json"));
    f << metrics_json(cfg, *res.evaluation);
  }
  manifest.timings_ms.emplace_back("write_outputs", ms_since(t0));
  for (const auto& name : out.names())
    manifest.outputs.push_back({name, sha256_file((out.dir() / name).string())});

  nlohmann::ordered_json mj;
  mj["config"] = manifest.config_text;
  mj["seed"] = manifest.seed;
  mj["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : manifest.input_digests)
    mj["inputs"].push_back({{"path", path}, {"sha256", digest}});
  mj["timings_ms"] = nlohmann::ordered_json::object();
  for (const auto& [stage, ms] : manifest.timings_ms) mj["timings_ms"][stage] = ms;
  mj["outputs"] = nlohmann::ordered_json::array();
  for (const auto& o : manifest.outputs) mj["outputs"].push_back({{"name", o.name}, {"sha256", o.sha256}});
  {
    std::ofstream f(out.add("manifest.json"));
    f << mj.dump(2) << "\n";
  }
  out.commit();
  return manifest;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<SweepRow> sweep(const PipelineConfig& cfg, const Image& img, const LabelMap& truth,
                            const SweepSpec& spec, int workers) {
  require_valid(cfg);
  if (spec.alphas.empty() || spec.rhos.empty() || spec.repeats < 1)
    throw ConfigError("sweep grid is empty");
  for (double a : spec.alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha out of [0,1]");
  for (double r : spec.rhos)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rho out of [0,1]");
  if (truth.width != img.width() || truth.height != img.height())
    throw DataError("ground truth and image sizes differ");

  const std::optional<LabelMap> truth_opt = truth;
  const int n = infer_num_classes(cfg, {}, truth_opt);
  const LabelSet labels = make_label_set(cfg, n);
  const Scene full = build_scene(img, cfg);
  const int total_scales = static_cast<int>(cfg.mss_list.size());
  std::vector<int> scale_counts;
  if (spec.scales_sweep)
    for (int k = 1; k <= total_scales; ++k) scale_counts.push_back(k);
  else
    scale_counts.push_back(total_scales);

  // Sub-scenes over the first k scales; partitions are nested, so they equal
  // a fresh build with the truncated mss list.
  std::vector<Scene> scenes;
  for (int k : scale_counts) {
    if (k == total_scales) {
      scenes.push_back(full);
      continue;
    }
    Scene s;
    s.partitions.assign(full.partitions.begin(), full.partitions.begin() + k);
    s.app_features.assign(full.app_features.begin(), full.app_features.begin() + k);
    s.sim_features.assign(full.sim_features.begin(), full.sim_features.begin() + k);
    s.graph = assemble_graph(s.partitions, s.sim_features,
                             {cfg.gamma, cfg.v_intrascale, cfg.v_interscale, cfg.prune_min_weight});
    scenes.push_back(std::move(s));
  }

  const size_t grid = spec.alphas.size() * spec.rhos.size();
  // Index: ((scale_idx * alphas + a) * rhos + r) * repeats + rep
  std::vector<SweepRow> rows(scale_counts.size() * grid * spec.repeats);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(spec.repeats);
  auto work = [&]() {
    for (int rep = next++; rep < spec.repeats; rep = next++) {
      try {
        const TrainingSpec ts_spec = random_training_spec(
            full.partitions.front(), truth, cfg.train_per_class, cfg.seed + rep);
        for (size_t si = 0; si < scenes.size(); ++si) {
          const Scene& scene = scenes[si];
          const TrainingSet ts = training_set_from_spec(scene, ts_spec, n);
          const TrainedModel model = train_and_predict(scene, ts, cfg);
          for (size_t ai = 0; ai < spec.alphas.size(); ++ai) {
            for (size_t ri = 0; ri < spec.rhos.size(); ++ri) {
              PipelineConfig c = cfg;
              c.alpha = spec.alphas[ai];
              c.rho = spec.rhos[ri];
              const auto lab = infer_labels(scene, model.posteriors, labels, c);
              const auto ev =
                  evaluate_labeling(scene, lab, truth, labels, model.train_nodes, c.pixel_weighted);
              const size_t idx = ((si * spec.alphas.size() + ai) * spec.rhos.size() + ri) *
                                     spec.repeats + rep;
              rows[idx] = {c.alpha, c.rho, rep, scale_counts[si], ev.overall};
            }
          }
        }
      } catch (...) {
        errors[rep] = std::current_exception();
      }
    }
  };
  const int nthreads = std::max(1, std::min(workers, spec.repeats));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::vector<std::string> write_sweep_tables(const std::string& out_dir,
                                            const std::vector<SweepRow>& rows) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  auto fmt = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
  };
  {
    std::ofstream f(fs::path(out_dir) / "sweep.csv");
    f << "num_scales,alpha,rho,repeat,A,r,Q,phi\n";
    for (const auto& row : rows)
      f << row.num_scales << ',' << fmt(row.alpha) << ',' << fmt(row.rho) << ',' << row.repeat << ','
        << fmt(row.metrics.accuracy.value) << ',' << fmt(row.metrics.rejected) << ','
        << fmt(row.metrics.quality) << ',' << fmt(row.metrics.phi.value) << '\n';
    written.push_back("sweep.csv");
  }
  struct Agg {
    double a = 0, r = 0, q = 0, q2 = 0, phi = 0;
    int count = 0, phi_count = 0;
  };
  std::map<std::tuple<int, double, double>, Agg> agg;
  std::vector<std::tuple<int, double, double>> order;
  for (const auto& row : rows) {
    const auto key = std::make_tuple(row.num_scales, row.alpha, row.rho);
    if (!agg.count(key)) order.push_back(key);
    auto& g = agg[key];
    g.a += row.metrics.accuracy.value;
    g.r += row.metrics.rejected;
    g.q += row.metrics.quality;
    g.q2 += row.metrics.quality * row.metrics.quality;
    ++g.count;
    if (std::isfinite(row.metrics.phi.value)) {
      g.phi += row.metrics.phi.value;
      ++g.phi_count;
    }
  }
  {
    std::ofstream f(fs::path(out_dir) / "sweep_mean.csv");
    f << "num_scales,alpha,rho,runs,mean_A,mean_r,mean_Q,mean_phi_finite,phi_finite_runs\n";
    for (const auto& key : order) {
      const auto& g = agg[key];
      f << std::get<0>(key) << ',' << fmt(std::get<1>(key)) << ',' << fmt(std::get<2>(key)) << ','
        << g.count << ',' << fmt(g.a / g.count) << ',' << fmt(g.r / g.count) << ','
        << fmt(g.q / g.count) << ','
        << (g.phi_count ? fmt(g.phi / g.phi_count) : std::string("nan")) << ',' << g.phi_count
        << '\n';
    }
    written.push_back("sweep_mean.csv");
  }
  std::set<int> scale_values;
  for (const auto& row : rows) scale_values.insert(row.num_scales);
  if (scale_values.size() > 1) {
    std::ofstream f(fs::path(out_dir) / "sweep_scales.csv");
    f << "num_scales,alpha,rho,mean_Q,std_Q\n";
    for (const auto& key : order) {
      const auto& g = agg[key];
      const double mean = g.q / g.count;
      const double var = std::max(0.0, g.q2 / g.count - mean * mean);
      f << std::get<0>(key) << ',' << fmt(std::get<1>(key)) << ',' << fmt(std::get<2>(key)) << ','
        << fmt(mean) << ',' << fmt(std::sqrt(var)) << '\n';
    }
    written.push_back("sweep_scales.csv");
  }
  return written;
}

// ---------------------------------------------------------------------------
// Synthetic data

SyntheticScene make_synthetic(int width, int height, int num_classes, double noise_sigma,
                              std::uint64_t seed, int num_regions, double overlap) {
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("overlap out of [0,1]");
  if (width < 1 || height < 1) throw ConfigError("synthetic image size must be positive");
  if (num_classes < 1 || num_classes > 8) throw ConfigError("synthetic images support 1..8 classes");
  if (num_regions < num_classes) throw ConfigError("need at least one region per class");
  static const double colors[8][3] = {
      {0.70, 0.35, 0.35}, {0.35, 0.65, 0.40}, {0.40, 0.40, 0.70}, {0.70, 0.65, 0.35},
      {0.35, 0.65, 0.70}, {0.65, 0.35, 0.65}, {0.50, 0.50, 0.50}, {0.85, 0.55, 0.45}};
  // Colours are pulled towards grey so that, under pixel noise, superpixel
  // means of different classes stay confusable.
  constexpr double kContrast = 0.18;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height);
  std::vector<std::pair<double, double>> sites(num_regions);
  for (auto& s : sites) s = {ux(rng), uy(rng)};
  std::vector<int> cls(num_regions);
  for (int r = 0; r < num_regions; ++r) cls[r] = r % num_classes;
  for (int i = num_regions - 1; i > 0; --i) std::swap(cls[i], cls[rng() % static_cast<std::uint64_t>(i + 1)]);

  // Each region blends its class colour with another class by t in [0, overlap].
  std::vector<std::array<double, 3>> region_color(num_regions);
  std::uniform_real_distribution<double> ut(0.0, overlap);
  for (int r = 0; r < num_regions; ++r) {
    const int other = num_classes > 1
                          ? (cls[r] + 1 + static_cast<int>(rng() % (num_classes - 1))) % num_classes
                          : cls[r];
    const double t = overlap > 0.0 ? ut(rng) : 0.0;
    for (int ch = 0; ch < 3; ++ch)
      region_color[r][ch] =
          0.5 + kContrast * ((1.0 - t) * colors[cls[r]][ch] + t * colors[other][ch] - 0.5);
  }
  SyntheticScene out;
  out.image = Image(width, height);
  out.truth = {width, height, std::vector<int>(static_cast<size_t>(width) * height)};
  std::normal_distribution<double> noise(0.0, noise_sigma);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      int best = 0;
      double best_d = 0.0;
      for (int r = 0; r < num_regions; ++r) {
        const double dx = x + 0.5 - sites[r].first, dy = y + 0.5 - sites[r].second;
        const double d = dx * dx + dy * dy;
        if (r == 0 || d < best_d) {
          best = r;
          best_d = d;
        }
      }
      const int c = cls[best];
      const int p = y * width + x;
      out.truth.labels[p] = c + 1;
      for (int ch = 0; ch < 3; ++ch)
        out.image.at(p, ch) =
            std::clamp(region_color[best][ch] + (noise_sigma > 0.0 ? noise(rng) : 0.0), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace ctxreject
