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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ctxreject {

/// Every tunable of the pipeline. Defaults are the operating point used
/// for the histopathology experiments the method was designed for.
struct PipelineConfig {
  // Energy.
  double alpha = 0.58;  ///< contextual index, weight of the pairwise term
  double rho = 0.46;    ///< rejection cost
  double psi_c = 0.7;   ///< same-superclass transition penalty
  double psi_r = 0.5;   ///< transition-to-reject penalty
  double epsilon = 1e-12;  ///< risk floor inside the log
  int max_cycles = 10;

  // Costs and labels. num_classes == 0 means "infer from the data".
  double g = 0.7;
  int num_classes = 0;
  std::vector<int> superclasses;  ///< one tag per class; empty = singletons

  // Classifier.
  double lambda = 10.0;
  int lorsal_max_outer = 100;
  double lorsal_tol = 1e-6;
  double admm_mu = 1.0;
  int admm_max_inner = 200;
  double admm_tol = 1e-6;

  // Similarity graph.
  double gamma = 0.01;
  double v_intrascale = 1.0;
  double v_interscale = 4.0;
  double prune_min_weight = 0.0;

  // Segmentation.
  std::vector<int> mss_list = {100, 200, 400, 800, 1600, 3200};
  double seg_k = 300.0 / 255.0;
  double seg_sigma = 0.8;

  // Features and evaluation.
  std::string feature_plugin = "rgb";
  std::string metric_base = "context";  ///< "context" or "context_free"
  bool pixel_weighted = true;
  int train_per_class = 10;

  std::uint64_t seed = 0;
};

struct ConfigViolation {
  std::string field;
  std::string message;
};

/// Checks every range and ordering constraint. Returns an empty list when
/// the config is usable.
std::vector<ConfigViolation> validate_config(const PipelineConfig& cfg);

/// Throws ConfigError listing every violation, if any.
void require_valid(const PipelineConfig& cfg);

/// Sets one field from its textual value. Unknown keys and unparsable
/// values throw ConfigError.
void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);

/// Parses the flat `key = value` format. Blank lines and lines starting
/// with '#' are ignored; later keys override earlier ones.
PipelineConfig parse_config(std::string_view text);

PipelineConfig load_config(const std::string& path);

/// Canonical text form: every key, fixed order, round-trips through
/// parse_config.
std::string config_to_text(const PipelineConfig& cfg);

}  // namespace ctxreject
