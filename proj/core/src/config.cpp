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

#include "ctxreject/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ctxreject/core.hpp"
#include "ctxreject/errors.hpp"

namespace ctxreject {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view v) {
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(std::string(key) + ": not a number: '" + std::string(v) + "'");
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  v = trim(v);
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": not an integer: '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key) + ": not a boolean: '" + std::string(v) + "'");
}

std::vector<int> parse_int_list(std::string_view key, std::string_view v) {
  std::vector<int> out;
  std::string token;
  for (char c : v) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!token.empty()) out.push_back(parse_int<int>(key, token));
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(parse_int<int>(key, token));
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  std::function<void(PipelineConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define CTX_DOUBLE(name)                                                                    \
  {                                                                                         \
#name, {[](PipelineConfig& c, std::string_view k, std::string_view v) {                 \
              c.name = parse_double(k, v);                                                  \
            },                                                                              \
            [](const PipelineConfig& c) { return fmt_double(c.name); } }                    \
  }
#define CTX_INT(name)                                                                       \
  {                                                                                         \
#name, {[](PipelineConfig& c, std::string_view k, std::string_view v) {                 \
              c.name = parse_int<decltype(c.name)>(k, v);                                   \
            },                                                                              \
            [](const PipelineConfig& c) { return std::to_string(c.name); } }                \
  }

// Fixed key order for config_to_text.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      CTX_DOUBLE(alpha),
      CTX_DOUBLE(rho),
      CTX_DOUBLE(psi_c),
      CTX_DOUBLE(psi_r),
      CTX_DOUBLE(epsilon),
      CTX_INT(max_cycles),
      CTX_DOUBLE(g),
      CTX_INT(num_classes),
      {"superclasses",
       {[](PipelineConfig& c, std::string_view k, std::string_view v) {
          c.superclasses = parse_int_list(k, v);
        },
        [](const PipelineConfig& c) { return fmt_list(c.superclasses); }}},
      CTX_DOUBLE(lambda),
      CTX_INT(lorsal_max_outer),
      CTX_DOUBLE(lorsal_tol),
      CTX_DOUBLE(admm_mu),
      CTX_INT(admm_max_inner),
      CTX_DOUBLE(admm_tol),
      CTX_DOUBLE(gamma),
      CTX_DOUBLE(v_intrascale),
      CTX_DOUBLE(v_interscale),
      CTX_DOUBLE(prune_min_weight),
      {"mss_list",
       {[](PipelineConfig& c, std::string_view k, std::string_view v) {
          c.mss_list = parse_int_list(k, v);
        },
        [](const PipelineConfig& c) { return fmt_list(c.mss_list); }}},
      CTX_DOUBLE(seg_k),
      CTX_DOUBLE(seg_sigma),
      {"feature_plugin",
       {[](PipelineConfig& c, std::string_view, std::string_view v) {
          c.feature_plugin = std::string(trim(v));
        },
        [](const PipelineConfig& c) { return c.feature_plugin; }}},
      {"metric_base",
       {[](PipelineConfig& c, std::string_view, std::string_view v) {
          c.metric_base = std::string(trim(v));
        },
        [](const PipelineConfig& c) { return c.metric_base; }}},
      {"pixel_weighted",
       {[](PipelineConfig& c, std::string_view k, std::string_view v) {
          c.pixel_weighted = parse_bool(k, v);
        },
        [](const PipelineConfig& c) { return std::string(c.pixel_weighted ? "true" : "false"); }}},
      CTX_INT(train_per_class),
      CTX_INT(seed),
  };
  return table;
}

#undef CTX_DOUBLE
#undef CTX_INT

}  // namespace

std::vector<ConfigViolation> validate_config(const PipelineConfig& cfg) {
  std::vector<ConfigViolation> out;
  auto check = [&](bool ok, const char* field, const char* message) {
    if (!ok) out.push_back({field, message});
  };
  check(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, "alpha", "alpha out of [0,1]");
  check(cfg.rho >= 0.0 && cfg.rho <= 1.0, "rho", "rho out of [0,1]");
  check(cfg.lambda >= 0.0, "lambda", "lambda must be >= 0");
  check(cfg.gamma > 0.0, "gamma", "gamma must be > 0");
  check(cfg.v_intrascale >= 0.0, "v_intrascale", "v_intrascale must be >= 0");
  check(cfg.v_interscale >= 0.0, "v_interscale", "v_interscale must be >= 0");
  check(cfg.psi_c >= 0.0 && cfg.psi_c <= 1.0, "psi_c", "psi_c out of [0,1]");
  check(cfg.psi_r >= 0.0 && cfg.psi_r <= 1.0, "psi_r", "psi_r out of [0,1]");
  check(is_metric(cfg.psi_c, cfg.psi_r), "psi_c,psi_r",
        "interaction not metric: need psi_c > 0, psi_r > 0, psi_r >= 0.5, psi_c <= 2 psi_r");
  check(cfg.g >= 0.0 && cfg.g <= 1.0, "g", "g out of [0,1]");
  check(cfg.epsilon > 0.0, "epsilon", "epsilon must be > 0");
  check(cfg.max_cycles >= 1, "max_cycles", "max_cycles must be >= 1");
  check(cfg.num_classes >= 0, "num_classes", "num_classes must be >= 0");
  check(cfg.superclasses.empty() || cfg.num_classes == 0 ||
            static_cast<int>(cfg.superclasses.size()) == cfg.num_classes,
        "superclasses", "superclasses needs one entry per class");
  check(cfg.lorsal_max_outer >= 1, "lorsal_max_outer", "lorsal_max_outer must be >= 1");
  check(cfg.lorsal_tol >= 0.0, "lorsal_tol", "lorsal_tol must be >= 0");
  check(cfg.admm_mu > 0.0, "admm_mu", "admm_mu must be > 0");
  check(cfg.admm_max_inner >= 1, "admm_max_inner", "admm_max_inner must be >= 1");
  check(cfg.admm_tol >= 0.0, "admm_tol", "admm_tol must be >= 0");
  check(cfg.prune_min_weight >= 0.0, "prune_min_weight", "prune_min_weight must be >= 0");
  check(!cfg.mss_list.empty(), "mss_list", "mss_list is empty");
  bool increasing = true;
  for (size_t i = 0; i < cfg.mss_list.size(); ++i) {
    if (cfg.mss_list[i] < 1) increasing = false;
    if (i > 0 && cfg.mss_list[i] <= cfg.mss_list[i - 1]) increasing = false;
  }
  check(increasing, "mss_list", "mss_list not increasing");
  check(cfg.seg_k >= 0.0, "seg_k", "seg_k must be >= 0");
  check(cfg.seg_sigma >= 0.0, "seg_sigma", "seg_sigma must be >= 0");
  check(cfg.metric_base == "context" || cfg.metric_base == "context_free", "metric_base",
        "metric_base must be 'context' or 'context_free'");
  check(cfg.train_per_class >= 1, "train_per_class", "train_per_class must be >= 1");
  return out;
}

void require_valid(const PipelineConfig& cfg) {
  const auto violations = validate_config(cfg);
  if (violations.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& v : violations) msg += "\n  " + v.field + ": " + v.message;
  throw ConfigError(msg);
}

void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_text(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(cfg) + "\n";
  return out;
}

}  // namespace ctxreject
