#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnguard/data/preprocess.hpp"
#include "sdnguard/data/synthetic.hpp"
#include "sdnguard/learn/registry.hpp"
#include "sdnguard/stack/stack.hpp"

namespace sdnguard::cli {

/// Everything one pipeline run needs. Loaded from JSON (see docs/reports.md
/// for the schema); unknown keys are rejected so typos fail early.
struct RunConfig {
  /// Flow CSV; leave empty and set `synthetic` for a generated fixture.
  std::string dataset;
  std::optional<data::SyntheticSpec> synthetic;
  std::string output_dir = "out";
  std::uint64_t seed = 42;

  data::PrepareOptions prepare;
  /// Drops Flow ID, Src IP and Dst IP before encoding.
  bool exclude_identifiers = false;
  /// Fit the scaler on train and test together (leaks; parity studies only).
  bool fit_on_all = false;
  double test_fraction = 0.2;

  double anova_alpha = 0.05;
  std::size_t mi_k_features = 15;
  std::size_t mi_neighbors = 3;
  /// Rows per class after rebalancing the training split; 0 disables it.
  std::size_t resample_target = 30000;

  learn::LearnerConfig learners;
  stack::StackConfig stack;

  bool evaluate_svg = true;
  std::size_t crossval_folds = 5;

  std::size_t explain_samples = 50;
  std::size_t explain_background = 100;
  std::size_t explain_coalitions = 512;
  /// Keep only the m largest |value| per sample in shap.json; 0 keeps all.
  std::size_t explain_top_m = 0;

  std::size_t benchmark_repeats = 1;

  /// Throws UsageError on unknown keys, wrong types or out-of-range values.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Throws UsageError when the combination is unusable.
  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);

/// Applies a dotted-path override such as `select.mi_k_features=10`; the
/// value is parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Per-stage seed: the stage name hashed into the master seed.
std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage);

}  // namespace sdnguard::cli
