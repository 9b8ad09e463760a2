#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "sdnguard/cli/config.hpp"
#include "sdnguard/learn/classifier.hpp"

namespace sdnguard::cli {

/// Runs pipeline stages under one output directory:
///
///   prepare/  train.sdd test.sdd encoding.json scaler.json prepare_report.json
///   select/   train.sdd test.sdd selection.json
///   models/   <model>/{model.sdm,manifest.json}
///   reports/  <model>/{report.json,crossval.json,shap.json,shap_summary.csv,...}
///             benchmark.json
///
/// prepare, select and train are cached: each writes a manifest holding a
/// hash of its config subset and inputs, and a later call with the same key
/// reuses the artifacts. Every stage runs its prerequisites first.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::ostream& log);

  void prepare();
  void select();
  void train(const std::string& model);
  void evaluate(const std::string& model);
  void crossval(const std::string& model);
  void explain(const std::string& model);
  void benchmark();

  const RunConfig& config() const { return cfg_; }
  std::filesystem::path root() const { return cfg_.output_dir; }
  std::filesystem::path model_path(const std::string& model) const;
  learn::ClassifierPtr load_model(const std::string& model);

  /// Cache keys, hex encoded.
  std::string prepare_key() const;
  std::string select_key() const;
  std::string train_key(const std::string& model) const;

 private:
  void note(const std::string& msg);
  nlohmann::json header(const std::string& kind) const;
  bool cached(const std::filesystem::path& manifest, const std::string& key) const;
  void write_manifest(const std::filesystem::path& manifest, const std::string& stage, const std::string& key);

  RunConfig cfg_;
  std::ostream& log_;
};

/// Report timestamp, ISO-8601 UTC. Every report holds it under the single
/// key "generated_at" and nothing else in a report depends on the clock.
std::string utc_timestamp();

/// Writes pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace sdnguard::cli
