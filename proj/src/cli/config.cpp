#include "sdnguard/cli/config.hpp"

#include <algorithm>
#include <initializer_list>

#include "sdnguard/archive.hpp"
#include "sdnguard/errors.hpp"
#include "sdnguard/rng.hpp"

namespace sdnguard::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw UsageError("config section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw UsageError("unknown key '" + key + "' in config section '" + section + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  check_keys(j, "<root>",
             {"dataset", "synthetic", "output_dir", "seed", "prepare", "split", "select", "resample", "learners",
              "stack", "evaluate", "crossval", "explain", "benchmark"});
  read(j, "dataset", c.dataset);
  read(j, "output_dir", c.output_dir);
  read(j, "seed", c.seed);
  if (j.contains("synthetic") && !j["synthetic"].is_null()) {
    const auto& s = j["synthetic"];
    check_keys(s, "synthetic", {"n_classes", "n_features", "n_per_class", "class_separation"});
    data::SyntheticSpec spec;
    read(s, "n_classes", spec.n_classes);
    read(s, "n_features", spec.n_features);
    read(s, "n_per_class", spec.n_per_class);
    read(s, "class_separation", spec.class_separation);
    c.synthetic = spec;
  }
  if (j.contains("prepare")) {
    const auto& s = j["prepare"];
    check_keys(s, "prepare",
               {"drop_columns", "categorical_columns", "label_column", "exclude_identifiers", "fit_on_all"});
    read(s, "drop_columns", c.prepare.drop_columns);
    read(s, "categorical_columns", c.prepare.categorical_columns);
    read(s, "label_column", c.prepare.label_column);
    read(s, "exclude_identifiers", c.exclude_identifiers);
    read(s, "fit_on_all", c.fit_on_all);
  }
  if (j.contains("split")) {
    check_keys(j["split"], "split", {"test_fraction"});
    read(j["split"], "test_fraction", c.test_fraction);
  }
  if (j.contains("select")) {
    const auto& s = j["select"];
    check_keys(s, "select", {"anova_alpha", "mi_k_features", "mi_neighbors"});
    read(s, "anova_alpha", c.anova_alpha);
    read(s, "mi_k_features", c.mi_k_features);
    read(s, "mi_neighbors", c.mi_neighbors);
  }
  if (j.contains("resample")) {
    check_keys(j["resample"], "resample", {"target_per_class"});
    read(j["resample"], "target_per_class", c.resample_target);
  }
  if (j.contains("learners")) c.learners = learn::LearnerConfig::from_json(j["learners"]);
  if (j.contains("stack")) c.stack = stack::StackConfig::from_json(j["stack"]);
  if (j.contains("evaluate")) {
    check_keys(j["evaluate"], "evaluate", {"svg"});
    read(j["evaluate"], "svg", c.evaluate_svg);
  }
  if (j.contains("crossval")) {
    check_keys(j["crossval"], "crossval", {"folds"});
    read(j["crossval"], "folds", c.crossval_folds);
  }
  if (j.contains("explain")) {
    const auto& s = j["explain"];
    check_keys(s, "explain", {"n_samples", "background", "n_coalitions", "top_m"});
    read(s, "n_samples", c.explain_samples);
    read(s, "background", c.explain_background);
    read(s, "n_coalitions", c.explain_coalitions);
    read(s, "top_m", c.explain_top_m);
  }
  if (j.contains("benchmark")) {
    check_keys(j["benchmark"], "benchmark", {"repeats"});
    read(j["benchmark"], "repeats", c.benchmark_repeats);
  }
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["dataset"] = dataset;
  if (synthetic)
    j["synthetic"] = {{"n_classes", synthetic->n_classes},
                      {"n_features", synthetic->n_features},
                      {"n_per_class", synthetic->n_per_class},
                      {"class_separation", synthetic->class_separation}};
  else
    j["synthetic"] = nullptr;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["prepare"] = {{"drop_columns", prepare.drop_columns},
                  {"categorical_columns", prepare.categorical_columns},
                  {"label_column", prepare.label_column},
                  {"exclude_identifiers", exclude_identifiers},
                  {"fit_on_all", fit_on_all}};
  j["split"] = {{"test_fraction", test_fraction}};
  j["select"] = {{"anova_alpha", anova_alpha}, {"mi_k_features", mi_k_features}, {"mi_neighbors", mi_neighbors}};
  j["resample"] = {{"target_per_class", resample_target}};
  j["learners"] = learners.to_json();
  j["stack"] = stack.to_json();
  j["evaluate"] = {{"svg", evaluate_svg}};
  j["crossval"] = {{"folds", crossval_folds}};
  j["explain"] = {{"n_samples", explain_samples},
                  {"background", explain_background},
                  {"n_coalitions", explain_coalitions},
                  {"top_m", explain_top_m}};
  j["benchmark"] = {{"repeats", benchmark_repeats}};
  return j;
}

void RunConfig::validate() const {
  if (dataset.empty() == !synthetic.has_value())
    throw UsageError("config needs exactly one of 'dataset' (CSV path) or 'synthetic'");
  if (synthetic && (synthetic->n_classes < 2 || synthetic->n_features < 1 || synthetic->n_per_class < 2))
    throw UsageError("synthetic fixture needs >= 2 classes, >= 1 feature and >= 2 rows per class");
  if (output_dir.empty()) throw UsageError("output_dir must not be empty");
  if (prepare.label_column.empty()) throw UsageError("prepare.label_column must not be empty");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw UsageError("split.test_fraction must lie in (0, 1)");
  if (!(anova_alpha > 0.0 && anova_alpha < 1.0)) throw UsageError("select.anova_alpha must lie in (0, 1)");
  if (mi_k_features == 0) throw UsageError("select.mi_k_features must be positive");
  if (mi_neighbors == 0) throw UsageError("select.mi_neighbors must be positive");
  if (crossval_folds < 2) throw UsageError("crossval.folds must be at least 2");
  if (explain_samples == 0 || explain_background == 0) throw UsageError("explain sizes must be positive");
  if (benchmark_repeats == 0) throw UsageError("benchmark.repeats must be positive");
  for (const auto& b : stack.base_learners) {
    const auto& names = learn::baseline_names();
    if (std::find(names.begin(), names.end(), b) == names.end())
      throw UsageError("stack.base_learners: unknown learner '" + b + "'");
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(bytes::read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  } catch (const DataError& e) {
    throw UsageError(std::string("cannot read config: ") + e.what());
  }
  return RunConfig::from_json(j);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw UsageError("override '" + assignment + "' has an empty key");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage) { return derive_seed(cfg.seed, stage); }

}  // namespace sdnguard::cli
