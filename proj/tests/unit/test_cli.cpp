#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdnguard/cli/app.hpp"
#include "sdnguard/cli/config.hpp"
#include "sdnguard/cli/pipeline.hpp"
#include "sdnguard/errors.hpp"

using namespace sdnguard;
using namespace sdnguard::cli;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "synthetic": {"n_classes": 3, "n_features": 5, "n_per_class": 60, "class_separation": 6.0},
  "seed": 3,
  "select": {"mi_k_features": 3},
  "resample": {"target_per_class": 50},
  "learners": {"extra_trees": {"n_trees": 10}, "random_forest": {"n_trees": 10},
               "mlp": {"hidden": [8], "epochs": 5}, "gbdt": {"n_rounds": 10}},
  "stack": {"meta": {"n_rounds": 10}},
  "crossval": {"folds": 3},
  "explain": {"n_samples": 5, "background": 10, "n_coalitions": 64}
})";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("sdnguard_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "sdnguard");
  std::ostringstream out, err;
  const int rc = run(args, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("config: strict keys, defaults and overrides") {
  auto doc = nlohmann::json::parse(kConfig);
  const auto cfg = RunConfig::from_json(doc);
  CHECK(cfg.mi_k_features == 3);
  CHECK(cfg.test_fraction == 0.2);
  CHECK(RunConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

  auto typo = doc;
  typo["select"]["mi_k_feature"] = 3;
  CHECK_THROWS_AS(RunConfig::from_json(typo), UsageError);
  auto wrong_type = doc;
  wrong_type["seed"] = "abc";
  CHECK_THROWS_AS(RunConfig::from_json(wrong_type), UsageError);

  apply_override(doc, "select.mi_k_features=2");
  apply_override(doc, "output_dir=some/where");
  CHECK(doc["select"]["mi_k_features"] == 2);
  CHECK(doc["output_dir"] == "some/where");
  CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), UsageError);

  auto both = doc;
  both["dataset"] = "x.csv";
  CHECK_THROWS_AS(RunConfig::from_json(both).validate(), UsageError);
  CHECK(stage_seed(cfg, "split") != stage_seed(cfg, "mi"));
}

TEST_CASE("pipeline: synthetic end to end with caching") {
  TempDir tmp("cli_pipeline");
  auto doc = nlohmann::json::parse(kConfig);
  doc["output_dir"] = tmp.path.string();
  std::ostringstream log;
  Pipeline p(RunConfig::from_json(doc), log);
  p.evaluate("random_forest");
  p.explain("random_forest");
  p.crossval("knn");
  const auto report = read_json(tmp.path / "reports/random_forest/report.json");
  CHECK(report["schema_version"] == 1);
  CHECK(report.contains("generated_at"));
  CHECK(report["weighted"]["accuracy"].get<double>() > 0.8);
  CHECK(fs::exists(tmp.path / "reports/random_forest/confusion.svg"));
  const auto shap = read_json(tmp.path / "reports/random_forest/shap.json");
  CHECK(shap["schema_version"] == 1);
  CHECK(fs::exists(tmp.path / "reports/knn/crossval.json"));

  const auto stamp = fs::last_write_time(tmp.path / "models/random_forest/model.sdm");
  std::ostringstream log2;
  Pipeline again(RunConfig::from_json(doc), log2);
  again.train("random_forest");
  CHECK(fs::last_write_time(tmp.path / "models/random_forest/model.sdm") == stamp);
  CHECK(log2.str().find("up to date") != std::string::npos);

  // A changed selection invalidates select and everything downstream.
  doc["select"]["mi_k_features"] = 2;
  Pipeline changed(RunConfig::from_json(doc), log2);
  CHECK(changed.select_key() != again.select_key());
  CHECK(changed.train_key("random_forest") != again.train_key("random_forest"));
  CHECK(changed.prepare_key() == again.prepare_key());
}

TEST_CASE("cli: exit codes") {
  TempDir tmp("cli_exit");
  auto doc = nlohmann::json::parse(kConfig);
  doc["output_dir"] = (tmp.path / "out").string();
  const auto cfg = write_config(tmp.path, doc.dump());

  CHECK(run_cli({"train", "-c", cfg.string(), "-m", "decision_tree"}) == kOk);
  CHECK(fs::exists(tmp.path / "out/models/decision_tree/model.sdm"));
  CHECK(run_cli({"train", "-c", cfg.string(), "-m", "stack", "--no-refit"}) == kOk);
  CHECK(read_json(tmp.path / "out/models/stack/manifest.json").contains("key"));
  CHECK(run_cli({"train", "-c", cfg.string(), "-m", "no_such_model"}) == kUsage);
  CHECK(run_cli({"frobnicate", "-c", cfg.string()}) == kUsage);
  CHECK(run_cli({"prepare"}) == kUsage);
  std::string err;
  CHECK(run_cli({"select", "-c", cfg.string(), "--set", "select.mi_k_features=50"}, &err) == kUsage);
  CHECK_FALSE(err.empty());

  auto missing = doc;
  missing.erase("synthetic");
  missing["dataset"] = (tmp.path / "absent.csv").string();
  const auto missing_cfg = tmp.path / "missing.json";
  std::ofstream(missing_cfg) << missing.dump();
  CHECK(run_cli({"prepare", "-c", missing_cfg.string()}) == kData);

  const auto broken = tmp.path / "broken.json";
  std::ofstream(broken) << "{ not json";
  CHECK(run_cli({"prepare", "-c", broken.string()}) != kOk);
}
