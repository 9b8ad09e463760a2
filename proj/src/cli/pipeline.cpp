#include "sdnguard/cli/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <numeric>
#include <ostream>

#include "sdnguard/archive.hpp"
#include "sdnguard/data/csv.hpp"
#include "sdnguard/data/split.hpp"
#include "sdnguard/errors.hpp"
#include "sdnguard/eval/curves.hpp"
#include "sdnguard/eval/metrics.hpp"
#include "sdnguard/eval/svg.hpp"
#include "sdnguard/eval/validation.hpp"
#include "sdnguard/explain/kernel_shap.hpp"
#include "sdnguard/explain/tree_shap.hpp"
#include "sdnguard/parallel.hpp"
#include "sdnguard/rng.hpp"
#include "sdnguard/stats/anova.hpp"
#include "sdnguard/stats/mutual_info.hpp"
#include "sdnguard/stats/selection.hpp"

namespace sdnguard::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
const std::vector<std::string> kIdentifierColumns{"Flow ID", "Src IP", "Dst IP"};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string hash_of(std::string_view text) { return hex(fnv1a64(text)); }

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool is_tree_model(std::string_view kind) {
  return kind == "decision_tree" || kind == "extra_trees" || kind == "random_forest" || kind == "gbdt";
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

data::RawTable synthetic_table(const data::SyntheticSpec& spec, const std::string& label_column) {
  const auto ds = data::generate_synthetic(spec);
  auto columns = ds.feature_names;
  columns.push_back(label_column);
  data::RawTable table(columns);
  std::vector<std::string> cells(columns.size());
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    for (std::size_t j = 0; j < ds.n_features(); ++j) cells[j] = format_real(ds.X(i, j));
    cells.back() = ds.class_names[static_cast<std::size_t>(ds.y[i])];
    table.add_row(cells, i + 2);
  }
  return table;
}

json class_table(const data::Dataset& all, const data::Split& split) {
  const auto total = data::class_counts(all.y, all.n_classes());
  const auto train = data::class_counts(split.train.y, all.n_classes());
  const auto test = data::class_counts(split.test.y, all.n_classes());
  json out = json::array();
  for (std::size_t c = 0; c < all.n_classes(); ++c)
    out.push_back({{"id", c}, {"name", all.class_names[c]}, {"total", total[c]}, {"train", train[c]}, {"test", test[c]}});
  return out;
}

std::string file_safe(std::string_view s) {
  std::string out;
  for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  return out;
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  bytes::write_file(path, j.dump(2) + "\n");
}

Pipeline::Pipeline(RunConfig cfg, std::ostream& log) : cfg_(std::move(cfg)), log_(log) { cfg_.validate(); }

void Pipeline::note(const std::string& msg) { log_ << "[sdnguard] " << msg << '\n' << std::flush; }

json Pipeline::header(const std::string& kind) const {
  return {{"schema_version", kSchemaVersion}, {"kind", kind}, {"generated_at", utc_timestamp()},
          {"config", cfg_.to_json()}};
}

bool Pipeline::cached(const fs::path& manifest, const std::string& key) const {
  if (!fs::exists(manifest)) return false;
  try {
    const auto j = json::parse(bytes::read_file(manifest));
    if (j.value("key", std::string()) != key) return false;
    for (const auto& f : j.at("outputs"))
      if (!fs::exists(manifest.parent_path() / f.get<std::string>())) return false;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void Pipeline::write_manifest(const fs::path& manifest, const std::string& stage, const std::string& key) {
  json outputs = json::array();
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(manifest.parent_path()))
    if (e.is_regular_file() && e.path() != manifest && e.path().extension() != ".json.tmp")
      names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  for (auto& n : names) outputs.push_back(n);
  write_json(manifest, {{"schema_version", kSchemaVersion}, {"kind", "manifest"}, {"stage", stage}, {"key", key},
                        {"outputs", outputs}});
}

std::string Pipeline::prepare_key() const {
  const auto full = cfg_.to_json();
  json subset = {{"stage", "prepare"}, {"prepare", full["prepare"]}, {"split", full["split"]}, {"seed", cfg_.seed}};
  if (cfg_.synthetic)
    subset["input"] = full["synthetic"];
  else
    subset["input"] = hash_of(bytes::read_file(cfg_.dataset));
  return hash_of(subset.dump());
}

std::string Pipeline::select_key() const {
  const auto full = cfg_.to_json();
  const json subset = {{"stage", "select"}, {"after", prepare_key()}, {"select", full["select"]},
                       {"resample", full["resample"]}, {"seed", cfg_.seed}};
  return hash_of(subset.dump());
}

std::string Pipeline::train_key(const std::string& model) const {
  const auto full = cfg_.to_json();
  json subset = {{"stage", "train"}, {"after", select_key()}, {"model", model},
                 {"learners", full["learners"]}, {"seed", cfg_.seed}};
  if (model == "stack") subset["stack"] = full["stack"];
  return hash_of(subset.dump());
}

fs::path Pipeline::model_path(const std::string& model) const { return root() / "models" / model / "model.sdm"; }

learn::ClassifierPtr Pipeline::load_model(const std::string& model) {
  train(model);
  return learn::load_classifier(Record::load(model_path(model)));
}

void Pipeline::prepare() {
  const fs::path dir = root() / "prepare";
  const std::string key = prepare_key();
  if (cached(dir / "manifest.json", key)) {
    note("prepare: up to date");
    return;
  }
  fs::create_directories(dir);

  data::PrepareOptions opts = cfg_.prepare;
  data::RawTable raw = [&] {
    if (!cfg_.synthetic) {
      note("prepare: reading " + cfg_.dataset);
      return data::load_csv(cfg_.dataset);
    }
    auto spec = *cfg_.synthetic;
    spec.seed = stage_seed(cfg_, "synthetic");
    note("prepare: generating synthetic fixture");
    return synthetic_table(spec, opts.label_column);
  }();
  if (cfg_.synthetic) {
    // The generated table has only f<j> columns and the label, so column
    // lists aimed at flow CSVs are narrowed to what exists.
    auto present = [&](const std::string& c) { return raw.find_column(c) != data::RawTable::npos; };
    std::erase_if(opts.drop_columns, [&](const std::string& c) { return !present(c); });
    std::erase_if(opts.categorical_columns, [&](const std::string& c) { return !present(c); });
  }
  if (cfg_.exclude_identifiers) {
    for (const auto& c : kIdentifierColumns) {
      std::erase(opts.categorical_columns, c);
      if (raw.find_column(c) != data::RawTable::npos && !contains(opts.drop_columns, c)) opts.drop_columns.push_back(c);
    }
  }
  if (!contains(opts.categorical_columns, opts.label_column)) opts.categorical_columns.push_back(opts.label_column);

  auto prepared = data::prepare(raw, opts);
  note("prepare: kept " + std::to_string(prepared.report.rows_kept) + " of " +
       std::to_string(prepared.report.rows_in) + " rows");
  prepared.dataset.validate();
  const auto split =
      data::stratified_split(prepared.dataset, {cfg_.test_fraction, true, stage_seed(cfg_, "split")});
  const auto scaler = data::fit_scaler(cfg_.fit_on_all ? prepared.dataset : split.train);
  const auto train = data::apply_scaler(scaler, split.train);
  const auto test = data::apply_scaler(scaler, split.test);

  data::save_dataset(train, dir / "train.sdd");
  data::save_dataset(test, dir / "test.sdd");
  write_json(dir / "encoding.json", prepared.encoding.to_json());
  write_json(dir / "scaler.json", scaler.to_json());

  auto report = header("prepare_report");
  report["rows"] = prepared.report.to_json();
  report["dropped_columns"] = opts.drop_columns;
  report["encoded_columns"] = opts.categorical_columns;
  report["feature_names"] = prepared.dataset.feature_names;
  report["n_features"] = prepared.dataset.n_features();
  report["classes"] = class_table(prepared.dataset, split);
  report["scaler_fit_on"] = cfg_.fit_on_all ? "all" : "train";
  write_json(dir / "prepare_report.json", report);
  write_manifest(dir / "manifest.json", "prepare", key);
}

void Pipeline::select() {
  prepare();
  const fs::path dir = root() / "select";
  const std::string key = select_key();
  if (cached(dir / "manifest.json", key)) {
    note("select: up to date");
    return;
  }
  fs::create_directories(dir);

  const auto train = data::load_dataset(root() / "prepare" / "train.sdd");
  const auto test = data::load_dataset(root() / "prepare" / "test.sdd");
  const std::size_t C = train.n_classes();

  const auto anova = stats::anova_f(train.X, train.y, C);
  const auto dropped = anova.insignificant(cfg_.anova_alpha);
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < train.n_features(); ++j)
    if (!std::binary_search(dropped.begin(), dropped.end(), j)) kept.push_back(j);
  note("select: ANOVA keeps " + std::to_string(kept.size()) + " of " + std::to_string(train.n_features()) +
       " features");
  if (cfg_.mi_k_features > kept.size())
    throw UsageError("select.mi_k_features = " + std::to_string(cfg_.mi_k_features) + " but only " +
                     std::to_string(kept.size()) + " features remain after ANOVA");

  const auto screened = train.with_features(kept);
  const auto mi = stats::mutual_info(screened.X, screened.y, C, {cfg_.mi_neighbors, stage_seed(cfg_, "mi"), 1e-10});
  auto sel = stats::select_k_best(mi.mi, screened.feature_names, cfg_.mi_k_features);
  for (auto& idx : sel.indices) idx = kept[idx];

  auto train_sel = train.with_features(sel.indices);
  const auto test_sel = test.with_features(sel.indices);
  if (cfg_.resample_target > 0)
    train_sel = data::hybrid_resample(train_sel, {cfg_.resample_target, stage_seed(cfg_, "resample")});
  data::save_dataset(train_sel, dir / "train.sdd");
  data::save_dataset(test_sel, dir / "test.sdd");

  auto report = header("selection");
  report["anova"] = stats::to_json(anova, train.feature_names);
  report["anova"]["alpha"] = cfg_.anova_alpha;
  json dropped_names = json::array();
  for (auto j : dropped) dropped_names.push_back(train.feature_names[j]);
  report["anova"]["dropped"] = dropped_names;
  json mi_table = json::array();
  for (std::size_t j = 0; j < kept.size(); ++j)
    mi_table.push_back({{"feature", screened.feature_names[j]}, {"mi", mi.mi[j]}});
  report["mutual_info"] = {{"neighbors", cfg_.mi_neighbors}, {"scores", mi_table}};
  report["selection"] = sel.to_json();
  const auto counts = data::class_counts(train_sel.y, C);
  json balanced = json::object();
  for (std::size_t c = 0; c < C; ++c) balanced[train_sel.class_names[c]] = counts[c];
  report["training_rows"] = {{"total", train_sel.n_rows()}, {"per_class", balanced},
                             {"resample_target", cfg_.resample_target}};
  report["test_rows"] = test_sel.n_rows();
  write_json(dir / "selection.json", report);
  write_manifest(dir / "manifest.json", "select", key);
}

void Pipeline::train(const std::string& model) {
  const auto spec = stack::make_learner(model, cfg_.learners, cfg_.stack);  // validates the name first
  select();
  const fs::path path = model_path(model);
  const std::string key = train_key(model);
  if (cached(path.parent_path() / "manifest.json", key)) {
    note("train " + model + ": up to date");
    return;
  }
  fs::create_directories(path.parent_path());
  const auto ds = data::load_dataset(root() / "select" / "train.sdd");
  note("train " + model + ": fitting on " + std::to_string(ds.n_rows()) + " rows");
  const auto fitted = spec.fit(ds.X, ds.y, ds.n_classes(), stage_seed(cfg_, "train/" + model));
  fitted->to_record().save(path);
  write_manifest(path.parent_path() / "manifest.json", "train/" + model, key);
}

void Pipeline::evaluate(const std::string& model) {
  const auto clf = load_model(model);
  const auto test = data::load_dataset(root() / "select" / "test.sdd");
  const fs::path dir = root() / "reports" / model;
  fs::create_directories(dir / "curves");

  const Matrix proba = clf->predict_proba(test.X);
  const auto pred = argmax_rows(proba);
  const auto cm = eval::confusion(test.y, pred, test.n_classes());
  const auto weighted = eval::metrics(cm, eval::Averaging::kWeighted);
  const auto macro = eval::metrics(cm, eval::Averaging::kMacro);
  const auto curves = eval::all_curves(test.y, proba);

  json curve_rows = json::array();
  std::vector<eval::Curve> rocs, prs;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const std::string stem = std::to_string(c) + "_" + file_safe(test.class_names[c]);
    bytes::write_file(dir / "curves" / ("roc_" + stem + ".csv"), curves[c].roc.to_csv());
    bytes::write_file(dir / "curves" / ("pr_" + stem + ".csv"), curves[c].pr.to_csv());
    curve_rows.push_back({{"class", test.class_names[c]},
                          {"roc_auc", curves[c].roc.defined ? json(curves[c].roc.area) : json(nullptr)},
                          {"average_precision", curves[c].pr.defined ? json(curves[c].pr.area) : json(nullptr)},
                          {"roc_csv", "curves/roc_" + stem + ".csv"},
                          {"pr_csv", "curves/pr_" + stem + ".csv"}});
    rocs.push_back(curves[c].roc);
    prs.push_back(curves[c].pr);
  }
  if (cfg_.evaluate_svg) {
    bytes::write_file(dir / "confusion.svg", eval::confusion_svg(cm, test.class_names));
    bytes::write_file(dir / "roc.svg", eval::curves_svg(rocs, test.class_names, model + ": ROC (one vs rest)"));
    bytes::write_file(dir / "pr.svg", eval::curves_svg(prs, test.class_names, model + ": precision-recall"));
  }

  auto report = header("evaluation");
  report["model"] = model;
  report["n_test"] = test.n_rows();
  report["weighted"] = weighted.to_json(test.class_names);
  report["macro"] = macro.to_json(test.class_names);
  report["confusion"] = cm.to_json();
  report["curves"] = curve_rows;
  write_json(dir / "report.json", report);
  note("evaluate " + model + ": accuracy " + fixed4(weighted.accuracy) + ", kappa " + fixed4(weighted.kappa));
}

void Pipeline::crossval(const std::string& model) {
  const auto spec = stack::make_learner(model, cfg_.learners, cfg_.stack);
  select();
  const auto train = data::load_dataset(root() / "select" / "train.sdd");
  const auto test = data::load_dataset(root() / "select" / "test.sdd");
  note("crossval " + model + ": " + std::to_string(cfg_.crossval_folds) + " folds");
  const auto cv = eval::stratified_kfold_cv(train, spec, cfg_.crossval_folds, stage_seed(cfg_, "crossval/" + model),
                                            &test);
  auto report = header("crossval");
  report["model"] = model;
  report["result"] = cv.to_json();
  write_json(root() / "reports" / model / "crossval.json", report);
}

void Pipeline::explain(const std::string& model) {
  const auto clf = load_model(model);
  const auto train = data::load_dataset(root() / "select" / "train.sdd");
  const auto test = data::load_dataset(root() / "select" / "test.sdd");
  const std::size_t C = test.n_classes();

  std::vector<std::size_t> rows(test.n_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Rng rng(stage_seed(cfg_, "explain/samples"));
  rng.shuffle(std::span<std::size_t>(rows));
  rows.resize(std::min(rows.size(), cfg_.explain_samples));
  std::sort(rows.begin(), rows.end());
  const Matrix X = test.X.select_rows(rows);

  explain::ShapAttribution attr;
  json method;
  if (is_tree_model(clf->kind())) {
    note("explain " + model + ": TreeSHAP on " + std::to_string(rows.size()) + " rows");
    attr = explain::tree_shap(*clf, X);
    method = {{"name", "tree_shap"}, {"output", clf->kind() == "gbdt" ? "margin" : "probability"}};
  } else {
    const double frac = std::min(1.0, static_cast<double>(cfg_.explain_background) /
                                          static_cast<double>(train.n_rows()));
    const auto bg_rows = eval::stratified_prefix(train.y, C, frac, stage_seed(cfg_, "explain/background"));
    const Matrix background = train.X.select_rows(bg_rows);
    note("explain " + model + ": kernel SHAP on " + std::to_string(rows.size()) + " rows, " +
         std::to_string(bg_rows.size()) + " background rows");
    std::size_t flagged = 0;
    const explain::ModelFn fn = [&](const Matrix& M) { return clf->predict_proba(M); };
    attr = explain::kernel_shap_all(fn, X, background,
                                    {cfg_.explain_coalitions, stage_seed(cfg_, "explain/kernel")}, &flagged);
    method = {{"name", "kernel_shap"},
              {"output", "probability"},
              {"background_rows", bg_rows.size()},
              {"n_coalitions", cfg_.explain_coalitions},
              {"ridge_fallbacks", flagged}};
  }
  const auto summary = explain::summarize(attr, test.feature_names, test.class_names);

  json base = json::object();
  for (std::size_t c = 0; c < C; ++c) base[test.class_names[c]] = attr.base_values[c];
  json samples = json::array();
  const auto predicted = argmax_rows(attr.outputs);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto c = static_cast<std::size_t>(predicted[i]);
    std::vector<std::size_t> order(attr.n_features);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(attr.at(i, a, c)) > std::abs(attr.at(i, b, c));
    });
    if (cfg_.explain_top_m > 0 && order.size() > cfg_.explain_top_m) order.resize(cfg_.explain_top_m);
    json values = json::array();
    for (auto j : order) values.push_back({{"feature", test.feature_names[j]}, {"value", attr.at(i, j, c)}});
    samples.push_back({{"test_row", rows[i]},
                       {"true_class", test.class_names[static_cast<std::size_t>(test.y[rows[i]])]},
                       {"predicted_class", test.class_names[c]},
                       {"output", attr.outputs(i, c)},
                       {"attributions", values}});
  }

  const fs::path dir = root() / "reports" / model;
  auto report = header("shap");
  report["model"] = model;
  report["method"] = method;
  report["n_samples"] = rows.size();
  report["base_values"] = base;
  report["local_accuracy_max_error"] = attr.max_local_accuracy_error();
  report["samples"] = samples;
  report["summary"] = summary.to_json();
  write_json(dir / "shap.json", report);
  bytes::write_file(dir / "shap_summary.csv", summary.to_csv());
  std::string top;
  for (std::size_t r = 0; r < std::min<std::size_t>(4, summary.ranking.size()); ++r)
    top += (r ? ", " : "") + summary.feature_names[summary.ranking[r]];
  note("explain " + model + ": top features " + top);
}

void Pipeline::benchmark() {
  select();
  const auto ds = data::load_dataset(root() / "select" / "train.sdd");
  std::vector<learn::LearnerSpec> specs;
  for (const auto& name : stack::model_names()) specs.push_back(stack::make_learner(name, cfg_.learners, cfg_.stack));
  note("benchmark: timing " + std::to_string(specs.size()) + " models on " + std::to_string(ds.n_rows()) + " rows");
  const auto rows = eval::benchmark(specs, ds, stage_seed(cfg_, "benchmark"), cfg_.benchmark_repeats);
  double fastest = HUGE_VAL;
  for (const auto& r : rows) fastest = std::min(fastest, r.fit_seconds);
  auto table = eval::to_json(rows);
  for (auto& r : table) r["relative_to_fastest"] = fastest > 0.0 ? r["fit_seconds"].get<double>() / fastest : 1.0;
  auto report = header("benchmark");
  report["n_rows"] = ds.n_rows();
  report["n_features"] = ds.n_features();
  report["threads"] = num_threads();
  report["repeats"] = cfg_.benchmark_repeats;
  report["models"] = table;
  write_json(root() / "reports" / "benchmark.json", report);
}

}  // namespace sdnguard::cli
