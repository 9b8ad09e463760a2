#include "sdnguard/stack/stack.hpp"

#include <algorithm>
#include <chrono>

#include "sdnguard/data/dataset.hpp"
#include "sdnguard/data/split.hpp"
#include "sdnguard/errors.hpp"
#include "sdnguard/rng.hpp"

namespace sdnguard::stack {

using learn::ClassifierPtr;
using nlohmann::json;

StackConfig StackConfig::from_json(const json& j) {
  StackConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw UsageError("config section 'stack' must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "base_learners" && key != "meta" && key != "inner_val_fraction" && key != "meta_features" &&
        key != "refit_bases" && key != "oof_folds")
      throw UsageError("unknown key '" + key + "' in config section 'stack'");
  try {
    if (j.contains("base_learners")) c.base_learners = j["base_learners"].get<std::vector<std::string>>();
    if (j.contains("meta")) c.meta = learn::gbdt_params_from_json(j["meta"], c.meta);
    if (j.contains("inner_val_fraction")) c.inner_val_fraction = j["inner_val_fraction"].get<double>();
    if (j.contains("meta_features")) {
      const auto kind = j["meta_features"].get<std::string>();
      if (kind == "probabilities") c.meta_features = MetaFeatureKind::kProbabilities;
      else if (kind == "labels") c.meta_features = MetaFeatureKind::kLabels;
      else throw UsageError("stack.meta_features must be 'probabilities' or 'labels'");
    }
    if (j.contains("refit_bases")) c.refit_bases = j["refit_bases"].get<bool>();
    if (j.contains("oof_folds")) c.oof_folds = j["oof_folds"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad stack config: ") + e.what());
  }
  if (!(c.inner_val_fraction > 0.0 && c.inner_val_fraction < 1.0))
    throw UsageError("stack.inner_val_fraction must lie in (0, 1)");
  if (c.base_learners.empty()) throw UsageError("stack.base_learners must not be empty");
  if (c.oof_folds == 1) throw UsageError("stack.oof_folds must be 0 (holdout) or at least 2");
  return c;
}

json StackConfig::to_json() const {
  return {{"base_learners", base_learners},
          {"meta", learn::to_json(meta)},
          {"inner_val_fraction", inner_val_fraction},
          {"meta_features", meta_features == MetaFeatureKind::kProbabilities ? "probabilities" : "labels"},
          {"refit_bases", refit_bases},
          {"oof_folds", oof_folds}};
}

Matrix build_meta_features(std::span<const ClassifierPtr> bases, const Matrix& X, MetaFeatureKind kind) {
  std::vector<Matrix> probas;
  probas.reserve(bases.size());
  for (const auto& b : bases) probas.push_back(b->predict_proba(X));
  std::size_t width = 0;
  for (const auto& p : probas) width += kind == MetaFeatureKind::kProbabilities ? p.cols() : 1;
  Matrix out(X.rows(), width);
  std::size_t offset = 0;
  for (const auto& p : probas) {
    if (kind == MetaFeatureKind::kProbabilities) {
      for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t c = 0; c < p.cols(); ++c) out(i, offset + c) = p(i, c);
      offset += p.cols();
    } else {
      const auto labels = argmax_rows(p);
      for (std::size_t i = 0; i < p.rows(); ++i) out(i, offset) = labels[i];
      offset += 1;
    }
  }
  return out;
}

StackModel::StackModel(std::vector<std::string> base_names, std::vector<ClassifierPtr> bases,
                       learn::GbdtModel meta, MetaFeatureKind kind, std::size_t n_classes, std::uint64_t seed,
                       StackProvenance provenance)
    : base_names_(std::move(base_names)),
      bases_(std::move(bases)),
      meta_(std::move(meta)),
      kind_(kind),
      n_classes_(n_classes),
      seed_(seed),
      provenance_(std::move(provenance)) {
  if (bases_.empty()) throw DataError("a stack needs at least one base learner");
  if (base_names_.size() != bases_.size()) throw DataError("stack base names and models disagree");
  for (const auto& b : bases_) {
    if (b->n_classes() != n_classes_) throw DataError("stack base learner has the wrong class count");
    if (b->n_features() != bases_.front()->n_features()) throw DataError("stack base learners disagree on width");
  }
  if (meta_.n_features() != meta_width()) throw DataError("meta learner width does not match the base outputs");
}

std::size_t StackModel::meta_width() const {
  return kind_ == MetaFeatureKind::kProbabilities ? bases_.size() * n_classes_ : bases_.size();
}

Matrix StackModel::meta_features(const Matrix& X) const {
  check_width(X);
  return build_meta_features(bases_, X, kind_);
}

Matrix StackModel::predict_proba(const Matrix& X) const { return meta_.predict_proba(meta_features(X)); }

Record StackModel::to_record() const {
  Record r("stack");
  r.put_int("n_classes", static_cast<std::int64_t>(n_classes_));
  r.put_int("seed", static_cast<std::int64_t>(seed_));
  r.put("meta_features", std::string(kind_ == MetaFeatureKind::kProbabilities ? "probabilities" : "labels"));
  r.put_int("n_bases", static_cast<std::int64_t>(bases_.size()));
  r.put("provenance", std::vector<std::int64_t>{static_cast<std::int64_t>(provenance_.n_inner_train),
                                                static_cast<std::int64_t>(provenance_.n_val)});
  for (std::size_t i = 0; i < bases_.size(); ++i) {
    r.put("base_name" + std::to_string(i), base_names_[i]);
    r.put("base" + std::to_string(i), bases_[i]->to_record());
  }
  r.put("meta", meta_.to_record());
  return r;
}

StackModel StackModel::from_record(const Record& r) {
  r.expect_type("stack");
  const auto n_bases = r.integer("n_bases");
  if (n_bases < 1) throw DataError("stack record holds no base learners");
  std::vector<std::string> names;
  std::vector<ClassifierPtr> bases;
  for (std::int64_t i = 0; i < n_bases; ++i) {
    names.push_back(r.text("base_name" + std::to_string(i)));
    const auto& child = r.child("base" + std::to_string(i));
    if (child.type() == "stack") throw DataError("nested stacks are not supported");
    bases.push_back(learn::load_classifier(child));
  }
  const auto& kind_text = r.text("meta_features");
  MetaFeatureKind kind;
  if (kind_text == "probabilities") kind = MetaFeatureKind::kProbabilities;
  else if (kind_text == "labels") kind = MetaFeatureKind::kLabels;
  else throw DataError("unknown meta feature kind '" + kind_text + "'");
  StackProvenance prov;
  const auto& pv = r.ints("provenance");
  if (pv.size() == 2) {
    prov.n_inner_train = static_cast<std::size_t>(pv[0]);
    prov.n_val = static_cast<std::size_t>(pv[1]);
  }
  return StackModel(std::move(names), std::move(bases), learn::GbdtModel::from_record(r.child("meta")), kind,
                    static_cast<std::size_t>(r.integer("n_classes")), static_cast<std::uint64_t>(r.integer("seed")),
                    std::move(prov));
}

namespace {

std::uint64_t base_seed(std::uint64_t seed, std::size_t i, const std::string& name) {
  return derive_seed(seed, "stack/base" + std::to_string(i) + "/" + name);
}

std::vector<ClassifierPtr> fit_bases(std::span<const learn::LearnerSpec> specs, const Matrix& X,
                                     std::span<const int> y, std::size_t C, std::uint64_t seed) {
  std::vector<ClassifierPtr> out;
  for (std::size_t i = 0; i < specs.size(); ++i) out.push_back(specs[i].fit(X, y, C, base_seed(seed, i, specs[i].name)));
  return out;
}

std::vector<int> gather(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

StackModel fit_stack(const Matrix& X, std::span<const int> y, std::size_t n_classes, const StackConfig& cfg,
                     std::span<const learn::LearnerSpec> specs) {
  using clock = std::chrono::steady_clock;
  if (specs.empty()) throw UsageError("a stack needs at least one base learner");
  if (y.size() != X.rows() || X.rows() == 0) throw DataError("stack needs a nonempty labelled matrix");
  const auto counts = data::class_counts(y, n_classes);
  for (std::size_t c = 0; c < n_classes; ++c)
    if (counts[c] == 1)
      throw DataError("class " + std::to_string(c) + " has a single training row; stacking needs at least two");

  const auto t0 = clock::now();
  StackProvenance prov;
  std::vector<ClassifierPtr> bases;
  Matrix meta_X;
  std::vector<int> meta_y;

  if (cfg.oof_folds == 0) {
    // Stratified holdout: bases see only the inner train rows, the meta
    // learner only their predictions on the held-out rows.
    std::vector<std::size_t> is_val(X.rows(), 0);
    const auto groups = data::rows_by_class(y, n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      auto g = groups[c];
      Rng rng(derive_seed(cfg.seed, "stack/inner_split/" + std::to_string(c)));
      rng.shuffle(std::span<std::size_t>(g));
      const auto k = data::stratified_test_count(g.size(), cfg.inner_val_fraction);
      for (std::size_t i = 0; i < k; ++i) is_val[g[i]] = 1;
    }
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < X.rows(); ++i) (is_val[i] ? prov.meta_rows : train_rows).push_back(i);
    const auto val_counts = data::class_counts(gather(y, prov.meta_rows), n_classes);
    for (std::size_t c = 0; c < n_classes; ++c)
      if (counts[c] > 0 && val_counts[c] == 0)
        throw DataError("class " + std::to_string(c) +
                        " is absent from the inner validation split; raise inner_val_fraction or supply more rows");
    prov.n_inner_train = train_rows.size();
    prov.n_val = prov.meta_rows.size();

    const Matrix X_train = X.select_rows(train_rows);
    const auto y_train = gather(y, train_rows);
    bases = fit_bases(specs, X_train, y_train, n_classes, cfg.seed);
    meta_X = build_meta_features(bases, X.select_rows(prov.meta_rows), cfg.meta_features);
    meta_y = gather(y, prov.meta_rows);
  } else {
    // Out-of-fold: every training row gets meta features from bases that
    // never saw it.
    const std::size_t k = cfg.oof_folds;
    std::vector<std::size_t> fold(X.rows());
    const auto groups = data::rows_by_class(y, n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      auto g = groups[c];
      Rng rng(derive_seed(cfg.seed, "stack/oof/" + std::to_string(c)));
      rng.shuffle(std::span<std::size_t>(g));
      for (std::size_t i = 0; i < g.size(); ++i) fold[g[i]] = i % k;
    }
    std::size_t width = 0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> in, out;
      for (std::size_t i = 0; i < X.rows(); ++i) (fold[i] == f ? out : in).push_back(i);
      if (in.empty() || out.empty()) continue;
      auto fold_bases = fit_bases(specs, X.select_rows(in), gather(y, in), n_classes,
                                  derive_seed(cfg.seed, "stack/oof_fold/" + std::to_string(f)));
      const Matrix part = build_meta_features(fold_bases, X.select_rows(out), cfg.meta_features);
      if (meta_X.empty()) {
        width = part.cols();
        meta_X = Matrix(X.rows(), width);
      }
      for (std::size_t i = 0; i < out.size(); ++i)
        std::copy(part.row(i).begin(), part.row(i).end(), meta_X.row(out[i]).begin());
    }
    prov.meta_rows.resize(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) prov.meta_rows[i] = i;
    prov.n_inner_train = X.rows();
    prov.n_val = X.rows();
    meta_y.assign(y.begin(), y.end());
  }

  auto meta = learn::fit_gbdt(meta_X, meta_y, n_classes, cfg.meta, derive_seed(cfg.seed, "stack/meta"));
  const auto t1 = clock::now();
  prov.seconds_base_and_meta = std::chrono::duration<double>(t1 - t0).count();

  if (cfg.refit_bases || cfg.oof_folds > 0) {
    bases = fit_bases(specs, X, y, n_classes, cfg.seed);
    prov.seconds_refit = std::chrono::duration<double>(clock::now() - t1).count();
  }

  std::vector<std::string> names;
  for (const auto& s : specs) names.push_back(s.name);
  return StackModel(std::move(names), std::move(bases), std::move(meta), cfg.meta_features, n_classes, cfg.seed,
                    std::move(prov));
}

StackModel fit_stack(const Matrix& X, std::span<const int> y, std::size_t n_classes, const StackConfig& cfg,
                     const learn::LearnerConfig& learners) {
  std::vector<learn::LearnerSpec> specs;
  for (const auto& name : cfg.base_learners) specs.push_back(learn::make_baseline(name, learners));
  return fit_stack(X, y, n_classes, cfg, specs);
}

}  // namespace sdnguard::stack

namespace sdnguard::stack {

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = [] {
    auto n = learn::baseline_names();
    n.push_back("stack");
    return n;
  }();
  return names;
}

learn::LearnerSpec make_learner(std::string_view name, const learn::LearnerConfig& learners,
                                const StackConfig& stack_cfg) {
  if (name == "stack")
    return {"stack", [learners, stack_cfg](const Matrix& X, std::span<const int> y, std::size_t C,
                                           std::uint64_t seed) -> learn::ClassifierPtr {
              StackConfig cfg = stack_cfg;
              cfg.seed = seed;
              return std::make_unique<StackModel>(fit_stack(X, y, C, cfg, learners));
            }};
  if (std::find(learn::baseline_names().begin(), learn::baseline_names().end(), name) ==
      learn::baseline_names().end()) {
    std::string valid;
    for (const auto& n : model_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw UsageError("unknown model '" + std::string(name) + "'; valid names: " + valid);
  }
  return learn::make_baseline(name, learners);
}

}  // namespace sdnguard::stack
