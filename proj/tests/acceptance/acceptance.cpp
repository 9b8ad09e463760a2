// One line per acceptance criterion: [PASS], [FAIL] or [SKIP]. Exits 1 on
// any failure. Criteria 1-5 need the InSDN flow CSV, located through
// $SDNGUARD_INSDN_CSV or data/InSDN.csv under the source tree.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "sdnguard/archive.hpp"
#include "sdnguard/cli/config.hpp"
#include "sdnguard/cli/pipeline.hpp"
#include "sdnguard/data/split.hpp"
#include "sdnguard/data/synthetic.hpp"
#include "sdnguard/eval/metrics.hpp"
#include "sdnguard/explain/kernel_shap.hpp"
#include "sdnguard/explain/tree_shap.hpp"
#include "sdnguard/learn/forest.hpp"
#include "sdnguard/learn/gbdt.hpp"
#include "sdnguard/learn/mlp.hpp"
#include "sdnguard/parallel.hpp"
#include "sdnguard/rng.hpp"
#include "sdnguard/stack/stack.hpp"
#include "sdnguard/stats/anova.hpp"
#include "sdnguard/stats/mutual_info.hpp"

using namespace sdnguard;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Status::kPass : Status::kFail, std::move(d)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

// ---------------------------------------------------------------- dataset

std::optional<fs::path> insdn_csv() {
  if (const char* env = std::getenv("SDNGUARD_INSDN_CSV"); env && *env) {
    if (fs::exists(env)) return fs::path(env);
    return std::nullopt;
  }
  const fs::path fallback = fs::path(SDNGUARD_SOURCE_DIR) / "data" / "InSDN.csv";
  if (fs::exists(fallback)) return fallback;
  return std::nullopt;
}

const std::vector<std::string> kBaselines{"decision_tree", "extra_trees", "random_forest", "knn", "mlp", "gbdt"};

// Published MI top-15.
const std::vector<std::string> kPublishedTop15{
    "Flow ID",      "Bwd Header Len", "Src IP",      "Dst Port",         "Dst IP",
    "Bwd IAT Mean", "Bwd IAT Tot",    "Bwd IAT Max", "Bwd Pkts/s",       "Flow IAT Mean",
    "Flow Pkts/s",  "Init Bwd Win Byts", "Flow Duration", "Src Port",    "Flow IAT Max"};

struct InsdnRun {
  fs::path root;
  double pipeline_seconds = 0.0;
  std::string error;
};

InsdnRun run_insdn(const fs::path& csv) {
  InsdnRun run;
  run.root = fs::temp_directory_path() / "sdnguard_acceptance_insdn";
  auto doc = read_json(fs::path(SDNGUARD_SOURCE_DIR) / "configs" / "insdn.json");
  doc["dataset"] = csv.string();
  doc["output_dir"] = run.root.string();
  try {
    cli::Pipeline p(cli::RunConfig::from_json(doc), std::cerr);
    const auto t0 = std::chrono::steady_clock::now();
    p.evaluate("stack");
    run.pipeline_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    p.explain("stack");
    for (const auto& m : kBaselines) p.evaluate(m);
    p.benchmark();
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  return run;
}

Outcome c1(const InsdnRun& r) {
  const auto rep = read_json(r.root / "reports/stack/report.json");
  const double acc = rep["weighted"]["accuracy"], kappa = rep["weighted"]["cohen_kappa"];
  return verdict(acc >= 0.995 && kappa >= 0.995 && r.pipeline_seconds <= 1800,
                 "accuracy " + fmt("%.4f", acc) + ", kappa " + fmt("%.4f", kappa) + ", " +
                     fmt("%.0f", r.pipeline_seconds) + " s");
}

Outcome c2(const InsdnRun& r) {
  const auto sel = read_json(r.root / "select/selection.json");
  std::set<std::string> dropped;
  for (const auto& n : sel["anova"]["dropped"]) dropped.insert(n.get<std::string>());
  const bool ok = dropped.count("Tot Fwd Pkts") && dropped.count("Subflow Fwd Pkts");
  return verdict(ok, std::to_string(dropped.size()) + " features dropped");
}

Outcome c3(const InsdnRun& r) {
  const auto sel = read_json(r.root / "select/selection.json");
  std::vector<std::pair<double, std::string>> picked;
  for (const auto& f : sel["selection"]["selected"])
    picked.emplace_back(f["score"].get<double>(), f["feature"].get<std::string>());
  std::stable_sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::size_t overlap = 0;
  for (const auto& [s, n] : picked) overlap += std::count(kPublishedTop15.begin(), kPublishedTop15.end(), n);
  const bool top2 = (!picked.empty() && picked[0].second == "Flow ID") ||
                    (picked.size() > 1 && picked[1].second == "Flow ID");
  return verdict(overlap >= 10 && top2, "overlap " + std::to_string(overlap) + "/15, Flow ID in top 2: " +
                                            (top2 ? "yes" : "no"));
}

Outcome c4(const InsdnRun& r) {
  const auto shap = read_json(r.root / "reports/stack/shap.json");
  std::set<std::string> top4;
  for (std::size_t k = 0; k < 4 && k < shap["summary"]["features"].size(); ++k)
    top4.insert(shap["summary"]["features"][k]["feature"].get<std::string>());
  bool ok = true;
  for (const char* n : {"Flow ID", "Bwd Header Len", "Src Port", "Src IP"}) ok = ok && top4.count(n);
  std::string names;
  for (const auto& n : top4) names += (names.empty() ? "" : ", ") + n;
  return verdict(ok, "top 4: " + names);
}

Outcome c5(const InsdnRun& r) {
  double worst = 1.0;
  std::string worst_name;
  for (const auto& m : kBaselines) {
    const double acc = read_json(r.root / "reports" / m / "report.json")["weighted"]["accuracy"];
    if (acc < worst) worst = acc, worst_name = m;
  }
  const auto bench = read_json(r.root / "reports/benchmark.json");
  std::string fastest;
  double best = HUGE_VAL;
  for (const auto& row : bench["models"]) {
    const auto name = row["model"].get<std::string>();
    if (std::find(kBaselines.begin(), kBaselines.end(), name) == kBaselines.end()) continue;
    if (row["fit_seconds"].get<double>() < best) best = row["fit_seconds"], fastest = name;
  }
  return verdict(worst >= 0.99 && fastest == "knn",
                 "lowest accuracy " + fmt("%.4f", worst) + " (" + worst_name + "), fastest fit " + fastest);
}

// ---------------------------------------------------------------- properties

Outcome c6() {
  Rng rng(6);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + static_cast<std::size_t>(t % 10), C = 2;
    // Random two-output model with pairwise interactions and a nonlinearity.
    std::vector<double> a(d), b(d * d);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = 0.3 * rng.normal();
    const explain::ModelFn f = [=](const Matrix& X) {
      Matrix out(X.rows(), C);
      for (std::size_t i = 0; i < X.rows(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) {
          s += a[j] * X(i, j);
          for (std::size_t k = j + 1; k < d; ++k) s += b[j * d + k] * X(i, j) * X(i, k);
        }
        out(i, 0) = 1 / (1 + std::exp(-s));
        out(i, 1) = 1 - out(i, 0);
      }
      return out;
    };
    Matrix bg(1 + rng.below(6), d);
    for (auto& v : bg.data()) v = rng.normal();
    std::vector<double> x(d);
    for (auto& v : x) v = rng.normal();
    const auto k = explain::kernel_shap(f, x, bg, {.n_coalitions = 1024, .seed = static_cast<std::uint64_t>(t)});
    if (!k.enumerated) return fail("fixture " + std::to_string(t) + " was not enumerated");
    const auto e = explain::exact_shapley(f, x, bg);
    for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(k.values[i] - e[i]));
  }
  return verdict(worst <= 1e-6, "50 fixtures, d = 1..10, max |diff| " + fmt("%.2e", worst));
}

std::size_t grow(learn::Tree& t, Rng& rng, std::size_t d, double cover, int depth) {
  std::vector<double> v(t.n_outputs);
  double s = 0;
  for (auto& e : v) s += (e = rng.uniform() + 0.01);
  for (auto& e : v) e /= s;
  const std::size_t node = t.add_node(cover, v);
  if (depth == 0 || cover < 2) return node;
  const double lc = 1 + static_cast<double>(rng.below(static_cast<std::uint64_t>(cover) - 1));
  const auto feat = static_cast<std::int32_t>(rng.below(d));
  const double thr = rng.uniform(-1.0, 1.0);
  const std::size_t l = grow(t, rng, d, lc, depth - 1);
  const std::size_t r = grow(t, rng, d, cover - lc, depth - 1);
  t.make_split(node, feat, thr, l, r);
  return node;
}

// Path-dependent conditional expectation of the tree given the features in S.
std::vector<double> cond_expectation(const learn::Tree& t, std::size_t node, std::span<const double> x,
                                     std::uint64_t S) {
  if (t.is_leaf(node)) {
    auto v = t.node_value(node);
    return {v.begin(), v.end()};
  }
  const auto f = static_cast<std::size_t>(t.feature[node]);
  const auto l = static_cast<std::size_t>(t.left[node]), r = static_cast<std::size_t>(t.right[node]);
  if (S >> f & 1) return cond_expectation(t, x[f] <= t.threshold[node] ? l : r, x, S);
  auto a = cond_expectation(t, l, x, S), b = cond_expectation(t, r, x, S);
  for (std::size_t c = 0; c < a.size(); ++c) a[c] = (a[c] * t.cover[l] + b[c] * t.cover[r]) / t.cover[node];
  return a;
}

Outcome c7() {
  Rng rng(7);
  double worst_la = 0.0, worst_exact = 0.0;
  std::size_t small = 0;
  for (int t = 0; t < 100; ++t) {
    const bool tiny = t % 2 == 0;
    const std::size_t d = tiny ? 1 + rng.below(3) : 2 + rng.below(8);
    learn::Tree tree;
    tree.n_outputs = 1 + rng.below(3);
    grow(tree, rng, d, 20 + static_cast<double>(rng.below(300)), tiny ? 1 + static_cast<int>(rng.below(2))
                                                                        : 1 + static_cast<int>(rng.below(8)));
    const learn::DecisionTreeModel model(tree, d, {}, 0);
    Matrix X(8, d);
    for (auto& v : X.data()) v = rng.uniform(-1.2, 1.2);
    const auto a = explain::tree_shap(model, X);
    worst_la = std::max(worst_la, a.max_local_accuracy_error());
    if (!tiny) continue;
    ++small;
    const std::size_t C = tree.n_outputs;
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const auto x = X.row(i);
      const auto phi = explain::exact_shapley_from_value(d, C, [&](std::uint64_t S) {
        return cond_expectation(tree, 0, x, S);
      });
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t c = 0; c < C; ++c) worst_exact = std::max(worst_exact, std::abs(a.at(i, j, c) - phi[j * C + c]));
    }
  }
  return verdict(worst_la <= 1e-9 && worst_exact <= 1e-9,
                 "100 trees, local accuracy " + fmt("%.2e", worst_la) + "; " + std::to_string(small) +
                     " depth<=2 trees vs exact " + fmt("%.2e", worst_exact));
}

Outcome c8() {
  Rng rng(8);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 2 + rng.below(4), C = 2 + rng.below(3), n = 6 + rng.below(10);
    const std::vector<std::size_t> sizes{d, 3 + rng.below(5), 2 + rng.below(4), C};
    auto params = learn::init_mlp(sizes, 1000 + static_cast<std::uint64_t>(t));
    for (auto& b : params.biases)
      for (auto& v : b) v = 0.1 * rng.normal();
    Matrix X(n, d);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(C));
      for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.normal();
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    auto grad = learn::MlpParameters::zeros_like(params);
    learn::mlp_loss(params, X, y, rows, 1e-2, &grad);
    auto check = [&](std::vector<double>& p, const std::vector<double>& g) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double orig = p[k], h = 1e-6;
        p[k] = orig + h;
        const double up = learn::mlp_loss(params, X, y, rows, 1e-2, nullptr);
        p[k] = orig - h;
        const double down = learn::mlp_loss(params, X, y, rows, 1e-2, nullptr);
        p[k] = orig;
        const double numeric = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(numeric - g[k]) / std::max(std::abs(numeric) + std::abs(g[k]), 1e-7));
      }
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      check(params.weights[l], grad.weights[l]);
      check(params.biases[l], grad.biases[l]);
    }
  }
  return verdict(worst < 1e-4, "20 networks, max relative error " + fmt("%.2e", worst));
}

double split_score(const Matrix& X, const std::vector<int>& y, std::size_t C, std::size_t f, double t) {
  std::vector<double> l(C, 0.0), r(C, 0.0);
  double nl = 0, nr = 0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto& side = X(i, f) <= t ? l : r;
    side[static_cast<std::size_t>(y[i])] += 1;
    (X(i, f) <= t ? nl : nr) += 1;
  }
  double s = 0;
  for (std::size_t c = 0; c < C; ++c) s += l[c] * l[c] / nl + r[c] * r[c] / nr;
  return s;
}

Outcome c9() {
  Rng rng(9);
  std::size_t mismatches = 0, exact_checked = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(49), d = 1 + rng.below(3), C = 2 + rng.below(3);
    Matrix X(n, d);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(C));
      for (std::size_t j = 0; j < d; ++j) X(i, j) = t % 2 ? rng.normal() : static_cast<double>(rng.below(5));
    }
    struct Cand {
      std::size_t f;
      double t, s;
    };
    std::vector<Cand> cands;
    for (std::size_t f = 0; f < d; ++f) {
      auto v = X.column(f);
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      for (std::size_t k = 0; k + 1 < v.size(); ++k) {
        const double thr = (v[k] + v[k + 1]) / 2;
        cands.push_back({f, thr, split_score(X, y, C, f, thr)});
      }
    }
    const auto model = learn::fit_decision_tree(X, y, C, {}, 1);
    const auto& tree = model.tree();
    const bool pure = std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; });
    if (cands.empty() || pure) {
      mismatches += !tree.is_leaf(0);
      continue;
    }
    if (tree.is_leaf(0)) {
      ++mismatches;
      continue;
    }
    double best = -1;
    for (const auto& c : cands) best = std::max(best, c.s);
    const auto f = static_cast<std::size_t>(tree.feature[0]);
    if (std::abs(split_score(X, y, C, f, tree.threshold[0]) - best) > 1e-9 * best) ++mismatches;
    std::vector<Cand> top;
    for (const auto& c : cands)
      if (c.s > best - 1e-9) top.push_back(c);
    if (top.size() == 1) {
      ++exact_checked;
      mismatches += f != top[0].f || std::abs(tree.threshold[0] - top[0].t) > 1e-12 * std::max(1.0, std::abs(top[0].t));
    }
  }
  return verdict(mismatches == 0, "200 datasets, " + std::to_string(mismatches) + " mismatches (" +
                                      std::to_string(exact_checked) + " unique optima matched exactly)");
}

Outcome c10() {
  std::size_t increases = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto ds = data::generate_synthetic({2 + s % 4, 3 + s % 3, 60, 1.0 + static_cast<double>(s % 5), s});
    learn::GbdtParams p;
    p.n_rounds = 25;
    p.max_leaves = 4 + s % 12;
    p.learning_rate = 0.05 + 0.05 * static_cast<double>(s % 6);
    const auto m = learn::fit_gbdt(ds.X, ds.y, ds.n_classes(), p, s);
    const auto& loss = m.train_loss();
    for (std::size_t r = 1; r < loss.size(); ++r) increases += loss[r] > loss[r - 1] + 1e-12;
  }
  return verdict(increases == 0, "20 fixtures, " + std::to_string(increases) + " increasing rounds");
}

Outcome c11() {
  // p_o = 0.7; p_e = (25*30 + 25*20) / 50^2 = 0.5; kappa = 0.2 / 0.5 = 0.4.
  const eval::ConfusionMatrix cm{2, {20, 5, 10, 15}};
  const double acc = eval::metrics(cm).accuracy, kappa = eval::cohen_kappa(cm);
  const double perfect = eval::cohen_kappa({3, {5, 0, 0, 0, 7, 0, 0, 0, 9}});
  const double chance = eval::cohen_kappa({2, {16, 24, 24, 36}});
  const bool ok = std::abs(acc - 0.7) < 1e-15 && std::abs(kappa - 0.4) < 1e-15 && perfect == 1.0 &&
                  std::abs(chance) < 1e-12;
  return verdict(ok, "accuracy " + fmt("%.17g", acc) + ", kappa " + fmt("%.17g", kappa) +
                         " (hand value 0.4), perfect " + fmt("%g", perfect) + ", chance " + fmt("%.1e", chance));
}

Outcome c12() {
  Rng rng(12);
  const std::size_t n = 2000;
  Matrix X(n, 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(rng.below(2));
    X(i, 0) = y[i] + rng.uniform();
    X(i, 1) = rng.normal();
  }
  const auto mi = stats::mutual_info(X, y, 2, {3, 12, 1e-10});
  const Matrix A(4, 1, std::vector<double>{0, 2, 4, 6});
  const auto an = stats::anova_f(A, std::vector<int>{0, 0, 1, 1}, 2);
  const double f = an.features[0].f, p = an.features[0].p;
  const bool ok = mi.mi[1] <= 0.02 && std::abs(mi.mi[0] - std::numbers::ln2) <= 0.05 && std::abs(f - 8) < 1e-12 &&
                  std::abs(p - 0.1056) < 1e-3;
  return verdict(ok, "MI independent " + fmt("%.4f", mi.mi[1]) + ", deterministic " + fmt("%.4f", mi.mi[0]) +
                         "; ANOVA F " + fmt("%.6g", f) + ", p " + fmt("%.4f", p));
}

Outcome c13() {
  Rng rng(13);
  std::size_t bad = 0;
  for (int t = 0; t < 20; ++t) {
    data::Dataset ds;
    const std::size_t C = 2 + rng.below(5);
    for (std::size_t c = 0; c < C; ++c) ds.class_names.push_back("c" + std::to_string(c));
    std::vector<std::size_t> counts(C);
    for (auto& k : counts) k = 1 + rng.below(300);
    const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    ds.X = Matrix(n, 1);
    ds.feature_names = {"x"};
    for (std::size_t c = 0, r = 0; c < C; ++c)
      for (std::size_t k = 0; k < counts[c]; ++k, ++r) {
        ds.X(r, 0) = static_cast<double>(r);
        ds.y.push_back(static_cast<int>(c));
      }
    const std::size_t target = 1 + rng.below(200);
    const auto res = data::hybrid_resample(ds, {target, static_cast<std::uint64_t>(t)});
    for (auto k : data::class_counts(res.y, C)) bad += k != target;
    const double frac = 0.1 + 0.05 * static_cast<double>(t % 8);
    const auto split = data::stratified_split(ds, {frac, true, static_cast<std::uint64_t>(t)});
    const auto tc = data::class_counts(split.test.y, C);
    for (std::size_t c = 0; c < C; ++c)
      if (counts[c] >= 2)
        bad += std::abs(static_cast<double>(tc[c]) / static_cast<double>(counts[c]) - frac) >
               1.0 / static_cast<double>(counts[c]);
  }
  return verdict(bad == 0, "20 label layouts, " + std::to_string(bad) + " violations");
}

// ---------------------------------------------------------------- determinism

json strip_timestamps(json j) {
  if (j.is_object()) {
    j.erase("generated_at");
    for (auto& [k, v] : j.items()) v = strip_timestamps(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timestamps(v);
  }
  return j;
}

// Every artifact under root except the benchmark timing, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel == "reports/benchmark.json") continue;
    std::string body = bytes::read_file(e.path());
    if (e.path().extension() == ".json") {
      auto j = strip_timestamps(json::parse(body));
      // The echoed config names the output directory, which differs by run.
      if (j.contains("config")) j["config"].erase("output_dir");
      body = j.dump();
    }
    out[rel] = std::move(body);
  }
  return out;
}

std::map<std::string, std::string> full_run(const fs::path& root, int threads) {
  fs::remove_all(root);
  auto doc = read_json(fs::path(SDNGUARD_SOURCE_DIR) / "configs" / "synthetic.json");
  doc["output_dir"] = root.string();
  set_num_threads(threads);
  std::ostringstream log;
  cli::Pipeline p(cli::RunConfig::from_json(doc), log);
  for (const auto& m : stack::model_names()) {
    p.evaluate(m);
    p.crossval(m);
    p.explain(m);
  }
  p.benchmark();
  auto snap = snapshot(root);
  fs::remove_all(root);
  return snap;
}

Outcome c14() {
  const auto base = fs::temp_directory_path() / "sdnguard_acceptance_det";
  const int saved = num_threads();
  const auto a = full_run(base / "a", 1);
  const auto b = full_run(base / "b", 1);
  const auto c = full_run(base / "c", 4);
  set_num_threads(saved);
  fs::remove_all(base);
  std::vector<std::string> diffs;
  for (const auto* other : {&b, &c})
    for (const auto& [k, v] : a) {
      auto it = other->find(k);
      if (it == other->end() || it->second != v) diffs.push_back(k);
    }
  if (a.size() != b.size() || a.size() != c.size()) diffs.push_back("<file set>");
  std::string detail = std::to_string(a.size()) + " artifacts compared across runs at 1, 1 and 4 threads";
  if (!diffs.empty()) detail += "; first difference: " + diffs.front();
  return verdict(diffs.empty(), detail);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  bool any_fail = false;
  auto report = [&](int id, const char* name, const Outcome& o) {
    static const char* tags[] = {"[PASS]", "[FAIL]", "[SKIP]"};
    std::printf("%s %2d %s: %s\n", tags[static_cast<int>(o.status)], id, name, o.detail.c_str());
    std::fflush(stdout);
    any_fail = any_fail || o.status == Status::kFail;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return fail(std::string("exception: ") + e.what());
    }
  };

  const std::vector<std::pair<const char*, std::function<Outcome(const InsdnRun&)>>> dataset_criteria{
      {"full pipeline accuracy and kappa", c1},
      {"ANOVA flags the two forward-packet counts", c2},
      {"MI top-15 overlap and Flow ID in top 2", c3},
      {"SHAP top-4 features", c4},
      {"baseline accuracy and fastest fit", c5}};
  if (const auto csv = insdn_csv()) {
    const auto run = run_insdn(*csv);
    for (std::size_t i = 0; i < dataset_criteria.size(); ++i) {
      const auto& [name, f] = dataset_criteria[i];
      report(static_cast<int>(i + 1), name,
             run.error.empty() ? guarded([&, &f = f] { return f(run); }) : fail("pipeline failed: " + run.error));
    }
    fs::remove_all(run.root);
  } else {
    for (std::size_t i = 0; i < dataset_criteria.size(); ++i)
      report(static_cast<int>(i + 1), dataset_criteria[i].first,
             {Status::kSkip, "InSDN CSV not found (set SDNGUARD_INSDN_CSV)"});
  }

  const std::vector<Criterion> criteria{
      {6, "kernel SHAP enumeration equals exact Shapley", c6},
      {7, "TreeSHAP local accuracy and exactness", c7},
      {8, "MLP gradients match finite differences", c8},
      {9, "CART root split equals exhaustive search", c9},
      {10, "GBDT training loss non-increasing", c10},
      {11, "metrics oracle", c11},
      {12, "MI and ANOVA oracles", c12},
      {13, "resampling and split proportions", c13},
      {14, "pipeline determinism across runs and threads", c14}};
  for (const auto& c : criteria) report(c.id, c.name, guarded(c.run));
  return any_fail ? 1 : 0;
}
