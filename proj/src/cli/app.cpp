#include "sdnguard/cli/app.hpp"

#include <CLI11.hpp>

#include <exception>
#include <ostream>

#include "sdnguard/archive.hpp"
#include "sdnguard/cli/pipeline.hpp"
#include "sdnguard/errors.hpp"
#include "sdnguard/parallel.hpp"

namespace sdnguard::cli {

namespace {

struct Options {
  std::string config;
  std::string output;
  std::string dataset;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool exclude_identifiers = false;
  bool fit_on_all = false;
  bool no_refit = false;
  std::vector<std::string> overrides;
  std::vector<std::string> models{"stack"};
};

RunConfig resolve(const Options& o) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes::read_file(o.config));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config " + o.config + " is not valid JSON: " + e.what());
  } catch (const DataError& e) {
    throw UsageError(std::string("cannot read config: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("config root must be a JSON object");
  for (const auto& a : o.overrides) apply_override(doc, a);
  if (!o.output.empty()) doc["output_dir"] = o.output;
  if (!o.dataset.empty()) {
    doc["dataset"] = o.dataset;
    doc.erase("synthetic");
  }
  if (o.seed) doc["seed"] = *o.seed;
  if (o.exclude_identifiers) doc["prepare"]["exclude_identifiers"] = true;
  if (o.fit_on_all) doc["prepare"]["fit_on_all"] = true;
  if (o.no_refit) doc["stack"]["refit_bases"] = false;
  return RunConfig::from_json(doc);
}

std::vector<std::string> expand_models(const std::vector<std::string>& models) {
  std::vector<std::string> out;
  for (const auto& m : models) {
    if (m == "all") {
      for (const auto& n : stack::model_names()) out.push_back(n);
    } else {
      stack::make_learner(m, {}, {});  // rejects unknown names up front
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SDN flow intrusion detection: preprocessing, feature selection, stacking, evaluation, SHAP",
               args.empty() ? "sdnguard" : args[0]};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options o;
  app.add_option("-c,--config", o.config, "Run configuration (JSON)")->required();
  app.add_option("-o,--output", o.output, "Output directory (overrides output_dir)");
  app.add_option("--dataset", o.dataset, "Flow CSV (overrides dataset and synthetic)");
  app.add_option("--seed", o.seed, "Master seed (overrides seed)");
  app.add_option("-j,--threads", o.threads, "Worker threads; 0 uses all cores")->check(CLI::NonNegativeNumber);
  app.add_flag("--exclude-identifiers", o.exclude_identifiers, "Drop Flow ID, Src IP and Dst IP before encoding");
  app.add_flag("--fit-on-all", o.fit_on_all, "Fit the scaler on train and test together");
  app.add_flag("--no-refit", o.no_refit, "Serve the stack with bases fit on the inner training part only");
  app.add_option("--set", o.overrides, "Config override, dotted.key=json-value (repeatable)");

  const std::string model_help = "Model name, or 'all' (repeatable; default stack)";
  auto* prepare = app.add_subcommand("prepare", "Encode, split and standardize the flow table");
  auto* select = app.add_subcommand("select", "ANOVA screening, mutual-information top-k and rebalancing");
  auto* train = app.add_subcommand("train", "Fit and serialize models");
  auto* evaluate = app.add_subcommand("evaluate", "Metrics, curves and plots on the test split");
  auto* crossval = app.add_subcommand("crossval", "Stratified k-fold cross-validation");
  auto* explain = app.add_subcommand("explain", "SHAP attributions and the global feature ranking");
  auto* bench = app.add_subcommand("benchmark", "Fit-time table for every model");
  for (auto* sub : {train, evaluate, crossval, explain}) sub->add_option("-m,--model", o.models, model_help);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  struct ThreadCap {
    explicit ThreadCap(int n) { set_num_threads(n); }
    ~ThreadCap() { set_num_threads(0); }
  } cap(o.threads);
  try {
    Pipeline p(resolve(o), err);
    if (prepare->parsed()) p.prepare();
    if (select->parsed()) p.select();
    if (bench->parsed()) p.benchmark();
    const auto models = expand_models(o.models);
    for (const auto& m : models) {
      if (train->parsed()) p.train(m);
      if (evaluate->parsed()) p.evaluate(m);
      if (crossval->parsed()) p.crossval(m);
      if (explain->parsed()) p.explain(m);
    }
    return kOk;
  } catch (const UsageError& e) {
    err << "sdnguard: usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "sdnguard: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    err << "sdnguard: data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "sdnguard: data error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace sdnguard::cli
