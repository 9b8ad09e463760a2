#include "sdnguard/explain/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sdnguard/data/csv.hpp"
#include "sdnguard/errors.hpp"

namespace sdnguard::explain {

double ShapAttribution::max_local_accuracy_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i)
    for (std::size_t c = 0; c < n_outputs; ++c) {
      double s = base_values[c];
      for (std::size_t j = 0; j < n_features; ++j) s += at(i, j, c);
      const double err = std::abs(s - outputs(i, c));
      if (!(err <= worst)) worst = err;  // also propagates NaN
    }
  return worst;
}

void ShapAttribution::check_local_accuracy(double tol) const {
  const double err = max_local_accuracy_error();
  if (!(err <= tol))
    throw NumericalError("attributions violate local accuracy (error " + std::to_string(err) + ", tolerance " +
                         std::to_string(tol) + ")");
}

ShapSummary summarize(const ShapAttribution& attr, const std::vector<std::string>& feature_names,
                      const std::vector<std::string>& class_names) {
  if (feature_names.size() != attr.n_features) throw UsageError("feature name count does not match attributions");
  if (class_names.size() != attr.n_outputs) throw UsageError("class name count does not match attributions");
  ShapSummary s;
  s.feature_names = feature_names;
  s.class_names = class_names;
  s.mean_abs = Matrix(attr.n_features, attr.n_outputs);
  s.global.assign(attr.n_features, 0.0);
  const double n = static_cast<double>(std::max<std::size_t>(attr.n_samples, 1));
  for (std::size_t j = 0; j < attr.n_features; ++j)
    for (std::size_t c = 0; c < attr.n_outputs; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < attr.n_samples; ++i) acc += std::abs(attr.at(i, j, c));
      s.mean_abs(j, c) = acc / n;
      s.global[j] += s.mean_abs(j, c);
    }
  s.ranking.resize(attr.n_features);
  std::iota(s.ranking.begin(), s.ranking.end(), std::size_t{0});
  std::stable_sort(s.ranking.begin(), s.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return s.global[a] > s.global[b]; });
  return s;
}

nlohmann::json ShapSummary::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t rank = 0; rank < ranking.size(); ++rank) {
    const std::size_t j = ranking[rank];
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < class_names.size(); ++c) per_class[class_names[c]] = mean_abs(j, c);
    features.push_back({{"rank", rank + 1},
                        {"feature", feature_names[j]},
                        {"global_mean_abs", global[j]},
                        {"per_class_mean_abs", std::move(per_class)}});
  }
  return {{"classes", class_names}, {"features", std::move(features)}};
}

std::string ShapSummary::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "feature,class,mean_abs_value\n";
  for (std::size_t j : ranking)
    for (std::size_t c = 0; c < class_names.size(); ++c)
      out << data::csv_escape(feature_names[j]) << ',' << data::csv_escape(class_names[c]) << ',' << mean_abs(j, c)
          << '\n';
  return out.str();
}

}  // namespace sdnguard::explain
