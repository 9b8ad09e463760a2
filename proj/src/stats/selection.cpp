#include "sdnguard/stats/selection.hpp"

#include <algorithm>
#include <numeric>

#include "sdnguard/errors.hpp"

namespace sdnguard::stats {

Selection select_k_best(std::span<const double> scores, std::span<const std::string> names, std::size_t k) {
  if (names.size() != scores.size()) throw DataError("score and name counts differ");
  if (k > scores.size())
    throw UsageError("cannot select " + std::to_string(k) + " features from " + std::to_string(scores.size()));
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  Selection s;
  s.k = k;
  for (std::size_t i = 0; i < k; ++i) {
    s.indices.push_back(order[i]);
    s.names.push_back(names[order[i]]);
    s.scores.push_back(scores[order[i]]);
  }
  return s;
}

nlohmann::json Selection::to_json() const {
  nlohmann::json feats = nlohmann::json::array();
  for (std::size_t i = 0; i < indices.size(); ++i)
    feats.push_back({{"index", indices[i]}, {"feature", names[i]}, {"score", scores[i]}});
  return {{"k", k}, {"selected", feats}};
}

Selection Selection::from_json(const nlohmann::json& j) {
  Selection s;
  s.k = j.at("k").get<std::size_t>();
  for (const auto& f : j.at("selected")) {
    s.indices.push_back(f.at("index").get<std::size_t>());
    s.names.push_back(f.at("feature").get<std::string>());
    s.scores.push_back(f.at("score").get<double>());
  }
  if (s.indices.size() != s.k) throw DataError("selection document lists a different count than k");
  return s;
}

}  // namespace sdnguard::stats
