#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdnguard::stats {

struct Selection {
  std::vector<std::size_t> indices;  // by descending score, ties to lower index
  std::vector<std::string> names;
  std::vector<double> scores;        // aligned with indices
  std::size_t k = 0;

  nlohmann::json to_json() const;
  static Selection from_json(const nlohmann::json& j);
};

Selection select_k_best(std::span<const double> scores, std::span<const std::string> names, std::size_t k);

}  // namespace sdnguard::stats
