#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdnguard/archive.hpp"

namespace sdnguard::learn {

/// Flat binary tree. Internal nodes send x[feature] <= threshold left. Every
/// node carries `n_outputs` values (class distribution for classifiers, one
/// raw score for boosting trees) and the training cover that reached it.
struct Tree {
  std::size_t n_outputs = 1;
  std::vector<std::int32_t> feature;  // -1 marks a leaf
  std::vector<double> threshold;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> cover;
  std::vector<double> value;  // n_nodes * n_outputs

  std::size_t n_nodes() const { return feature.size(); }
  bool is_leaf(std::size_t node) const { return feature[node] < 0; }

  std::span<const double> node_value(std::size_t node) const {
    return {value.data() + node * n_outputs, n_outputs};
  }

  /// Appends a node and returns its index; children are wired later.
  std::size_t add_node(double node_cover, std::span<const double> node_value);
  void make_split(std::size_t node, std::int32_t feat, double thr, std::size_t l, std::size_t r);

  std::size_t leaf_of(std::span<const double> x) const {
    std::size_t node = 0;
    while (feature[node] >= 0)
      node = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node]
                                                                                                      : right[node]);
    return node;
  }

  std::span<const double> predict(std::span<const double> x) const { return node_value(leaf_of(x)); }

  std::size_t depth() const;
  std::size_t n_leaves() const;

  /// Renumbers nodes in preorder (node, left subtree, right subtree).
  void to_preorder();

  /// Stored in preorder; child links are implied by the ordering.
  Record to_record() const;
  static Tree from_record(const Record& r);
};

}  // namespace sdnguard::learn
