#include "sdnguard/learn/tree.hpp"

#include <algorithm>
#include <cmath>

#include "sdnguard/errors.hpp"

namespace sdnguard::learn {

std::size_t Tree::add_node(double node_cover, std::span<const double> node_value) {
  feature.push_back(-1);
  threshold.push_back(0.0);
  left.push_back(-1);
  right.push_back(-1);
  cover.push_back(node_cover);
  value.insert(value.end(), node_value.begin(), node_value.end());
  return feature.size() - 1;
}

void Tree::make_split(std::size_t node, std::int32_t feat, double thr, std::size_t l, std::size_t r) {
  feature[node] = feat;
  threshold[node] = thr;
  left[node] = static_cast<std::int32_t>(l);
  right[node] = static_cast<std::int32_t>(r);
}

std::size_t Tree::depth() const {
  if (n_nodes() == 0) return 0;
  std::vector<std::size_t> d(n_nodes(), 0);
  std::size_t best = 0;
  // Children always have larger indices than their parent.
  for (std::size_t i = 0; i < n_nodes(); ++i) {
    best = std::max(best, d[i]);
    if (!is_leaf(i)) {
      d[static_cast<std::size_t>(left[i])] = d[i] + 1;
      d[static_cast<std::size_t>(right[i])] = d[i] + 1;
    }
  }
  return best;
}

std::size_t Tree::n_leaves() const {
  return static_cast<std::size_t>(std::count(feature.begin(), feature.end(), -1));
}

void Tree::to_preorder() {
  std::vector<std::size_t> order;
  order.reserve(n_nodes());
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    auto node = stack.back();
    stack.pop_back();
    order.push_back(node);
    if (!is_leaf(node)) {
      stack.push_back(static_cast<std::size_t>(right[node]));
      stack.push_back(static_cast<std::size_t>(left[node]));
    }
  }
  std::vector<std::int32_t> remap(n_nodes(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) remap[order[i]] = static_cast<std::int32_t>(i);
  Tree out;
  out.n_outputs = n_outputs;
  for (auto old : order) {
    out.add_node(cover[old], node_value(old));
    auto i = out.n_nodes() - 1;
    out.feature[i] = feature[old];
    out.threshold[i] = threshold[old];
    if (!is_leaf(old)) {
      out.left[i] = remap[static_cast<std::size_t>(left[old])];
      out.right[i] = remap[static_cast<std::size_t>(right[old])];
    }
  }
  *this = std::move(out);
}

Record Tree::to_record() const {
  Tree pre = *this;
  pre.to_preorder();
  Record r("tree");
  r.put_int("n_outputs", static_cast<std::int64_t>(n_outputs));
  r.put("feature", std::vector<std::int64_t>(pre.feature.begin(), pre.feature.end()));
  r.put("threshold", pre.threshold);
  r.put("cover", pre.cover);
  r.put("value", pre.value);
  return r;
}

Tree Tree::from_record(const Record& r) {
  r.expect_type("tree");
  Tree t;
  const auto n_out = r.integer("n_outputs");
  if (n_out < 1) throw DataError("tree record has no outputs");
  t.n_outputs = static_cast<std::size_t>(n_out);
  const auto& feat = r.ints("feature");
  t.threshold = r.reals("threshold");
  t.cover = r.reals("cover");
  t.value = r.reals("value");
  const std::size_t n = feat.size();
  if (n == 0 || t.threshold.size() != n || t.cover.size() != n || t.value.size() != n * t.n_outputs)
    throw DataError("tree record arrays disagree in length");
  t.feature.assign(feat.begin(), feat.end());
  t.left.assign(n, -1);
  t.right.assign(n, -1);
  // Preorder: the left child follows its parent; the right child follows the
  // whole left subtree. Walk with an explicit stack of nodes awaiting a right child.
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const std::size_t parent = i - 1;
      if (!t.is_leaf(parent)) {
        t.left[parent] = static_cast<std::int32_t>(i);
      } else {
        if (pending.empty()) throw DataError("tree record is not a valid preorder");
        t.right[pending.back()] = static_cast<std::int32_t>(i);
        pending.pop_back();
      }
    }
    if (!t.is_leaf(i)) {
      if (!std::isfinite(t.threshold[i])) throw DataError("tree record holds a non-finite threshold");
      pending.push_back(i);
    }
  }
  if (!pending.empty()) throw DataError("tree record is truncated");
  return t;
}

}  // namespace sdnguard::learn
