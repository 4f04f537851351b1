#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "salient/dataset.hpp"

namespace salient {

// Flat binary tree; node 0 is the root. Internal nodes route a row left iff
// its feature value is below the threshold, and masked values follow the
// node's learned default branch.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool default_left = true;
  double value = 0.0;  // leaf output
  double gain = 0.0;   // split gain, for importances

  bool is_leaf() const { return feature < 0; }
  bool goes_left(RowView x) const {
    const auto f = static_cast<std::size_t>(feature);
    return x.is_masked(f) ? default_left : x[f] < threshold;
  }

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  static Tree leaf(double value) { return Tree{{TreeNode{.value = value}}}; }

  int leaf_index(RowView x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = n.goes_left(x) ? n.left : n.right;
    }
    return i;
  }
  double evaluate(RowView x) const { return nodes[static_cast<std::size_t>(leaf_index(x))].value; }

  int depth() const;
  bool uses_feature(std::size_t feature) const;

  bool operator==(const Tree&) const = default;
};

// Nested-node JSON: {"split":f,"threshold":t,"default_left":b,"gain":g,
// "left":{...},"right":{...}} or {"leaf":v}.
void to_json(nlohmann::json& j, const Tree& t);
void from_json(const nlohmann::json& j, Tree& t);

}  // namespace salient
