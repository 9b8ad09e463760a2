#pragma once

#include "sdnguard/explain/attribution.hpp"
#include "sdnguard/learn/classifier.hpp"
#include "sdnguard/learn/tree.hpp"

namespace sdnguard::explain {

/// Cover-weighted mean of the leaf values, i.e. the path-dependent
/// expectation of the tree output.
std::vector<double> tree_expected_value(const learn::Tree& tree);

/// Adds the path-dependent TreeSHAP values of one tree for one sample to
/// phi (d x n_outputs, row-major), each scaled by `scale`.
void tree_shap_row(const learn::Tree& tree, std::span<const double> x, double scale, std::span<double> phi);

/// Single tree and forests explain probabilities (forests as the member
/// mean); GBDT explains raw margins (sum over rounds plus base score).
/// Throws UsageError for other models and DataError when the trees lack
/// consistent cover counts. Samples are processed in parallel.
ShapAttribution tree_shap(const learn::Classifier& model, const Matrix& X);
ShapAttribution tree_shap_serial(const learn::Classifier& model, const Matrix& X);

}  // namespace sdnguard::explain
