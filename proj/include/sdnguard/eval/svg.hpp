#pragma once

#include <string>
#include <vector>

#include "sdnguard/eval/curves.hpp"
#include "sdnguard/eval/metrics.hpp"

namespace sdnguard::eval {

/// Self-contained SVG documents (no external fonts, scripts or images).
std::string confusion_svg(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);
std::string curves_svg(const std::vector<Curve>& curves, const std::vector<std::string>& class_names,
                       const std::string& title);

}  // namespace sdnguard::eval
