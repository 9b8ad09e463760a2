#include "sdnguard/eval/metrics.hpp"

#include "sdnguard/errors.hpp"

namespace sdnguard::eval {

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < n_classes; ++t) {
    std::vector<std::size_t> row(counts.begin() + static_cast<std::ptrdiff_t>(t * n_classes),
                                 counts.begin() + static_cast<std::ptrdiff_t>((t + 1) * n_classes));
    rows.push_back(row);
  }
  return rows;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes) {
  if (y_true.size() != y_pred.size()) throw DataError("truth and prediction lengths differ");
  ConfusionMatrix cm{n_classes, std::vector<std::size_t>(n_classes * n_classes, 0)};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_pred[i] < 0 || static_cast<std::size_t>(y_true[i]) >= n_classes ||
        static_cast<std::size_t>(y_pred[i]) >= n_classes)
      throw DataError("class id outside [0, C) in confusion matrix input");
    ++cm.counts[static_cast<std::size_t>(y_true[i]) * n_classes + static_cast<std::size_t>(y_pred[i])];
  }
  return cm;
}

double cohen_kappa(const ConfusionMatrix& cm) {
  const auto n = static_cast<double>(cm.total());
  if (n == 0.0) throw DataError("kappa of an empty confusion matrix");
  const std::size_t C = cm.n_classes;
  double agree = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    agree += static_cast<double>(cm.at(c, c));
    double row = 0.0, col = 0.0;
    for (std::size_t k = 0; k < C; ++k) {
      row += static_cast<double>(cm.at(c, k));
      col += static_cast<double>(cm.at(k, c));
    }
    expected += row * col;
  }
  const double p_o = agree / n;
  const double p_e = expected / (n * n);
  if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

MetricsReport metrics(const ConfusionMatrix& cm, Averaging averaging) {
  const std::size_t C = cm.n_classes;
  const std::size_t n = cm.total();
  if (n == 0) throw DataError("metrics of an empty confusion matrix");
  MetricsReport r;
  r.averaging = averaging;
  r.per_class.resize(C);
  std::size_t correct = 0;
  std::size_t averaged = 0;
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t tp = cm.at(c, c), row = 0, col = 0;
    for (std::size_t k = 0; k < C; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    correct += tp;
    auto& m = r.per_class[c];
    m.support = row;
    m.precision_undefined = col == 0;
    m.recall_undefined = row == 0;
    m.precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    m.recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    if (averaging == Averaging::kWeighted) {
      const double w = static_cast<double>(row) / static_cast<double>(n);
      r.precision += w * m.precision;
      r.recall += w * m.recall;
      r.f1 += w * m.f1;
    } else if (row > 0 || col > 0) {
      r.precision += m.precision;
      r.recall += m.recall;
      r.f1 += m.f1;
      ++averaged;
    }
  }
  if (averaging == Averaging::kMacro && averaged > 0) {
    r.precision /= static_cast<double>(averaged);
    r.recall /= static_cast<double>(averaged);
    r.f1 /= static_cast<double>(averaged);
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  r.kappa = cohen_kappa(cm);
  return r;
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw DataError("truth and prediction lengths differ");
  if (y_true.empty()) throw DataError("accuracy of zero predictions");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) ok += y_true[i] == y_pred[i];
  return static_cast<double>(ok) / static_cast<double>(y_true.size());
}

nlohmann::json MetricsReport::to_json(const std::vector<std::string>& class_names) const {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& m = per_class[c];
    classes.push_back({{"class", c < class_names.size() ? class_names[c] : std::to_string(c)},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support},
                       {"precision_undefined", m.precision_undefined},
                       {"recall_undefined", m.recall_undefined}});
  }
  return {{"accuracy", accuracy},
          {"averaging", averaging == Averaging::kWeighted ? "weighted" : "macro"},
          {"precision", precision},
          {"recall", recall},
          {"f1", f1},
          {"cohen_kappa", kappa},
          {"per_class", classes}};
}

}  // namespace sdnguard::eval
