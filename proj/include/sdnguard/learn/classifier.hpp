#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "sdnguard/archive.hpp"
#include "sdnguard/matrix.hpp"

namespace sdnguard::learn {

/// Common surface of every fitted learner. Fitted models are immutable, so
/// concurrent predict_proba calls are safe.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string_view kind() const = 0;
  virtual std::size_t n_classes() const = 0;
  virtual std::size_t n_features() const = 0;

  /// n x C, rows nonnegative and summing to one.
  virtual Matrix predict_proba(const Matrix& X) const = 0;

  /// Row-wise argmax of predict_proba, ties to the lowest class id.
  std::vector<int> predict(const Matrix& X) const { return argmax_rows(predict_proba(X)); }

  virtual Record to_record() const = 0;

 protected:
  /// Throws DataError when X has the wrong width.
  void check_width(const Matrix& X) const;
};

using ClassifierPtr = std::unique_ptr<Classifier>;

/// Rebuilds any serialized learner (including the stack) from its record.
ClassifierPtr load_classifier(const Record& record);

}  // namespace sdnguard::learn
