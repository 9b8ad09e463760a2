#include "sdnguard/learn/classifier.hpp"

#include "sdnguard/errors.hpp"
#include "sdnguard/learn/forest.hpp"
#include "sdnguard/learn/gbdt.hpp"
#include "sdnguard/learn/knn.hpp"
#include "sdnguard/learn/mlp.hpp"
#include "sdnguard/stack/stack.hpp"

namespace sdnguard::learn {

void Classifier::check_width(const Matrix& X) const {
  if (X.cols() != n_features())
    throw DataError(std::string(kind()) + " expects " + std::to_string(n_features()) + " features, got " +
                    std::to_string(X.cols()));
}

ClassifierPtr load_classifier(const Record& r) {
  const auto& t = r.type();
  if (t == "decision_tree") return std::make_unique<DecisionTreeModel>(DecisionTreeModel::from_record(r));
  if (t == "extra_trees" || t == "random_forest") return std::make_unique<ForestModel>(ForestModel::from_record(r));
  if (t == "knn") return std::make_unique<KnnModel>(KnnModel::from_record(r));
  if (t == "mlp") return std::make_unique<MlpModel>(MlpModel::from_record(r));
  if (t == "gbdt") return std::make_unique<GbdtModel>(GbdtModel::from_record(r));
  if (t == "stack") return std::make_unique<stack::StackModel>(stack::StackModel::from_record(r));
  throw DataError("unknown model type '" + t + "'");
}

}  // namespace sdnguard::learn
