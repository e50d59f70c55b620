#pragma once

#include <cstddef>
#include <span>

namespace gmvp {

// Area under the ROC curve via the Mann-Whitney statistic; tied scores get half credit.
// Throws DomainError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

double rmse(std::span<const double> predictions, std::span<const double> targets);

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets);

}  // namespace gmvp
