#include "gmvp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gmvp/errors.hpp"

namespace gmvp {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("roc_auc: scores and labels differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, then apply the rank-sum formula.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[idx[t]] != 0) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = idx.size() - positives;
  if (positives == 0 || negatives == 0) throw DomainError("roc_auc: both classes must be present");
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double rmse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw ShapeError("rmse: inputs differ in length");
  if (predictions.empty()) throw DomainError("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets) {
  if (predictions.size() != targets.size()) throw ShapeError("accuracy: inputs differ in length");
  if (predictions.empty()) throw DomainError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == targets[i];
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace gmvp
