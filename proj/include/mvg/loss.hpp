#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mvg/tensor.hpp"

namespace mvg {

/// Summed cross-entropy over a batch, with the per-sample terms kept.
struct LossValue {
  double value = 0.0;
  std::vector<double> per_sample;
};

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kDistributionTolerance = 1e-6;

// 1e-6, widened to a few ulps per term for 32-bit probabilities.
template <typename T>
constexpr double distribution_tolerance() {
  return std::max(kDistributionTolerance, 32.0 * static_cast<double>(std::numeric_limits<T>::epsilon()));
}

namespace detail {

template <typename T>
void require_batch_matrix(const BasicTensor<T>& t, const char* what) {
  if (t.shape().rank() != 2)
    throw DimensionError(std::string(what) + ": expected an N x C matrix, got [" +
                         t.shape().to_string() + "]");
}

}  // namespace detail

/// E = -sum_n sum_i y_i^n log o_i^n. Rows of `probs` must be distributions
/// and rows of `labels` one-hot. Probabilities are floored at 1e-12.
template <typename T>
LossValue cross_entropy(const BasicTensor<T>& probs, const BasicTensor<T>& labels) {
  detail::require_batch_matrix(probs, "cross_entropy");
  detail::require_same_shape(probs.shape(), labels.shape(), "cross_entropy");
  const std::size_t n = probs.shape()[0], c = probs.shape()[1];
  LossValue loss;
  loss.per_sample.reserve(n);
  for (std::size_t row = 0; row < n; ++row) {
    double mass = 0.0;
    std::size_t ones = 0;
    double term = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      const double p = probs.at(row, i);
      const T y = labels.at(row, i);
      if (!(p >= 0.0 && p <= 1.0 + distribution_tolerance<T>()))
        throw ValidationError("cross_entropy: probability out of range in row " + std::to_string(row));
      mass += p;
      if (y == T{1}) {
        ++ones;
        term -= std::log(std::max(p, kProbabilityFloor));
      } else if (y != T{0}) {
        throw ValidationError("cross_entropy: label row " + std::to_string(row) + " is not one-hot");
      }
    }
    if (ones != 1)
      throw ValidationError("cross_entropy: label row " + std::to_string(row) + " is not one-hot");
    if (std::abs(mass - 1.0) > distribution_tolerance<T>())
      throw ValidationError("cross_entropy: probability row " + std::to_string(row) +
                            " sums to " + std::to_string(mass));
    loss.per_sample.push_back(term);
    loss.value += term;
  }
  return loss;
}

/// Gradient of cross_entropy(softmax(z), y) with respect to the logits z.
template <typename T>
BasicTensor<T> softmax_xent_grad(const BasicTensor<T>& probs, const BasicTensor<T>& labels) {
  detail::require_batch_matrix(probs, "softmax_xent_grad");
  return sub(probs, labels);
}

template <typename T>
BasicTensor<T> one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes)
    throw ValidationError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
  BasicTensor<T> y(Shape{1, classes});
  y[label] = T{1};
  return y;
}

}  // namespace mvg
