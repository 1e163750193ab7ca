#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "mvg/tensor.hpp"

namespace mvg {

inline constexpr std::size_t kViewCount = 4;

// Window lengths of the four views, in seconds, in view order.
inline constexpr std::array<double, kViewCount> kViewDurations{0.5, 1.0, 2.0, 4.0};

/// One glitch seen through four time windows. Views are 1×m×k grayscale
/// spectrograms with pixels in [0, 1], ordered 0.5 s, 1 s, 2 s, 4 s.
struct MultiViewSample {
  std::array<BasicTensor<float>, kViewCount> views;
  std::size_t label = 0;

  friend bool operator==(const MultiViewSample&, const MultiViewSample&) = default;
};

inline void validate_sample(const MultiViewSample& s) {
  const Shape& first = s.views[0].shape();
  if (first.rank() != 3 || first[0] != 1)
    throw DimensionError("sample views must be 1xMxK, got [" + first.to_string() + "]");
  for (std::size_t v = 1; v < kViewCount; ++v)
    if (!(s.views[v].shape() == first))
      throw DimensionError("view " + std::to_string(v) + " has shape [" +
                           s.views[v].shape().to_string() + "], expected [" + first.to_string() + "]");
  for (const auto& view : s.views)
    for (float p : view.data())
      if (!(p >= 0.0f && p <= 1.0f)) throw ValidationError("sample pixel outside [0, 1]");
}

/// Places the four m×k views on a 2m×2k canvas:
///   [0.5 s | 1 s]
///   [2 s   | 4 s]
template <typename T>
BasicTensor<T> tile_views(const MultiViewSample& s) {
  const Shape& shape = s.views[0].shape();
  for (std::size_t v = 1; v < kViewCount; ++v)
    if (!(s.views[v].shape() == shape))
      throw DimensionError("tile_views: view " + std::to_string(v) + " has shape [" +
                           s.views[v].shape().to_string() + "], expected [" + shape.to_string() + "]");
  if (shape.rank() != 3 || shape[0] != 1)
    throw DimensionError("tile_views: views must be 1xMxK, got [" + shape.to_string() + "]");
  const std::size_t m = shape[1], k = shape[2];
  BasicTensor<T> out(Shape{1, 2 * m, 2 * k});
  for (std::size_t v = 0; v < kViewCount; ++v) {
    const std::size_t row0 = (v / 2) * m, col0 = (v % 2) * k;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j)
        out.at(0, row0 + i, col0 + j) = static_cast<T>(s.views[v].at(0, i, j));
  }
  return out;
}

/// Inverse of tile_views.
template <typename T>
std::array<BasicTensor<T>, kViewCount> crop_quadrants(const BasicTensor<T>& tiled) {
  const Shape& shape = tiled.shape();
  if (shape.rank() != 3 || shape[0] != 1 || shape[1] % 2 || shape[2] % 2)
    throw DimensionError("crop_quadrants: expected 1x2Mx2K, got [" + shape.to_string() + "]");
  const std::size_t m = shape[1] / 2, k = shape[2] / 2;
  std::array<BasicTensor<T>, kViewCount> views;
  for (std::size_t v = 0; v < kViewCount; ++v) {
    BasicTensor<T> view(Shape{1, m, k});
    const std::size_t row0 = (v / 2) * m, col0 = (v % 2) * k;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) view.at(0, i, j) = tiled.at(0, row0 + i, col0 + j);
    views[v] = std::move(view);
  }
  return views;
}

}  // namespace mvg
