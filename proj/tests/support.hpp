#pragma once

// Independent reference implementations used as test oracles. None of these
// share code with the library's computational paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mvg/model.hpp"
#include "mvg/sample.hpp"
#include "mvg/tensor.hpp"

namespace oracle {

// C[m×n] = A[m×k] · B[k×n], row-major, plain triple loop.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                  std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  return c;
}

// Valid cross-correlation, stride 1. x: C×H×W, w: F×C×K×K, b: F.
inline std::vector<double> conv(const std::vector<double>& x, std::size_t channels, std::size_t h, std::size_t w,
                                const std::vector<double>& kernels, const std::vector<double>& bias,
                                std::size_t filters, std::size_t k) {
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  std::vector<double> y(filters * oh * ow, 0.0);
  for (std::size_t f = 0; f < filters; ++f)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = bias[f];
        for (std::size_t c = 0; c < channels; ++c)
          for (std::size_t di = 0; di < k; ++di)
            for (std::size_t dj = 0; dj < k; ++dj)
              acc += kernels[((f * channels + c) * k + di) * k + dj] * x[(c * h + i + di) * w + j + dj];
        y[(f * oh + i) * ow + j] = acc;
      }
  return y;
}

// First Adadelta step from zero accumulators, written out from the recurrence:
//   E[g^2] = rho*0 + (1-rho) g^2
//   dx     = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g,  E[dx^2] = 0
inline double adadelta_first_delta(double g, double rho, double eps) {
  const double eg2 = (1.0 - rho) * g * g;
  return -std::sqrt(0.0 + eps) / std::sqrt(eg2 + eps) * g;
}

// Central finite differences of f with respect to every entry of x.
template <typename T>
std::vector<double> numeric_gradient(std::span<T> x, const std::function<double()>& f, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T keep = x[i];
    x[i] = keep + static_cast<T>(h);
    const double up = f();
    x[i] = keep - static_cast<T>(h);
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a|| + ||b||, floor)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-12) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nb), floor);
}

}  // namespace oracle

namespace testutil {

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

template <typename T>
mvg::BasicTensor<T> random_tensor(const mvg::Shape& shape, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  mvg::BasicTensor<T> t(shape);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& x : t.data()) x = static_cast<T>(dist(gen));
  return t;
}

template <typename T>
std::vector<double> to_vector(const mvg::BasicTensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

inline mvg::MultiViewSample random_sample(std::size_t rows, std::size_t cols, std::mt19937_64& gen,
                                          std::size_t label = 0) {
  mvg::MultiViewSample s;
  for (auto& v : s.views) v = random_tensor<float>(mvg::Shape{1, rows, cols}, gen, 0.0, 1.0);
  s.label = label;
  return s;
}

// 8 filters, 3×3 kernels, 12×14 views, 3 classes, FC 16.
inline mvg::ArchitectureConfig shrunk(mvg::ArchitectureConfig c) {
  c.view_rows = 12;
  c.view_cols = 14;
  c.classes = 3;
  c.filters = 8;
  c.kernel = 3;
  c.hidden = 16;
  return c;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mvg_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
