#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mvg/layers.hpp"
#include "mvg/tensor.hpp"

namespace mvg {

struct AdadeltaConfig {
  double rho = 0.95;
  double eps = 1e-6;
};

/// Running averages E[g^2] and E[dx^2] for one parameter tensor.
template <typename T>
struct AdadeltaState {
  BasicTensor<T> acc_grad_sq;
  BasicTensor<T> acc_delta_sq;

  explicit AdadeltaState(const Shape& shape) : acc_grad_sq(shape), acc_delta_sq(shape) {}
};

/// One Adadelta update, in place:
///   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
///   dx      <- -(sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps)) g
///   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
///   x       <- x + dx
/// The gradient is scanned for non-finite values before anything changes.
template <typename T>
void adadelta_step(BasicTensor<T>& params, const BasicTensor<T>& grads, AdadeltaState<T>& state,
                   const AdadeltaConfig& config = {}, std::string_view name = "parameter") {
  detail::require_same_shape(params.shape(), grads.shape(), "adadelta");
  detail::require_same_shape(params.shape(), state.acc_grad_sq.shape(), "adadelta");
  for (T g : grads.data())
    if (!std::isfinite(g)) throw NumericError("adadelta: non-finite gradient in " + std::string(name));

  const T rho = static_cast<T>(config.rho);
  const T keep = static_cast<T>(1.0 - config.rho);
  const T eps = static_cast<T>(config.eps);
  T* x = params.raw();
  T* eg = state.acc_grad_sq.raw();
  T* edx = state.acc_delta_sq.raw();
  const T* g = grads.raw();
  for (std::size_t i = 0, n = params.size(); i < n; ++i) {
    eg[i] = rho * eg[i] + keep * g[i] * g[i];
    const T dx = -std::sqrt(edx[i] + eps) / std::sqrt(eg[i] + eps) * g[i];
    edx[i] = rho * edx[i] + keep * dx * dx;
    x[i] += dx;
  }
}

/// Adadelta over a fixed list of parameters, one state per tensor.
template <typename T>
class Adadelta {
 public:
  Adadelta(std::vector<Parameter<T>*> params, AdadeltaConfig config = {})
      : params_(std::move(params)), config_(config) {
    states_.reserve(params_.size());
    for (auto* p : params_) states_.emplace_back(p->value.shape());
  }

  // grad_scale multiplies every gradient first (1/N for mean reduction).
  void step(T grad_scale = T{1}) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter<T>& p = *params_[i];
      if (grad_scale != T{1})
        for (auto& g : p.grad.data()) g *= grad_scale;
      adadelta_step(p.value, p.grad, states_[i], config_, p.name);
    }
  }

  const std::vector<AdadeltaState<T>>& states() const noexcept { return states_; }

 private:
  std::vector<Parameter<T>*> params_;
  AdadeltaConfig config_;
  std::vector<AdadeltaState<T>> states_;
};

}  // namespace mvg
