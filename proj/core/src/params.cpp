#include "sdq/params.hpp"

#include <cmath>

#include <fmt/format.h>

namespace sdq {

template <typename T>
Parameter<T>& ParamSet<T>::add(std::string name, Tensor<T> value) {
  if (contains(name)) throw ValidationError(fmt::format("parameter \"{}\" already exists", name));
  Parameter<T> p;
  p.name = name;
  p.grad = Tensor<T>(value.shape());
  p.m = Tensor<T>(value.shape());
  p.v = Tensor<T>(value.shape());
  p.value = std::move(value);
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return params_.back();
}

template <typename T>
Parameter<T>& ParamSet<T>::get(std::string_view name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError(fmt::format("unknown parameter \"{}\"", name));
  return params_[it->second];
}

template <typename T>
const Parameter<T>& ParamSet<T>::get(std::string_view name) const {
  return const_cast<ParamSet*>(this)->get(name);
}

template <typename T>
std::size_t ParamSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void ParamSet<T>::zero_grad() {
  for (auto& p : params_) p.grad.fill(T(0));
}

template <typename T>
void ParamSet<T>::fill_values(T v) {
  for (auto& p : params_) p.value.fill(v);
}

template <typename T>
void adam_step(ParamSet<T>& params, const AdamConfig& config) {
  if (!(config.learning_rate > 0.0)) {
    throw ValidationError(fmt::format("adam: learning rate must be positive (got {})", config.learning_rate));
  }
  ++params.step;
  const double t = static_cast<double>(params.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  for (auto& p : params.parameters()) {
    T* w = p.value.data();
    T* g = p.grad.data();
    T* m = p.m.data();
    T* v = p.v.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const double mhat = static_cast<double>(m[i]) / c1;
      const double vhat = static_cast<double>(v[i]) / c2;
      w[i] -= static_cast<T>(config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon));
      g[i] = T(0);
    }
  }
}

template <typename T>
Tensor<T> xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> t = Tensor<T>::matrix(fan_in, fan_out);
  for (auto& x : t.values()) x = static_cast<T>((2.0 * rng.uniform() - 1.0) * a);
  return t;
}

template class ParamSet<float>;
template class ParamSet<double>;
template void adam_step<float>(ParamSet<float>&, const AdamConfig&);
template void adam_step<double>(ParamSet<double>&, const AdamConfig&);
template Tensor<float> xavier_uniform<float>(std::size_t, std::size_t, Rng&);
template Tensor<double> xavier_uniform<double>(std::size_t, std::size_t, Rng&);

}  // namespace sdq
