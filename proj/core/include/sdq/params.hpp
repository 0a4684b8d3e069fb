#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sdq/rng.hpp"
#include "sdq/tensor.hpp"

namespace sdq {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> m;  // Adam first moment
  Tensor<T> v;  // Adam second moment
};

/// Named parameters with gradient and Adam slots, the dropout RNG and the
/// optimizer step counter. Insertion order is preserved (and is the
/// serialization order).
template <typename T>
class ParamSet {
 public:
  Parameter<T>& add(std::string name, Tensor<T> value);

  bool contains(std::string_view name) const { return index_.find(std::string(name)) != index_.end(); }
  Parameter<T>& get(std::string_view name);
  const Parameter<T>& get(std::string_view name) const;
  Tensor<T>& value(std::string_view name) { return get(name).value; }
  const Tensor<T>& value(std::string_view name) const { return get(name).value; }

  std::vector<Parameter<T>>& parameters() noexcept { return params_; }
  const std::vector<Parameter<T>>& parameters() const noexcept { return params_; }
  std::size_t scalar_count() const;

  void zero_grad();
  void fill_values(T v);

  std::uint64_t step = 0;
  Rng rng{0};

  // Converts values and optimizer state; used to run the float model in
  // 64-bit for gradient verification.
  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& p : params_) {
      auto& q = out.add(p.name, p.value.template cast<U>());
      q.m = p.m.template cast<U>();
      q.v = p.v.template cast<U>();
    }
    out.step = step;
    out.rng = rng;
    return out;
  }

 private:
  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam; increments the step counter and zeroes gradients.
// Throws ValidationError for learning_rate <= 0.
template <typename T>
void adam_step(ParamSet<T>& params, const AdamConfig& config);

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace sdq
