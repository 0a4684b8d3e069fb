#include "sdq/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdq {

GradCheckResult check_gradients(ParamSet<double>& params, const LossBuilder& loss, double eps,
                                std::optional<std::size_t> max_per_parameter, std::uint64_t sample_seed,
                                double floor) {
  params.zero_grad();
  {
    Tape<double> tape;
    const Var l = loss(tape, params);
    tape.backward(l);
  }
  std::vector<Tensor<double>> analytic;
  for (const auto& p : params.parameters()) analytic.push_back(p.grad);

  auto evaluate = [&] {
    Tape<double> tape;
    return tape.scalar(loss(tape, params));
  };

  GradCheckResult result;
  Rng rng(sample_seed);
  for (std::size_t pi = 0; pi < params.parameters().size(); ++pi) {
    auto& p = params.parameters()[pi];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_per_parameter && coords.size() > *max_per_parameter) {
      shuffle(coords.begin(), coords.end(), rng);
      coords.resize(*max_per_parameter);
    }
    for (std::size_t i : coords) {
      const double orig = p.value[i];
      p.value[i] = orig + eps;
      const double up = evaluate();
      p.value[i] = orig - eps;
      const double down = evaluate();
      p.value[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p.name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  params.zero_grad();
  return result;
}

}  // namespace sdq
