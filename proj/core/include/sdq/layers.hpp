#pragma once

#include <span>
#include <string>
#include <vector>

#include "sdq/params.hpp"
#include "sdq/tape.hpp"

namespace sdq {

// One hidden layer: dropout(x) -> linear -> ReLU -> linear -> scalar.
struct MlpShape {
  std::size_t input = 768;
  std::size_t hidden = 256;
};

// Post-norm transformer encoder layer without positional encoding.
struct EncoderShape {
  std::size_t dim = 768;
  std::size_t heads = 1;
  std::size_t ff_hidden = 1024;
  double dropout = 0.3;
  double layer_norm_eps = 1e-5;
  // Where dropout is applied inside the layer.
  bool dropout_on_attention = true;
  bool dropout_on_ff_output = true;
};

// Adds "<prefix>.w1" (input x hidden), "<prefix>.b1", "<prefix>.w2" (hidden x 1)
// and "<prefix>.b2"; Xavier-uniform weights, zero biases.
template <typename T>
void init_mlp(ParamSet<T>& params, const std::string& prefix, const MlpShape& shape, Rng& rng);

template <typename T>
Var mlp_forward(Tape<T>& tape, ParamSet<T>& params, const std::string& prefix, Var x, double dropout_rate,
                bool training, Rng& rng);

// Scalar convenience wrapper over a single input vector.
template <typename T>
T mlp_forward(ParamSet<T>& params, const std::string& prefix, std::span<const T> x, double dropout_rate,
              bool training, Rng& rng);

template <typename T>
void init_encoder(ParamSet<T>& params, const std::string& prefix, const EncoderShape& shape, Rng& rng);

// `x` is (N x dim) holding consecutive sequences of the given lengths.
template <typename T>
Var encoder_forward(Tape<T>& tape, ParamSet<T>& params, const std::string& prefix, Var x,
                    std::span<const std::size_t> segments, const EncoderShape& shape, bool training, Rng& rng,
                    std::vector<Tensor<T>>* attention_weights = nullptr);

// Encodes one sequence (list of d-vectors) and returns the output vectors.
template <typename T>
std::vector<std::vector<T>> encoder_layer_forward(ParamSet<T>& params, const std::string& prefix,
                                                  const std::vector<std::vector<T>>& sequence,
                                                  const EncoderShape& shape, bool training, Rng& rng,
                                                  std::vector<Tensor<T>>* attention_weights = nullptr);

// Packs sequences row-wise into one (sum(len) x dim) tensor.
template <typename T>
Tensor<T> pack_rows(const std::vector<std::vector<T>>& rows, std::size_t dim);

}  // namespace sdq
