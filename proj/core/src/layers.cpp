#include "sdq/layers.hpp"

#include <fmt/format.h>

namespace sdq {

template <typename T>
void init_mlp(ParamSet<T>& params, const std::string& prefix, const MlpShape& shape, Rng& rng) {
  params.add(prefix + ".w1", xavier_uniform<T>(shape.input, shape.hidden, rng));
  params.add(prefix + ".b1", Tensor<T>::matrix(1, shape.hidden));
  params.add(prefix + ".w2", xavier_uniform<T>(shape.hidden, 1, rng));
  params.add(prefix + ".b2", Tensor<T>::matrix(1, 1));
}

template <typename T>
Var mlp_forward(Tape<T>& tape, ParamSet<T>& params, const std::string& prefix, Var x, double dropout_rate,
                bool training, Rng& rng) {
  Var h = ops::dropout(tape, x, dropout_rate, rng, training);
  h = ops::add_row(tape, ops::matmul(tape, h, tape.parameter(params, prefix + ".w1")), tape.parameter(params, prefix + ".b1"));
  h = ops::relu(tape, h);
  return ops::add_row(tape, ops::matmul(tape, h, tape.parameter(params, prefix + ".w2")),
                      tape.parameter(params, prefix + ".b2"));
}

template <typename T>
T mlp_forward(ParamSet<T>& params, const std::string& prefix, std::span<const T> x, double dropout_rate,
              bool training, Rng& rng) {
  Tape<T> tape;
  Var in = tape.constant(Tensor<T>::matrix(1, x.size(), std::vector<T>(x.begin(), x.end())));
  return tape.scalar(mlp_forward(tape, params, prefix, in, dropout_rate, training, rng));
}

template <typename T>
void init_encoder(ParamSet<T>& params, const std::string& prefix, const EncoderShape& s, Rng& rng) {
  if (s.heads == 0 || s.dim % s.heads != 0) {
    throw ValidationError(fmt::format("encoder: dim {} not divisible by {} heads", s.dim, s.heads));
  }
  for (const auto& [w, b] : {std::pair{"wq", "bq"}, std::pair{"wk", "bk"}, std::pair{"wv", "bv"}, std::pair{"wo", "bo"}}) {
    params.add(fmt::format("{}.{}", prefix, w), xavier_uniform<T>(s.dim, s.dim, rng));
    params.add(fmt::format("{}.{}", prefix, b), Tensor<T>::matrix(1, s.dim));
  }
  params.add(prefix + ".ln1.gamma", Tensor<T>::matrix(1, s.dim, T(1)));
  params.add(prefix + ".ln1.beta", Tensor<T>::matrix(1, s.dim));
  params.add(prefix + ".ff.w1", xavier_uniform<T>(s.dim, s.ff_hidden, rng));
  params.add(prefix + ".ff.b1", Tensor<T>::matrix(1, s.ff_hidden));
  params.add(prefix + ".ff.w2", xavier_uniform<T>(s.ff_hidden, s.dim, rng));
  params.add(prefix + ".ff.b2", Tensor<T>::matrix(1, s.dim));
  params.add(prefix + ".ln2.gamma", Tensor<T>::matrix(1, s.dim, T(1)));
  params.add(prefix + ".ln2.beta", Tensor<T>::matrix(1, s.dim));
}

template <typename T>
Var encoder_forward(Tape<T>& tape, ParamSet<T>& params, const std::string& prefix, Var x,
                    std::span<const std::size_t> segments, const EncoderShape& s, bool training, Rng& rng,
                    std::vector<Tensor<T>>* attention_weights) {
  if (tape.value(x).cols() != s.dim) {
    throw ValidationError(fmt::format("encoder: input width {} != dim {}", tape.value(x).cols(), s.dim));
  }
  if (tape.value(x).rows() == 0) throw ValidationError("encoder: zero-length sequence");
  auto p = [&](const char* name) { return tape.parameter(params, prefix + "." + name); };
  auto linear = [&](Var in, const char* w, const char* b) { return ops::add_row(tape, ops::matmul(tape, in, p(w)), p(b)); };

  Var q = linear(x, "wq", "bq");
  Var k = linear(x, "wk", "bk");
  Var v = linear(x, "wv", "bv");
  Var attn = ops::self_attention(tape, q, k, v, segments, s.heads, s.dropout_on_attention ? s.dropout : 0.0, rng,
                                 training, attention_weights);
  Var h1 = ops::layer_norm(tape, ops::add(tape, x, linear(attn, "wo", "bo")), p("ln1.gamma"), p("ln1.beta"),
                           s.layer_norm_eps);
  Var ff = ops::relu(tape, linear(h1, "ff.w1", "ff.b1"));
  ff = linear(ff, "ff.w2", "ff.b2");
  if (s.dropout_on_ff_output) ff = ops::dropout(tape, ff, s.dropout, rng, training);
  return ops::layer_norm(tape, ops::add(tape, h1, ff), p("ln2.gamma"), p("ln2.beta"), s.layer_norm_eps);
}

template <typename T>
Tensor<T> pack_rows(const std::vector<std::vector<T>>& rows, std::size_t dim) {
  Tensor<T> out = Tensor<T>::matrix(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != dim) {
      throw ValidationError(fmt::format("row {} has dimension {}, expected {}", r, rows[r].size(), dim));
    }
    std::copy(rows[r].begin(), rows[r].end(), out.data() + r * dim);
  }
  return out;
}

template <typename T>
std::vector<std::vector<T>> encoder_layer_forward(ParamSet<T>& params, const std::string& prefix,
                                                  const std::vector<std::vector<T>>& sequence,
                                                  const EncoderShape& shape, bool training, Rng& rng,
                                                  std::vector<Tensor<T>>* attention_weights) {
  if (sequence.empty()) throw ValidationError("encoder: zero-length sequence");
  Tape<T> tape;
  Var x = tape.constant(pack_rows(sequence, shape.dim));
  const std::size_t len = sequence.size();
  const Var y = encoder_forward(tape, params, prefix, x, std::span<const std::size_t>(&len, 1), shape, training, rng,
                                attention_weights);
  const auto& out = tape.value(y);
  std::vector<std::vector<T>> result(len);
  for (std::size_t r = 0; r < len; ++r) result[r].assign(out.data() + r * shape.dim, out.data() + (r + 1) * shape.dim);
  return result;
}

#define SDQ_INSTANTIATE_LAYERS(T)                                                                                  \
  template void init_mlp<T>(ParamSet<T>&, const std::string&, const MlpShape&, Rng&);                              \
  template Var mlp_forward<T>(Tape<T>&, ParamSet<T>&, const std::string&, Var, double, bool, Rng&);                \
  template T mlp_forward<T>(ParamSet<T>&, const std::string&, std::span<const T>, double, bool, Rng&);             \
  template void init_encoder<T>(ParamSet<T>&, const std::string&, const EncoderShape&, Rng&);                      \
  template Var encoder_forward<T>(Tape<T>&, ParamSet<T>&, const std::string&, Var, std::span<const std::size_t>,   \
                                  const EncoderShape&, bool, Rng&, std::vector<Tensor<T>>*);                       \
  template std::vector<std::vector<T>> encoder_layer_forward<T>(ParamSet<T>&, const std::string&,                  \
                                                                const std::vector<std::vector<T>>&,                \
                                                                const EncoderShape&, bool, Rng&,                   \
                                                                std::vector<Tensor<T>>*);                          \
  template Tensor<T> pack_rows<T>(const std::vector<std::vector<T>>&, std::size_t);

SDQ_INSTANTIATE_LAYERS(float)
SDQ_INSTANTIATE_LAYERS(double)
#undef SDQ_INSTANTIATE_LAYERS

}  // namespace sdq
