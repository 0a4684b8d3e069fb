#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdq/params.hpp"
#include "sdq/rng.hpp"
#include "sdq/tensor.hpp"

namespace sdq {

struct Var {
  std::size_t id = 0;
};

/// Records a forward computation and replays it in reverse to accumulate
/// gradients. Parameter leaves write their gradients back into the owning
/// ParamSet on backward(). Every op checks its output for NaN/Inf, and every
/// backward step checks the gradients it produced.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor<T> value);
  // The same (params, name) pair always maps to one leaf per tape.
  Var parameter(ParamSet<T>& params, const std::string& name);

  const Tensor<T>& value(Var v) const;
  // Gradient of the last backward() w.r.t. v; zeros if v did not reach the loss.
  const Tensor<T>& grad(Var v);
  T scalar(Var v) const { return value(v)[0]; }

  // `loss` must be 1x1. Accumulates d(loss)/d(param) into each bound
  // ParamSet's grad slots.
  void backward(Var loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Op plumbing, used by the free functions below.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  Var record(std::string op, Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn backward);
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  Tensor<T>& grad_slot(std::size_t id);
  const Tensor<T>& node_value(std::size_t id) const { return value(Var{id}); }
  const Tensor<T>& node_grad(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    std::string op;
    Tensor<T> value;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor<T>* param_grad = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::map<const Tensor<T>*, std::size_t> param_nodes_;
};

struct IndexPair {
  std::size_t first = 0;
  std::size_t second = 0;
  int label = 1;  // 1 if the first item has the higher target
};

namespace ops {

template <typename T> Var matmul(Tape<T>& t, Var a, Var b);
template <typename T> Var add(Tape<T>& t, Var a, Var b);
// a (n x m) + row (1 x m) broadcast over rows
template <typename T> Var add_row(Tape<T>& t, Var a, Var row);
// Gradient at exactly 0 is 0.
template <typename T> Var relu(Tape<T>& t, Var a);
// Inverted dropout; identity when !training or rate == 0. Throws for rate
// outside [0, 1).
template <typename T> Var dropout(Tape<T>& t, Var a, double rate, Rng& rng, bool training);
// Row-wise normalization with affine gamma/beta (1 x m each).
template <typename T> Var layer_norm(Tape<T>& t, Var x, Var gamma, Var beta, double eps);

/// Multi-head scaled dot-product self-attention over packed sequences.
/// q/k/v are (N x d) with rows grouped into consecutive segments whose
/// lengths sum to N; positions attend only within their own segment. Heads
/// split d into equal column blocks. Dropout hits the attention weights. When
/// `weights_out` is non-null it receives one (L x L) matrix per
/// (segment, head), segment-major.
template <typename T>
Var self_attention(Tape<T>& t, Var q, Var k, Var v, std::span<const std::size_t> segments, std::size_t heads,
                   double dropout_rate, Rng& rng, bool training, std::vector<Tensor<T>>* weights_out = nullptr);

template <typename T> Var gather_rows(Tape<T>& t, Var x, std::vector<std::size_t> rows);
// Mean over the rows of each segment -> (segments x m)
template <typename T> Var segment_mean(Tape<T>& t, Var x, std::span<const std::size_t> segments);
template <typename T> Var sum(Tape<T>& t, Var x);

// Mean over pairs of BCE(sigma(s_first - s_second), label), computed in
// logits form. `scores` is (N x 1).
template <typename T> Var pairwise_bce(Tape<T>& t, Var scores, std::span<const IndexPair> pairs);
// Mean |pred - target|; `pred` is (N x 1). Subgradient 0 at equality.
template <typename T> Var l1_mean(Tape<T>& t, Var pred, std::span<const double> targets);
// Mean softmax cross-entropy of (N x C) logits.
template <typename T> Var softmax_cross_entropy(Tape<T>& t, Var logits, std::span<const std::size_t> labels);

}  // namespace ops

// Stand-alone inverted dropout on a tensor (same mask rule as ops::dropout).
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, bool training);

// softplus(z) - label * z, the numerically stable BCE on a logit difference.
double pairwise_logit_loss(double diff, int label) noexcept;

}  // namespace sdq
