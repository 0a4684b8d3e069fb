#include "sdq/tape.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include <fmt/format.h>

namespace sdq {

template <typename T>
Var Tape<T>::record(std::string op, Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(fmt::format("non-finite value produced by {}", op));
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  for (std::size_t i : n.inputs) n.needs_grad = n.needs_grad || nodes_[i].needs_grad;
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  return record("constant", std::move(value), {}, nullptr);
}

template <typename T>
Var Tape<T>::parameter(ParamSet<T>& params, const std::string& name) {
  Parameter<T>& p = params.get(name);
  if (const auto it = param_nodes_.find(&p.value); it != param_nodes_.end()) return Var{it->second};
  if (!p.value.all_finite()) throw NumericError(fmt::format("parameter {} is not finite", name));
  Node n;
  n.op = "param:" + name;
  n.external = &p.value;
  n.param_grad = &p.grad;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(&p.value, nodes_.size() - 1);
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.external ? *n.external : n.value;
}

template <typename T>
Tensor<T>& Tape<T>::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0 && value(Var{id}).size() != 0) n.grad = Tensor<T>(value(Var{id}).shape());
  return n.grad;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var v) {
  return grad_slot(v.id);
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (value(loss).size() != 1) throw ValidationError("backward: loss must be a scalar");
  for (auto& n : nodes_) n.grad = Tensor<T>();
  grad_slot(loss.id)[0] = T(1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
    for (std::size_t in : nodes_[i].inputs) {
      const Tensor<T>& g = nodes_[in].grad;
      if (g.size() != 0 && !g.all_finite()) {
        throw NumericError(fmt::format("non-finite gradient in backward of {}", nodes_[i].op));
      }
    }
  }
  for (auto& n : nodes_) {
    if (n.param_grad == nullptr || n.grad.size() == 0) continue;
    n.param_grad->mat() += n.grad.mat();
  }
}

double pairwise_logit_loss(double diff, int label) noexcept {
  return std::max(diff, 0.0) - static_cast<double>(label) * diff + std::log1p(std::exp(-std::abs(diff)));
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError(fmt::format("dropout rate {} not in [0, 1)", rate));
  if (!training || rate == 0.0) return x;
  Tensor<T> out = x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& v : out.values()) v = rng.uniform() < rate ? T(0) : v * keep_scale;
  return out;
}

namespace ops {

namespace {

template <typename T>
void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ValidationError(fmt::format("{}: shape mismatch ({})", op, detail));
}

std::string dims(std::size_t r, std::size_t c) { return fmt::format("{}x{}", r, c); }

}  // namespace

template <typename T>
Var matmul(Tape<T>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  require<T>(A.cols() == B.rows(), "matmul", dims(A.rows(), A.cols()) + " * " + dims(B.rows(), B.cols()));
  Tensor<T> out = Tensor<T>::matrix(A.rows(), B.cols());
  out.mat().noalias() = A.mat() * B.mat();
  return t.record("matmul", std::move(out), {a.id, b.id}, [a, b](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node_grad(self);
    if (tp.needs_grad(a)) tp.grad_slot(a.id).mat().noalias() += g.mat() * tp.node_value(b.id).mat().transpose();
    if (tp.needs_grad(b)) tp.grad_slot(b.id).mat().noalias() += tp.node_value(a.id).mat().transpose() * g.mat();
  });
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  require<T>(A.rows() == B.rows() && A.cols() == B.cols(), "add", dims(A.rows(), A.cols()) + " + " + dims(B.rows(), B.cols()));
  Tensor<T> out = Tensor<T>::matrix(A.rows(), A.cols());
  out.mat() = A.mat() + B.mat();
  return t.record("add", std::move(out), {a.id, b.id}, [a, b](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node_grad(self);
    if (tp.needs_grad(a)) tp.grad_slot(a.id).mat() += g.mat();
    if (tp.needs_grad(b)) tp.grad_slot(b.id).mat() += g.mat();
  });
}

template <typename T>
Var add_row(Tape<T>& t, Var a, Var row) {
  const auto& A = t.value(a);
  const auto& R = t.value(row);
  require<T>(R.rows() == 1 && R.cols() == A.cols(), "add_row", dims(A.rows(), A.cols()) + " + " + dims(R.rows(), R.cols()));
  Tensor<T> out = Tensor<T>::matrix(A.rows(), A.cols());
  out.mat() = A.mat().rowwise() + R.mat().row(0);
  return t.record("add_row", std::move(out), {a.id, row.id}, [a, row](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node_grad(self);
    if (tp.needs_grad(a)) tp.grad_slot(a.id).mat() += g.mat();
    if (tp.needs_grad(row)) tp.grad_slot(row.id).mat().row(0) += g.mat().colwise().sum();
  });
}

template <typename T>
Var relu(Tape<T>& t, Var a) {
  Tensor<T> out = t.value(a);
  for (auto& v : out.values()) v = v > T(0) ? v : T(0);
  return t.record("relu", std::move(out), {a.id}, [a](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node_grad(self);
    const auto& x = tp.node_value(a.id);
    auto& ga = tp.grad_slot(a.id);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > T(0)) ga[i] += g[i];
    }
  });
}

template <typename T>
Var dropout(Tape<T>& t, Var a, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError(fmt::format("dropout rate {} not in [0, 1)", rate));
  if (!training || rate == 0.0) return a;
  const auto& x = t.value(a);
  Tensor<T> mask(x.shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& m : mask.values()) m = rng.uniform() < rate ? T(0) : keep_scale;
  Tensor<T> out = x;
  out.mat().array() *= mask.mat().array();
  return t.record("dropout", std::move(out), {a.id}, [a, mask = std::move(mask)](Tape<T>& tp, std::size_t self) {
    tp.grad_slot(a.id).mat().array() += tp.node_grad(self).mat().array() * mask.mat().array();
  });
}

template <typename T>
Var layer_norm(Tape<T>& t, Var x, Var gamma, Var beta, double eps) {
  const auto& X = t.value(x);
  const auto& G = t.value(gamma);
  const auto& B = t.value(beta);
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  require<T>(G.size() == d && B.size() == d, "layer_norm", fmt::format("features {} vs gamma {} beta {}", d, G.size(), B.size()));
  auto xhat = std::make_shared<Tensor<T>>(Tensor<T>::matrix(n, d));
  auto inv_std = std::make_shared<std::vector<T>>(n);
  Tensor<T> out = Tensor<T>::matrix(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += X.at(r, c);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double z = X.at(r, c) - mean;
      var += z * z;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = static_cast<T>(is);
    for (std::size_t c = 0; c < d; ++c) {
      const T h = static_cast<T>((X.at(r, c) - mean) * is);
      xhat->at(r, c) = h;
      out.at(r, c) = h * G[c] + B[c];
    }
  }
  return t.record("layer_norm", std::move(out), {x.id, gamma.id, beta.id},
                  [x, gamma, beta, xhat, inv_std](Tape<T>& tp, std::size_t self) {
                    const auto& g = tp.node_grad(self);
                    const auto& G = tp.node_value(gamma.id);
                    const std::size_t n = g.rows();
                    const std::size_t d = g.cols();
                    if (tp.needs_grad(gamma)) {
                      auto& gg = tp.grad_slot(gamma.id);
                      for (std::size_t r = 0; r < n; ++r)
                        for (std::size_t c = 0; c < d; ++c) gg[c] += g.at(r, c) * xhat->at(r, c);
                    }
                    if (tp.needs_grad(beta)) {
                      auto& gb = tp.grad_slot(beta.id);
                      for (std::size_t r = 0; r < n; ++r)
                        for (std::size_t c = 0; c < d; ++c) gb[c] += g.at(r, c);
                    }
                    if (tp.needs_grad(x)) {
                      auto& gx = tp.grad_slot(x.id);
                      std::vector<double> dxhat(d);
                      for (std::size_t r = 0; r < n; ++r) {
                        double s1 = 0.0, s2 = 0.0;
                        for (std::size_t c = 0; c < d; ++c) {
                          dxhat[c] = static_cast<double>(g.at(r, c)) * G[c];
                          s1 += dxhat[c];
                          s2 += dxhat[c] * xhat->at(r, c);
                        }
                        const double k = static_cast<double>((*inv_std)[r]) / static_cast<double>(d);
                        for (std::size_t c = 0; c < d; ++c) {
                          gx.at(r, c) += static_cast<T>(
                              k * (static_cast<double>(d) * dxhat[c] - s1 - xhat->at(r, c) * s2));
                        }
                      }
                    }
                  });
}

template <typename T>
Var self_attention(Tape<T>& t, Var q, Var k, Var v, std::span<const std::size_t> segments, std::size_t heads,
                   double dropout_rate, Rng& rng, bool training, std::vector<Tensor<T>>* weights_out) {
  using Mat = typename Tensor<T>::Matrix;
  const auto& Q = t.value(q);
  const auto& K = t.value(k);
  const auto& V = t.value(v);
  const std::size_t n = Q.rows();
  const std::size_t d = Q.cols();
  require<T>(K.rows() == n && V.rows() == n && K.cols() == d && V.cols() == d, "self_attention", "q/k/v shapes differ");
  require<T>(heads > 0 && d % heads == 0, "self_attention", fmt::format("dim {} not divisible by {} heads", d, heads));
  const std::size_t total = std::accumulate(segments.begin(), segments.end(), std::size_t{0});
  require<T>(total == n, "self_attention", fmt::format("segments cover {} rows, input has {}", total, n));
  for (std::size_t len : segments) {
    if (len == 0) throw ValidationError("self_attention: zero-length sequence");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError(fmt::format("dropout rate {} not in [0, 1)", dropout_rate));
  }
  const bool drop = training && dropout_rate > 0.0;
  const std::size_t dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const T keep_scale = static_cast<T>(drop ? 1.0 / (1.0 - dropout_rate) : 1.0);

  struct Saved {
    std::vector<Mat> probs;  // softmax output
    std::vector<Mat> masks;  // dropout multipliers (empty when not dropping)
  };
  auto saved = std::make_shared<Saved>();
  std::vector<std::size_t> segs(segments.begin(), segments.end());

  Tensor<T> out = Tensor<T>::matrix(n, d);
  std::size_t offset = 0;
  for (std::size_t len : segs) {
    const auto L = static_cast<Eigen::Index>(len);
    const auto o = static_cast<Eigen::Index>(offset);
    for (std::size_t h = 0; h < heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h * dh);
      const auto w = static_cast<Eigen::Index>(dh);
      Mat S = (Q.mat().block(o, c0, L, w) * K.mat().block(o, c0, L, w).transpose()) * scale;
      for (Eigen::Index r = 0; r < L; ++r) {
        const T mx = S.row(r).maxCoeff();
        S.row(r) = (S.row(r).array() - mx).exp();
        S.row(r) /= S.row(r).sum();
      }
      if (weights_out) weights_out->push_back(Tensor<T>::matrix(len, len, std::vector<T>(S.data(), S.data() + S.size())));
      Mat used = S;
      if (drop) {
        Mat mask(L, L);
        for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < dropout_rate ? T(0) : keep_scale;
        used = S.cwiseProduct(mask);
        saved->masks.push_back(std::move(mask));
      }
      out.mat().block(o, c0, L, w).noalias() = used * V.mat().block(o, c0, L, w);
      saved->probs.push_back(std::move(S));
    }
    offset += len;
  }

  return t.record("self_attention", std::move(out), {q.id, k.id, v.id},
                  [q, k, v, segs, heads, dh, scale, drop, saved](Tape<T>& tp, std::size_t self) {
                    const auto& G = tp.node_grad(self);
                    const auto& Q = tp.node_value(q.id);
                    const auto& K = tp.node_value(k.id);
                    const auto& V = tp.node_value(v.id);
                    auto& gq = tp.grad_slot(q.id);
                    auto& gk = tp.grad_slot(k.id);
                    auto& gv = tp.grad_slot(v.id);
                    std::size_t offset = 0;
                    std::size_t idx = 0;
                    for (std::size_t len : segs) {
                      const auto L = static_cast<Eigen::Index>(len);
                      const auto o = static_cast<Eigen::Index>(offset);
                      for (std::size_t h = 0; h < heads; ++h, ++idx) {
                        const auto c0 = static_cast<Eigen::Index>(h * dh);
                        const auto w = static_cast<Eigen::Index>(dh);
                        const Mat& P = saved->probs[idx];
                        const Mat used = drop ? Mat(P.cwiseProduct(saved->masks[idx])) : P;
                        const auto dO = G.mat().block(o, c0, L, w);
                        Mat dP = dO * V.mat().block(o, c0, L, w).transpose();
                        gv.mat().block(o, c0, L, w).noalias() += used.transpose() * dO;
                        if (drop) dP = dP.cwiseProduct(saved->masks[idx]);
                        Mat dS(L, L);
                        for (Eigen::Index r = 0; r < L; ++r) {
                          const T dot = dP.row(r).dot(P.row(r));
                          dS.row(r) = P.row(r).array() * (dP.row(r).array() - dot);
                        }
                        dS *= scale;
                        gq.mat().block(o, c0, L, w).noalias() += dS * K.mat().block(o, c0, L, w);
                        gk.mat().block(o, c0, L, w).noalias() += dS.transpose() * Q.mat().block(o, c0, L, w);
                      }
                      offset += len;
                    }
                  });
}

template <typename T>
Var gather_rows(Tape<T>& t, Var x, std::vector<std::size_t> rows) {
  const auto& X = t.value(x);
  Tensor<T> out = Tensor<T>::matrix(rows.size(), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require<T>(rows[r] < X.rows(), "gather_rows", fmt::format("row {} of {}", rows[r], X.rows()));
    out.mat().row(static_cast<Eigen::Index>(r)) = X.mat().row(static_cast<Eigen::Index>(rows[r]));
  }
  return t.record("gather_rows", std::move(out), {x.id}, [x, rows = std::move(rows)](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node_grad(self);
    auto& gx = tp.grad_slot(x.id);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      gx.mat().row(static_cast<Eigen::Index>(rows[r])) += g.mat().row(static_cast<Eigen::Index>(r));
    }
  });
}

template <typename T>
Var segment_mean(Tape<T>& t, Var x, std::span<const std::size_t> segments) {
  const auto& X = t.value(x);
  std::vector<std::size_t> segs(segments.begin(), segments.end());
  require<T>(std::accumulate(segs.begin(), segs.end(), std::size_t{0}) == X.rows(), "segment_mean",
             "segments do not cover the input");
  Tensor<T> out = Tensor<T>::matrix(segs.size(), X.cols());
  std::size_t offset = 0;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (segs[s] == 0) throw ValidationError("segment_mean: zero-length segment");
    out.mat().row(static_cast<Eigen::Index>(s)) =
        X.mat().middleRows(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(segs[s])).colwise().sum() /
        static_cast<T>(segs[s]);
    offset += segs[s];
  }
  return t.record("segment_mean", std::move(out), {x.id}, [x, segs](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node_grad(self);
    auto& gx = tp.grad_slot(x.id);
    std::size_t offset = 0;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto row = g.mat().row(static_cast<Eigen::Index>(s)) / static_cast<T>(segs[s]);
      for (std::size_t r = 0; r < segs[s]; ++r) gx.mat().row(static_cast<Eigen::Index>(offset + r)) += row;
      offset += segs[s];
    }
  });
}

template <typename T>
Var sum(Tape<T>& t, Var x) {
  Tensor<T> out = Tensor<T>::matrix(1, 1, static_cast<T>(t.value(x).mat().sum()));
  return t.record("sum", std::move(out), {x.id}, [x](Tape<T>& tp, std::size_t self) {
    tp.grad_slot(x.id).mat().array() += tp.node_grad(self)[0];
  });
}

template <typename T>
Var pairwise_bce(Tape<T>& t, Var scores, std::span<const IndexPair> pairs) {
  const auto& S = t.value(scores);
  require<T>(S.cols() == 1, "pairwise_bce", "scores must be a column");
  if (pairs.empty()) throw ValidationError("pairwise_bce: no pairs");
  std::vector<IndexPair> ps(pairs.begin(), pairs.end());
  double total = 0.0;
  for (const auto& p : ps) {
    require<T>(p.first < S.rows() && p.second < S.rows(), "pairwise_bce", "pair index out of range");
    total += pairwise_logit_loss(static_cast<double>(S[p.first]) - static_cast<double>(S[p.second]), p.label);
  }
  Tensor<T> out = Tensor<T>::matrix(1, 1, static_cast<T>(total / static_cast<double>(ps.size())));
  return t.record("pairwise_bce", std::move(out), {scores.id}, [scores, ps = std::move(ps)](Tape<T>& tp, std::size_t self) {
    const double g = static_cast<double>(tp.node_grad(self)[0]) / static_cast<double>(ps.size());
    const auto& S = tp.node_value(scores.id);
    auto& gs = tp.grad_slot(scores.id);
    for (const auto& p : ps) {
      const double z = static_cast<double>(S[p.first]) - static_cast<double>(S[p.second]);
      const double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      const double dz = g * (sig - static_cast<double>(p.label));
      gs[p.first] += static_cast<T>(dz);
      gs[p.second] -= static_cast<T>(dz);
    }
  });
}

template <typename T>
Var l1_mean(Tape<T>& t, Var pred, std::span<const double> targets) {
  const auto& P = t.value(pred);
  require<T>(P.cols() == 1 && P.rows() == targets.size(), "l1_mean",
             fmt::format("{} predictions vs {} targets", P.size(), targets.size()));
  if (targets.empty()) throw ValidationError("l1_mean: empty batch");
  std::vector<double> ts(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) total += std::abs(static_cast<double>(P[i]) - ts[i]);
  Tensor<T> out = Tensor<T>::matrix(1, 1, static_cast<T>(total / static_cast<double>(ts.size())));
  return t.record("l1_mean", std::move(out), {pred.id}, [pred, ts = std::move(ts)](Tape<T>& tp, std::size_t self) {
    const double g = static_cast<double>(tp.node_grad(self)[0]) / static_cast<double>(ts.size());
    const auto& P = tp.node_value(pred.id);
    auto& gp = tp.grad_slot(pred.id);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double diff = static_cast<double>(P[i]) - ts[i];
      if (diff > 0) gp[i] += static_cast<T>(g);
      if (diff < 0) gp[i] -= static_cast<T>(g);
    }
  });
}

template <typename T>
Var softmax_cross_entropy(Tape<T>& t, Var logits, std::span<const std::size_t> labels) {
  const auto& X = t.value(logits);
  require<T>(X.rows() == labels.size(), "softmax_cross_entropy",
             fmt::format("{} rows vs {} labels", X.rows(), labels.size()));
  if (labels.empty()) throw ValidationError("softmax_cross_entropy: empty batch");
  const std::size_t n = X.rows();
  const std::size_t c = X.cols();
  auto probs = std::make_shared<std::vector<double>>(n * c);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    require<T>(labels[r] < c, "softmax_cross_entropy", fmt::format("label {} with {} classes", labels[r], c));
    double mx = X.at(r, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max<double>(mx, X.at(r, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(X.at(r, j) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) (*probs)[r * c + j] = std::exp(X.at(r, j) - lse);
    total += lse - X.at(r, labels[r]);
  }
  std::vector<std::size_t> ls(labels.begin(), labels.end());
  Tensor<T> out = Tensor<T>::matrix(1, 1, static_cast<T>(total / static_cast<double>(n)));
  return t.record("softmax_cross_entropy", std::move(out), {logits.id},
                  [logits, probs, ls = std::move(ls), c](Tape<T>& tp, std::size_t self) {
                    const double g = static_cast<double>(tp.node_grad(self)[0]) / static_cast<double>(ls.size());
                    auto& gx = tp.grad_slot(logits.id);
                    for (std::size_t r = 0; r < ls.size(); ++r) {
                      for (std::size_t j = 0; j < c; ++j) {
                        const double d = (*probs)[r * c + j] - (j == ls[r] ? 1.0 : 0.0);
                        gx.at(r, j) += static_cast<T>(g * d);
                      }
                    }
                  });
}

#define SDQ_INSTANTIATE_OPS(T)                                                                                  \
  template Var matmul<T>(Tape<T>&, Var, Var);                                                                   \
  template Var add<T>(Tape<T>&, Var, Var);                                                                      \
  template Var add_row<T>(Tape<T>&, Var, Var);                                                                  \
  template Var relu<T>(Tape<T>&, Var);                                                                          \
  template Var dropout<T>(Tape<T>&, Var, double, Rng&, bool);                                                   \
  template Var layer_norm<T>(Tape<T>&, Var, Var, Var, double);                                                  \
  template Var self_attention<T>(Tape<T>&, Var, Var, Var, std::span<const std::size_t>, std::size_t, double,   \
                                 Rng&, bool, std::vector<Tensor<T>>*);                                          \
  template Var gather_rows<T>(Tape<T>&, Var, std::vector<std::size_t>);                                         \
  template Var segment_mean<T>(Tape<T>&, Var, std::span<const std::size_t>);                                    \
  template Var sum<T>(Tape<T>&, Var);                                                                           \
  template Var pairwise_bce<T>(Tape<T>&, Var, std::span<const IndexPair>);                                      \
  template Var l1_mean<T>(Tape<T>&, Var, std::span<const double>);                                              \
  template Var softmax_cross_entropy<T>(Tape<T>&, Var, std::span<const std::size_t>);

SDQ_INSTANTIATE_OPS(float)
SDQ_INSTANTIATE_OPS(double)
#undef SDQ_INSTANTIATE_OPS

}  // namespace ops

template class Tape<float>;
template class Tape<double>;
template Tensor<float> dropout<float>(const Tensor<float>&, double, Rng&, bool);
template Tensor<double> dropout<double>(const Tensor<double>&, double, Rng&, bool);

}  // namespace sdq
