#pragma once

// Small reverse-mode differentiation tape over dense row-major Eigen
// matrices. Every value is a 2-D matrix; batches are stacked along rows.

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace advgo::ad {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor>;

struct Var {
  int id = -1;
};

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;

  /// With record = false no backward closures are stored (inference mode).
  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(256); }

  bool recording() const { return record_; }

  Var constant(Mat value) { return push(std::move(value), false); }

  /// Leaf that borrows `value` (which must outlive the tape) and collects a gradient.
  Var parameter(const Mat& value) {
    Node n;
    n.external = &value;
    n.needs_grad = record_;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Mat& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.external ? *n.external : n.value;
  }

  /// Gradient of the last backward() output; empty if the node was unreachable.
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  void backward(Var out) {
    if (!record_) throw std::logic_error("backward on a non-recording tape");
    const Mat& v = value(out);
    if (v.rows() != 1 || v.cols() != 1) throw std::logic_error("backward needs a scalar output");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[out.id].grad = Mat::Ones(1, 1);
    for (int i = out.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() > 0) n.backward();
    }
  }

  // ---- ops --------------------------------------------------------------

  Var matmul(Var a, Var b) {
    Mat out = value(a) * value(b);
    return op(std::move(out), {a, b}, [this, a, b](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs(a)) accumulate(a, g * value(b).transpose());
      if (needs(b)) accumulate(b, value(a).transpose() * g);
    });
  }

  Var add(Var a, Var b) {
    Mat out = value(a) + value(b);
    return op(std::move(out), {a, b}, [this, a, b](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs(a)) accumulate(a, g);
      if (needs(b)) accumulate(b, g);
    });
  }

  /// a (n x m) plus a broadcast 1 x m row.
  Var add_row(Var a, Var row) {
    Mat out = value(a).rowwise() + value(row).row(0);
    return op(std::move(out), {a, row}, [this, a, row](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs(a)) accumulate(a, g);
      if (needs(row)) accumulate(row, g.colwise().sum());
    });
  }

  Var scale(Var a, Scalar s) {
    Mat out = value(a) * s;
    return op(std::move(out), {a}, [this, a, s](int self) {
      if (needs(a)) accumulate(a, nodes_[self].grad * s);
    });
  }

  Var tanh(Var a) {
    Mat out = value(a).array().tanh().matrix();
    return op(std::move(out), {a}, [this, a](int self) {
      const Mat& y = nodes_[self].value;
      accumulate(a, (nodes_[self].grad.array() * (Scalar(1) - y.array().square())).matrix());
    });
  }

  /// x * tanh(softplus(x)).
  Var mish(Var a) {
    const Mat& x = value(a);
    Mat out(x.rows(), x.cols());
    const Scalar* px = x.data();
    Scalar* po = out.data();
    for (Eigen::Index i = 0; i < x.size(); ++i) po[i] = px[i] * mish_parts(px[i]).first;
    return op(std::move(out), {a}, [this, a](int self) {
      const Mat& x = value(a);
      const Mat& g = nodes_[self].grad;
      Mat d(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const Scalar xi = x.data()[i];
        const auto [t, sig] = mish_parts(xi);
        d.data()[i] = g.data()[i] * (t + xi * (Scalar(1) - t * t) * sig);
      }
      accumulate(a, d);
    });
  }

  /// Exact (erf) GELU.
  Var gelu(Var a) {
    const Mat& x = value(a);
    Mat out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const Scalar xi = x.data()[i];
      out.data()[i] = Scalar(0.5) * xi * (Scalar(1) + std::erf(xi * Scalar(std::numbers::sqrt2 / 2)));
    }
    return op(std::move(out), {a}, [this, a](int self) {
      const Mat& x = value(a);
      const Mat& g = nodes_[self].grad;
      Mat d(x.rows(), x.cols());
      const Scalar inv_sqrt_2pi = Scalar(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const Scalar xi = x.data()[i];
        const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(xi * Scalar(std::numbers::sqrt2 / 2)));
        const Scalar pdf = inv_sqrt_2pi * std::exp(Scalar(-0.5) * xi * xi);
        d.data()[i] = g.data()[i] * (cdf + xi * pdf);
      }
      accumulate(a, d);
    });
  }

  /// Block gather: output row i is the concatenation over k < block of
  /// input rows index[i * block + k], with -1 producing a zero block.
  Var gather_rows(Var a, std::shared_ptr<const std::vector<int>> index, int block = 1) {
    const Mat& x = value(a);
    const Eigen::Index c = x.cols();
    const Eigen::Index rows = static_cast<Eigen::Index>(index->size()) / block;
    Mat out = Mat::Zero(rows, c * block);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (int k = 0; k < block; ++k) {
        const int src = (*index)[i * block + k];
        if (src >= 0) out.block(i, k * c, 1, c) = x.row(src);
      }
    }
    return op(std::move(out), {a}, [this, a, index, block, c, rows](int self) {
      const Mat& g = nodes_[self].grad;
      Mat d = Mat::Zero(value(a).rows(), c);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (int k = 0; k < block; ++k) {
          const int src = (*index)[i * block + k];
          if (src >= 0) d.row(src) += g.block(i, k * c, 1, c);
        }
      }
      accumulate(a, d);
    });
  }

  /// Row-major reshape.
  Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
    const Mat& x = value(a);
    if (rows * cols != x.size()) throw std::invalid_argument("reshape size mismatch");
    Mat out = Eigen::Map<const Mat>(x.data(), rows, cols);
    const Eigen::Index r0 = x.rows(), c0 = x.cols();
    return op(std::move(out), {a}, [this, a, r0, c0](int self) {
      const Mat& g = nodes_[self].grad;
      accumulate(a, Mat(Eigen::Map<const Mat>(g.data(), r0, c0)));
    });
  }

  Var concat_cols(Var a, Var b) {
    const Mat& x = value(a);
    const Mat& y = value(b);
    if (x.rows() != y.rows()) throw std::invalid_argument("concat_cols row mismatch");
    Mat out(x.rows(), x.cols() + y.cols());
    out << x, y;
    const Eigen::Index ca = x.cols(), cb = y.cols();
    return op(std::move(out), {a, b}, [this, a, b, ca, cb](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs(a)) accumulate(a, Mat(g.leftCols(ca)));
      if (needs(b)) accumulate(b, Mat(g.rightCols(cb)));
    });
  }

  /// Mean over `segments` equal contiguous row blocks: (s*k x c) -> (s x c).
  Var segment_mean(Var a, Eigen::Index segments) {
    const Mat& x = value(a);
    const Eigen::Index k = x.rows() / segments;
    Mat out(segments, x.cols());
    for (Eigen::Index s = 0; s < segments; ++s) {
      out.row(s) = x.middleRows(s * k, k).colwise().sum() / Scalar(k);
    }
    return op(std::move(out), {a}, [this, a, segments, k](int self) {
      const Mat& g = nodes_[self].grad;
      Mat d(segments * k, g.cols());
      for (Eigen::Index s = 0; s < segments; ++s) {
        d.middleRows(s * k, k).rowwise() = g.row(s) / Scalar(k);
      }
      accumulate(a, d);
    });
  }

  Var layer_norm(Var a, Var gain, Var bias, Scalar eps = Scalar(1e-5)) {
    const Mat& x = value(a);
    const Eigen::Index n = x.cols();
    auto xhat = std::make_shared<Mat>(x.rows(), n);
    auto inv_std = std::make_shared<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const Scalar mu = x.row(r).mean();
      const Scalar var = (x.row(r).array() - mu).square().mean();
      (*inv_std)(r) = Scalar(1) / std::sqrt(var + eps);
      xhat->row(r) = (x.row(r).array() - mu) * (*inv_std)(r);
    }
    Mat out = (xhat->array().rowwise() * value(gain).row(0).array()).matrix();
    out.rowwise() += value(bias).row(0);
    return op(std::move(out), {a, gain, bias}, [this, a, gain, bias, xhat, inv_std, n](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs(gain)) accumulate(gain, Mat((g.array() * xhat->array()).colwise().sum()));
      if (needs(bias)) accumulate(bias, Mat(g.colwise().sum()));
      if (needs(a)) {
        Mat dxhat = (g.array().rowwise() * value(gain).row(0).array()).matrix();
        Mat d(g.rows(), n);
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const Scalar s1 = dxhat.row(r).sum();
          const Scalar s2 = dxhat.row(r).dot(xhat->row(r));
          d.row(r) = ((*inv_std)(r) / Scalar(n)) *
                     (Scalar(n) * dxhat.row(r).array() - s1 - xhat->row(r).array() * s2).matrix();
        }
        accumulate(a, d);
      }
    });
  }

  /// Multi-head self-attention core. qkv is (batch*tokens x 3E) holding Q|K|V;
  /// returns (batch*tokens x E) of concatenated head outputs.
  Var attention(Var qkv, int batch, int tokens, int heads) {
    const Mat& x = value(qkv);
    const Eigen::Index e = x.cols() / 3;
    const Eigen::Index dh = e / heads;
    const Scalar scale = Scalar(1) / std::sqrt(Scalar(dh));
    auto probs = std::make_shared<std::vector<Mat>>(static_cast<std::size_t>(batch) * heads);
    Mat out(static_cast<Eigen::Index>(batch) * tokens, e);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(b) * tokens;
      for (int h = 0; h < heads; ++h) {
        auto q = x.block(r0, h * dh, tokens, dh);
        auto k = x.block(r0, e + h * dh, tokens, dh);
        auto v = x.block(r0, 2 * e + h * dh, tokens, dh);
        Mat s = (q * k.transpose()) * scale;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
          const Scalar m = s.row(r).maxCoeff();
          s.row(r) = (s.row(r).array() - m).exp();
          s.row(r) /= s.row(r).sum();
        }
        out.block(r0, h * dh, tokens, dh) = s * v;
        (*probs)[b * heads + h] = std::move(s);
      }
    }
    return op(std::move(out), {qkv}, [this, qkv, batch, tokens, heads, e, dh, scale, probs](int self) {
      const Mat& g = nodes_[self].grad;
      const Mat& x = value(qkv);
      Mat d = Mat::Zero(x.rows(), x.cols());
      for (int b = 0; b < batch; ++b) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(b) * tokens;
        for (int h = 0; h < heads; ++h) {
          const Mat& p = (*probs)[b * heads + h];
          auto q = x.block(r0, h * dh, tokens, dh);
          auto k = x.block(r0, e + h * dh, tokens, dh);
          auto v = x.block(r0, 2 * e + h * dh, tokens, dh);
          auto go = g.block(r0, h * dh, tokens, dh);
          Mat dp = go * v.transpose();
          Mat ds(p.rows(), p.cols());
          for (Eigen::Index r = 0; r < p.rows(); ++r) {
            const Scalar dot = dp.row(r).dot(p.row(r));
            ds.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
          }
          d.block(r0, h * dh, tokens, dh) += ds * k * scale;
          d.block(r0, e + h * dh, tokens, dh) += ds.transpose() * q * scale;
          d.block(r0, 2 * e + h * dh, tokens, dh) += p.transpose() * go;
        }
      }
      accumulate(qkv, d);
    });
  }

  /// Weighted mean over rows of cross_entropy(softmax(logits), policy_target)
  /// + value_weight * (value - value_target)^2. Normalized by row count.
  Var policy_value_loss(Var logits, Var value_out, Mat policy_target, Mat value_target, Mat weights,
                        Scalar value_weight) {
    const Mat& z = value(logits);
    const Mat& v = value(value_out);
    const Eigen::Index rows = z.rows();
    auto softmax = std::make_shared<Mat>(z.rows(), z.cols());
    Scalar total = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Scalar m = z.row(r).maxCoeff();
      const Scalar lse = m + std::log((z.row(r).array() - m).exp().sum());
      softmax->row(r) = (z.row(r).array() - lse).exp().matrix();
      const Scalar ce = -(policy_target.row(r).array() * (z.row(r).array() - lse)).sum();
      const Scalar dv = v(r, 0) - value_target(r, 0);
      total += weights(r, 0) * (ce + value_weight * dv * dv);
    }
    Mat out(1, 1);
    out(0, 0) = total / Scalar(rows);
    auto pt = std::make_shared<Mat>(std::move(policy_target));
    auto vt = std::make_shared<Mat>(std::move(value_target));
    auto w = std::make_shared<Mat>(std::move(weights));
    return op(std::move(out), {logits, value_out},
              [this, logits, value_out, softmax, pt, vt, w, value_weight, rows](int self) {
                const Scalar g = nodes_[self].grad(0, 0) / Scalar(rows);
                if (needs(logits)) {
                  Mat d = (*softmax - *pt);
                  for (Eigen::Index r = 0; r < rows; ++r) d.row(r) *= g * (*w)(r, 0);
                  accumulate(logits, d);
                }
                if (needs(value_out)) {
                  const Mat& v = value(value_out);
                  Mat d(rows, 1);
                  for (Eigen::Index r = 0; r < rows; ++r) {
                    d(r, 0) = g * (*w)(r, 0) * value_weight * Scalar(2) * (v(r, 0) - (*vt)(r, 0));
                  }
                  accumulate(value_out, d);
                }
              });
  }

 private:
  struct Node {
    Mat value;
    const Mat* external = nullptr;
    Mat grad;
    bool needs_grad = false;
    std::function<void()> backward;
  };

  // tanh(softplus(x)) and sigmoid(x) from a single exponential.
  static std::pair<Scalar, Scalar> mish_parts(Scalar x) {
    if (x > Scalar(20)) return {Scalar(1), Scalar(1)};
    const Scalar n = std::exp(x);
    const Scalar q = n * (n + Scalar(2));
    return {q / (q + Scalar(2)), n / (Scalar(1) + n)};
  }

  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  void accumulate(Var v, const Mat& g) {
    Node& n = nodes_[v.id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
  }

  Var push(Mat value, bool needs_grad) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  template <typename Fn>
  Var op(Mat out, std::initializer_list<Var> inputs, Fn&& fn) {
    bool any = false;
    for (Var v : inputs) any |= needs(v);
    const bool track = record_ && any;
    Var self = push(std::move(out), track);
    if (track) {
      nodes_[self.id].backward = [fn = std::forward<Fn>(fn), id = self.id]() { fn(id); };
    }
    return self;
  }

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace advgo::ad
