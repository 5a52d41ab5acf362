#include "mcl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mcl/kernels.hpp"
#include "mcl/rng.hpp"

namespace mcl {

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw Error("tensor: non-positive dimension in " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

} // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(shape_numel(shape_), 0.0)) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(std::move(values))) {
  if (data_->size() != shape_numel(shape_))
    throw Error("tensor: " + std::to_string(data_->size()) +
                " values do not fill shape " + shape_str(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

double Tensor::item() const {
  if (size() != 1) throw Error("tensor: item() on non-scalar " + shape_str(shape_));
  return (*data_)[0];
}

bool Tensor::finite() const {
  for (double v : *data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = std::make_shared<std::vector<double>>(*data_);
  return t;
}

void check_finite(const char* op, const Tensor& t) {
  if (!t.finite())
    throw Error(std::string(op) + ": non-finite value in tensor " +
                shape_str(t.shape()));
}

// ---------------------------------------------------------------- Graph

Tensor Graph::leaf(const Tensor& t) {
  if (!t.defined()) throw Error("graph: leaf() on undefined tensor");
  if (t.node() >= 0) return t;
  auto it = leaf_of_.find(t.data());
  if (it != leaf_of_.end()) return attach(t, it->second);
  int id = add_node(t.shape(), nullptr);
  leaf_of_.emplace(t.data(), id);
  return attach(t, id);
}

int Graph::add_node(std::vector<int> shape, BackFn back) {
  nodes_.push_back(Node{std::move(shape), std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Graph::grad(int node) {
  if (grads_[node].empty())
    grads_[node].assign(shape_numel(nodes_[node].shape), 0.0);
  return grads_[node];
}

void Graph::backward(const Tensor& root) {
  if (consumed_) throw Error("graph: backward called twice on one graph");
  consumed_ = true;
  if (root.size() != 1)
    throw Error("graph: backward root must be scalar, got " +
                shape_str(root.shape()));
  grads_.assign(nodes_.size(), {});
  if (root.node() < 0) return; // constant root, all gradients zero
  grad(root.node())[0] = 1.0;
  for (int i = root.node(); i >= 0; --i) {
    if (grads_[i].empty() || !nodes_[i].back) continue;
    nodes_[i].back(*this, grads_[i]);
  }
}

Tensor Graph::grad_of(const Tensor& t) const {
  int node = t.node();
  if (node < 0) {
    auto it = leaf_of_.find(t.data());
    if (it != leaf_of_.end()) node = it->second;
  }
  if (node < 0 || grads_.empty() || grads_[node].empty())
    return Tensor(t.shape());
  return Tensor(t.shape(), grads_[node]);
}

// ------------------------------------------------------------------ ops

namespace ops {

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0])
    throw Error("matmul: shape mismatch " + shape_str(a.shape()) + " vs " +
                shape_str(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out({static_cast<int>(m), static_cast<int>(n)});
  kernels::matmul(a.data(), b.data(), out.data(), m, k, n);
  check_finite("matmul", out);
  const int an = a.node(), bn = b.node();
  if (an < 0 && bn < 0) return out;
  int id = g.add_node(out.shape(),
                      [an, bn, a, b, m, k, n](Graph& gg,
                                              const std::vector<double>& go) {
    if (an >= 0) {
      auto& ga = gg.grad(an); // [m x k] += go [m x n] * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = go[i * n + j];
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p)
            ga[i * k + p] += gij * b.data()[p * n + j];
        }
    }
    if (bn >= 0) {
      auto& gb = gg.grad(bn); // [k x n] += A^T * go
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = a.data()[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j)
            gb[p * n + j] += aip * go[i * n + j];
        }
    }
  });
  return g.attach(out, id);
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  const bool same = a.shape() == b.shape();
  const bool bcast =
      !same && a.shape().size() == b.shape().size() + 1 &&
      std::equal(b.shape().begin(), b.shape().end(), a.shape().begin() + 1);
  if (!same && !bcast)
    throw Error("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                shape_str(b.shape()));
  Tensor out(a.shape());
  const std::size_t n = a.size(), bs = b.size();
  if (same) {
    kernels::add(a.data(), b.data(), out.data(), n);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      out.data()[i] = a.data()[i] + b.data()[i % bs];
  }
  check_finite("add", out);
  const int an = a.node(), bn = b.node();
  if (an < 0 && bn < 0) return out;
  int id = g.add_node(out.shape(),
                      [an, bn, n, bs](Graph& gg, const std::vector<double>& go) {
    if (an >= 0) kernels::axpy(1.0, go.data(), gg.grad(an).data(), n);
    if (bn >= 0) {
      auto& gb = gg.grad(bn);
      for (std::size_t i = 0; i < n; ++i) gb[i % bs] += go[i];
    }
  });
  return g.attach(out, id);
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw Error("mul: shape mismatch " + shape_str(a.shape()) + " vs " +
                shape_str(b.shape()));
  Tensor out(a.shape());
  const std::size_t n = a.size();
  kernels::mul(a.data(), b.data(), out.data(), n);
  check_finite("mul", out);
  const int an = a.node(), bn = b.node();
  if (an < 0 && bn < 0) return out;
  int id = g.add_node(out.shape(),
                      [an, bn, a, b, n](Graph& gg, const std::vector<double>& go) {
    if (an >= 0) {
      auto& ga = gg.grad(an);
      for (std::size_t i = 0; i < n; ++i) ga[i] += go[i] * b.data()[i];
    }
    if (bn >= 0) {
      auto& gb = gg.grad(bn);
      for (std::size_t i = 0; i < n; ++i) gb[i] += go[i] * a.data()[i];
    }
  });
  return g.attach(out, id);
}

Tensor relu(Graph& g, const Tensor& x) {
  check_finite("relu", x);
  Tensor out(x.shape());
  const std::size_t n = x.size();
  kernels::relu(x.data(), out.data(), n);
  const int xn = x.node();
  if (xn < 0) return out;
  int id = g.add_node(out.shape(),
                      [xn, x, n](Graph& gg, const std::vector<double>& go) {
    auto& gx = gg.grad(xn);
    for (std::size_t i = 0; i < n; ++i)
      if (x.data()[i] > 0.0) gx[i] += go[i];
  });
  return g.attach(out, id);
}

Tensor tanh(Graph& g, const Tensor& x) {
  check_finite("tanh", x);
  Tensor out(x.shape());
  const std::size_t n = x.size();
  kernels::tanh(x.data(), out.data(), n);
  const int xn = x.node();
  if (xn < 0) return out;
  int id = g.add_node(out.shape(),
                      [xn, out, n](Graph& gg, const std::vector<double>& go) {
    auto& gx = gg.grad(xn);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = out.data()[i];
      gx[i] += go[i] * (1.0 - y * y);
    }
  });
  return g.attach(out, id);
}

Tensor scale(Graph& g, const Tensor& x, double c) {
  Tensor out(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * c;
  check_finite("scale", out);
  const int xn = x.node();
  if (xn < 0) return out;
  int id = g.add_node(out.shape(),
                      [xn, c, n](Graph& gg, const std::vector<double>& go) {
    kernels::axpy(c, go.data(), gg.grad(xn).data(), n);
  });
  return g.attach(out, id);
}

Tensor mean_axis(Graph& g, const Tensor& x, int axis) {
  const auto& sh = x.shape();
  if (axis < 0 || axis >= static_cast<int>(sh.size()))
    throw Error("mean_axis: axis " + std::to_string(axis) +
                " out of range for " + shape_str(sh));
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= sh[i];
  for (std::size_t i = axis + 1; i < sh.size(); ++i) inner *= sh[i];
  const std::size_t nax = sh[axis];
  std::vector<int> oshape;
  for (int i = 0; i < static_cast<int>(sh.size()); ++i)
    if (i != axis) oshape.push_back(sh[i]);
  if (oshape.empty()) oshape.push_back(1);
  Tensor out(oshape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      double s = 0.0;
      for (std::size_t a = 0; a < nax; ++a)
        s += x.data()[(o * nax + a) * inner + i];
      out.data()[o * inner + i] = s / static_cast<double>(nax);
    }
  check_finite("mean_axis", out);
  const int xn = x.node();
  if (xn < 0) return out;
  int id = g.add_node(out.shape(), [xn, outer, inner, nax](
                                       Graph& gg, const std::vector<double>& go) {
    auto& gx = gg.grad(xn);
    const double inv = 1.0 / static_cast<double>(nax);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t a = 0; a < nax; ++a)
        for (std::size_t i = 0; i < inner; ++i)
          gx[(o * nax + a) * inner + i] += go[o * inner + i] * inv;
  });
  return g.attach(out, id);
}

Tensor embedding_lookup(Graph& g, const Tensor& table,
                        const std::vector<int>& ids,
                        std::vector<int> prefix_shape) {
  if (table.shape().size() != 2)
    throw Error("embedding_lookup: table must be 2-d, got " +
                shape_str(table.shape()));
  const int vocab = table.shape()[0], dim = table.shape()[1];
  std::size_t rows = 1;
  for (int d : prefix_shape) rows *= d;
  if (rows != ids.size())
    throw Error("embedding_lookup: prefix shape " + shape_str(prefix_shape) +
                " does not match " + std::to_string(ids.size()) + " ids");
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw Error("embedding_lookup: token id " + std::to_string(id) +
                  " out of range [0," + std::to_string(vocab) + ")");
  std::vector<int> oshape = prefix_shape;
  oshape.push_back(dim);
  Tensor out(oshape);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(table.data() + static_cast<std::size_t>(ids[r]) * dim, dim,
                out.data() + r * dim);
  check_finite("embedding_lookup", out);
  const int tn = table.node();
  if (tn < 0) return out;
  int id = g.add_node(out.shape(), [tn, ids, dim, rows](
                                       Graph& gg, const std::vector<double>& go) {
    auto& gt = gg.grad(tn);
    for (std::size_t r = 0; r < rows; ++r)
      kernels::serial::axpy(1.0, go.data() + r * dim,
                            gt.data() + static_cast<std::size_t>(ids[r]) * dim,
                            dim);
  });
  return g.attach(out, id);
}

Tensor masked_mean_pool(Graph& g, const Tensor& x,
                        const std::vector<double>& mask) {
  if (x.shape().size() != 3)
    throw Error("masked_mean_pool: expected [batch x len x dim], got " +
                shape_str(x.shape()));
  const std::size_t b = x.shape()[0], len = x.shape()[1], dim = x.shape()[2];
  if (mask.size() != b * len)
    throw Error("masked_mean_pool: mask size " + std::to_string(mask.size()) +
                " does not match " + shape_str(x.shape()));
  // Denominator is clamped to 1 so an all-pad row pools to zeros.
  std::vector<double> inv_count(b);
  for (std::size_t i = 0; i < b; ++i) {
    double c = 0.0;
    for (std::size_t l = 0; l < len; ++l) c += mask[i * len + l];
    inv_count[i] = 1.0 / std::max(c, 1.0);
  }
  Tensor out({static_cast<int>(b), static_cast<int>(dim)});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t l = 0; l < len; ++l) {
      const double m = mask[i * len + l];
      if (m == 0.0) continue;
      const double w = m * inv_count[i];
      kernels::serial::axpy(w, x.data() + (i * len + l) * dim,
                            out.data() + i * dim, dim);
    }
  check_finite("masked_mean_pool", out);
  const int xn = x.node();
  if (xn < 0) return out;
  int id = g.add_node(out.shape(), [xn, mask, inv_count, b, len, dim](
                                       Graph& gg, const std::vector<double>& go) {
    auto& gx = gg.grad(xn);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t l = 0; l < len; ++l) {
        const double m = mask[i * len + l];
        if (m == 0.0) continue;
        kernels::serial::axpy(m * inv_count[i], go.data() + i * dim,
                              gx.data() + (i * len + l) * dim, dim);
      }
  });
  return g.attach(out, id);
}

Tensor softmax_cross_entropy(Graph& g, const Tensor& logits,
                             const std::vector<int>& labels) {
  if (logits.shape().size() != 2)
    throw Error("softmax_cross_entropy: logits must be [batch x classes], got " +
                shape_str(logits.shape()));
  check_finite("softmax_cross_entropy", logits);
  const std::size_t b = logits.shape()[0], c = logits.shape()[1];
  if (labels.size() != b)
    throw Error("softmax_cross_entropy: " + std::to_string(labels.size()) +
                " labels for batch " + std::to_string(b));
  auto probs = std::make_shared<std::vector<double>>(b * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= static_cast<int>(c))
      throw Error("softmax_cross_entropy: label " + std::to_string(y) +
                  " out of range [0," + std::to_string(c) + ")");
    const double* row = logits.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < c; ++j)
      (*probs)[i * c + j] = std::exp(row[j] - mx) / z;
    loss += -(row[y] - mx - std::log(z));
  }
  loss /= static_cast<double>(b);
  Tensor out = Tensor::scalar(loss);
  check_finite("softmax_cross_entropy", out);
  const int ln = logits.node();
  if (ln < 0) return out;
  int id = g.add_node(out.shape(), [ln, probs, labels, b, c](
                                       Graph& gg, const std::vector<double>& go) {
    auto& gl = gg.grad(ln);
    const double w = go[0] / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        double p = (*probs)[i * c + j];
        if (static_cast<int>(j) == labels[i]) p -= 1.0;
        gl[i * c + j] += w * p;
      }
  });
  return g.attach(out, id);
}

Tensor mse(Graph& g, const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw Error("mse: shape mismatch " + shape_str(pred.shape()) + " vs " +
                shape_str(target.shape()));
  const std::size_t n = pred.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.data()[i] - target.data()[i];
    loss += d * d;
  }
  loss /= static_cast<double>(n);
  Tensor out = Tensor::scalar(loss);
  check_finite("mse", out);
  const int pn = pred.node();
  if (pn < 0) return out;
  int id = g.add_node(out.shape(), [pn, pred, target, n](
                                       Graph& gg, const std::vector<double>& go) {
    auto& gp = gg.grad(pn);
    const double w = 2.0 * go[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      gp[i] += w * (pred.data()[i] - target.data()[i]);
  });
  return g.attach(out, id);
}

Tensor dropout(Graph& g, const Tensor& x, double rate, std::uint64_t key,
               Mode mode) {
  if (rate < 0.0 || rate >= 1.0)
    throw Error("dropout: rate " + std::to_string(rate) + " not in [0,1)");
  if (mode == Mode::kEval || rate == 0.0) return x;
  const std::size_t n = x.size();
  auto keep = std::make_shared<std::vector<double>>(n);
  const double inv = 1.0 / (1.0 - rate);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng::uniform01(rng::derive(key, i));
    (*keep)[i] = u >= rate ? inv : 0.0;
    out.data()[i] = x.data()[i] * (*keep)[i];
  }
  check_finite("dropout", out);
  const int xn = x.node();
  if (xn < 0) return out;
  int id = g.add_node(out.shape(),
                      [xn, keep, n](Graph& gg, const std::vector<double>& go) {
    auto& gx = gg.grad(xn);
    for (std::size_t i = 0; i < n; ++i) gx[i] += go[i] * (*keep)[i];
  });
  return g.attach(out, id);
}

} // namespace ops

} // namespace mcl
