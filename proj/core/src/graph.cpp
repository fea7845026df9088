#include "sessrec/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sessrec::ad {

namespace {
constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC1 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC2 = 0.044715;

template <typename T>
constexpr T neg_inf() {
  return -std::numeric_limits<T>::infinity();
}
}  // namespace

template <typename T>
typename Graph<T>::NodeId Graph<T>::push(Array<T> value, bool needs,
                                         std::function<void(Graph&)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad_enabled_ && needs;
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

template <typename T>
Array<T>& Graph<T>::grad_buf(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Array<T>::zeros(n.value.shape);
  return n.grad;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::input(Array<T> value) {
  return push(std::move(value), false, {});
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::param(Parameter<T>& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return it->second;
  NodeId id = push(p.value, true, {});
  nodes_[id].bound = &p;
  param_nodes_.emplace(&p, id);
  return id;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::linear(NodeId x, NodeId w, NodeId b) {
  const Array<T>& xv = value(x);
  const Array<T>& wv = value(w);
  const Array<T>& bv = value(b);
  check_2d(xv, "linear x");
  check_2d(wv, "linear W");
  require(xv.cols() == wv.rows(), "linear", "inner dimensions differ");
  require(bv.rows() == 1 && bv.cols() == wv.cols(), "linear", "bias shape mismatch");
  const std::int64_t n = xv.rows(), a = xv.cols(), m = wv.cols();
  Array<T> y = Array<T>::zeros({n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    T* yr = y.row(i);
    const T* xr = xv.row(i);
    for (std::int64_t j = 0; j < m; ++j) yr[j] = bv.data[j];
    for (std::int64_t k = 0; k < a; ++k) {
      const T xik = xr[k];
      const T* wr = wv.row(k);
      for (std::int64_t j = 0; j < m; ++j) yr[j] += xik * wr[j];
    }
  }
  bool req = requires_grad(x) || requires_grad(w) || requires_grad(b);
  NodeId out = push(std::move(y), req, {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x, w, b, n, a, m](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      const Array<T>& xv2 = g.value(x);
      const Array<T>& wv2 = g.value(w);
      if (g.requires_grad(x)) {
        Array<T>& gx = g.grad_buf(x);
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          T* gxr = gx.row(i);
          for (std::int64_t k = 0; k < a; ++k) {
            const T* wr = wv2.row(k);
            T acc{0};
            for (std::int64_t j = 0; j < m; ++j) acc += gr[j] * wr[j];
            gxr[k] += acc;
          }
        }
      }
      if (g.requires_grad(w)) {
        Array<T>& gw = g.grad_buf(w);
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          const T* xr = xv2.row(i);
          for (std::int64_t k = 0; k < a; ++k) {
            const T xik = xr[k];
            T* gwr = gw.row(k);
            for (std::int64_t j = 0; j < m; ++j) gwr[j] += xik * gr[j];
          }
        }
      }
      if (g.requires_grad(b)) {
        Array<T>& gb = g.grad_buf(b);
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          for (std::int64_t j = 0; j < m; ++j) gb.data[j] += gr[j];
        }
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::matmul(NodeId a, NodeId b) {
  const Array<T>& av = value(a);
  const Array<T>& bv = value(b);
  check_2d(av, "matmul a");
  check_2d(bv, "matmul b");
  require(av.cols() == bv.rows(), "matmul", "inner dimensions differ");
  const std::int64_t n = av.rows(), k = av.cols(), m = bv.cols();
  Array<T> y = Array<T>::zeros({n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    T* yr = y.row(i);
    const T* ar = av.row(i);
    for (std::int64_t p = 0; p < k; ++p) {
      const T aip = ar[p];
      const T* br = bv.row(p);
      for (std::int64_t j = 0; j < m; ++j) yr[j] += aip * br[j];
    }
  }
  bool req = requires_grad(a) || requires_grad(b);
  NodeId out = push(std::move(y), req, {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, a, b, n, k, m](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      const Array<T>& av2 = g.value(a);
      const Array<T>& bv2 = g.value(b);
      if (g.requires_grad(a)) {
        Array<T>& ga = g.grad_buf(a);
        // dA = G * B^T
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          T* gar = ga.row(i);
          for (std::int64_t p = 0; p < k; ++p) {
            const T* br = bv2.row(p);
            T acc{0};
            for (std::int64_t j = 0; j < m; ++j) acc += gr[j] * br[j];
            gar[p] += acc;
          }
        }
      }
      if (g.requires_grad(b)) {
        Array<T>& gb = g.grad_buf(b);
        // dB = A^T * G
        for (std::int64_t i = 0; i < n; ++i) {
          const T* ar = av2.row(i);
          const T* gr = go.row(i);
          for (std::int64_t p = 0; p < k; ++p) {
            const T aip = ar[p];
            T* gbr = gb.row(p);
            for (std::int64_t j = 0; j < m; ++j) gbr[j] += aip * gr[j];
          }
        }
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::matmul_nt(NodeId a, NodeId b) {
  const Array<T>& av = value(a);
  const Array<T>& bv = value(b);
  check_2d(av, "matmul_nt a");
  check_2d(bv, "matmul_nt b");
  require(av.cols() == bv.cols(), "matmul_nt", "inner dimensions differ");
  const std::int64_t n = av.rows(), k = av.cols(), m = bv.rows();
  Array<T> y = Array<T>::zeros({n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    const T* ar = av.row(i);
    T* yr = y.row(i);
    for (std::int64_t j = 0; j < m; ++j) {
      const T* br = bv.row(j);
      T acc{0};
      for (std::int64_t p = 0; p < k; ++p) acc += ar[p] * br[p];
      yr[j] = acc;
    }
  }
  bool req = requires_grad(a) || requires_grad(b);
  NodeId out = push(std::move(y), req, {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, a, b, n, k, m](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      const Array<T>& av2 = g.value(a);
      const Array<T>& bv2 = g.value(b);
      if (g.requires_grad(a)) {
        Array<T>& ga = g.grad_buf(a);
        // dA = G * B
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          T* gar = ga.row(i);
          for (std::int64_t j = 0; j < m; ++j) {
            const T gij = gr[j];
            const T* br = bv2.row(j);
            for (std::int64_t p = 0; p < k; ++p) gar[p] += gij * br[p];
          }
        }
      }
      if (g.requires_grad(b)) {
        Array<T>& gb = g.grad_buf(b);
        // dB = G^T * A
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          const T* ar = av2.row(i);
          for (std::int64_t j = 0; j < m; ++j) {
            const T gij = gr[j];
            T* gbr = gb.row(j);
            for (std::int64_t p = 0; p < k; ++p) gbr[p] += gij * ar[p];
          }
        }
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::embedding(NodeId table, std::vector<std::int32_t> ids) {
  const Array<T>& tv = value(table);
  check_2d(tv, "embedding table");
  const std::int64_t rows = tv.rows(), d = tv.cols();
  const std::int64_t n = static_cast<std::int64_t>(ids.size());
  for (auto id : ids)
    require(id >= 0 && id < rows, "embedding", "id out of range: " + std::to_string(id));
  Array<T> y = Array<T>::zeros({n, d});
  for (std::int64_t i = 0; i < n; ++i)
    std::copy_n(tv.row(ids[i]), d, y.row(i));
  NodeId out = push(std::move(y), requires_grad(table), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, table, ids = std::move(ids), d](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      Array<T>& gt = g.grad_buf(table);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const T* gr = go.row(static_cast<std::int64_t>(i));
        T* tr = gt.row(ids[i]);
        for (std::int64_t j = 0; j < d; ++j) tr[j] += gr[j];
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::layer_norm(NodeId x, NodeId gain, NodeId bias) {
  const Array<T>& xv = value(x);
  const Array<T>& gv = value(gain);
  const Array<T>& bv = value(bias);
  check_2d(xv, "layer_norm x");
  const std::int64_t n = xv.rows(), d = xv.cols();
  require(gv.rows() == 1 && gv.cols() == d && bv.rows() == 1 && bv.cols() == d, "layer_norm",
          "gain/bias shape mismatch");
  Array<T> y = Array<T>::zeros({n, d});
  Array<T> xhat = Array<T>::zeros({n, d});
  std::vector<T> inv_std(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const T* xr = xv.row(i);
    double mu = 0;
    for (std::int64_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0;
    for (std::int64_t j = 0; j < d; ++j) {
      double c = xr[j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[i] = static_cast<T>(is);
    T* hr = xhat.row(i);
    T* yr = y.row(i);
    for (std::int64_t j = 0; j < d; ++j) {
      hr[j] = static_cast<T>((xr[j] - mu) * is);
      yr[j] = hr[j] * gv.data[j] + bv.data[j];
    }
  }
  bool req = requires_grad(x) || requires_grad(gain) || requires_grad(bias);
  NodeId out = push(std::move(y), req, {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std),
                        n, d](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      const Array<T>& gv2 = g.value(gain);
      if (g.requires_grad(x)) {
        Array<T>& gx = g.grad_buf(x);
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          const T* hr = xhat.row(i);
          T* gxr = gx.row(i);
          double m1 = 0, m2 = 0;
          for (std::int64_t j = 0; j < d; ++j) {
            double dh = static_cast<double>(gr[j]) * gv2.data[j];
            m1 += dh;
            m2 += dh * hr[j];
          }
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          for (std::int64_t j = 0; j < d; ++j) {
            double dh = static_cast<double>(gr[j]) * gv2.data[j];
            gxr[j] += static_cast<T>((dh - m1 - hr[j] * m2) * inv_std[i]);
          }
        }
      }
      if (g.requires_grad(gain)) {
        Array<T>& gg = g.grad_buf(gain);
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          const T* hr = xhat.row(i);
          for (std::int64_t j = 0; j < d; ++j) gg.data[j] += gr[j] * hr[j];
        }
      }
      if (g.requires_grad(bias)) {
        Array<T>& gb = g.grad_buf(bias);
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gr = go.row(i);
          for (std::int64_t j = 0; j < d; ++j) gb.data[j] += gr[j];
        }
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::l2_normalize(NodeId x) {
  const Array<T>& xv = value(x);
  check_2d(xv, "l2_normalize x");
  const std::int64_t n = xv.rows(), d = xv.cols();
  Array<T> y = Array<T>::zeros({n, d});
  std::vector<T> norms(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const T* xr = xv.row(i);
    double s = 0;
    for (std::int64_t j = 0; j < d; ++j) s += static_cast<double>(xr[j]) * xr[j];
    double r = std::sqrt(s);
    norms[i] = static_cast<T>(r);
    if (r > 0) {
      T* yr = y.row(i);
      for (std::int64_t j = 0; j < d; ++j) yr[j] = static_cast<T>(xr[j] / r);
    }
  }
  NodeId out = push(std::move(y), requires_grad(x), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x, norms = std::move(norms), n, d](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      const Array<T>& yv = g.nodes_[out].value;
      Array<T>& gx = g.grad_buf(x);
      for (std::int64_t i = 0; i < n; ++i) {
        if (norms[i] == T{0}) continue;  // defined singularity: zero gradient
        const T* gr = go.row(i);
        const T* yr = yv.row(i);
        T* gxr = gx.row(i);
        double dot = 0;
        for (std::int64_t j = 0; j < d; ++j) dot += static_cast<double>(gr[j]) * yr[j];
        for (std::int64_t j = 0; j < d; ++j)
          gxr[j] += static_cast<T>((gr[j] - yr[j] * dot) / norms[i]);
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::add(NodeId a, NodeId b) {
  const Array<T>& av = value(a);
  const Array<T>& bv = value(b);
  require(av.same_shape(bv), "add", "shape mismatch");
  Array<T> y = av;
  for (std::int64_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
  bool req = requires_grad(a) || requires_grad(b);
  NodeId out = push(std::move(y), req, {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, a, b](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      for (NodeId p : {a, b}) {
        if (!g.requires_grad(p)) continue;
        Array<T>& gp = g.grad_buf(p);
        for (std::int64_t i = 0; i < go.size(); ++i) gp.data[i] += go.data[i];
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::mul(NodeId a, NodeId b) {
  const Array<T>& av = value(a);
  const Array<T>& bv = value(b);
  require(av.same_shape(bv), "mul", "shape mismatch");
  Array<T> y = av;
  for (std::int64_t i = 0; i < y.size(); ++i) y.data[i] *= bv.data[i];
  bool req = requires_grad(a) || requires_grad(b);
  NodeId out = push(std::move(y), req, {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, a, b](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      if (g.requires_grad(a)) {
        const Array<T>& bv2 = g.value(b);
        Array<T>& ga = g.grad_buf(a);
        for (std::int64_t i = 0; i < go.size(); ++i) ga.data[i] += go.data[i] * bv2.data[i];
      }
      if (g.requires_grad(b)) {
        const Array<T>& av2 = g.value(a);
        Array<T>& gb = g.grad_buf(b);
        for (std::int64_t i = 0; i < go.size(); ++i) gb.data[i] += go.data[i] * av2.data[i];
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::scale(NodeId x, T s) {
  Array<T> y = value(x);
  for (auto& v : y.data) v *= s;
  NodeId out = push(std::move(y), requires_grad(x), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x, s](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      Array<T>& gx = g.grad_buf(x);
      for (std::int64_t i = 0; i < go.size(); ++i) gx.data[i] += go.data[i] * s;
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::add_const(NodeId x, T c) {
  Array<T> y = value(x);
  for (auto& v : y.data) v += c;
  NodeId out = push(std::move(y), requires_grad(x), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      Array<T>& gx = g.grad_buf(x);
      for (std::int64_t i = 0; i < go.size(); ++i) gx.data[i] += go.data[i];
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::add_row_broadcast(NodeId x, NodeId row) {
  const Array<T>& xv = value(x);
  const Array<T>& rv = value(row);
  check_2d(xv, "add_row_broadcast x");
  require(rv.rows() == 1 && rv.cols() == xv.cols(), "add_row_broadcast", "row shape mismatch");
  const std::int64_t n = xv.rows(), d = xv.cols();
  Array<T> y = xv;
  for (std::int64_t i = 0; i < n; ++i) {
    T* yr = y.row(i);
    for (std::int64_t j = 0; j < d; ++j) yr[j] += rv.data[j];
  }
  bool req = requires_grad(x) || requires_grad(row);
  NodeId out = push(std::move(y), req, {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x, row, n, d](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      if (g.requires_grad(x)) {
        Array<T>& gx = g.grad_buf(x);
        for (std::int64_t i = 0; i < go.size(); ++i) gx.data[i] += go.data[i];
      }
      if (g.requires_grad(row)) {
        Array<T>& gr = g.grad_buf(row);
        for (std::int64_t i = 0; i < n; ++i) {
          const T* gor = go.row(i);
          for (std::int64_t j = 0; j < d; ++j) gr.data[j] += gor[j];
        }
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::concat_cols(const std::vector<NodeId>& xs) {
  require(!xs.empty(), "concat_cols", "no inputs");
  const std::int64_t n = value(xs[0]).rows();
  std::int64_t total = 0;
  bool req = false;
  for (NodeId id : xs) {
    const Array<T>& v = value(id);
    check_2d(v, "concat_cols input");
    require(v.rows() == n, "concat_cols", "row count mismatch");
    total += v.cols();
    req = req || requires_grad(id);
  }
  Array<T> y = Array<T>::zeros({n, total});
  std::int64_t off = 0;
  for (NodeId id : xs) {
    const Array<T>& v = value(id);
    for (std::int64_t i = 0; i < n; ++i) std::copy_n(v.row(i), v.cols(), y.row(i) + off);
    off += v.cols();
  }
  NodeId out = push(std::move(y), req, {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, xs, n](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      std::int64_t off2 = 0;
      for (NodeId id : xs) {
        const std::int64_t c = g.value(id).cols();
        if (g.requires_grad(id)) {
          Array<T>& gp = g.grad_buf(id);
          for (std::int64_t i = 0; i < n; ++i) {
            const T* gr = go.row(i) + off2;
            T* pr = gp.row(i);
            for (std::int64_t j = 0; j < c; ++j) pr[j] += gr[j];
          }
        }
        off2 += c;
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::slice_cols(NodeId x, std::int64_t start, std::int64_t len) {
  const Array<T>& xv = value(x);
  check_2d(xv, "slice_cols x");
  require(start >= 0 && len > 0 && start + len <= xv.cols(), "slice_cols", "range out of bounds");
  const std::int64_t n = xv.rows();
  Array<T> y = Array<T>::zeros({n, len});
  for (std::int64_t i = 0; i < n; ++i) std::copy_n(xv.row(i) + start, len, y.row(i));
  NodeId out = push(std::move(y), requires_grad(x), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x, start, len, n](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      Array<T>& gx = g.grad_buf(x);
      for (std::int64_t i = 0; i < n; ++i) {
        const T* gr = go.row(i);
        T* xr = gx.row(i) + start;
        for (std::int64_t j = 0; j < len; ++j) xr[j] += gr[j];
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::mean_rows(NodeId x) {
  const Array<T>& xv = value(x);
  check_2d(xv, "mean_rows x");
  const std::int64_t n = xv.rows(), d = xv.cols();
  require(n > 0, "mean_rows", "empty input");
  Array<T> y = Array<T>::zeros({1, d});
  for (std::int64_t i = 0; i < n; ++i) {
    const T* xr = xv.row(i);
    for (std::int64_t j = 0; j < d; ++j) y.data[j] += xr[j];
  }
  const T inv = T{1} / static_cast<T>(n);
  for (auto& v : y.data) v *= inv;
  NodeId out = push(std::move(y), requires_grad(x), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x, n, d, inv](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      Array<T>& gx = g.grad_buf(x);
      for (std::int64_t i = 0; i < n; ++i) {
        T* xr = gx.row(i);
        for (std::int64_t j = 0; j < d; ++j) xr[j] += go.data[j] * inv;
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::softmax_rows(NodeId x, const Array<T>* mask) {
  const Array<T>& xv = value(x);
  check_2d(xv, "softmax_rows x");
  const std::int64_t n = xv.rows(), m = xv.cols();
  if (mask) require(mask->same_shape(xv), "softmax_rows", "mask shape mismatch");
  Array<T> y = Array<T>::zeros({n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    const T* xr = xv.row(i);
    const T* mr = mask ? mask->row(i) : nullptr;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < m; ++j) {
      double z = static_cast<double>(xr[j]) + (mr ? static_cast<double>(mr[j]) : 0.0);
      if (z > mx) mx = z;
    }
    require(std::isfinite(mx), "softmax_rows", "fully blocked row");
    // double accumulation regardless of T
    double sum = 0;
    T* yr = y.row(i);
    for (std::int64_t j = 0; j < m; ++j) {
      double z = static_cast<double>(xr[j]) + (mr ? static_cast<double>(mr[j]) : 0.0);
      double e = std::exp(z - mx);
      yr[j] = static_cast<T>(e);
      sum += e;
    }
    for (std::int64_t j = 0; j < m; ++j) yr[j] = static_cast<T>(yr[j] / sum);
  }
  NodeId out = push(std::move(y), requires_grad(x), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x, n, m](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      const Array<T>& yv = g.nodes_[out].value;
      Array<T>& gx = g.grad_buf(x);
      for (std::int64_t i = 0; i < n; ++i) {
        const T* gr = go.row(i);
        const T* yr = yv.row(i);
        T* gxr = gx.row(i);
        double dot = 0;
        for (std::int64_t j = 0; j < m; ++j) dot += static_cast<double>(gr[j]) * yr[j];
        for (std::int64_t j = 0; j < m; ++j)
          gxr[j] += static_cast<T>(yr[j] * (static_cast<double>(gr[j]) - dot));
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::gelu(NodeId x) {
  const Array<T>& xv = value(x);
  Array<T> y = xv;
  for (auto& v : y.data) {
    double xd = v;
    double t = std::tanh(kGeluC1 * (xd + kGeluC2 * xd * xd * xd));
    v = static_cast<T>(0.5 * xd * (1.0 + t));
  }
  NodeId out = push(std::move(y), requires_grad(x), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, x](Graph& g) {
      const Array<T>& go = g.nodes_[out].grad;
      const Array<T>& xv2 = g.value(x);
      Array<T>& gx = g.grad_buf(x);
      for (std::int64_t i = 0; i < go.size(); ++i) {
        double xd = xv2.data[i];
        double t = std::tanh(kGeluC1 * (xd + kGeluC2 * xd * xd * xd));
        double d = 0.5 * (1.0 + t) +
                   0.5 * xd * (1.0 - t * t) * kGeluC1 * (1.0 + 3.0 * kGeluC2 * xd * xd);
        gx.data[i] += static_cast<T>(go.data[i] * d);
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::cross_entropy_sum(NodeId logits,
                                                      const std::vector<std::int32_t>& targets,
                                                      std::int32_t ignore_id,
                                                      std::int64_t* n_targets) {
  const Array<T>& lv = value(logits);
  check_2d(lv, "cross_entropy logits");
  const std::int64_t n = lv.rows(), vsize = lv.cols();
  require(static_cast<std::int64_t>(targets.size()) == n, "cross_entropy",
          "targets length mismatch");
  Array<T> probs = Array<T>::zeros({n, vsize});
  double loss = 0;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::int32_t t = targets[i];
    if (t == ignore_id) continue;
    require(t >= 0 && t < vsize, "cross_entropy", "target out of range: " + std::to_string(t));
    const T* lr = lv.row(i);
    double mx = lr[0];
    for (std::int64_t j = 1; j < vsize; ++j) mx = std::max(mx, static_cast<double>(lr[j]));
    double sum = 0;
    T* pr = probs.row(i);
    for (std::int64_t j = 0; j < vsize; ++j) {
      double e = std::exp(static_cast<double>(lr[j]) - mx);
      pr[j] = static_cast<T>(e);
      sum += e;
    }
    for (std::int64_t j = 0; j < vsize; ++j) pr[j] = static_cast<T>(pr[j] / sum);
    loss += std::log(sum) + mx - static_cast<double>(lr[t]);
    ++count;
  }
  require(count > 0, "cross_entropy", "all positions ignored");
  if (n_targets) *n_targets = count;
  NodeId out = push(Array<T>::scalar(static_cast<T>(loss)), requires_grad(logits), {});
  if (nodes_[out].needs_grad) {
    nodes_[out].back = [out, logits, targets, ignore_id, probs = std::move(probs), n,
                        vsize](Graph& g) {
      const T gs = g.nodes_[out].grad.data[0];
      Array<T>& gl = g.grad_buf(logits);
      for (std::int64_t i = 0; i < n; ++i) {
        std::int32_t t = targets[i];
        if (t == ignore_id) continue;
        const T* pr = probs.row(i);
        T* gr = gl.row(i);
        for (std::int64_t j = 0; j < vsize; ++j) gr[j] += gs * pr[j];
        gr[t] -= gs;
      }
    };
  }
  return out;
}

template <typename T>
typename Graph<T>::NodeId Graph<T>::cross_entropy_mean(NodeId logits,
                                                       const std::vector<std::int32_t>& targets,
                                                       std::int32_t ignore_id) {
  std::int64_t count = 0;
  NodeId s = cross_entropy_sum(logits, targets, ignore_id, &count);
  return scale(s, T{1} / static_cast<T>(count));
}

template <typename T>
void Graph<T>::backward(NodeId loss) {
  const Array<T>& lv = value(loss);
  require(lv.size() == 1, "backward", "loss must be a scalar node");
  require(nodes_[loss].needs_grad, "backward", "loss does not depend on any parameter");
  grad_buf(loss).data[0] = T{1};
  for (std::int64_t i = loss; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.back) n.back(*this);
    if (n.bound) {
      Array<T>& pg = n.bound->grad;
      for (std::int64_t j = 0; j < n.grad.size(); ++j) pg.data[j] += n.grad.data[j];
    }
  }
}

template <typename T>
Array<T> causal_mask(std::int64_t n) {
  Array<T> m = Array<T>::zeros({n, n});
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) m.at(i, j) = neg_inf<T>();
  return m;
}

template <typename T>
Array<T> full_mask(std::int64_t n) {
  return Array<T>::zeros({n, n});
}

template <typename T>
void fix_all_blocked_rows(Array<T>& mask) {
  const std::int64_t n = mask.rows(), m = mask.cols();
  for (std::int64_t i = 0; i < n; ++i) {
    bool any_allowed = false;
    for (std::int64_t j = 0; j < m; ++j) {
      if (mask.at(i, j) == T{0}) {
        any_allowed = true;
        break;
      }
    }
    if (!any_allowed && i < m) mask.at(i, i) = T{0};
  }
}

template <typename T>
typename Graph<T>::NodeId multi_head_attention(Graph<T>& g, typename Graph<T>::NodeId x,
                                               const Array<T>& mask,
                                               const AttentionParams<T>& p, int heads) {
  const std::int64_t d = g.value(x).cols();
  require(heads > 0 && d % heads == 0, "attention", "model dim not divisible by head count");
  const std::int64_t seq = g.value(x).rows();
  require(mask.rows() == seq && mask.cols() == seq, "attention", "mask shape mismatch");
  Array<T> fixed = mask;
  fix_all_blocked_rows(fixed);
  const std::int64_t dh = d / heads;
  auto q = g.linear(x, p.wq, p.bq);
  auto k = g.matmul(x, p.wk);
  auto v = g.linear(x, p.wv, p.bv);
  std::vector<typename Graph<T>::NodeId> ctx;
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  for (int h = 0; h < heads; ++h) {
    auto qh = g.slice_cols(q, h * dh, dh);
    auto kh = g.slice_cols(k, h * dh, dh);
    auto vh = g.slice_cols(v, h * dh, dh);
    auto scores = g.scale(g.matmul_nt(qh, kh), inv_sqrt);
    auto attn = g.softmax_rows(scores, &fixed);
    ctx.push_back(g.matmul(attn, vh));
  }
  auto merged = heads == 1 ? ctx[0] : g.concat_cols(ctx);
  return g.linear(merged, p.wo, p.bo);
}

template class Graph<float>;
template class Graph<double>;
template Array<float> causal_mask<float>(std::int64_t);
template Array<double> causal_mask<double>(std::int64_t);
template Array<float> full_mask<float>(std::int64_t);
template Array<double> full_mask<double>(std::int64_t);
template void fix_all_blocked_rows<float>(Array<float>&);
template void fix_all_blocked_rows<double>(Array<double>&);
template Graph<float>::NodeId multi_head_attention<float>(Graph<float>&, Graph<float>::NodeId,
                                                          const Array<float>&,
                                                          const AttentionParams<float>&, int);
template Graph<double>::NodeId multi_head_attention<double>(Graph<double>&, Graph<double>::NodeId,
                                                            const Array<double>&,
                                                            const AttentionParams<double>&, int);

}  // namespace sessrec::ad
