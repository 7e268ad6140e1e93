#include "dycklab/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dycklab {

namespace {

using EMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EMat>;
using CMapMat = Eigen::Map<const EMat>;

thread_local std::vector<GradientTape*> g_tapes;

GradientTape* active_tape() { return g_tapes.empty() ? nullptr : g_tapes.back(); }

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << "[" << t.rows() << "x" << t.cols() << "]";
  return os.str();
}

std::shared_ptr<TensorNode> fresh(int rows, int cols) {
  auto n = std::make_shared<TensorNode>();
  n->rows = rows;
  n->cols = cols;
  n->v.assign(static_cast<size_t>(rows) * cols, 0.0);
  return n;
}

}  // namespace

class Recorder {
 public:
  // Registers `node` on the active tape with the given pullback when any
  // parent is tracked; otherwise leaves it as a constant result.
  static void record(const std::shared_ptr<TensorNode>& node,
                     std::initializer_list<const Tensor*> parents,
                     std::function<void(TensorNode&)> fn) {
    GradientTape* tape = active_tape();
    if (!tape) return;
    bool any = false;
    for (const Tensor* p : parents) any = any || p->requires_grad();
    if (!any) return;
    node->requires_grad = true;
    node->backward_fn = std::move(fn);
    tape->nodes_.push_back(node);
  }
  static std::vector<std::shared_ptr<TensorNode>>& nodes(GradientTape& t) {
    return t.nodes_;
  }
};

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  if (rows < 1 || cols < 1) throw InputError("tensor dims must be positive");
  auto n = fresh(rows, cols);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::constant(int rows, int cols, double value) {
  Tensor t = zeros(rows, cols);
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

Tensor Tensor::from_data(int rows, int cols, std::vector<double> data,
                         bool requires_grad) {
  if (rows < 1 || cols < 1) throw InputError("tensor dims must be positive");
  if (data.size() != static_cast<size_t>(rows) * cols)
    throw InputError("tensor data length does not match its shape");
  auto n = std::make_shared<TensorNode>();
  n->rows = rows;
  n->cols = cols;
  n->v = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double value) {
  return from_data(1, 1, {value});
}

Tensor Tensor::uniform(int rows, int cols, double lo, double hi,
                       std::mt19937_64& rng, bool requires_grad) {
  Tensor t = zeros(rows, cols, requires_grad);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& x : t.data()) x = dist(rng);
  return t;
}

double Tensor::at(int r, int c) const {
  TensorNode* n = check();
  if (r < 0 || r >= n->rows || c < 0 || c >= n->cols)
    throw InputError("tensor index out of range");
  return n->v[static_cast<size_t>(r) * n->cols + c];
}

double Tensor::scalar_value() const {
  TensorNode* n = check();
  if (n->v.size() != 1) throw InputError("tensor is not a scalar");
  return n->v[0];
}

const std::vector<double>& Tensor::grad() const { return check()->g; }

void Tensor::zero_grad() {
  TensorNode* n = check();
  if (!n->g.empty()) std::fill(n->g.begin(), n->g.end(), 0.0);
}

Tensor Tensor::detach() const {
  TensorNode* n = check();
  return from_data(n->rows, n->cols, n->v, false);
}

GradientTape::GradientTape() { g_tapes.push_back(this); }

GradientTape::~GradientTape() {
  if (!g_tapes.empty() && g_tapes.back() == this) g_tapes.pop_back();
}

void GradientTape::backward(const Tensor& loss) {
  if (consumed_)
    throw TrainingError("backward called twice on the same tape");
  consumed_ = true;
  if (loss.size() != 1) throw InputError("backward needs a scalar loss");
  if (!loss.requires_grad())
    throw InputError("loss does not depend on any tracked parameter");
  loss.node()->ensure_grad();
  loss.node()->g[0] = 1.0;
  // Creation order is already topological (parents precede children).
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    TensorNode& n = **it;
    if (n.g.empty() || !n.backward_fn) continue;
    n.backward_fn(n);
  }
}

// --- op helpers ---------------------------------------------------------------

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError(std::string(op) + ": shape mismatch " + shape_str(a) +
                     " vs " + shape_str(b));
}

Tensor make_result(int rows, int cols, std::vector<double> v,
                   std::initializer_list<const Tensor*> parents,
                   std::function<void(TensorNode&)> fn) {
  Tensor out = Tensor::from_data(rows, cols, std::move(v));
  Recorder::record(out.node(), parents, std::move(fn));
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const int m = trans_a ? a.cols() : a.rows();
  const int k = trans_a ? a.rows() : a.cols();
  const int k2 = trans_b ? b.cols() : b.rows();
  const int n = trans_b ? b.rows() : b.cols();
  if (k != k2)
    throw InputError("matmul: inner dims disagree, " + shape_str(a) +
                     (trans_a ? "^T" : "") + " vs " + shape_str(b) +
                     (trans_b ? "^T" : ""));
  std::vector<double> out(static_cast<size_t>(m) * n);
  {
    CMapMat A(a.data().data(), a.rows(), a.cols());
    CMapMat B(b.data().data(), b.rows(), b.cols());
    MapMat Y(out.data(), m, n);
    if (!trans_a && !trans_b)
      Y.noalias() = A * B;
    else if (!trans_a && trans_b)
      Y.noalias() = A * B.transpose();
    else if (trans_a && !trans_b)
      Y.noalias() = A.transpose() * B;
    else
      Y.noalias() = A.transpose() * B.transpose();
  }
  auto an = a.node(), bn = b.node();
  return make_result(
      m, n, std::move(out), {&a, &b}, [an, bn, trans_a, trans_b](TensorNode& y) {
        CMapMat dY(y.g.data(), y.rows, y.cols);
        CMapMat A(an->v.data(), an->rows, an->cols);
        CMapMat B(bn->v.data(), bn->rows, bn->cols);
        if (an->requires_grad) {
          an->ensure_grad();
          MapMat dA(an->g.data(), an->rows, an->cols);
          if (!trans_a)
            dA.noalias() += trans_b ? (dY * B).eval() : (dY * B.transpose()).eval();
          else
            dA.noalias() +=
                trans_b ? (B.transpose() * dY.transpose()).eval()
                        : (B * dY.transpose()).eval();
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          MapMat dB(bn->g.data(), bn->rows, bn->cols);
          if (!trans_b)
            dB.noalias() +=
                trans_a ? (A * dY).eval() : (A.transpose() * dY).eval();
          else
            dB.noalias() +=
                trans_a ? (dY.transpose() * A.transpose()).eval()
                        : (dY.transpose() * A).eval();
        }
      });
}

namespace {

enum class Broadcast { kNone, kRow, kScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kNone;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  throw InputError(std::string(op) + ": shape mismatch " + shape_str(a) +
                   " vs " + shape_str(b));
}

// Accumulate dY into db under the broadcast pattern.
void reduce_into(TensorNode& bn, const TensorNode& y, Broadcast bc,
                 double sign) {
  bn.ensure_grad();
  const int rows = y.rows, cols = y.cols;
  switch (bc) {
    case Broadcast::kNone:
      for (size_t i = 0; i < y.g.size(); ++i) bn.g[i] += sign * y.g[i];
      break;
    case Broadcast::kRow:
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          bn.g[c] += sign * y.g[static_cast<size_t>(r) * cols + c];
      break;
    case Broadcast::kScalar:
      bn.g[0] += sign * std::accumulate(y.g.begin(), y.g.end(), 0.0);
      break;
  }
}

Tensor add_like(const Tensor& a, const Tensor& b, double sign, const char* op) {
  Broadcast bc = broadcast_kind(a, b, op);
  std::vector<double> out = a.data();
  const int rows = a.rows(), cols = a.cols();
  const auto& bv = b.data();
  switch (bc) {
    case Broadcast::kNone:
      for (size_t i = 0; i < out.size(); ++i) out[i] += sign * bv[i];
      break;
    case Broadcast::kRow:
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          out[static_cast<size_t>(r) * cols + c] += sign * bv[c];
      break;
    case Broadcast::kScalar:
      for (auto& x : out) x += sign * bv[0];
      break;
  }
  auto an = a.node(), bn = b.node();
  return make_result(rows, cols, std::move(out), {&a, &b},
                     [an, bn, bc, sign](TensorNode& y) {
                       if (an->requires_grad) {
                         an->ensure_grad();
                         for (size_t i = 0; i < y.g.size(); ++i)
                           an->g[i] += y.g[i];
                       }
                       if (bn->requires_grad) reduce_into(*bn, y, bc, sign);
                     });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_like(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_like(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  Broadcast bc = broadcast_kind(a, b, "mul");
  std::vector<double> out = a.data();
  const int rows = a.rows(), cols = a.cols();
  const auto& bv = b.data();
  switch (bc) {
    case Broadcast::kNone:
      for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
      break;
    case Broadcast::kRow:
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          out[static_cast<size_t>(r) * cols + c] *= bv[c];
      break;
    case Broadcast::kScalar:
      for (auto& x : out) x *= bv[0];
      break;
  }
  auto an = a.node(), bn = b.node();
  return make_result(
      rows, cols, std::move(out), {&a, &b}, [an, bn, bc](TensorNode& y) {
        const int R = y.rows, C = y.cols;
        if (an->requires_grad) {
          an->ensure_grad();
          for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c) {
              size_t i = static_cast<size_t>(r) * C + c;
              double bval = bc == Broadcast::kNone  ? bn->v[i]
                            : bc == Broadcast::kRow ? bn->v[c]
                                                    : bn->v[0];
              an->g[i] += y.g[i] * bval;
            }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c) {
              size_t i = static_cast<size_t>(r) * C + c;
              double da = y.g[i] * an->v[i];
              if (bc == Broadcast::kNone)
                bn->g[i] += da;
              else if (bc == Broadcast::kRow)
                bn->g[c] += da;
              else
                bn->g[0] += da;
            }
        }
      });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out = a.data();
  for (auto& x : out) x *= s;
  auto an = a.node();
  return make_result(a.rows(), a.cols(), std::move(out), {&a},
                     [an, s](TensorNode& y) {
                       an->ensure_grad();
                       for (size_t i = 0; i < y.g.size(); ++i)
                         an->g[i] += s * y.g[i];
                     });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw InputError("concat_rows: column mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  std::vector<double> out;
  out.reserve(a.data().size() + b.data().size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  auto an = a.node(), bn = b.node();
  const size_t split = a.data().size();
  return make_result(a.rows() + b.rows(), a.cols(), std::move(out), {&a, &b},
                     [an, bn, split](TensorNode& y) {
                       if (an->requires_grad) {
                         an->ensure_grad();
                         for (size_t i = 0; i < split; ++i) an->g[i] += y.g[i];
                       }
                       if (bn->requires_grad) {
                         bn->ensure_grad();
                         for (size_t i = split; i < y.g.size(); ++i)
                           bn->g[i - split] += y.g[i];
                       }
                     });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw InputError("concat_cols: row mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  const int rows = a.rows(), ca = a.cols(), cb = b.cols();
  std::vector<double> out(static_cast<size_t>(rows) * (ca + cb));
  for (int r = 0; r < rows; ++r) {
    std::copy_n(a.data().begin() + static_cast<size_t>(r) * ca, ca,
                out.begin() + static_cast<size_t>(r) * (ca + cb));
    std::copy_n(b.data().begin() + static_cast<size_t>(r) * cb, cb,
                out.begin() + static_cast<size_t>(r) * (ca + cb) + ca);
  }
  auto an = a.node(), bn = b.node();
  return make_result(rows, ca + cb, std::move(out), {&a, &b},
                     [an, bn, ca, cb](TensorNode& y) {
                       const int C = ca + cb;
                       for (int r = 0; r < y.rows; ++r) {
                         if (an->requires_grad) {
                           an->ensure_grad();
                           for (int c = 0; c < ca; ++c)
                             an->g[static_cast<size_t>(r) * ca + c] +=
                                 y.g[static_cast<size_t>(r) * C + c];
                         }
                         if (bn->requires_grad) {
                           bn->ensure_grad();
                           for (int c = 0; c < cb; ++c)
                             bn->g[static_cast<size_t>(r) * cb + c] +=
                                 y.g[static_cast<size_t>(r) * C + ca + c];
                         }
                       }
                     });
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  if (r0 < 0 || r1 > a.rows() || r0 >= r1)
    throw InputError("slice_rows: bad range on " + shape_str(a));
  const int cols = a.cols();
  std::vector<double> out(a.data().begin() + static_cast<size_t>(r0) * cols,
                          a.data().begin() + static_cast<size_t>(r1) * cols);
  auto an = a.node();
  return make_result(r1 - r0, cols, std::move(out), {&a},
                     [an, r0, cols](TensorNode& y) {
                       an->ensure_grad();
                       for (size_t i = 0; i < y.g.size(); ++i)
                         an->g[static_cast<size_t>(r0) * cols + i] += y.g[i];
                     });
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  if (c0 < 0 || c1 > a.cols() || c0 >= c1)
    throw InputError("slice_cols: bad range on " + shape_str(a));
  const int rows = a.rows(), cols = a.cols(), w = c1 - c0;
  std::vector<double> out(static_cast<size_t>(rows) * w);
  for (int r = 0; r < rows; ++r)
    std::copy_n(a.data().begin() + static_cast<size_t>(r) * cols + c0, w,
                out.begin() + static_cast<size_t>(r) * w);
  auto an = a.node();
  return make_result(rows, w, std::move(out), {&a},
                     [an, c0, cols, w](TensorNode& y) {
                       an->ensure_grad();
                       for (int r = 0; r < y.rows; ++r)
                         for (int c = 0; c < w; ++c)
                           an->g[static_cast<size_t>(r) * cols + c0 + c] +=
                               y.g[static_cast<size_t>(r) * w + c];
                     });
}

namespace {

template <class Fwd, class Dfn>
Tensor unary_op(const Tensor& a, Fwd f, Dfn dfn) {
  std::vector<double> out = a.data();
  for (auto& x : out) x = f(x);
  auto an = a.node();
  // The pullback reads the result's values through the node reference it is
  // handed, so it must not capture the result (that would be a cycle).
  return make_result(a.rows(), a.cols(), std::move(out), {&a},
                     [an, dfn](TensorNode& y) {
                       an->ensure_grad();
                       for (size_t i = 0; i < y.g.size(); ++i)
                         an->g[i] += dfn(an->v[i], y.v[i]) * y.g[i];
                     });
}

}  // namespace

Tensor tanh_op(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor logistic(const Tensor& a) {
  return unary_op(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softmax_rows(const Tensor& a) {
  const int rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.data());
  for (int r = 0; r < rows; ++r) {
    double* row = out.data() + static_cast<size_t>(r) * cols;
    double mx = *std::max_element(row, row + cols);
    double sum = 0;
    for (int c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (int c = 0; c < cols; ++c) row[c] /= sum;
  }
  auto an = a.node();
  return make_result(rows, cols, std::move(out), {&a}, [an](TensorNode& y) {
    an->ensure_grad();
    const int C = y.cols;
    for (int r = 0; r < y.rows; ++r) {
      const double* yv = y.v.data() + static_cast<size_t>(r) * C;
      const double* dy = y.g.data() + static_cast<size_t>(r) * C;
      double dot = 0;
      for (int c = 0; c < C; ++c) dot += yv[c] * dy[c];
      double* da = an->g.data() + static_cast<size_t>(r) * C;
      for (int c = 0; c < C; ++c) da[c] += yv[c] * (dy[c] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  const int rows = x.rows(), cols = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != cols || beta.rows() != 1 ||
      beta.cols() != cols)
    throw InputError("layer_norm: gamma/beta must be [1x" +
                     std::to_string(cols) + "]");
  std::vector<double> out(static_cast<size_t>(rows) * cols);
  std::vector<double> xn(out.size()), inv_std(rows);
  for (int r = 0; r < rows; ++r) {
    const double* xv = x.data().data() + static_cast<size_t>(r) * cols;
    double mean = 0;
    for (int c = 0; c < cols; ++c) mean += xv[c];
    mean /= cols;
    double var = 0;
    for (int c = 0; c < cols; ++c) var += (xv[c] - mean) * (xv[c] - mean);
    var /= cols;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < cols; ++c) {
      size_t i = static_cast<size_t>(r) * cols + c;
      xn[i] = (xv[c] - mean) * inv_std[r];
      out[i] = xn[i] * gamma.data()[c] + beta.data()[c];
    }
  }
  auto xnode = x.node(), gn = gamma.node(), bn = beta.node();
  auto xn_shared = std::make_shared<std::vector<double>>(std::move(xn));
  auto is_shared = std::make_shared<std::vector<double>>(std::move(inv_std));
  return make_result(
      rows, cols, std::move(out), {&x, &gamma, &beta},
      [xnode, gn, bn, xn_shared, is_shared](TensorNode& y) {
        const int R = y.rows, C = y.cols;
        const auto& xnv = *xn_shared;
        if (gn->requires_grad) {
          gn->ensure_grad();
          for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c)
              gn->g[c] += y.g[static_cast<size_t>(r) * C + c] *
                          xnv[static_cast<size_t>(r) * C + c];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c)
              bn->g[c] += y.g[static_cast<size_t>(r) * C + c];
        }
        if (xnode->requires_grad) {
          xnode->ensure_grad();
          for (int r = 0; r < R; ++r) {
            const double* dy = y.g.data() + static_cast<size_t>(r) * C;
            const double* xr = xnv.data() + static_cast<size_t>(r) * C;
            // dxn = dy * gamma; dx = (dxn - mean(dxn) - xn*mean(dxn*xn))/std
            double m1 = 0, m2 = 0;
            for (int c = 0; c < C; ++c) {
              double dxn = dy[c] * gn->v[c];
              m1 += dxn;
              m2 += dxn * xr[c];
            }
            m1 /= C;
            m2 /= C;
            double* dx = xnode->g.data() + static_cast<size_t>(r) * C;
            for (int c = 0; c < C; ++c) {
              double dxn = dy[c] * gn->v[c];
              dx[c] += (dxn - m1 - xr[c] * m2) * (*is_shared)[r];
            }
          }
        }
      });
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  if (ids.empty()) throw InputError("embedding: empty id list");
  const int V = table.rows(), E = table.cols();
  for (int id : ids)
    if (id < 0 || id >= V)
      throw InputError("embedding: id " + std::to_string(id) +
                       " out of range for table " + shape_str(table));
  std::vector<double> out(ids.size() * static_cast<size_t>(E));
  for (size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table.data().begin() + static_cast<size_t>(ids[i]) * E, E,
                out.begin() + i * E);
  auto tn = table.node();
  auto ids_copy = std::make_shared<std::vector<int>>(ids);
  return make_result(static_cast<int>(ids.size()), E, std::move(out), {&table},
                     [tn, ids_copy](TensorNode& y) {
                       tn->ensure_grad();
                       const int E2 = y.cols;
                       for (size_t i = 0; i < ids_copy->size(); ++i)
                         for (int c = 0; c < E2; ++c)
                           tn->g[static_cast<size_t>((*ids_copy)[i]) * E2 + c] +=
                               y.g[i * E2 + c];
                     });
}

Tensor sum_all(const Tensor& a) {
  double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  auto an = a.node();
  return make_result(1, 1, {s}, {&a}, [an](TensorNode& y) {
    an->ensure_grad();
    for (auto& g : an->g) g += y.g[0];
  });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "mse_loss");
  const size_t n = pred.data().size();
  double s = 0;
  for (size_t i = 0; i < n; ++i) {
    double d = pred.data()[i] - target.data()[i];
    s += d * d;
  }
  auto pn = pred.node(), tn = target.node();
  return make_result(1, 1, {s / n}, {&pred, &target}, [pn, tn, n](TensorNode& y) {
    double g = y.g[0] * 2.0 / static_cast<double>(n);
    if (pn->requires_grad) {
      pn->ensure_grad();
      for (size_t i = 0; i < n; ++i) pn->g[i] += g * (pn->v[i] - tn->v[i]);
    }
    if (tn->requires_grad) {
      tn->ensure_grad();
      for (size_t i = 0; i < n; ++i) tn->g[i] -= g * (pn->v[i] - tn->v[i]);
    }
  });
}

namespace {

Tensor cross_entropy_impl(const Tensor& logits, const std::vector<int>& labels,
                          const std::vector<double>& row_weights,
                          bool mean_reduce) {
  const int rows = logits.rows(), cols = logits.cols();
  if (static_cast<int>(labels.size()) != rows)
    throw InputError("cross_entropy: need one label per row, got " +
                     std::to_string(labels.size()) + " for " +
                     shape_str(logits));
  if (!row_weights.empty() && static_cast<int>(row_weights.size()) != rows)
    throw InputError("cross_entropy: row weight count mismatch");
  for (int label : labels)
    if (label < 0 || label >= cols)
      throw InputError("cross_entropy: label " + std::to_string(label) +
                       " out of range for " + std::to_string(cols) +
                       " classes");
  auto weight = [&](int r) {
    return row_weights.empty() ? 1.0 : row_weights[r];
  };
  // Stable per-row softmax retained for the pullback.
  auto probs = std::make_shared<std::vector<double>>(
      static_cast<size_t>(rows) * cols);
  double total = 0;
  for (int r = 0; r < rows; ++r) {
    const double* lv = logits.data().data() + static_cast<size_t>(r) * cols;
    double mx = *std::max_element(lv, lv + cols);
    double sum = 0;
    for (int c = 0; c < cols; ++c) sum += std::exp(lv[c] - mx);
    double lse = mx + std::log(sum);
    total += weight(r) * (lse - lv[labels[r]]);
    for (int c = 0; c < cols; ++c)
      (*probs)[static_cast<size_t>(r) * cols + c] = std::exp(lv[c] - lse);
  }
  double denom = 1.0;
  if (mean_reduce) {
    denom = 0;
    for (int r = 0; r < rows; ++r) denom += weight(r);
    if (denom == 0) throw InputError("cross_entropy: all rows are masked out");
  }
  auto ln = logits.node();
  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  auto weights_copy = std::make_shared<std::vector<double>>(row_weights);
  return make_result(
      1, 1, {total / denom}, {&logits},
      [ln, probs, labels_copy, weights_copy, denom](TensorNode& y) {
        ln->ensure_grad();
        const int C = ln->cols, R = ln->rows;
        for (int r = 0; r < R; ++r) {
          double w =
              weights_copy->empty() ? 1.0 : (*weights_copy)[r];
          if (w == 0) continue;
          double scale = y.g[0] * w / denom;
          double* dl = ln->g.data() + static_cast<size_t>(r) * C;
          const double* pv = probs->data() + static_cast<size_t>(r) * C;
          for (int c = 0; c < C; ++c) dl[c] += scale * pv[c];
          dl[(*labels_copy)[r]] -= scale;
        }
      });
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  return cross_entropy_impl(logits, labels, {}, true);
}

Tensor cross_entropy_sum(const Tensor& logits, const std::vector<int>& labels,
                         const std::vector<double>& row_weights) {
  return cross_entropy_impl(logits, labels, row_weights, false);
}

}  // namespace dycklab
