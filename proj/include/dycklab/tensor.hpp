#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dycklab/errors.hpp"

namespace dycklab {

// 2-D row-major double tensor with optional gradient storage.  Ops record
// pullbacks on the innermost active GradientTape; with no tape active they
// are plain numeric evaluation.
struct TensorNode {
  int rows = 0, cols = 0;
  std::vector<double> v;
  std::vector<double> g;  // allocated lazily during backward
  bool requires_grad = false;
  std::function<void(TensorNode&)> backward_fn;  // set only for tracked non-leaves

  size_t size() const { return v.size(); }
  void ensure_grad() {
    if (g.empty()) g.assign(v.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor constant(int rows, int cols, double value);
  static Tensor from_data(int rows, int cols, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor uniform(int rows, int cols, double lo, double hi,
                        std::mt19937_64& rng, bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  int rows() const { return check()->rows; }
  int cols() const { return check()->cols; }
  int size() const { return static_cast<int>(check()->v.size()); }
  bool requires_grad() const { return check()->requires_grad; }

  std::vector<double>& data() { return check()->v; }
  const std::vector<double>& data() const { return check()->v; }
  double at(int r, int c) const;
  double scalar_value() const;

  // Gradient of this tensor after a backward pass; empty if none was set.
  const std::vector<double>& grad() const;
  void zero_grad();

  // Value copy detached from any tape.
  Tensor detach() const;

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  TensorNode* check() const {
    if (!node_) throw InputError("use of an undefined tensor");
    return node_.get();
  }
  std::shared_ptr<TensorNode> node_;
};

// RAII scope that records operations for one backward pass.  Tapes nest;
// the innermost active tape records.
class GradientTape {
 public:
  GradientTape();
  ~GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  // Reverse sweep from a scalar loss; a second call on the same tape throws.
  void backward(const Tensor& loss);
  size_t node_count() const { return nodes_.size(); }

 private:
  friend class Recorder;
  std::vector<std::shared_ptr<TensorNode>> nodes_;
  bool consumed_ = false;
};

// --- primitive operations ----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
              bool trans_b = false);
// b may share a's shape, be a [1 x C] row vector, or a [1 x 1] scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Elementwise; b may also be a [1 x C] row or a [1 x 1] scalar.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_rows(const Tensor& a, int r0, int r1);
Tensor slice_cols(const Tensor& a, int c0, int c1);
Tensor tanh_op(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor logistic(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
// gamma, beta: [1 x C]; per-row normalization.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
// Row lookup: result row i = table row ids[i]; gradients scatter-add.
Tensor embedding(const Tensor& table, const std::vector<int>& ids);
Tensor sum_all(const Tensor& a);
Tensor mse_loss(const Tensor& pred, const Tensor& target);
// Softmax cross-entropy over rows; mean over rows, or weighted forms.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);
// Sum of row_weight * nll(row); pair with scale() for custom means.
Tensor cross_entropy_sum(const Tensor& logits, const std::vector<int>& labels,
                         const std::vector<double>& row_weights);

}  // namespace dycklab
