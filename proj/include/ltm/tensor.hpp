#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ltm/rng.hpp"

namespace ltm {

// Shapes are rank-1 or rank-2; scalars use shape {1}.
using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorImpl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until touched by backward
    bool requires_grad = false;
    int tape_node = -1;  // node that produced this tensor on the active tape, -1 for leaves
};

// Shared handle to a tensor. Copies alias the same storage, which is what
// lets gradients accumulate into parameters across a training step.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int axis) const { return impl_->shape[axis]; }
    int64_t size() const { return static_cast<int64_t>(impl_->values.size()); }
    int rows() const;  // rank-2 only
    int cols() const;

    // Tensor is a shared handle: constness is shallow, so accessors hand out
    // mutable storage the way smart pointers do.
    std::vector<double>& values() const { return impl_->values; }

    double item() const;                          // numel == 1
    double at(int i) const;                       // rank-1
    double at(int i, int j) const;                // rank-2
    void set(int i, double v) const { impl_->values[i] = v; }
    void set(int i, int j, double v) const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg) const { impl_->requires_grad = rg; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::vector<double>& grad() const;  // allocates zeros on first use
    const std::vector<double>& grad_view() const { return impl_->grad; }
    void zero_grad() const;
    void clear_grad() const { impl_->grad.clear(); }

    TensorImpl* impl() const { return impl_.get(); }

    // Deep copy of values (no grad, no tape history).
    Tensor clone_detached() const;

  private:
    std::shared_ptr<TensorImpl> impl_;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    friend Tensor make_tensor(Shape, bool);
};

Tensor make_tensor(Shape shape, bool requires_grad);

// Define-by-run differentiation record. Nodes are appended in forward
// execution order; the reverse sweep visits them back to front, which is a
// valid topological order by construction. One tape per thread.
class Tape {
  public:
    static Tape& active();

    int record(std::function<void()> backward_fn);
    size_t size() const { return nodes_.size(); }
    void reset() { nodes_.clear(); }

    void run_backward_from(int node_id);

  private:
    std::vector<std::function<void()>> nodes_;
};

// Seeds d(loss)/d(loss) = 1, sweeps the tape in reverse accumulating into
// every requires_grad tensor, then resets the record.
void backward(const Tensor& loss);

// ---- primitives ------------------------------------------------------
// Every op validates shapes and throws std::runtime_error naming the
// primitive and the offending shapes. Ops record a tape node only when at
// least one input requires grad.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);  // same shape | scalar {1} | (m,n)+(n) row broadcast
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // same shape | scalar {1}
Tensor div(const Tensor& a, const Tensor& b);  // same shape | scalar {1}
Tensor neg(const Tensor& a);
Tensor scalar_mul(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor softmax(const Tensor& x, int axis);
// Normalizes the last axis; gamma/beta are rank-1 of that length.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-8);
// 1-D cross-correlation with zero "same" padding; kernel length must be odd.
Tensor conv1d_same(const Tensor& signal, const Tensor& kernel);
// x is (n, d); kernels is (d, k): one odd-length kernel per feature column,
// convolved down the row axis with zero same padding.
Tensor depthwise_conv1d_same(const Tensor& x, const Tensor& kernels);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form
Tensor sigmoid(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);

Tensor sum(const Tensor& x, int axis);
Tensor mean(const Tensor& x, int axis);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, int start, int len);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);  // same numel, row-major relabel
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

}  // namespace ltm
