#include "ltm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ltm {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw std::runtime_error(std::string(op) + ": incompatible shapes " + shape_str(a) +
                             " and " + shape_str(b));
}

[[noreturn]] void op_error(const char* op, const std::string& msg) {
    throw std::runtime_error(std::string(op) + ": " + msg);
}

void check_rank2(const char* op, const Tensor& t) {
    if (t.rank() != 2) op_error(op, "expected rank-2 tensor, got shape " + shape_str(t.shape()));
}

// Appends a backward closure when any input carries grad. Returns whether
// the output participates in differentiation.
bool maybe_record(Tensor& out, bool any_requires, std::function<void()> fn) {
    if (!any_requires) return false;
    out.set_requires_grad(true);
    out.impl()->tape_node = Tape::active().record(std::move(fn));
    return true;
}

}  // namespace

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string r = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    r += ")";
    return r;
}

Tensor make_tensor(Shape shape, bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    for (int d : shape) {
        if (d <= 0) throw std::runtime_error("tensor: non-positive dimension in shape " + shape_str(shape));
    }
    impl->values.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return make_tensor(std::move(shape), requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    Tensor t = make_tensor(std::move(shape), requires_grad);
    std::fill(t.values().begin(), t.values().end(), value);
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != static_cast<int64_t>(values.size()))
        throw std::runtime_error("tensor: " + std::to_string(values.size()) +
                                 " values do not fill shape " + shape_str(shape));
    Tensor t = make_tensor(std::move(shape), requires_grad);
    t.values() = std::move(values);
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) { return full({1}, value, requires_grad); }

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
    Tensor t = make_tensor(std::move(shape), requires_grad);
    for (auto& v : t.values()) v = rng.normal() * stddev;
    return t;
}

int Tensor::rows() const {
    check_rank2("rows", *this);
    return impl_->shape[0];
}

int Tensor::cols() const {
    check_rank2("cols", *this);
    return impl_->shape[1];
}

double Tensor::item() const {
    if (size() != 1) throw std::runtime_error("item: tensor has shape " + shape_str(shape()));
    return impl_->values[0];
}

double Tensor::at(int i) const { return impl_->values[static_cast<size_t>(i)]; }

double Tensor::at(int i, int j) const {
    return impl_->values[static_cast<size_t>(i) * impl_->shape[1] + j];
}

void Tensor::set(int i, int j, double v) const {
    impl_->values[static_cast<size_t>(i) * impl_->shape[1] + j] = v;
}

std::vector<double>& Tensor::grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
    return impl_->grad;
}

void Tensor::zero_grad() const {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone_detached() const {
    Tensor t = make_tensor(impl_->shape, false);
    t.values() = impl_->values;
    return t;
}

Tape& Tape::active() {
    thread_local Tape tape;
    return tape;
}

int Tape::record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::run_backward_from(int node_id) {
    for (int i = node_id; i >= 0; --i) nodes_[static_cast<size_t>(i)]();
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw std::runtime_error("backward: loss must be a scalar, got shape " +
                                 (loss.defined() ? shape_str(loss.shape()) : std::string("(undefined)")));
    Tape& tape = Tape::active();
    if (loss.requires_grad()) {
        loss.grad()[0] += 1.0;
        if (loss.impl()->tape_node >= 0) tape.run_backward_from(loss.impl()->tape_node);
    }
    tape.reset();
}

// ---- matmul ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_rank2("matmul", a);
    check_rank2("matmul", b);
    const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) shape_error("matmul", a.shape(), b.shape());
    Tensor out = make_tensor({m, n}, false);
    const double* A = a.values().data();
    const double* B = b.values().data();
    double* C = out.values().data();
    for (int i = 0; i < m; ++i) {
        for (int l = 0; l < k; ++l) {
            const double av = A[static_cast<size_t>(i) * k + l];
            if (av == 0.0) continue;
            const double* Brow = B + static_cast<size_t>(l) * n;
            double* Crow = C + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) Crow[j] += av * Brow[j];
        }
    }
    maybe_record(out, a.requires_grad() || b.requires_grad(), [a, b, out, m, k, n]() mutable {
        if (!out.has_grad()) return;
        const double* G = out.grad_view().data();
        if (a.requires_grad()) {
            double* dA = a.grad().data();
            const double* B = b.values().data();
            for (int i = 0; i < m; ++i) {
                const double* Grow = G + static_cast<size_t>(i) * n;
                for (int l = 0; l < k; ++l) {
                    const double* Brow = B + static_cast<size_t>(l) * n;
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += Grow[j] * Brow[j];
                    dA[static_cast<size_t>(i) * k + l] += acc;
                }
            }
        }
        if (b.requires_grad()) {
            double* dB = b.grad().data();
            const double* A = a.values().data();
            for (int l = 0; l < k; ++l) {
                double* dBrow = dB + static_cast<size_t>(l) * n;
                for (int i = 0; i < m; ++i) {
                    const double av = A[static_cast<size_t>(i) * k + l];
                    if (av == 0.0) continue;
                    const double* Grow = G + static_cast<size_t>(i) * n;
                    for (int j = 0; j < n; ++j) dBrow[j] += av * Grow[j];
                }
            }
        }
    });
    return out;
}

// ---- elementwise with limited broadcasting ---------------------------

namespace {

enum class Bcast { kSame, kScalarB, kScalarA, kRowB };

Bcast add_mode(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return Bcast::kSame;
    if (b.size() == 1) return Bcast::kScalarB;
    if (a.size() == 1) return Bcast::kScalarA;
    if (a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0)) return Bcast::kRowB;
    shape_error(op, a.shape(), b.shape());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    const Bcast mode = add_mode("add", a, b);
    const Shape& out_shape = (mode == Bcast::kScalarA) ? b.shape() : a.shape();
    Tensor out = make_tensor(out_shape, false);
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    switch (mode) {
        case Bcast::kSame:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
            break;
        case Bcast::kScalarB:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[0];
            break;
        case Bcast::kScalarA:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[0] + bv[i];
            break;
        case Bcast::kRowB: {
            const int n = a.dim(1);
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i % n];
            break;
        }
    }
    maybe_record(out, a.requires_grad() || b.requires_grad(), [a, b, out, mode]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        if (a.requires_grad()) {
            auto& da = a.grad();
            if (mode == Bcast::kScalarA) {
                for (double gv : g) da[0] += gv;
            } else {
                for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
            }
        }
        if (b.requires_grad()) {
            auto& db = b.grad();
            switch (mode) {
                case Bcast::kSame:
                    for (size_t i = 0; i < g.size(); ++i) db[i] += g[i];
                    break;
                case Bcast::kScalarB:
                    for (double gv : g) db[0] += gv;
                    break;
                case Bcast::kScalarA:
                    for (size_t i = 0; i < g.size(); ++i) db[i] += g[i];
                    break;
                case Bcast::kRowB: {
                    const size_t n = db.size();
                    for (size_t i = 0; i < g.size(); ++i) db[i % n] += g[i];
                    break;
                }
            }
        }
    });
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    const Bcast mode = add_mode("sub", a, b);
    const Shape& out_shape = (mode == Bcast::kScalarA) ? b.shape() : a.shape();
    Tensor out = make_tensor(out_shape, false);
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    switch (mode) {
        case Bcast::kSame:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
            break;
        case Bcast::kScalarB:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[0];
            break;
        case Bcast::kScalarA:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[0] - bv[i];
            break;
        case Bcast::kRowB: {
            const int n = a.dim(1);
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i % n];
            break;
        }
    }
    maybe_record(out, a.requires_grad() || b.requires_grad(), [a, b, out, mode]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        if (a.requires_grad()) {
            auto& da = a.grad();
            if (mode == Bcast::kScalarA) {
                for (double gv : g) da[0] += gv;
            } else {
                for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
            }
        }
        if (b.requires_grad()) {
            auto& db = b.grad();
            switch (mode) {
                case Bcast::kSame:
                    for (size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
                    break;
                case Bcast::kScalarB:
                    for (double gv : g) db[0] -= gv;
                    break;
                case Bcast::kScalarA:
                    for (size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
                    break;
                case Bcast::kRowB: {
                    const size_t n = db.size();
                    for (size_t i = 0; i < g.size(); ++i) db[i % n] -= g[i];
                    break;
                }
            }
        }
    });
    return out;
}

namespace {

Bcast mul_mode(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return Bcast::kSame;
    if (b.size() == 1) return Bcast::kScalarB;
    if (a.size() == 1) return Bcast::kScalarA;
    shape_error(op, a.shape(), b.shape());
}

}  // namespace

Tensor mul(const Tensor& a, const Tensor& b) {
    const Bcast mode = mul_mode("mul", a, b);
    const Shape& out_shape = (mode == Bcast::kScalarA) ? b.shape() : a.shape();
    Tensor out = make_tensor(out_shape, false);
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    switch (mode) {
        case Bcast::kSame:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
            break;
        case Bcast::kScalarB:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[0];
            break;
        default:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[0] * bv[i];
            break;
    }
    maybe_record(out, a.requires_grad() || b.requires_grad(), [a, b, out, mode]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        const auto& av = a.values();
        const auto& bv = b.values();
        if (a.requires_grad()) {
            auto& da = a.grad();
            switch (mode) {
                case Bcast::kSame:
                    for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
                    break;
                case Bcast::kScalarB:
                    for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[0];
                    break;
                default:
                    for (size_t i = 0; i < g.size(); ++i) da[0] += g[i] * bv[i];
                    break;
            }
        }
        if (b.requires_grad()) {
            auto& db = b.grad();
            switch (mode) {
                case Bcast::kSame:
                    for (size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
                    break;
                case Bcast::kScalarB:
                    for (size_t i = 0; i < g.size(); ++i) db[0] += g[i] * av[i];
                    break;
                default:
                    for (size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[0];
                    break;
            }
        }
    });
    return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
    const Bcast mode = mul_mode("div", a, b);
    const Shape& out_shape = (mode == Bcast::kScalarA) ? b.shape() : a.shape();
    Tensor out = make_tensor(out_shape, false);
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    switch (mode) {
        case Bcast::kSame:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] / bv[i];
            break;
        case Bcast::kScalarB:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] / bv[0];
            break;
        default:
            for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[0] / bv[i];
            break;
    }
    maybe_record(out, a.requires_grad() || b.requires_grad(), [a, b, out, mode]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        const auto& av = a.values();
        const auto& bv = b.values();
        if (a.requires_grad()) {
            auto& da = a.grad();
            switch (mode) {
                case Bcast::kSame:
                    for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] / bv[i];
                    break;
                case Bcast::kScalarB:
                    for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] / bv[0];
                    break;
                default:
                    for (size_t i = 0; i < g.size(); ++i) da[0] += g[i] / bv[i];
                    break;
            }
        }
        if (b.requires_grad()) {
            auto& db = b.grad();
            switch (mode) {
                case Bcast::kSame:
                    for (size_t i = 0; i < g.size(); ++i) db[i] -= g[i] * av[i] / (bv[i] * bv[i]);
                    break;
                case Bcast::kScalarB: {
                    const double inv2 = 1.0 / (bv[0] * bv[0]);
                    for (size_t i = 0; i < g.size(); ++i) db[0] -= g[i] * av[i] * inv2;
                    break;
                }
                default:
                    for (size_t i = 0; i < g.size(); ++i) db[i] -= g[i] * av[0] / (bv[i] * bv[i]);
                    break;
            }
        }
    });
    return out;
}

Tensor neg(const Tensor& a) { return scalar_mul(a, -1.0); }

Tensor scalar_mul(const Tensor& a, double c) {
    Tensor out = make_tensor(a.shape(), false);
    const auto& av = a.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * c;
    maybe_record(out, a.requires_grad(), [a, out, c]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        auto& da = a.grad();
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * c;
    });
    return out;
}

Tensor add_scalar(const Tensor& a, double c) {
    Tensor out = make_tensor(a.shape(), false);
    const auto& av = a.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + c;
    maybe_record(out, a.requires_grad(), [a, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        auto& da = a.grad();
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    });
    return out;
}

// ---- softmax / layer norm --------------------------------------------

namespace {

// Lane decomposition: (count, stride, base step) for reductions along an axis.
struct Lanes {
    int n_lanes;
    int lane_len;
    int stride;      // step between consecutive lane elements
    int lane_step;   // step between lane starts
};

Lanes lanes_for(const char* op, const Tensor& x, int axis) {
    if (x.rank() == 1) {
        if (axis != 0) op_error(op, "axis " + std::to_string(axis) + " out of range for rank-1");
        return {1, x.dim(0), 1, 0};
    }
    if (x.rank() == 2) {
        if (axis == 0) return {x.dim(1), x.dim(0), x.dim(1), 1};
        if (axis == 1) return {x.dim(0), x.dim(1), 1, x.dim(1)};
        op_error(op, "axis " + std::to_string(axis) + " out of range for rank-2");
    }
    op_error(op, "expected rank-1 or rank-2, got shape " + shape_str(x.shape()));
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
    const Lanes ln = lanes_for("softmax", x, axis);
    Tensor out = make_tensor(x.shape(), false);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (int l = 0; l < ln.n_lanes; ++l) {
        const size_t base = static_cast<size_t>(l) * ln.lane_step;
        double mx = -1e308;
        for (int i = 0; i < ln.lane_len; ++i) mx = std::max(mx, xv[base + static_cast<size_t>(i) * ln.stride]);
        double denom = 0.0;
        for (int i = 0; i < ln.lane_len; ++i) {
            const size_t idx = base + static_cast<size_t>(i) * ln.stride;
            ov[idx] = std::exp(xv[idx] - mx);
            denom += ov[idx];
        }
        for (int i = 0; i < ln.lane_len; ++i) ov[base + static_cast<size_t>(i) * ln.stride] /= denom;
    }
    maybe_record(out, x.requires_grad(), [x, out, ln]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        const auto& y = out.values();
        auto& dx = x.grad();
        for (int l = 0; l < ln.n_lanes; ++l) {
            const size_t base = static_cast<size_t>(l) * ln.lane_step;
            double dot = 0.0;
            for (int i = 0; i < ln.lane_len; ++i) {
                const size_t idx = base + static_cast<size_t>(i) * ln.stride;
                dot += g[idx] * y[idx];
            }
            for (int i = 0; i < ln.lane_len; ++i) {
                const size_t idx = base + static_cast<size_t>(i) * ln.stride;
                dx[idx] += y[idx] * (g[idx] - dot);
            }
        }
    });
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const int d = x.rank() == 2 ? x.dim(1) : x.dim(0);
    const int rows = x.rank() == 2 ? x.dim(0) : 1;
    if (x.rank() > 2) op_error("layer_norm", "expected rank-1 or rank-2, got " + shape_str(x.shape()));
    if (gamma.rank() != 1 || gamma.dim(0) != d) shape_error("layer_norm(gamma)", x.shape(), gamma.shape());
    if (beta.rank() != 1 || beta.dim(0) != d) shape_error("layer_norm(beta)", x.shape(), beta.shape());

    Tensor out = make_tensor(x.shape(), false);
    auto xhat = std::make_shared<std::vector<double>>(x.values().size());
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
    const auto& xv = x.values();
    const auto& gv = gamma.values();
    const auto& bv = beta.values();
    auto& ov = out.values();
    for (int r = 0; r < rows; ++r) {
        const size_t base = static_cast<size_t>(r) * d;
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += xv[base + j];
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = xv[base + j] - mu;
            var += c * c;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = inv;
        for (int j = 0; j < d; ++j) {
            const double xh = (xv[base + j] - mu) * inv;
            (*xhat)[base + j] = xh;
            ov[base + j] = gv[j] * xh + bv[j];
        }
    }
    maybe_record(out, x.requires_grad() || gamma.requires_grad() || beta.requires_grad(),
                 [x, gamma, beta, out, xhat, inv_std, rows, d]() mutable {
                     if (!out.has_grad()) return;
                     const auto& g = out.grad_view();
                     const auto& gv = gamma.values();
                     for (int r = 0; r < rows; ++r) {
                         const size_t base = static_cast<size_t>(r) * d;
                         if (x.requires_grad()) {
                             double m1 = 0.0, m2 = 0.0;
                             for (int j = 0; j < d; ++j) {
                                 const double dxh = g[base + j] * gv[j];
                                 m1 += dxh;
                                 m2 += dxh * (*xhat)[base + j];
                             }
                             m1 /= d;
                             m2 /= d;
                             auto& dx = x.grad();
                             const double inv = (*inv_std)[r];
                             for (int j = 0; j < d; ++j) {
                                 const double dxh = g[base + j] * gv[j];
                                 dx[base + j] += inv * (dxh - m1 - (*xhat)[base + j] * m2);
                             }
                         }
                         if (gamma.requires_grad()) {
                             auto& dg = gamma.grad();
                             for (int j = 0; j < d; ++j) dg[j] += g[base + j] * (*xhat)[base + j];
                         }
                         if (beta.requires_grad()) {
                             auto& db = beta.grad();
                             for (int j = 0; j < d; ++j) db[j] += g[base + j];
                         }
                     }
                 });
    return out;
}

// ---- convolutions ------------------------------------------------------

Tensor conv1d_same(const Tensor& signal, const Tensor& kernel) {
    if (signal.rank() != 1 || kernel.rank() != 1)
        shape_error("conv1d", signal.shape(), kernel.shape());
    const int L = signal.dim(0), K = kernel.dim(0);
    if (K % 2 == 0) op_error("conv1d", "kernel size must be odd, got " + std::to_string(K));
    const int c = K / 2;
    Tensor out = make_tensor({L}, false);
    const auto& xv = signal.values();
    const auto& kv = kernel.values();
    auto& ov = out.values();
    for (int i = 0; i < L; ++i) {
        double acc = 0.0;
        for (int j = 0; j < K; ++j) {
            const int s = i + j - c;
            if (s >= 0 && s < L) acc += kv[j] * xv[s];
        }
        ov[i] = acc;
    }
    maybe_record(out, signal.requires_grad() || kernel.requires_grad(),
                 [signal, kernel, out, L, K, c]() mutable {
                     if (!out.has_grad()) return;
                     const auto& g = out.grad_view();
                     if (signal.requires_grad()) {
                         auto& dx = signal.grad();
                         const auto& kv = kernel.values();
                         for (int i = 0; i < L; ++i)
                             for (int j = 0; j < K; ++j) {
                                 const int s = i + j - c;
                                 if (s >= 0 && s < L) dx[s] += kv[j] * g[i];
                             }
                     }
                     if (kernel.requires_grad()) {
                         auto& dk = kernel.grad();
                         const auto& xv = signal.values();
                         for (int j = 0; j < K; ++j) {
                             double acc = 0.0;
                             for (int i = 0; i < L; ++i) {
                                 const int s = i + j - c;
                                 if (s >= 0 && s < L) acc += xv[s] * g[i];
                             }
                             dk[j] += acc;
                         }
                     }
                 });
    return out;
}

Tensor depthwise_conv1d_same(const Tensor& x, const Tensor& kernels) {
    check_rank2("depthwise_conv1d", x);
    check_rank2("depthwise_conv1d", kernels);
    const int n = x.dim(0), d = x.dim(1), K = kernels.dim(1);
    if (kernels.dim(0) != d) shape_error("depthwise_conv1d", x.shape(), kernels.shape());
    if (K % 2 == 0) op_error("depthwise_conv1d", "kernel size must be odd, got " + std::to_string(K));
    const int c = K / 2;
    Tensor out = make_tensor({n, d}, false);
    const auto& xv = x.values();
    const auto& kv = kernels.values();
    auto& ov = out.values();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < K; ++j) {
            const int s = i + j - c;
            if (s < 0 || s >= n) continue;
            const size_t orow = static_cast<size_t>(i) * d, xrow = static_cast<size_t>(s) * d;
            for (int ch = 0; ch < d; ++ch) ov[orow + ch] += kv[static_cast<size_t>(ch) * K + j] * xv[xrow + ch];
        }
    maybe_record(out, x.requires_grad() || kernels.requires_grad(), [x, kernels, out, n, d, K, c]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        if (x.requires_grad()) {
            auto& dx = x.grad();
            const auto& kv = kernels.values();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < K; ++j) {
                    const int s = i + j - c;
                    if (s < 0 || s >= n) continue;
                    const size_t grow = static_cast<size_t>(i) * d, xrow = static_cast<size_t>(s) * d;
                    for (int ch = 0; ch < d; ++ch) dx[xrow + ch] += kv[static_cast<size_t>(ch) * K + j] * g[grow + ch];
                }
        }
        if (kernels.requires_grad()) {
            auto& dk = kernels.grad();
            const auto& xv = x.values();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < K; ++j) {
                    const int s = i + j - c;
                    if (s < 0 || s >= n) continue;
                    const size_t grow = static_cast<size_t>(i) * d, xrow = static_cast<size_t>(s) * d;
                    for (int ch = 0; ch < d; ++ch) dk[static_cast<size_t>(ch) * K + j] += xv[xrow + ch] * g[grow + ch];
                }
        }
    });
    return out;
}

// ---- pointwise nonlinearities ------------------------------------------

Tensor relu(const Tensor& x) {
    Tensor out = make_tensor(x.shape(), false);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    maybe_record(out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        const auto& xv = x.values();
        auto& dx = x.grad();
        for (size_t i = 0; i < g.size(); ++i)
            if (xv[i] > 0.0) dx[i] += g[i];
    });
    return out;
}

Tensor gelu(const Tensor& x) {
    Tensor out = make_tensor(x.shape(), false);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i)
        ov[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * kInvSqrt2));
    maybe_record(out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        const auto& xv = x.values();
        auto& dx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) {
            const double phi = 0.5 * (1.0 + std::erf(xv[i] * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xv[i] * xv[i]);
            dx[i] += g[i] * (phi + xv[i] * pdf);
        }
    });
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = make_tensor(x.shape(), false);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) {
        const double v = xv[i];
        if (v >= 0.0) {
            ov[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            ov[i] = e / (1.0 + e);
        }
    }
    maybe_record(out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        const auto& y = out.values();
        auto& dx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
    });
    return out;
}

Tensor sqrt(const Tensor& x) {
    Tensor out = make_tensor(x.shape(), false);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) {
        if (xv[i] < 0.0) op_error("sqrt", "negative input " + std::to_string(xv[i]));
        ov[i] = std::sqrt(xv[i]);
    }
    maybe_record(out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        const auto& y = out.values();
        auto& dx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * 0.5 / y[i];
    });
    return out;
}

Tensor square(const Tensor& x) {
    Tensor out = make_tensor(x.shape(), false);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * xv[i];
    maybe_record(out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        const auto& xv = x.values();
        auto& dx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * 2.0 * xv[i];
    });
    return out;
}

// ---- reductions ----------------------------------------------------------

namespace {

Tensor reduce_axis(const char* op, const Tensor& x, int axis, bool take_mean) {
    // lanes_for(axis) walks lanes ALONG that axis, which is exactly what a
    // reduction collapses; lane index l enumerates the surviving axis.
    const Lanes ln = lanes_for(op, x, axis);
    Shape out_shape;
    if (x.rank() == 1) {
        out_shape = {1};
    } else {
        out_shape = {axis == 0 ? x.dim(1) : x.dim(0)};
    }
    Tensor out = make_tensor(out_shape, false);
    const auto& xv = x.values();
    auto& ov = out.values();
    const double scale = take_mean ? 1.0 / ln.lane_len : 1.0;
    for (int l = 0; l < ln.n_lanes; ++l) {
        const size_t base = static_cast<size_t>(l) * ln.lane_step;
        double acc = 0.0;
        for (int i = 0; i < ln.lane_len; ++i) acc += xv[base + static_cast<size_t>(i) * ln.stride];
        ov[l] = acc * scale;
    }
    maybe_record(out, x.requires_grad(), [x, out, ln, scale]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        auto& dx = x.grad();
        for (int l = 0; l < ln.n_lanes; ++l) {
            const size_t base = static_cast<size_t>(l) * ln.lane_step;
            const double gv = g[l] * scale;
            for (int i = 0; i < ln.lane_len; ++i) dx[base + static_cast<size_t>(i) * ln.stride] += gv;
        }
    });
    return out;
}

}  // namespace

Tensor sum(const Tensor& x, int axis) { return reduce_axis("sum", x, axis, false); }
Tensor mean(const Tensor& x, int axis) { return reduce_axis("mean", x, axis, true); }

Tensor sum_all(const Tensor& x) {
    Tensor out = make_tensor({1}, false);
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    out.values()[0] = acc;
    maybe_record(out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        const double g = out.grad_view()[0];
        auto& dx = x.grad();
        for (auto& d : dx) d += g;
    });
    return out;
}

Tensor mean_all(const Tensor& x) { return scalar_mul(sum_all(x), 1.0 / static_cast<double>(x.size())); }

// ---- structural ops -------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw std::runtime_error("concat: no inputs");
    const int rank = parts[0].rank();
    if (axis < 0 || axis >= rank) op_error("concat", "axis " + std::to_string(axis) + " out of range");
    bool any_rg = false;
    for (const auto& p : parts) {
        if (p.rank() != rank) shape_error("concat", parts[0].shape(), p.shape());
        for (int a = 0; a < rank; ++a)
            if (a != axis && p.dim(a) != parts[0].dim(a)) shape_error("concat", parts[0].shape(), p.shape());
        any_rg = any_rg || p.requires_grad();
    }
    Shape out_shape = parts[0].shape();
    out_shape[axis] = 0;
    for (const auto& p : parts) out_shape[axis] += p.dim(axis);
    Tensor out = make_tensor(out_shape, false);
    auto& ov = out.values();
    if (rank == 1 || axis == 0) {
        size_t pos = 0;
        for (const auto& p : parts) {
            const auto& pv = p.values();
            std::copy(pv.begin(), pv.end(), ov.begin() + pos);
            pos += pv.size();
        }
    } else {  // rank-2, axis == 1
        const int rows = out_shape[0], ocols = out_shape[1];
        int col0 = 0;
        for (const auto& p : parts) {
            const int pc = p.dim(1);
            const auto& pv = p.values();
            for (int r = 0; r < rows; ++r)
                std::copy(pv.begin() + static_cast<size_t>(r) * pc,
                          pv.begin() + static_cast<size_t>(r + 1) * pc,
                          ov.begin() + static_cast<size_t>(r) * ocols + col0);
            col0 += pc;
        }
    }
    maybe_record(out, any_rg, [parts, out, axis, rank]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        if (rank == 1 || axis == 0) {
            size_t pos = 0;
            for (auto& p : parts) {
                if (p.requires_grad()) {
                    auto& dp = p.grad();
                    for (size_t i = 0; i < dp.size(); ++i) dp[i] += g[pos + i];
                }
                pos += p.values().size();
            }
        } else {
            const int rows = out.dim(0), ocols = out.dim(1);
            int col0 = 0;
            for (auto& p : parts) {
                const int pc = p.dim(1);
                if (p.requires_grad()) {
                    auto& dp = p.grad();
                    for (int r = 0; r < rows; ++r)
                        for (int jj = 0; jj < pc; ++jj)
                            dp[static_cast<size_t>(r) * pc + jj] += g[static_cast<size_t>(r) * ocols + col0 + jj];
                }
                col0 += pc;
            }
        }
    });
    return out;
}

Tensor slice(const Tensor& x, int axis, int start, int len) {
    const int rank = x.rank();
    if (axis < 0 || axis >= rank) op_error("slice", "axis " + std::to_string(axis) + " out of range");
    if (start < 0 || len <= 0 || start + len > x.dim(axis))
        op_error("slice", "range [" + std::to_string(start) + "," + std::to_string(start + len) +
                              ") out of bounds for shape " + shape_str(x.shape()));
    Shape out_shape = x.shape();
    out_shape[axis] = len;
    Tensor out = make_tensor(out_shape, false);
    const auto& xv = x.values();
    auto& ov = out.values();
    if (rank == 1) {
        std::copy(xv.begin() + start, xv.begin() + start + len, ov.begin());
    } else if (axis == 0) {
        const int cols = x.dim(1);
        std::copy(xv.begin() + static_cast<size_t>(start) * cols,
                  xv.begin() + static_cast<size_t>(start + len) * cols, ov.begin());
    } else {
        const int cols = x.dim(1);
        for (int r = 0; r < x.dim(0); ++r)
            std::copy(xv.begin() + static_cast<size_t>(r) * cols + start,
                      xv.begin() + static_cast<size_t>(r) * cols + start + len,
                      ov.begin() + static_cast<size_t>(r) * len);
    }
    maybe_record(out, x.requires_grad(), [x, out, axis, start, len, rank]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        auto& dx = x.grad();
        if (rank == 1) {
            for (int i = 0; i < len; ++i) dx[start + i] += g[i];
        } else if (axis == 0) {
            const int cols = x.dim(1);
            for (size_t i = 0; i < g.size(); ++i) dx[static_cast<size_t>(start) * cols + i] += g[i];
        } else {
            const int cols = x.dim(1);
            for (int r = 0; r < x.dim(0); ++r)
                for (int j = 0; j < len; ++j)
                    dx[static_cast<size_t>(r) * cols + start + j] += g[static_cast<size_t>(r) * len + j];
        }
    });
    return out;
}

Tensor transpose(const Tensor& x) {
    check_rank2("transpose", x);
    const int m = x.dim(0), n = x.dim(1);
    Tensor out = make_tensor({n, m}, false);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ov[static_cast<size_t>(j) * m + i] = xv[static_cast<size_t>(i) * n + j];
    maybe_record(out, x.requires_grad(), [x, out, m, n]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        auto& dx = x.grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) dx[static_cast<size_t>(i) * n + j] += g[static_cast<size_t>(j) * m + i];
    });
    return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.size())
        shape_error("reshape", x.shape(), shape);
    Tensor out = make_tensor(shape, false);
    out.values() = x.values();
    maybe_record(out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        auto& dx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    });
    return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
    check_rank2("embedding_lookup", table);
    if (ids.empty()) op_error("embedding_lookup", "empty id list");
    const int V = table.dim(0), d = table.dim(1);
    for (int id : ids)
        if (id < 0 || id >= V)
            op_error("embedding_lookup", "id " + std::to_string(id) + " outside vocab of " + std::to_string(V));
    Tensor out = make_tensor({static_cast<int>(ids.size()), d}, false);
    const auto& tv = table.values();
    auto& ov = out.values();
    for (size_t t = 0; t < ids.size(); ++t)
        std::copy(tv.begin() + static_cast<size_t>(ids[t]) * d, tv.begin() + static_cast<size_t>(ids[t] + 1) * d,
                  ov.begin() + t * d);
    maybe_record(out, table.requires_grad(), [table, out, ids, d]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        auto& dt = table.grad();
        for (size_t t = 0; t < ids.size(); ++t)
            for (int j = 0; j < d; ++j) dt[static_cast<size_t>(ids[t]) * d + j] += g[t * d + j];
    });
    return out;
}

}  // namespace ltm
