#include "ltm/fatm.hpp"

#include <stdexcept>

namespace ltm {

Tensor attention_mean_pool(const Tensor& prompt, const Tensor& w, const Tensor& b) {
    if (prompt.rank() != 2)
        throw std::runtime_error("attention_mean_pool: prompt must be (T_p, d), got " +
                                 shape_str(prompt.shape()));
    const int t_p = prompt.dim(0);
    Tensor scores = add(matmul(prompt, w), b);        // (T_p, 1)
    Tensor weights = softmax(scores, 0);              // over the token axis
    Tensor pooled = matmul(transpose(weights), prompt);  // (1, d)
    return scalar_mul(pooled, 1.0 / static_cast<double>(t_p));
}

Tensor repeat_align(const Tensor& row, int n) {
    if (n < 1) throw std::runtime_error("repeat_align: n must be >= 1, got " + std::to_string(n));
    Tensor r = row.rank() == 1 ? reshape(row, {1, row.dim(0)}) : row;
    if (r.rank() != 2 || r.dim(0) != 1)
        throw std::runtime_error("repeat_align: expected a single row, got " + shape_str(row.shape()));
    Tensor ones = Tensor::full({n, 1}, 1.0);
    return matmul(ones, r);
}

MultiScaleConv MultiScaleConv::create(int d_model, const std::vector<int>& kernel_sizes, Rng& rng) {
    (void)rng;
    if (kernel_sizes.empty()) throw std::runtime_error("multi_scale_conv: no kernel sizes");
    MultiScaleConv m;
    m.d_model_ = d_model;
    m.kernel_sizes_ = kernel_sizes;
    for (int k : kernel_sizes) {
        if (k < 1 || k % 2 == 0)
            throw std::runtime_error("multi_scale_conv: kernel size must be odd and positive, got " +
                                     std::to_string(k));
        // Delta init: each depthwise kernel starts as the identity filter.
        Tensor ker = Tensor::zeros({d_model, k}, true);
        for (int ch = 0; ch < d_model; ++ch) ker.set(ch, k / 2, 1.0);
        m.kernels_.push_back(ker);
    }
    // Projection starts as the average of the per-scale branches, so the
    // whole block is the identity map at init.
    const int ns = static_cast<int>(kernel_sizes.size());
    m.proj_ = Linear::zeros(ns * d_model, d_model);
    for (int s = 0; s < ns; ++s)
        for (int j = 0; j < d_model; ++j) m.proj_.weight.set(s * d_model + j, j, 1.0 / ns);
    return m;
}

Tensor MultiScaleConv::forward(const Tensor& patch_embed) const {
    if (patch_embed.rank() != 2 || patch_embed.dim(1) != d_model_)
        throw std::runtime_error("multi_scale_conv: expected (n, " + std::to_string(d_model_) +
                                 "), got " + shape_str(patch_embed.shape()));
    std::vector<Tensor> branches;
    branches.reserve(kernels_.size());
    for (const auto& ker : kernels_) branches.push_back(depthwise_conv1d_same(patch_embed, ker));
    return proj_.forward(concat(branches, 1));
}

void MultiScaleConv::collect_params(const std::string& prefix, std::vector<Parameter>& out) const {
    for (size_t i = 0; i < kernels_.size(); ++i)
        out.push_back(make_param(prefix + ".k" + std::to_string(kernel_sizes_[i]), kernels_[i], false));
    proj_.collect(prefix + ".proj", false, out);
}

FuseGate FuseGate::create(int d_model) {
    FuseGate f;
    f.linear_ = Linear::zeros(2 * d_model, d_model);
    f.gate_ = Tensor::zeros({1}, true);
    return f;
}

Tensor FuseGate::forward(const Tensor& conv_feats, const Tensor& prompt_rows,
                         const Tensor& patch_embed) const {
    if (conv_feats.shape() != patch_embed.shape() || conv_feats.shape() != prompt_rows.shape())
        throw std::runtime_error("fuse: shape mismatch " + shape_str(conv_feats.shape()) + " / " +
                                 shape_str(prompt_rows.shape()) + " / " + shape_str(patch_embed.shape()));
    Tensor sg = sigmoid(gate_);
    Tensor mixed = add(mul(prompt_rows, sg), mul(conv_feats, add_scalar(neg(sg), 1.0)));
    Tensor combined = concat({conv_feats, mixed}, 1);
    return add(patch_embed, linear_.forward(combined));
}

void FuseGate::collect_params(const std::string& prefix, std::vector<Parameter>& out) const {
    linear_.collect(prefix + ".linear", false, out);
    out.push_back(make_param(prefix + ".gate", gate_, false));
}

Fatm Fatm::create(int d_model, const std::vector<int>& kernel_sizes, Rng& rng) {
    Fatm f;
    // Zero-initialized pooling scores make Eq-1 start as a plain mean.
    f.pool_w_ = Tensor::zeros({d_model, 1}, true);
    f.pool_b_ = Tensor::zeros({1}, true);
    f.conv_ = MultiScaleConv::create(d_model, kernel_sizes, rng);
    f.fuse_ = FuseGate::create(d_model);
    return f;
}

Fatm::Output Fatm::forward(const Tensor& patch_embed, const Tensor& prompt) const {
    const int n = patch_embed.dim(0);
    Tensor conv_feats = conv_.forward(patch_embed);
    Output out;
    if (prompt.defined()) {
        Tensor pooled = attention_mean_pool(prompt, pool_w_, pool_b_);
        out.prompt_rows = repeat_align(pooled, n);
        out.fused = fuse_.forward(conv_feats, out.prompt_rows, patch_embed);
    } else {
        Tensor zero_rows = Tensor::zeros({n, patch_embed.dim(1)});
        out.fused = fuse_.forward(conv_feats, zero_rows, patch_embed);
    }
    return out;
}

void Fatm::collect_params(const std::string& prefix, std::vector<Parameter>& out) const {
    out.push_back(make_param(prefix + ".pool.w", pool_w_, false));
    out.push_back(make_param(prefix + ".pool.b", pool_b_, false));
    conv_.collect_params(prefix + ".conv", out);
    fuse_.collect_params(prefix + ".fuse", out);
}

}  // namespace ltm
