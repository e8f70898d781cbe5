#pragma once

#include <string>
#include <vector>

#include "ltm/layers.hpp"
#include "ltm/tensor.hpp"

namespace ltm {

// Attention-weighted mean pooling of a prompt embedding: scores = PW + b,
// weights = softmax over the token axis, output = (1/T_p) sum_t w_t P_t,
// returned as a (1, d) row.
Tensor attention_mean_pool(const Tensor& prompt, const Tensor& w, const Tensor& b);

// Repeats a (1, d) or (d) row n times into an (n, d) matrix.
Tensor repeat_align(const Tensor& row, int n);

// One depthwise conv over the patch axis per kernel size, concatenated on
// the feature axis and projected back to d_model.
class MultiScaleConv {
  public:
    static MultiScaleConv create(int d_model, const std::vector<int>& kernel_sizes, Rng& rng);

    Tensor forward(const Tensor& patch_embed) const;  // (n, d) -> (n, d)
    void collect_params(const std::string& prefix, std::vector<Parameter>& out) const;

    std::vector<Tensor>& kernels() { return kernels_; }
    Linear& projection() { return proj_; }
    const std::vector<int>& kernel_sizes() const { return kernel_sizes_; }

  private:
    std::vector<int> kernel_sizes_;
    std::vector<Tensor> kernels_;  // each (d, k)
    Linear proj_;                  // (len(ks)*d, d)
    int d_model_ = 0;
};

// F = patch_embed + Linear(concat(conv, sig(g)*P^r + (1-sig(g))*conv)).
// The linear mix starts at zero so the module is exactly the identity on the
// patch embedding until training moves it.
class FuseGate {
  public:
    static FuseGate create(int d_model);

    Tensor forward(const Tensor& conv_feats, const Tensor& prompt_rows,
                   const Tensor& patch_embed) const;
    void collect_params(const std::string& prefix, std::vector<Parameter>& out) const;

    Tensor& gate() { return gate_; }
    Linear& linear() { return linear_; }

  private:
    Linear linear_;  // (2d, d)
    Tensor gate_;    // scalar
};

class Fatm {
  public:
    static Fatm create(int d_model, const std::vector<int>& kernel_sizes, Rng& rng);

    struct Output {
        Tensor fused;        // (n, d)
        Tensor prompt_rows;  // (n, d) repeated pooled prompt; undefined when no prompt
    };

    // prompt may be undefined (prompt path disabled): the gated mix then sees
    // a zero prompt row and no alignment rows are reported.
    Output forward(const Tensor& patch_embed, const Tensor& prompt) const;
    void collect_params(const std::string& prefix, std::vector<Parameter>& out) const;

    Tensor& pool_w() { return pool_w_; }
    Tensor& pool_b() { return pool_b_; }
    MultiScaleConv& conv() { return conv_; }
    FuseGate& fuse() { return fuse_; }

  private:
    Tensor pool_w_;  // (d, 1)
    Tensor pool_b_;  // (1)
    MultiScaleConv conv_;
    FuseGate fuse_;
};

}  // namespace ltm
