#pragma once

#include <string>
#include <vector>

#include "ltm/optim.hpp"
#include "ltm/tensor.hpp"

namespace ltm {

// y = x W + b with W (in, out) and b (out).
struct Linear {
    Tensor weight;
    Tensor bias;

    static Linear create(int in, int out, Rng& rng, double stddev = 0.02, bool requires_grad = true) {
        Linear l;
        l.weight = Tensor::randn({in, out}, rng, stddev, requires_grad);
        l.bias = Tensor::zeros({out}, requires_grad);
        return l;
    }

    static Linear zeros(int in, int out, bool requires_grad = true) {
        Linear l;
        l.weight = Tensor::zeros({in, out}, requires_grad);
        l.bias = Tensor::zeros({out}, requires_grad);
        return l;
    }

    Tensor forward(const Tensor& x) const { return add(matmul(x, weight), bias); }

    void collect(const std::string& prefix, bool frozen, std::vector<Parameter>& out) const {
        out.push_back(make_param(prefix + ".weight", weight, frozen));
        out.push_back(make_param(prefix + ".bias", bias, frozen));
    }
};

}  // namespace ltm
