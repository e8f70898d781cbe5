#include "ltm/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ltm {

Parameter make_param(std::string name, Tensor t, bool frozen) {
    t.set_requires_grad(!frozen);
    return Parameter{std::move(name), std::move(t), frozen};
}

int64_t total_param_count(const std::vector<Parameter>& params) {
    int64_t n = 0;
    for (const auto& p : params) n += p.tensor.size();
    return n;
}

int64_t trainable_param_count(const std::vector<Parameter>& params) {
    int64_t n = 0;
    for (const auto& p : params)
        if (!p.frozen) n += p.tensor.size();
    return n;
}

uint64_t frozen_checksum(const std::vector<Parameter>& params) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params) {
        if (!p.frozen) continue;
        const auto& v = p.tensor.values();
        h = fnv1a64(v.data(), v.size() * sizeof(double), h);
    }
    return h;
}

void Optimizer::step(std::vector<Parameter>& params) {
    for (auto& p : params) {
        if (p.frozen) continue;
        if (!p.tensor.has_grad()) continue;  // not touched by this step's graph
        auto& g = p.tensor.grad();
        for (double gv : g) {
            if (!std::isfinite(gv))
                throw std::runtime_error("optimizer: non-finite gradient in parameter '" + p.name + "'");
        }
        auto& w = p.tensor.values();
        if (mode_ == Mode::kSgd) {
            for (size_t i = 0; i < w.size(); ++i) w[i] -= lr_ * g[i];
        } else {
            State& st = state_[p.name];
            if (st.m.empty()) {
                st.m.assign(w.size(), 0.0);
                st.v.assign(w.size(), 0.0);
            }
            st.t += 1;
            const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(st.t));
            const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(st.t));
            for (size_t i = 0; i < w.size(); ++i) {
                st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * g[i];
                st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * g[i] * g[i];
                const double mhat = st.m[i] / bc1;
                const double vhat = st.v[i] / bc2;
                w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
        p.tensor.zero_grad();
    }
}

}  // namespace ltm
