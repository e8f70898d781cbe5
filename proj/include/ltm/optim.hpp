#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ltm/tensor.hpp"

namespace ltm {

// Named model weight. Frozen parameters never receive optimizer updates and
// carry requires_grad == false so backward skips their gradient entirely.
struct Parameter {
    std::string name;
    Tensor tensor;
    bool frozen = false;
};

Parameter make_param(std::string name, Tensor t, bool frozen);

int64_t total_param_count(const std::vector<Parameter>& params);
int64_t trainable_param_count(const std::vector<Parameter>& params);
// FNV-1a over the raw value bytes of every frozen parameter, in list order.
uint64_t frozen_checksum(const std::vector<Parameter>& params);

class Optimizer {
  public:
    enum class Mode { kAdam, kSgd };

    explicit Optimizer(double lr = 1e-3, Mode mode = Mode::kAdam, double beta1 = 0.9,
                       double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), mode_(mode), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Applies one update to every non-frozen parameter that received a
    // gradient, then zeroes those gradients. Throws on non-finite gradients,
    // naming the parameter path.
    void step(std::vector<Parameter>& params);

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

  private:
    struct State {
        std::vector<double> m, v;
        int64_t t = 0;
    };
    double lr_;
    Mode mode_;
    double beta1_, beta2_, eps_;
    std::unordered_map<std::string, State> state_;
};

}  // namespace ltm
