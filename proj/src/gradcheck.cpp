#include "ltm/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace ltm {

namespace {

void check_h(double h) {
    if (!(h >= 1e-7 && h <= 1e-3))
        throw std::runtime_error("gradcheck: step h=" + std::to_string(h) + " outside [1e-7, 1e-3]");
}

double run_scalar(const std::function<Tensor()>& f) {
    Tensor out = f();
    double v = out.item();
    Tape::active().reset();
    return v;
}

}  // namespace

double gradcheck_multi(const std::function<Tensor()>& f, const std::vector<Tensor>& leaves, double h) {
    check_h(h);
    for (auto leaf : leaves) {
        leaf.clear_grad();
        leaf.set_requires_grad(true);
    }
    Tape::active().reset();
    Tensor loss = f();
    backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(leaves.size());
    for (auto leaf : leaves) {
        analytic.push_back(leaf.has_grad() ? leaf.grad_view()
                                           : std::vector<double>(leaf.values().size(), 0.0));
        leaf.clear_grad();
    }

    double worst = 0.0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        Tensor leaf = leaves[li];
        auto& vals = leaf.values();
        for (size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + h;
            const double fp = run_scalar(f);
            vals[i] = keep - h;
            const double fm = run_scalar(f);
            vals[i] = keep;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[li][i];
            const double err = std::fabs(a - numeric) / std::max(1.0, std::fabs(a));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

double gradcheck(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h) {
    return gradcheck_multi([&]() { return f(x); }, {x}, h);
}

}  // namespace ltm
