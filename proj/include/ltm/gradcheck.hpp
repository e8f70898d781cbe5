#pragma once

#include <functional>
#include <vector>

#include "ltm/tensor.hpp"

namespace ltm {

// Compares the analytic gradient of a scalar-valued function against central
// finite differences. Returns the max over coordinates of
// |analytic - numeric| / max(1, |analytic|).
//
// f must be deterministic and rebuild its graph from x on every call.
double gradcheck(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h = 1e-5);

// Same check for a closure over several leaf tensors (inputs or parameters).
// Every tensor in `leaves` is perturbed coordinate-by-coordinate.
double gradcheck_multi(const std::function<Tensor()>& f, const std::vector<Tensor>& leaves,
                       double h = 1e-5);

// Finite-difference sweep over every differentiable block: prompt pooling,
// multi-scale conv, gated fusion, a backbone block, the enhancement head,
// the three losses and a micro full model. Returns the worst relative error
// (10 seeded points per block, h = 1e-5).
double run_gradcheck_battery(bool verbose);

}  // namespace ltm
