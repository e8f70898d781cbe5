#pragma once

#include <string>
#include <vector>

#include "ltm/layers.hpp"
#include "ltm/series.hpp"
#include "ltm/tensor.hpp"

namespace ltm {

// Dimensionality-reduction head: hidden (n, d) -> GELU(h Wd + bd) -> patch
// values (n, P). The output projection starts at zero, so an untrained model
// predicts the (normalized) series mean.
class EnhancementHead {
  public:
    static EnhancementHead create(int d_model, int d_red, int patch_len, Rng& rng);

    Tensor forward(const Tensor& hidden) const;  // (n, d) -> (n, P)
    void collect_params(const std::string& prefix, std::vector<Parameter>& out) const;

    Linear& down() { return down_; }
    Linear& out() { return out_; }
    int patch_len() const { return patch_len_; }

  private:
    Linear down_;  // (d, d_red)
    Linear out_;   // (d_red, P)
    int patch_len_ = 0;
};

// Stitches non-overlapping predicted patches (n, P) back into a flat series
// of n*P values and undoes the z-score of the given channel.
std::vector<double> decode_patches(const Tensor& patches, const NormStats& stats, int channel);

// Mean squared error over equal-length prediction/target (predicted tokens
// flattened to values).
Tensor forecasting_loss(const Tensor& pred, const Tensor& target);

// Masked reconstruction error: mean of (x - xhat)^2 over positions where
// mask == 0 (mask uses 1 = observed). Errors when nothing is masked.
Tensor imputation_loss(const Tensor& x, const Tensor& xhat, const Tensor& mask);

// L_total = L_reg + lambda * (1 - mean_i cos(P_i, F_i)). Rows with zero norm
// contribute cosine 0; a warning counter is bumped for them.
Tensor total_loss(const Tensor& l_reg, const Tensor& prompt_rows, const Tensor& fused_rows,
                  double lambda, int* zero_norm_warnings = nullptr);

struct AnomalyReport {
    std::vector<double> scores;   // per evaluated window
    std::vector<int> window_starts;  // start of each scored segment
    double tau = 0.0;
    double alpha = 0.0;
    std::vector<int> flags;  // 1 iff score > tau
};

// Empirical nearest-rank quantile; alpha must lie strictly inside (0,1).
double quantile_threshold(std::vector<double> scores, double alpha);

AnomalyReport anomaly_score_and_flag(const std::vector<double>& train_scores,
                                     const std::vector<double>& test_scores,
                                     const std::vector<int>& window_starts, double alpha);

}  // namespace ltm
