#include "ltm/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ltm {

EnhancementHead EnhancementHead::create(int d_model, int d_red, int patch_len, Rng& rng) {
    EnhancementHead h;
    h.down_ = Linear::create(d_model, d_red, rng, 0.02);
    h.out_ = Linear::zeros(d_red, patch_len);
    h.patch_len_ = patch_len;
    return h;
}

Tensor EnhancementHead::forward(const Tensor& hidden) const {
    if (hidden.rank() != 2 || hidden.dim(1) != down_.weight.dim(0))
        throw std::runtime_error("enhancement_head: expected (n, " +
                                 std::to_string(down_.weight.dim(0)) + "), got " +
                                 shape_str(hidden.shape()));
    return out_.forward(gelu(down_.forward(hidden)));
}

void EnhancementHead::collect_params(const std::string& prefix, std::vector<Parameter>& out) const {
    down_.collect(prefix + ".down", false, out);
    out_.collect(prefix + ".out", false, out);
}

std::vector<double> decode_patches(const Tensor& patches, const NormStats& stats, int channel) {
    const auto& v = patches.values();
    std::vector<double> series(v.size());
    for (size_t i = 0; i < v.size(); ++i) series[i] = stats.denormalize_value(channel, v[i]);
    return series;
}

Tensor forecasting_loss(const Tensor& pred, const Tensor& target) {
    if (pred.size() != target.size())
        throw std::runtime_error("forecasting_loss: prediction length " + std::to_string(pred.size()) +
                                 " does not match target length " + std::to_string(target.size()));
    Tensor p = pred.rank() == 1 ? pred : reshape(pred, {static_cast<int>(pred.size())});
    Tensor t = target.rank() == 1 ? target : reshape(target, {static_cast<int>(target.size())});
    return mean_all(square(sub(p, t)));
}

Tensor imputation_loss(const Tensor& x, const Tensor& xhat, const Tensor& mask) {
    if (x.shape() != xhat.shape() || x.shape() != mask.shape())
        throw std::runtime_error("imputation_loss: shape mismatch " + shape_str(x.shape()) + " / " +
                                 shape_str(xhat.shape()) + " / " + shape_str(mask.shape()));
    double masked_count = 0.0;
    Tensor mask_m = Tensor::zeros(mask.shape());
    for (size_t i = 0; i < mask.values().size(); ++i) {
        const double m = 1.0 - mask.values()[i];
        mask_m.values()[i] = m;
        masked_count += m;
    }
    if (masked_count == 0.0) throw std::runtime_error("imputation_loss: no masked positions");
    Tensor se = mul(mask_m, square(sub(x, xhat)));
    return scalar_mul(sum_all(se), 1.0 / masked_count);
}

Tensor total_loss(const Tensor& l_reg, const Tensor& prompt_rows, const Tensor& fused_rows,
                  double lambda, int* zero_norm_warnings) {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::runtime_error("total_loss: lambda " + std::to_string(lambda) + " outside [0,1]");
    if (lambda == 0.0) return l_reg;
    if (prompt_rows.shape() != fused_rows.shape() || prompt_rows.rank() != 2)
        throw std::runtime_error("total_loss: row shapes " + shape_str(prompt_rows.shape()) +
                                 " and " + shape_str(fused_rows.shape()) + " must match");
    const int n = prompt_rows.dim(0);

    // Rows with zero norm get a masked-out cosine of 0 and a safe denominator.
    Tensor row_mask = Tensor::full({n}, 1.0);
    Tensor denom_fix = Tensor::zeros({n});
    {
        const auto& pv = prompt_rows.values();
        const auto& fv = fused_rows.values();
        const int d = prompt_rows.dim(1);
        for (int i = 0; i < n; ++i) {
            double np = 0.0, nf = 0.0;
            for (int j = 0; j < d; ++j) {
                np += pv[static_cast<size_t>(i) * d + j] * pv[static_cast<size_t>(i) * d + j];
                nf += fv[static_cast<size_t>(i) * d + j] * fv[static_cast<size_t>(i) * d + j];
            }
            if (np == 0.0 || nf == 0.0) {
                row_mask.set(i, 0.0);
                denom_fix.set(i, 1.0);
                if (zero_norm_warnings) ++(*zero_norm_warnings);
            }
        }
    }

    Tensor dots = sum(mul(prompt_rows, fused_rows), 1);              // (n)
    Tensor norm_p = sqrt(sum(square(prompt_rows), 1));               // (n)
    Tensor norm_f = sqrt(sum(square(fused_rows), 1));                // (n)
    Tensor denom = add(mul(norm_p, norm_f), denom_fix);              // safe where a norm is 0
    Tensor cos_rows = mul(div(dots, denom), row_mask);
    Tensor penalty = add_scalar(scalar_mul(sum_all(cos_rows), -1.0 / n), 1.0);
    return add(l_reg, scalar_mul(penalty, lambda));
}

double quantile_threshold(std::vector<double> scores, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::runtime_error("quantile_threshold: alpha " + std::to_string(alpha) +
                                 " outside (0,1)");
    if (scores.empty()) throw std::runtime_error("quantile_threshold: no scores");
    std::sort(scores.begin(), scores.end());
    const auto n = static_cast<double>(scores.size());
    auto rank = static_cast<size_t>(std::ceil(alpha * n));
    if (rank < 1) rank = 1;
    if (rank > scores.size()) rank = scores.size();
    return scores[rank - 1];
}

AnomalyReport anomaly_score_and_flag(const std::vector<double>& train_scores,
                                     const std::vector<double>& test_scores,
                                     const std::vector<int>& window_starts, double alpha) {
    AnomalyReport r;
    r.alpha = alpha;
    r.tau = quantile_threshold(train_scores, alpha);
    r.scores = test_scores;
    r.window_starts = window_starts;
    r.flags.resize(test_scores.size());
    for (size_t i = 0; i < test_scores.size(); ++i) r.flags[i] = test_scores[i] > r.tau ? 1 : 0;
    return r;
}

}  // namespace ltm
