#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltm/backbone.hpp"
#include "ltm/fatm.hpp"
#include "ltm/heads.hpp"
#include "ltm/layers.hpp"

namespace ltm {

struct ModelConfig {
    int patch_len = 16;
    int stride = 16;
    int d_model = 128;
    int d_red = 32;
    std::vector<int> kernel_sizes{3, 5, 7};
    BackboneConfig backbone;
    // Ablation switches (§ wiring in forward()):
    bool no_fatm = false;  // prompt mean becomes one extra prefix token, fusion bypassed
    bool no_kdtp = false;  // handled upstream: prompt text is the raw query
    bool no_llm = false;   // backbone replaced by a trainable per-token FC net
    int fc_hidden = 128;
    uint64_t seed = 42;
};

class LtmModel {
  public:
    static LtmModel build(const ModelConfig& cfg);

    // Byte-embeds prompt text; returns an undefined tensor for empty text
    // (prompt path disabled). Trainable table in no_llm mode, frozen otherwise.
    Tensor embed_prompt(const std::string& text) const;

    struct Output {
        Tensor pred_patches;  // (n, P)
        Tensor fused;         // (n, d): the F_i rows of the cosine penalty
        Tensor prompt_rows;   // (n, d): the P_i rows; undefined when no prompt
        int t_p = 0;          // prefix tokens consumed by the backbone
    };

    Output forward(const Tensor& patches, const Tensor& prompt) const;

    std::vector<Parameter> parameters() const;
    int64_t total_params() const;
    int64_t trainable_params() const;
    uint64_t backbone_checksum() const;
    const ModelConfig& config() const { return cfg_; }

    // Sliding autoregressive rollout in normalized space: repeatedly predicts
    // the next patch from the last window_patches patches and appends it.
    // Returns exactly `horizon` values. Resets the tape after each step.
    std::vector<double> forecast_rollout(const std::vector<double>& context_norm,
                                         const Tensor& prompt, int horizon,
                                         int window_patches) const;

    Linear& patch_embed() { return patch_embed_; }
    Fatm& fatm() { return fatm_; }
    EnhancementHead& head() { return head_; }
    const FrozenBackbone* backbone() const { return backbone_ ? &*backbone_ : nullptr; }

  private:
    ModelConfig cfg_;
    Linear patch_embed_;  // (P, d)
    Fatm fatm_;
    std::optional<FrozenBackbone> backbone_;
    Tensor fc_tok_embed_;  // no_llm replacement pieces
    Linear fc1_, fc2_;
    EnhancementHead head_;
};

}  // namespace ltm
