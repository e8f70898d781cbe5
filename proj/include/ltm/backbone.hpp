#pragma once

#include <string>
#include <vector>

#include "ltm/layers.hpp"
#include "ltm/tensor.hpp"

namespace ltm {

constexpr int kByteVocab = 256;
constexpr int kNumSpecials = 4;  // BOS, EOS, PAD, SEP (reserved, never emitted into prompts)
constexpr int kTokenVocab = kByteVocab + kNumSpecials;
constexpr int kPromptTokenMax = 128;  // T_p cap at the embedding layer

struct BackboneConfig {
    enum class Arch { kDecoderOnly, kEncoderOnly };
    Arch arch = Arch::kDecoderOnly;
    int layers = 4;
    int heads = 4;
    int d_model = 128;
    int d_ff = 512;
    int max_seq = 256;
    uint64_t seed = 1;
};

const char* arch_name(BackboneConfig::Arch a);
BackboneConfig::Arch arch_from_name(const std::string& name);

// Seeded, randomly initialized transformer whose parameters are all frozen.
// Consumes [prompt prefix tokens || fused patch tokens] and returns one
// hidden row per input token; decoder_only applies a causal mask.
class FrozenBackbone {
  public:
    static FrozenBackbone init(const BackboneConfig& cfg);

    // Byte-level tokenization of UTF-8 text, truncated to kPromptTokenMax,
    // looked up in the frozen token table. Result is the prompt matrix P.
    Tensor embed_prompt(const std::string& text) const;

    // prompt_tokens may be undefined (no prefix). Output rows == T_p + n.
    Tensor forward_with_prefix(const Tensor& prompt_tokens, const Tensor& fused) const;

    void collect_params(const std::string& prefix, std::vector<Parameter>& out) const;
    const BackboneConfig& config() const { return cfg_; }
    int64_t param_count() const;

  private:
    struct Layer {
        Tensor wq, bq, wk, bk, wv, bv, wo, bo;
        Tensor ln1_g, ln1_b, ln2_g, ln2_b;
        Tensor w1, b1, w2, b2;
    };
    BackboneConfig cfg_;
    Tensor tok_embed_;  // (kTokenVocab, d)
    Tensor pos_embed_;  // (max_seq, d)
    std::vector<Layer> layers_;
    Tensor lnf_g_, lnf_b_;
};

// Drops the first t_p rows ("the prefix is discarded"); identity for t_p == 0.
Tensor strip_prefix(const Tensor& hidden, int t_p);

}  // namespace ltm
