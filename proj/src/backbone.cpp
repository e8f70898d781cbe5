#include "ltm/backbone.hpp"

#include <cmath>
#include <stdexcept>

namespace ltm {

namespace {
constexpr double kMaskNegInf = -1e30;
}

const char* arch_name(BackboneConfig::Arch a) {
    return a == BackboneConfig::Arch::kDecoderOnly ? "decoder_only" : "encoder_only";
}

BackboneConfig::Arch arch_from_name(const std::string& name) {
    if (name == "decoder_only") return BackboneConfig::Arch::kDecoderOnly;
    if (name == "encoder_only") return BackboneConfig::Arch::kEncoderOnly;
    throw std::runtime_error("backbone: unknown arch '" + name + "'");
}

FrozenBackbone FrozenBackbone::init(const BackboneConfig& cfg) {
    if (cfg.layers < 1 || cfg.heads < 1 || cfg.d_model < 1 || cfg.d_ff < 1 || cfg.max_seq < 2)
        throw std::runtime_error("backbone: invalid dimensions");
    if (cfg.d_model % cfg.heads != 0)
        throw std::runtime_error("backbone: d_model " + std::to_string(cfg.d_model) +
                                 " not divisible by heads " + std::to_string(cfg.heads));
    FrozenBackbone b;
    b.cfg_ = cfg;
    Rng rng(cfg.seed);
    const double std = 0.02;
    const int d = cfg.d_model;
    b.tok_embed_ = Tensor::randn({kTokenVocab, d}, rng, std);
    b.pos_embed_ = Tensor::randn({cfg.max_seq, d}, rng, std);
    for (int l = 0; l < cfg.layers; ++l) {
        Layer ly;
        ly.wq = Tensor::randn({d, d}, rng, std);
        ly.bq = Tensor::zeros({d});
        ly.wk = Tensor::randn({d, d}, rng, std);
        ly.bk = Tensor::zeros({d});
        ly.wv = Tensor::randn({d, d}, rng, std);
        ly.bv = Tensor::zeros({d});
        ly.wo = Tensor::randn({d, d}, rng, std);
        ly.bo = Tensor::zeros({d});
        ly.ln1_g = Tensor::full({d}, 1.0);
        ly.ln1_b = Tensor::zeros({d});
        ly.ln2_g = Tensor::full({d}, 1.0);
        ly.ln2_b = Tensor::zeros({d});
        ly.w1 = Tensor::randn({d, cfg.d_ff}, rng, std);
        ly.b1 = Tensor::zeros({cfg.d_ff});
        ly.w2 = Tensor::randn({cfg.d_ff, d}, rng, std);
        ly.b2 = Tensor::zeros({d});
        b.layers_.push_back(std::move(ly));
    }
    b.lnf_g_ = Tensor::full({d}, 1.0);
    b.lnf_b_ = Tensor::zeros({d});
    return b;
}

Tensor FrozenBackbone::embed_prompt(const std::string& text) const {
    if (text.empty()) throw std::runtime_error("embed_prompt: empty prompt text");
    std::vector<int> ids;
    ids.reserve(std::min<size_t>(text.size(), kPromptTokenMax));
    for (unsigned char c : text) {
        if (static_cast<int>(ids.size()) >= kPromptTokenMax) break;
        ids.push_back(static_cast<int>(c));
    }
    return embedding_lookup(tok_embed_, ids);
}

Tensor FrozenBackbone::forward_with_prefix(const Tensor& prompt_tokens, const Tensor& fused) const {
    const int d = cfg_.d_model;
    const int t_p = prompt_tokens.defined() ? prompt_tokens.dim(0) : 0;
    if (fused.rank() != 2 || fused.dim(1) != d)
        throw std::runtime_error("backbone: fused tokens must be (n, " + std::to_string(d) +
                                 "), got " + shape_str(fused.shape()));
    const int total = t_p + fused.dim(0);
    if (total > cfg_.max_seq)
        throw std::runtime_error("backbone: sequence of " + std::to_string(total) +
                                 " tokens overflows max_seq " + std::to_string(cfg_.max_seq));

    Tensor x = prompt_tokens.defined() ? concat({prompt_tokens, fused}, 0) : fused;
    x = add(x, slice(pos_embed_, 0, 0, total));

    const bool causal = cfg_.arch == BackboneConfig::Arch::kDecoderOnly;
    Tensor mask;
    if (causal) {
        mask = Tensor::zeros({total, total});
        for (int i = 0; i < total; ++i)
            for (int j = i + 1; j < total; ++j) mask.set(i, j, kMaskNegInf);
    }

    const int dh = d / cfg_.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (const auto& ly : layers_) {
        Tensor h = layer_norm(x, ly.ln1_g, ly.ln1_b);
        Tensor q = add(matmul(h, ly.wq), ly.bq);
        Tensor k = add(matmul(h, ly.wk), ly.bk);
        Tensor v = add(matmul(h, ly.wv), ly.bv);
        std::vector<Tensor> heads;
        heads.reserve(cfg_.heads);
        for (int hd = 0; hd < cfg_.heads; ++hd) {
            Tensor qh = slice(q, 1, hd * dh, dh);
            Tensor kh = slice(k, 1, hd * dh, dh);
            Tensor vh = slice(v, 1, hd * dh, dh);
            Tensor scores = scalar_mul(matmul(qh, transpose(kh)), scale);
            if (causal) scores = add(scores, mask);
            heads.push_back(matmul(softmax(scores, 1), vh));
        }
        Tensor attn = add(matmul(concat(heads, 1), ly.wo), ly.bo);
        x = add(x, attn);
        Tensor h2 = layer_norm(x, ly.ln2_g, ly.ln2_b);
        Tensor ff = add(matmul(gelu(add(matmul(h2, ly.w1), ly.b1)), ly.w2), ly.b2);
        x = add(x, ff);
    }
    return layer_norm(x, lnf_g_, lnf_b_);
}

void FrozenBackbone::collect_params(const std::string& prefix, std::vector<Parameter>& out) const {
    out.push_back(make_param(prefix + ".tok_embed", tok_embed_, true));
    out.push_back(make_param(prefix + ".pos_embed", pos_embed_, true));
    for (size_t l = 0; l < layers_.size(); ++l) {
        const auto& ly = layers_[l];
        const std::string lp = prefix + ".layer" + std::to_string(l);
        out.push_back(make_param(lp + ".attn.wq", ly.wq, true));
        out.push_back(make_param(lp + ".attn.bq", ly.bq, true));
        out.push_back(make_param(lp + ".attn.wk", ly.wk, true));
        out.push_back(make_param(lp + ".attn.bk", ly.bk, true));
        out.push_back(make_param(lp + ".attn.wv", ly.wv, true));
        out.push_back(make_param(lp + ".attn.bv", ly.bv, true));
        out.push_back(make_param(lp + ".attn.wo", ly.wo, true));
        out.push_back(make_param(lp + ".attn.bo", ly.bo, true));
        out.push_back(make_param(lp + ".ln1.g", ly.ln1_g, true));
        out.push_back(make_param(lp + ".ln1.b", ly.ln1_b, true));
        out.push_back(make_param(lp + ".ln2.g", ly.ln2_g, true));
        out.push_back(make_param(lp + ".ln2.b", ly.ln2_b, true));
        out.push_back(make_param(lp + ".ffn.w1", ly.w1, true));
        out.push_back(make_param(lp + ".ffn.b1", ly.b1, true));
        out.push_back(make_param(lp + ".ffn.w2", ly.w2, true));
        out.push_back(make_param(lp + ".ffn.b2", ly.b2, true));
    }
    out.push_back(make_param(prefix + ".lnf.g", lnf_g_, true));
    out.push_back(make_param(prefix + ".lnf.b", lnf_b_, true));
}

int64_t FrozenBackbone::param_count() const {
    std::vector<Parameter> ps;
    collect_params("backbone", ps);
    return total_param_count(ps);
}

Tensor strip_prefix(const Tensor& hidden, int t_p) {
    if (hidden.rank() != 2)
        throw std::runtime_error("strip_prefix: expected rank-2 hidden states, got " +
                                 shape_str(hidden.shape()));
    if (t_p == 0) return hidden;
    if (t_p < 0 || t_p >= hidden.dim(0))
        throw std::runtime_error("strip_prefix: prefix length " + std::to_string(t_p) +
                                 " not below row count " + std::to_string(hidden.dim(0)));
    return slice(hidden, 0, t_p, hidden.dim(0) - t_p);
}

}  // namespace ltm
