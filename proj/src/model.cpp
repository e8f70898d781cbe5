#include "ltm/model.hpp"

#include <stdexcept>

namespace ltm {

LtmModel LtmModel::build(const ModelConfig& cfg) {
    if (cfg.backbone.d_model != cfg.d_model)
        throw std::runtime_error("model: backbone d_model " + std::to_string(cfg.backbone.d_model) +
                                 " differs from model d_model " + std::to_string(cfg.d_model));
    LtmModel m;
    m.cfg_ = cfg;
    Rng init = Rng(cfg.seed).split("init");
    m.patch_embed_ = Linear::create(cfg.patch_len, cfg.d_model, init, 0.02);
    m.fatm_ = Fatm::create(cfg.d_model, cfg.kernel_sizes, init);
    if (cfg.no_llm) {
        Rng fc_rng = init.split("fc_backbone");
        m.fc_tok_embed_ = Tensor::randn({kTokenVocab, cfg.d_model}, fc_rng, 0.02, true);
        m.fc1_ = Linear::create(cfg.d_model, cfg.fc_hidden, fc_rng, 0.02);
        m.fc2_ = Linear::create(cfg.fc_hidden, cfg.d_model, fc_rng, 0.02);
    } else {
        m.backbone_ = FrozenBackbone::init(cfg.backbone);
    }
    Rng head_rng = init.split("head");
    m.head_ = EnhancementHead::create(cfg.d_model, cfg.d_red, cfg.patch_len, head_rng);
    return m;
}

Tensor LtmModel::embed_prompt(const std::string& text) const {
    if (text.empty()) return Tensor();
    if (cfg_.no_llm) {
        std::vector<int> ids;
        for (unsigned char c : text) {
            if (static_cast<int>(ids.size()) >= kPromptTokenMax) break;
            ids.push_back(static_cast<int>(c));
        }
        return embedding_lookup(fc_tok_embed_, ids);
    }
    return backbone_->embed_prompt(text);
}

LtmModel::Output LtmModel::forward(const Tensor& patches, const Tensor& prompt) const {
    if (patches.rank() != 2 || patches.dim(1) != cfg_.patch_len)
        throw std::runtime_error("model: patches must be (n, " + std::to_string(cfg_.patch_len) +
                                 "), got " + shape_str(patches.shape()));
    const int n = patches.dim(0);
    Tensor pe = patch_embed_.forward(patches);

    Output out;
    Tensor prefix;  // rows fed ahead of the patch tokens
    if (cfg_.no_fatm) {
        out.fused = pe;
        if (prompt.defined()) {
            Tensor prompt_mean = reshape(mean(prompt, 0), {1, cfg_.d_model});
            prefix = prompt_mean;
            out.prompt_rows = repeat_align(prompt_mean, n);
        }
    } else {
        Fatm::Output fo = fatm_.forward(pe, prompt);
        out.fused = fo.fused;
        out.prompt_rows = fo.prompt_rows;
        if (prompt.defined()) prefix = prompt;
    }
    out.t_p = prefix.defined() ? prefix.dim(0) : 0;

    Tensor hidden;
    if (cfg_.no_llm) {
        Tensor seq = prefix.defined() ? concat({prefix, out.fused}, 0) : out.fused;
        hidden = fc2_.forward(gelu(fc1_.forward(seq)));
    } else {
        hidden = backbone_->forward_with_prefix(prefix, out.fused);
    }
    out.pred_patches = head_.forward(strip_prefix(hidden, out.t_p));
    return out;
}

std::vector<Parameter> LtmModel::parameters() const {
    std::vector<Parameter> ps;
    patch_embed_.collect("patch_embed", false, ps);
    if (!cfg_.no_fatm) fatm_.collect_params("fatm", ps);
    if (cfg_.no_llm) {
        ps.push_back(make_param("fc_backbone.tok_embed", fc_tok_embed_, false));
        fc1_.collect("fc_backbone.l1", false, ps);
        fc2_.collect("fc_backbone.l2", false, ps);
    } else {
        backbone_->collect_params("backbone", ps);
    }
    head_.collect_params("head", ps);
    return ps;
}

int64_t LtmModel::total_params() const {
    auto ps = parameters();
    return total_param_count(ps);
}

int64_t LtmModel::trainable_params() const {
    auto ps = parameters();
    return trainable_param_count(ps);
}

uint64_t LtmModel::backbone_checksum() const {
    auto ps = parameters();
    return frozen_checksum(ps);
}

std::vector<double> LtmModel::forecast_rollout(const std::vector<double>& context_norm,
                                               const Tensor& prompt, int horizon,
                                               int window_patches) const {
    const int P = cfg_.patch_len;
    const int S = cfg_.stride;
    const int window = (window_patches - 1) * S + P;
    if (horizon < 1) throw std::runtime_error("forecast: horizon must be >= 1");
    if (static_cast<int>(context_norm.size()) < window)
        throw std::runtime_error("forecast: context of " + std::to_string(context_norm.size()) +
                                 " points is shorter than one window of " + std::to_string(window));
    std::vector<double> ctx = context_norm;
    std::vector<double> out;
    out.reserve(static_cast<size_t>(horizon) + P);
    while (static_cast<int>(out.size()) < horizon) {
        std::vector<double> tail(ctx.end() - window, ctx.end());
        PatchSequence ps = segment_values(tail, P, S);
        Output o = forward(ps.patches, prompt);
        Tensor next = slice(o.pred_patches, 0, ps.n - 1, 1);  // final token predicts the next patch
        for (int j = 0; j < P; ++j) {
            const double v = next.at(0, j);
            ctx.push_back(v);
            out.push_back(v);
        }
        Tape::active().reset();
    }
    out.resize(static_cast<size_t>(horizon));
    return out;
}

}  // namespace ltm
