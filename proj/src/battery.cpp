#include <cstdio>

#include "ltm/fatm.hpp"
#include "ltm/gradcheck.hpp"
#include "ltm/heads.hpp"
#include "ltm/model.hpp"

namespace ltm {

namespace {

void fill_randn(Tensor t, Rng& rng, double scale = 1.0) {
    for (auto& v : t.values()) v = rng.normal() * scale;
}

double check_block(const char* name, bool verbose, int points,
                   const std::function<double(uint64_t)>& one_point) {
    double worst = 0.0;
    for (int i = 0; i < points; ++i) worst = std::max(worst, one_point(1000 + i));
    if (verbose) std::printf("  %-22s max rel err %.3g\n", name, worst);
    return worst;
}

}  // namespace

double run_gradcheck_battery(bool verbose) {
    const double h = 1e-5;
    double worst = 0.0;

    worst = std::max(worst, check_block("eq1 pooling", verbose, 10, [&](uint64_t seed) {
        Rng rng(seed);
        Tensor p = Tensor::randn({5, 6}, rng, 1.0, true);
        Tensor w = Tensor::randn({6, 1}, rng, 1.0, true);
        Tensor b = Tensor::randn({1}, rng, 1.0, true);
        return gradcheck_multi([&]() { return sum_all(square(attention_mean_pool(p, w, b))); },
                               {p, w, b}, h);
    }));

    worst = std::max(worst, check_block("multi-scale conv", verbose, 10, [&](uint64_t seed) {
        Rng rng(seed);
        MultiScaleConv conv = MultiScaleConv::create(4, {3, 5}, rng);
        for (auto& k : conv.kernels()) fill_randn(k, rng, 0.5);
        fill_randn(conv.projection().weight, rng, 0.5);
        fill_randn(conv.projection().bias, rng, 0.5);
        Tensor x = Tensor::randn({5, 4}, rng, 1.0, true);
        std::vector<Tensor> leaves{x, conv.projection().weight, conv.projection().bias};
        for (auto& k : conv.kernels()) leaves.push_back(k);
        return gradcheck_multi([&]() { return sum_all(square(conv.forward(x))); }, leaves, h);
    }));

    worst = std::max(worst, check_block("gated fuse", verbose, 10, [&](uint64_t seed) {
        Rng rng(seed);
        FuseGate fuse = FuseGate::create(6);
        fill_randn(fuse.linear().weight, rng, 0.3);
        fill_randn(fuse.linear().bias, rng, 0.3);
        fill_randn(fuse.gate(), rng, 0.5);
        Tensor conv_feats = Tensor::randn({4, 6}, rng, 1.0, true);
        Tensor prows = Tensor::randn({4, 6}, rng, 1.0, true);
        Tensor pe = Tensor::randn({4, 6}, rng, 1.0, true);
        return gradcheck_multi(
            [&]() { return sum_all(square(fuse.forward(conv_feats, prows, pe))); },
            {conv_feats, prows, pe, fuse.gate(), fuse.linear().weight, fuse.linear().bias}, h);
    }));

    worst = std::max(worst, check_block("backbone block", verbose, 10, [&](uint64_t seed) {
        BackboneConfig bc;
        bc.arch = BackboneConfig::Arch::kDecoderOnly;
        bc.layers = 1;
        bc.heads = 2;
        bc.d_model = 8;
        bc.d_ff = 16;
        bc.max_seq = 16;
        bc.seed = seed;
        FrozenBackbone backbone = FrozenBackbone::init(bc);
        Rng rng(seed ^ 0x55);
        Tensor fused = Tensor::randn({5, 8}, rng, 1.0, true);
        return gradcheck_multi(
            [&]() { return sum_all(square(backbone.forward_with_prefix(Tensor(), fused))); },
            {fused}, h);
    }));

    worst = std::max(worst, check_block("enhancement head", verbose, 10, [&](uint64_t seed) {
        Rng rng(seed);
        EnhancementHead head = EnhancementHead::create(8, 4, 6, rng);
        fill_randn(head.out().weight, rng, 0.3);
        fill_randn(head.out().bias, rng, 0.3);
        Tensor hidden = Tensor::randn({4, 8}, rng, 1.0, true);
        return gradcheck_multi([&]() { return sum_all(square(head.forward(hidden))); },
                               {hidden, head.down().weight, head.down().bias, head.out().weight,
                                head.out().bias},
                               h);
    }));

    worst = std::max(worst, check_block("eq5 forecasting loss", verbose, 10, [&](uint64_t seed) {
        Rng rng(seed);
        Tensor pred = Tensor::randn({7}, rng, 1.0, true);
        Tensor target = Tensor::randn({7}, rng, 1.0);
        return gradcheck_multi([&]() { return forecasting_loss(pred, target); }, {pred}, h);
    }));

    worst = std::max(worst, check_block("eq6 imputation loss", verbose, 10, [&](uint64_t seed) {
        Rng rng(seed);
        Tensor x = Tensor::randn({3, 4}, rng, 1.0);
        Tensor xhat = Tensor::randn({3, 4}, rng, 1.0, true);
        Tensor mask = Tensor::zeros({3, 4});
        for (size_t i = 0; i < mask.values().size(); ++i) mask.values()[i] = (i % 3 == 0) ? 0.0 : 1.0;
        return gradcheck_multi([&]() { return imputation_loss(x, xhat, mask); }, {xhat}, h);
    }));

    worst = std::max(worst, check_block("eq10 total loss", verbose, 10, [&](uint64_t seed) {
        Rng rng(seed);
        Tensor z = Tensor::randn({1}, rng, 1.0, true);
        Tensor prows = Tensor::randn({4, 5}, rng, 1.0, true);
        Tensor frows = Tensor::randn({4, 5}, rng, 1.0, true);
        return gradcheck_multi(
            [&]() { return total_loss(square(z), prows, frows, 0.7); }, {z, prows, frows}, h);
    }));

    worst = std::max(worst, check_block("full model (micro)", verbose, 3, [&](uint64_t seed) {
        ModelConfig mc;
        mc.patch_len = 4;
        mc.stride = 4;
        mc.d_model = 16;
        mc.d_red = 4;
        mc.kernel_sizes = {3};
        mc.backbone.layers = 1;
        mc.backbone.heads = 2;
        mc.backbone.d_model = 16;
        mc.backbone.d_ff = 16;
        mc.backbone.max_seq = 32;
        mc.backbone.seed = seed;
        mc.seed = seed;
        LtmModel model = LtmModel::build(mc);
        Rng rng(seed ^ 0x77);
        fill_randn(model.fatm().fuse().linear().weight, rng, 0.1);
        fill_randn(model.head().out().weight, rng, 0.1);
        Tensor patches = Tensor::randn({3, 4}, rng, 1.0, true);
        Tensor target = Tensor::randn({1, 4}, rng, 1.0);
        std::vector<Tensor> leaves{patches};
        for (auto& p : model.parameters())
            if (!p.frozen) leaves.push_back(p.tensor);
        return gradcheck_multi(
            [&]() {
                Tensor prompt = model.embed_prompt("check");
                LtmModel::Output out = model.forward(patches, prompt);
                Tensor l_reg = forecasting_loss(slice(out.pred_patches, 0, 2, 1), target);
                return total_loss(l_reg, out.prompt_rows, out.fused, 0.5);
            },
            leaves, h);
    }));

    return worst;
}

}  // namespace ltm
