#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ltm/gradcheck.hpp"
#include "ltm/heads.hpp"
#include "ltm/model.hpp"

using namespace ltm;

namespace {

ModelConfig micro_model_config(uint64_t seed) {
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
    mc.backbone.max_seq = 64;
    mc.backbone.seed = seed;
    mc.seed = seed;
    return mc;
}

}  // namespace

TEST_CASE("enhancement head and patch decoding") {
    Rng rng(3);
    EnhancementHead head = EnhancementHead::create(8, 4, 16, rng);
    SUBCASE("shape: n patches of P values -> series of n*P") {
        Tensor hidden = Tensor::randn({5, 8}, rng);
        Tensor patches = head.forward(hidden);
        REQUIRE(patches.shape() == Shape{5, 16});
        NormStats stats{{2.0}, {3.0}};
        auto series = decode_patches(patches, stats, 0);
        CHECK(series.size() == 80);
        CHECK(series[0] == doctest::Approx(patches.at(0, 0) * 3.0 + 2.0));
    }
    SUBCASE("zero hidden with the zero-init output layer decodes to the mean") {
        Tensor hidden = Tensor::zeros({3, 8});
        Tensor patches = head.forward(hidden);
        NormStats stats{{7.5}, {2.0}};
        auto series = decode_patches(patches, stats, 0);
        for (double v : series) CHECK(v == doctest::Approx(7.5));
    }
    SUBCASE("head gradients check out") {
        for (auto& v : head.out().weight.values()) v = rng.normal() * 0.2;
        Tensor hidden = Tensor::randn({4, 8}, rng, 1.0, true);
        CHECK(gradcheck_multi([&]() { return sum_all(square(head.forward(hidden))); },
                              {hidden, head.down().weight, head.out().weight}) <= 1e-4);
    }
}

TEST_CASE("forecasting loss (mean squared error over tokens)") {
    Tensor y = Tensor::from({4}, {1.0, 2.0, 3.0, 4.0});
    SUBCASE("perfect prediction") {
        CHECK(forecasting_loss(y, y).item() == 0.0);
    }
    SUBCASE("unit offset") {
        Tensor yhat = add_scalar(y, 1.0);
        CHECK(forecasting_loss(yhat, y).item() == doctest::Approx(1.0));
    }
    SUBCASE("hand arithmetic") {
        Tensor pred = Tensor::from({2}, {1.0, 2.0});
        Tensor target = Tensor::from({2}, {0.0, 0.0});
        CHECK(forecasting_loss(pred, target).item() == doctest::Approx(2.5));
    }
    SUBCASE("length mismatch rejected") {
        CHECK_THROWS_AS(forecasting_loss(y, Tensor::zeros({3})), std::runtime_error);
    }
}

TEST_CASE("imputation loss (masked reconstruction)") {
    Tensor x = Tensor::from({1, 4}, {1.0, 2.0, 3.0, 4.0});
    SUBCASE("perfect reconstruction") {
        Tensor mask = Tensor::from({1, 4}, {1.0, 0.0, 0.0, 1.0});
        CHECK(imputation_loss(x, x, mask).item() == 0.0);
    }
    SUBCASE("two masked positions with errors 3 and 4") {
        Tensor xhat = Tensor::from({1, 4}, {1.0, 5.0, 7.0, 4.0});  // errors 3 and 4 at masked spots
        Tensor mask = Tensor::from({1, 4}, {1.0, 0.0, 0.0, 1.0});
        CHECK(imputation_loss(x, xhat, mask).item() == doctest::Approx(12.5));
    }
    SUBCASE("observed positions cannot move the loss") {
        Tensor mask = Tensor::from({1, 4}, {1.0, 0.0, 0.0, 1.0});
        Tensor xhat1 = Tensor::from({1, 4}, {1.0, 5.0, 7.0, 4.0});
        Tensor xhat2 = Tensor::from({1, 4}, {-99.0, 5.0, 7.0, 123.0});
        CHECK(imputation_loss(x, xhat1, mask).item() == imputation_loss(x, xhat2, mask).item());
    }
    SUBCASE("nothing masked is an error") {
        Tensor mask = Tensor::full({1, 4}, 1.0);
        CHECK_THROWS_WITH_AS(imputation_loss(x, x, mask), doctest::Contains("no masked"),
                             std::runtime_error);
    }
}

TEST_CASE("cosine-penalty total loss") {
    Tensor l_reg = Tensor::scalar(1.25);
    Rng rng(10);
    SUBCASE("lambda zero returns the regression loss itself") {
        Tensor p = Tensor::randn({3, 4}, rng);
        Tensor f = Tensor::randn({3, 4}, rng);
        Tensor total = total_loss(l_reg, p, f, 0.0);
        CHECK(total.impl() == l_reg.impl());  // bit-exact by construction
    }
    SUBCASE("identical rows leave only the regression loss") {
        Tensor p = Tensor::randn({3, 4}, rng);
        Tensor total = total_loss(l_reg, p, p, 0.5);
        CHECK(total.item() == doctest::Approx(1.25).epsilon(1e-12));
    }
    SUBCASE("orthogonal rows add exactly lambda") {
        Tensor p = Tensor::from({2, 2}, {1.0, 0.0, 3.0, 0.0});
        Tensor f = Tensor::from({2, 2}, {0.0, 2.0, 0.0, -1.0});
        Tensor total = total_loss(l_reg, p, f, 1.0);
        CHECK(total.item() == 1.25 + 1.0);
        Tensor half = total_loss(l_reg, p, f, 0.25);
        CHECK(half.item() == 1.25 + 0.25);
    }
    SUBCASE("lambda domain enforced") {
        Tensor p = Tensor::zeros({2, 2});
        CHECK_THROWS_AS(total_loss(l_reg, p, p, -0.1), std::runtime_error);
        CHECK_THROWS_AS(total_loss(l_reg, p, p, 1.1), std::runtime_error);
    }
    SUBCASE("zero-norm rows count as cosine zero with a warning") {
        Tensor p = Tensor::from({2, 2}, {0.0, 0.0, 1.0, 0.0});
        Tensor f = Tensor::from({2, 2}, {1.0, 1.0, 1.0, 0.0});
        int warnings = 0;
        Tensor total = total_loss(l_reg, p, f, 1.0, &warnings);
        CHECK(warnings == 1);
        // cosines are {0 (masked), 1}; penalty = 1 - 1/2
        CHECK(total.item() == doctest::Approx(1.25 + 0.5).epsilon(1e-12));
    }
    SUBCASE("penalty always lies in [0, 2*lambda]") {
        for (int trial = 0; trial < 50; ++trial) {
            Tensor p = Tensor::randn({4, 3}, rng);
            Tensor f = Tensor::randn({4, 3}, rng);
            const double lambda = rng.uniform(0.0, 1.0);
            const double penalty = total_loss(Tensor::scalar(0.0), p, f, lambda).item();
            CHECK(penalty >= -1e-12);
            CHECK(penalty <= 2.0 * lambda + 1e-12);
        }
    }
    SUBCASE("losses are non-negative and vanish only at perfect fits") {
        Tensor y = Tensor::from({3}, {1.0, -2.0, 0.5});
        CHECK(forecasting_loss(y, y).item() == 0.0);
        Tensor off = add_scalar(y, 1e-3);
        CHECK(forecasting_loss(off, y).item() > 0.0);
    }
}

TEST_CASE("anomaly thresholding and flags") {
    SUBCASE("flags are exactly the scores above tau") {
        AnomalyReport r = anomaly_score_and_flag({50.0}, {1.0, 2.0, 100.0}, {0, 16, 32}, 0.5);
        CHECK(r.tau == 50.0);
        CHECK(r.flags == std::vector<int>{0, 0, 1});
    }
    SUBCASE("alpha domain is open") {
        CHECK_THROWS_AS(quantile_threshold({1.0, 2.0}, 1.0), std::runtime_error);
        CHECK_THROWS_AS(quantile_threshold({1.0, 2.0}, 0.0), std::runtime_error);
        CHECK_THROWS_AS(anomaly_score_and_flag({1.0}, {1.0}, {0}, 1.0), std::runtime_error);
    }
    SUBCASE("raising alpha never adds flags") {
        Rng rng(33);
        std::vector<double> train(40), test(25);
        for (auto& v : train) v = rng.uniform(0.0, 10.0);
        for (auto& v : test) v = rng.uniform(0.0, 20.0);
        std::vector<int> starts(test.size());
        for (size_t i = 0; i < starts.size(); ++i) starts[i] = static_cast<int>(16 * i);
        std::set<int> prev_flagged;
        bool first = true;
        for (double alpha : {0.5, 0.7, 0.9, 0.95, 0.99}) {
            AnomalyReport r = anomaly_score_and_flag(train, test, starts, alpha);
            std::set<int> flagged;
            for (size_t i = 0; i < r.flags.size(); ++i)
                if (r.flags[i]) flagged.insert(r.window_starts[i]);
            if (!first) {
                for (int w : flagged) CHECK(prev_flagged.count(w) == 1);
                CHECK(flagged.size() <= prev_flagged.size());
            }
            prev_flagged = flagged;
            first = false;
        }
    }
}

TEST_CASE("autoregressive rollout") {
    LtmModel model = LtmModel::build(micro_model_config(17));
    Rng rng(18);
    const int P = 4;
    std::vector<double> ctx(40);
    for (size_t t = 0; t < ctx.size(); ++t) ctx[t] = std::sin(0.3 * static_cast<double>(t));
    Tensor prompt = model.embed_prompt("go");

    SUBCASE("horizon equal to one patch needs exactly one iteration") {
        auto out = model.forecast_rollout(ctx, prompt, P, 4);
        CHECK(out.size() == static_cast<size_t>(P));
    }
    SUBCASE("rollout length is exactly H for awkward horizons") {
        for (int H : {1, P, 2 * P + 1, 3 * P, 17}) {
            auto out = model.forecast_rollout(ctx, prompt, H, 4);
            CHECK(out.size() == static_cast<size_t>(H));
        }
    }
    SUBCASE("first patch of a long rollout matches the short rollout bit-exactly") {
        auto short_run = model.forecast_rollout(ctx, prompt, P, 4);
        auto long_run = model.forecast_rollout(ctx, prompt, 3 * P, 4);
        for (int j = 0; j < P; ++j) CHECK(short_run[j] == long_run[j]);
    }
    SUBCASE("context shorter than a window is rejected") {
        std::vector<double> tiny(7, 0.0);
        CHECK_THROWS_AS(model.forecast_rollout(tiny, prompt, P, 4), std::runtime_error);
    }
    (void)rng;
}

TEST_CASE("full model micro gradcheck") {
    LtmModel model = LtmModel::build(micro_model_config(23));
    Rng rng(24);
    for (auto& v : model.fatm().fuse().linear().weight.values()) v = rng.normal() * 0.1;
    for (auto& v : model.head().out().weight.values()) v = rng.normal() * 0.1;
    Tensor patches = Tensor::randn({3, 4}, rng, 1.0, true);
    Tensor target = Tensor::randn({1, 4}, rng);
    std::vector<Tensor> leaves{patches};
    for (auto& p : model.parameters())
        if (!p.frozen) leaves.push_back(p.tensor);
    const double err = gradcheck_multi(
        [&]() {
            Tensor prompt = model.embed_prompt("probe");
            LtmModel::Output out = model.forward(patches, prompt);
            Tensor l_reg = forecasting_loss(slice(out.pred_patches, 0, 2, 1), target);
            return total_loss(l_reg, out.prompt_rows, out.fused, 0.3);
        },
        leaves);
    CHECK(err <= 1e-4);
}
