#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ltm/fatm.hpp"
#include "ltm/gradcheck.hpp"

using namespace ltm;

TEST_CASE("attention mean pooling") {
    SUBCASE("single prompt token is the exact identity") {
        Rng rng(2);
        Tensor p = Tensor::randn({1, 6}, rng);
        Tensor w = Tensor::randn({6, 1}, rng);
        Tensor b = Tensor::randn({1}, rng);
        Tensor pooled = attention_mean_pool(p, w, b);
        REQUIRE(pooled.shape() == Shape{1, 6});
        for (int j = 0; j < 6; ++j) CHECK(pooled.at(0, j) == p.at(0, j));
    }
    SUBCASE("hand evaluation with uniform weights") {
        Tensor p = Tensor::from({2, 2}, {2.0, 0.0, 2.0, 4.0});
        Tensor w = Tensor::zeros({2, 1});
        Tensor b = Tensor::zeros({1});
        Tensor pooled = attention_mean_pool(p, w, b);
        CHECK(pooled.at(0, 0) == doctest::Approx(1.0));
        CHECK(pooled.at(0, 1) == doctest::Approx(1.0));
    }
    SUBCASE("bias shift leaves the output unchanged") {
        Rng rng(3);
        Tensor p = Tensor::randn({5, 4}, rng);
        Tensor w = Tensor::randn({4, 1}, rng);
        Tensor out1 = attention_mean_pool(p, w, Tensor::scalar(0.0));
        Tensor out2 = attention_mean_pool(p, w, Tensor::scalar(17.5));
        for (int j = 0; j < 4; ++j) CHECK(out1.at(0, j) == out2.at(0, j));
    }
    SUBCASE("scaling W is invisible when all score rows are equal") {
        Rng rng(4);
        Tensor row = Tensor::randn({1, 4}, rng);
        Tensor p = repeat_align(row, 5);  // identical rows => PW rows equal for any W
        Tensor w = Tensor::randn({4, 1}, rng);
        Tensor w3 = scalar_mul(w, 3.0);
        Tensor out1 = attention_mean_pool(p, w, Tensor::scalar(0.0));
        Tensor out2 = attention_mean_pool(p, w3, Tensor::scalar(0.0));
        for (int j = 0; j < 4; ++j) CHECK(out1.at(0, j) == doctest::Approx(out2.at(0, j)).epsilon(1e-14));
    }
    SUBCASE("pooling gradients check out") {
        Rng rng(5);
        Tensor p = Tensor::randn({4, 3}, rng, 1.0, true);
        Tensor w = Tensor::randn({3, 1}, rng, 1.0, true);
        Tensor b = Tensor::randn({1}, rng, 1.0, true);
        CHECK(gradcheck_multi([&]() { return sum_all(square(attention_mean_pool(p, w, b))); },
                              {p, w, b}) <= 1e-4);
    }
}

TEST_CASE("repeat alignment") {
    Tensor row = Tensor::from({2}, {1.0, 2.0});
    SUBCASE("three copies") {
        Tensor r = repeat_align(row, 3);
        REQUIRE(r.shape() == Shape{3, 2});
        for (int i = 0; i < 3; ++i) {
            CHECK(r.at(i, 0) == 1.0);
            CHECK(r.at(i, 1) == 2.0);
        }
    }
    SUBCASE("single row identity") {
        Tensor r = repeat_align(row, 1);
        CHECK(r.at(0, 0) == 1.0);
        CHECK(r.at(0, 1) == 2.0);
    }
    SUBCASE("all rows equal for any n") {
        Rng rng(6);
        Tensor v = Tensor::randn({1, 7}, rng);
        Tensor r = repeat_align(v, 9);
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 7; ++j) CHECK(r.at(i, j) == r.at(0, j));
    }
    SUBCASE("n below one rejected") {
        CHECK_THROWS_AS(repeat_align(row, 0), std::runtime_error);
    }
}

TEST_CASE("multi-scale convolution") {
    Rng rng(7);
    SUBCASE("kernel size one with identity init is the identity") {
        MultiScaleConv conv = MultiScaleConv::create(4, {1}, rng);
        Tensor x = Tensor::randn({5, 4}, rng);
        Tensor y = conv.forward(x);
        for (size_t i = 0; i < x.values().size(); ++i) CHECK(y.values()[i] == x.values()[i]);
    }
    SUBCASE("constant rows stay constant away from the padded edges") {
        MultiScaleConv conv = MultiScaleConv::create(3, {3}, rng);
        for (auto& k : conv.kernels())
            for (auto& v : k.values()) v = rng.normal();
        Tensor row = Tensor::randn({1, 3}, rng);
        Tensor x = repeat_align(row, 6);
        Tensor y = conv.forward(x);
        for (int i = 2; i < 4; ++i)
            for (int j = 0; j < 3; ++j) CHECK(y.at(i, j) == doctest::Approx(y.at(1, j)).epsilon(1e-12));
    }
    SUBCASE("single-channel hand check against direct convolution") {
        MultiScaleConv conv = MultiScaleConv::create(1, {3}, rng);
        Tensor& ker = conv.kernels()[0];
        ker.values() = {0.5, -1.0, 2.0};
        conv.projection().weight.values() = {1.0};  // pass-through
        conv.projection().bias.values() = {0.0};
        Tensor x = Tensor::from({4, 1}, {1.0, 2.0, 3.0, 4.0});
        Tensor y = conv.forward(x);
        const std::vector<double> sig{1.0, 2.0, 3.0, 4.0};
        for (int i = 0; i < 4; ++i) {
            double want = 0.0;
            for (int j = 0; j < 3; ++j) {
                const int s = i + j - 1;
                if (s >= 0 && s < 4) want += ker.values()[j] * sig[s];
            }
            CHECK(y.at(i, 0) == doctest::Approx(want).epsilon(1e-14));
        }
    }
    SUBCASE("even kernel sizes rejected") {
        CHECK_THROWS_WITH_AS(MultiScaleConv::create(4, {4}, rng), doctest::Contains("odd"),
                             std::runtime_error);
        Tensor x = Tensor::zeros({4, 2});
        Tensor k = Tensor::zeros({2, 2});
        CHECK_THROWS_AS(depthwise_conv1d_same(x, k), std::runtime_error);
    }
}

TEST_CASE("gated fusion") {
    Rng rng(8);
    SUBCASE("zero-initialized mix is a bit-exact residual") {
        FuseGate fuse = FuseGate::create(5);
        Tensor conv_feats = Tensor::randn({4, 5}, rng);
        Tensor prows = Tensor::randn({4, 5}, rng);
        Tensor pe = Tensor::randn({4, 5}, rng);
        Tensor f = fuse.forward(conv_feats, prows, pe);
        for (size_t i = 0; i < pe.values().size(); ++i) CHECK(f.values()[i] == pe.values()[i]);
    }
    SUBCASE("saturated-low gate removes the prompt from the mix") {
        FuseGate fuse = FuseGate::create(3);
        for (auto& v : fuse.linear().weight.values()) v = rng.normal();
        for (auto& v : fuse.linear().bias.values()) v = rng.normal();
        fuse.gate().values()[0] = -800.0;  // sigmoid underflows to exactly 0
        Tensor conv_feats = Tensor::randn({4, 3}, rng);
        Tensor prows = Tensor::randn({4, 3}, rng);
        Tensor pe = Tensor::randn({4, 3}, rng);
        Tensor with_prompt = fuse.forward(conv_feats, prows, pe);
        Tensor without = fuse.forward(conv_feats, conv_feats, pe);
        for (size_t i = 0; i < pe.values().size(); ++i)
            CHECK(with_prompt.values()[i] == without.values()[i]);
    }
    SUBCASE("shape mismatch rejected") {
        FuseGate fuse = FuseGate::create(3);
        CHECK_THROWS_AS(
            fuse.forward(Tensor::zeros({4, 3}), Tensor::zeros({5, 3}), Tensor::zeros({4, 3})),
            std::runtime_error);
    }
    SUBCASE("gate gradient matches finite differences") {
        FuseGate fuse = FuseGate::create(3);
        for (auto& v : fuse.linear().weight.values()) v = rng.normal() * 0.3;
        fuse.gate().values()[0] = 0.4;
        Tensor conv_feats = Tensor::randn({4, 3}, rng);
        Tensor prows = Tensor::randn({4, 3}, rng);
        Tensor pe = Tensor::randn({4, 3}, rng);
        CHECK(gradcheck_multi(
                  [&]() { return sum_all(square(fuse.forward(conv_feats, prows, pe))); },
                  {fuse.gate()}) <= 1e-4);
    }
}

TEST_CASE("full FATM forward pass") {
    Rng rng(9);
    Fatm fatm = Fatm::create(8, {3, 5}, rng);

    SUBCASE("with a prompt, output carries aligned rows") {
        Tensor pe = Tensor::randn({6, 8}, rng);
        Tensor prompt = Tensor::randn({5, 8}, rng);
        Fatm::Output out = fatm.forward(pe, prompt);
        REQUIRE(out.fused.shape() == Shape{6, 8});
        REQUIRE(out.prompt_rows.shape() == Shape{6, 8});
        for (int i = 1; i < 6; ++i)
            for (int j = 0; j < 8; ++j) CHECK(out.prompt_rows.at(i, j) == out.prompt_rows.at(0, j));
    }
    SUBCASE("without a prompt, no alignment rows are reported") {
        Tensor pe = Tensor::randn({6, 8}, rng);
        Fatm::Output out = fatm.forward(pe, Tensor());
        CHECK(out.fused.defined());
        CHECK_FALSE(out.prompt_rows.defined());
    }
    SUBCASE("whole module passes gradcheck on small inputs") {
        // Perturb away from the zero init so every path carries gradient.
        for (auto& v : fatm.fuse().linear().weight.values()) v = rng.normal() * 0.2;
        for (auto& v : fatm.pool_w().values()) v = rng.normal() * 0.5;
        Tensor pe = Tensor::randn({6, 8}, rng, 1.0, true);
        Tensor prompt = Tensor::randn({4, 8}, rng, 1.0, true);
        std::vector<Parameter> params;
        fatm.collect_params("fatm", params);
        std::vector<Tensor> leaves{pe, prompt};
        for (auto& p : params) leaves.push_back(p.tensor);
        const double err = gradcheck_multi(
            [&]() {
                Fatm::Output out = fatm.forward(pe, prompt);
                return add(sum_all(square(out.fused)), sum_all(square(out.prompt_rows)));
            },
            leaves);
        CHECK(err <= 1e-4);
    }
}
