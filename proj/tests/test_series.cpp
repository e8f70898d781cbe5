#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ltm/series.hpp"

using namespace ltm;

namespace {

TimeSeries from_values(std::vector<double> v) {
    TimeSeries ts = TimeSeries::zeros(1, static_cast<int>(v.size()));
    std::copy(v.begin(), v.end(), ts.channel(0));
    return ts;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("z-score normalization") {
    SUBCASE("hand-computed population std") {
        auto [norm, stats] = zscore_normalize(from_values({2.0, 4.0, 6.0}));
        // population std = sqrt(8/3)
        CHECK(norm.at(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
        CHECK(norm.at(0, 1) == doctest::Approx(0.0).epsilon(1e-8));
        CHECK(norm.at(0, 2) == doctest::Approx(1.2247).epsilon(1e-4));
        CHECK(stats.mean[0] == doctest::Approx(4.0));
    }
    SUBCASE("constant channel is floored, not divided away") {
        auto [norm, stats] = zscore_normalize(from_values({5.0, 5.0, 5.0}));
        for (int t = 0; t < 3; ++t) CHECK(norm.at(0, t) == 0.0);
        CHECK(stats.std[0] == kStdFloor);
    }
    SUBCASE("already standardized input is unchanged") {
        auto [norm, stats] = zscore_normalize(from_values({-1.0, 1.0}));
        CHECK(norm.at(0, 0) == doctest::Approx(-1.0));
        CHECK(norm.at(0, 1) == doctest::Approx(1.0));
    }
    SUBCASE("too-short series rejected") {
        CHECK_THROWS_AS(zscore_normalize(from_values({1.0})), std::runtime_error);
    }
    SUBCASE("round trip within 1e-9") {
        Rng rng(3);
        TimeSeries ts = TimeSeries::zeros(2, 64);
        for (int ch = 0; ch < 2; ++ch)
            for (int t = 0; t < 64; ++t) ts.set(ch, t, rng.normal(3.0, 2.5));
        auto [norm, stats] = zscore_normalize(ts);
        TimeSeries back = denormalize(norm, stats);
        for (int ch = 0; ch < 2; ++ch)
            for (int t = 0; t < 64; ++t)
                CHECK(std::fabs(back.at(ch, t) - ts.at(ch, t)) <= 1e-9);
    }
}

TEST_CASE("segmentation") {
    Rng rng(5);
    SUBCASE("non-overlapping count") {
        TimeSeries ts = TimeSeries::zeros(1, 96);
        PatchSequence ps = segment(ts, 0, 16, 16);
        CHECK(ps.n == 6);
    }
    SUBCASE("overlapping starts") {
        TimeSeries ts = from_values({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
        PatchSequence ps = segment(ts, 0, 4, 2);
        CHECK(ps.n == 4);
        for (int i = 0; i < 4; ++i) CHECK(ps.patches.at(i, 0) == doctest::Approx(2.0 * i));
    }
    SUBCASE("single whole-series patch") {
        TimeSeries ts = from_values({1, 2, 3, 4, 5});
        PatchSequence ps = segment(ts, 0, 5, 1);
        CHECK(ps.n == 1);
        for (int j = 0; j < 5; ++j) CHECK(ps.patches.at(0, j) == doctest::Approx(j + 1.0));
    }
    SUBCASE("patch longer than series rejected") {
        TimeSeries ts = from_values({1, 2, 3});
        CHECK_THROWS_AS(segment(ts, 0, 4, 1), std::runtime_error);
    }
    SUBCASE("non-overlapping patches reconstruct the prefix exactly") {
        TimeSeries ts = TimeSeries::zeros(1, 70);
        for (int t = 0; t < 70; ++t) ts.set(0, t, rng.normal());
        PatchSequence ps = segment(ts, 0, 16, 16);  // n = 4, covers 64 points
        CHECK(ps.n == 4);
        for (int i = 0; i < ps.n; ++i)
            for (int j = 0; j < 16; ++j) CHECK(ps.patches.at(i, j) == ts.at(0, i * 16 + j));
    }
}

TEST_CASE("masking") {
    TimeSeries x = from_values({1, 2, 3});
    SUBCASE("identity and annihilation") {
        Mask ones = Mask::ones(1, 3);
        TimeSeries y = apply_mask(x, ones);
        for (int t = 0; t < 3; ++t) CHECK(y.at(0, t) == x.at(0, t));
        Mask zeros = Mask::ones(1, 3);
        std::fill(zeros.values.begin(), zeros.values.end(), 0.0);
        y = apply_mask(x, zeros);
        for (int t = 0; t < 3; ++t) CHECK(y.at(0, t) == 0.0);
    }
    SUBCASE("elementwise definition and idempotency") {
        Mask m = Mask::ones(1, 3);
        m.values[1] = 0.0;
        TimeSeries y = apply_mask(x, m);
        CHECK(y.at(0, 0) == 1.0);
        CHECK(y.at(0, 1) == 0.0);
        CHECK(y.at(0, 2) == 3.0);
        TimeSeries yy = apply_mask(y, m);
        for (int t = 0; t < 3; ++t) CHECK(yy.at(0, t) == y.at(0, t));
    }
    SUBCASE("shape mismatch rejected") {
        CHECK_THROWS_AS(apply_mask(x, Mask::ones(1, 4)), std::runtime_error);
    }
}

TEST_CASE("random mask counts") {
    SUBCASE("exact zero count per channel") {
        Rng rng(1);
        Mask m = random_mask(2, 8, 0.25, rng);
        for (int ch = 0; ch < 2; ++ch) {
            int zeros = 0;
            for (int t = 0; t < 8; ++t) zeros += m.at(ch, t) == 0.0 ? 1 : 0;
            CHECK(zeros == 2);
        }
    }
    SUBCASE("different seeds, different positions, same count") {
        Rng r1(1), r2(2);
        Mask m1 = random_mask(1, 8, 0.5, r1);
        Mask m2 = random_mask(1, 8, 0.5, r2);
        int z1 = 0, z2 = 0;
        bool same = true;
        for (int t = 0; t < 8; ++t) {
            z1 += m1.at(0, t) == 0.0 ? 1 : 0;
            z2 += m2.at(0, t) == 0.0 ? 1 : 0;
            same = same && m1.at(0, t) == m2.at(0, t);
        }
        CHECK(z1 == 4);
        CHECK(z2 == 4);
        CHECK_FALSE(same);
    }
    SUBCASE("missing-rate grid value") {
        Rng rng(9);
        Mask m = random_mask(1, 1000, 0.125, rng);
        int zeros = 0;
        for (int t = 0; t < 1000; ++t) zeros += m.at(0, t) == 0.0 ? 1 : 0;
        CHECK(zeros == 125);
    }
    SUBCASE("rate domain") {
        Rng rng(1);
        CHECK_THROWS_AS(random_mask(1, 8, 0.0, rng), std::runtime_error);
        CHECK_THROWS_AS(random_mask(1, 8, 1.0, rng), std::runtime_error);
    }
}

TEST_CASE("synthetic series") {
    SUBCASE("pure sine amplitude bound") {
        Rng rng(4);
        auto [ts, ann] = synth_series("sine", 256, {}, rng);
        for (int t = 0; t < 256; ++t) CHECK(std::fabs(ts.at(0, t)) <= 1.0 + 1e-12);
        CHECK(ann.anomaly_indices.empty());
    }
    SUBCASE("anomaly annotations are exact") {
        Rng rng(4);
        SynthParams p;
        p.n_anomalies = 3;
        p.anomaly_len = 2;
        auto [ts, ann] = synth_series("anomaly", 1024, p, rng);
        CHECK(ann.anomaly_indices.size() == 6);  // 3 segments x 2 points
        for (size_t i = 0; i < ann.anomaly_indices.size(); ++i) {
            const int idx = ann.anomaly_indices[i];
            CHECK(idx >= static_cast<int>(0.55 * 1024));
            CHECK(idx < 1024);
            CHECK(ann.anomaly_magnitudes[i] > 0.0);
        }
    }
    SUBCASE("trend slope recovered by least squares") {
        Rng rng(4);
        SynthParams p;
        p.trend_slope = 0.01;
        p.period = 32.0;
        auto [ts, ann] = synth_series("sine+trend", 256, p, rng);
        const int L = 256;
        double tbar = (L - 1) / 2.0, mu = 0.0;
        for (int t = 0; t < L; ++t) mu += ts.at(0, t);
        mu /= L;
        double sxy = 0.0, sxx = 0.0;
        for (int t = 0; t < L; ++t) {
            sxy += (t - tbar) * (ts.at(0, t) - mu);
            sxx += (t - tbar) * (t - tbar);
        }
        CHECK(sxy / sxx == doctest::Approx(0.01).epsilon(0.2));
        CHECK(std::fabs(sxy / sxx - 0.01) <= 0.002);
    }
    SUBCASE("deterministic per seed") {
        Rng r1(12), r2(12);
        auto [a, a_ann] = synth_series("sine+noise", 64, {}, r1);
        auto [b, b_ann] = synth_series("sine+noise", 64, {}, r2);
        for (int t = 0; t < 64; ++t) CHECK(a.at(0, t) == b.at(0, t));
    }
    SUBCASE("length floor") {
        Rng rng(1);
        CHECK_THROWS_AS(synth_series("sine", 16, {}, rng), std::runtime_error);
    }
}

TEST_CASE("few-shot subset") {
    TimeSeries ts = TimeSeries::zeros(1, 1000);
    for (int t = 0; t < 1000; ++t) ts.set(0, t, t);
    SUBCASE("five percent of 1000") {
        TimeSeries sub = few_shot_subset(ts, 0.05);
        CHECK(sub.length == 50);
        CHECK(sub.at(0, 49) == 49.0);  // contiguous prefix
    }
    SUBCASE("full fraction is identity") {
        TimeSeries sub = few_shot_subset(ts, 1.0);
        CHECK(sub.length == 1000);
    }
    SUBCASE("floor arithmetic") {
        TimeSeries small = TimeSeries::zeros(1, 40);
        CHECK(few_shot_subset(small, 0.05).length == 2);
    }
    SUBCASE("length law for random fractions") {
        Rng rng(8);
        for (int i = 0; i < 20; ++i) {
            const double f = rng.uniform(0.001, 1.0);
            const int expect = static_cast<int>(std::floor(f * 1000));
            if (expect == 0) continue;
            CHECK(few_shot_subset(ts, f).length == expect);
        }
    }
    SUBCASE("empty result rejected") {
        TimeSeries tiny = TimeSeries::zeros(1, 10);
        CHECK_THROWS_AS(few_shot_subset(tiny, 0.05), std::runtime_error);
        CHECK_THROWS_AS(few_shot_subset(tiny, 1.5), std::runtime_error);
    }
}

TEST_CASE("csv loading") {
    SUBCASE("plain two-channel file") {
        auto path = write_temp("ltm_t1.csv", "a,b\n1,2\n3,4\n5,6\n");
        TimeSeries ts = load_csv(path);
        CHECK(ts.channels == 2);
        CHECK(ts.length == 3);
        CHECK(ts.at(0, 2) == 5.0);
        CHECK(ts.at(1, 0) == 2.0);
        CHECK_FALSE(ts.timestamps.has_value());
    }
    SUBCASE("timestamp column") {
        auto path = write_temp("ltm_t2.csv", "timestamp,x\n0.5,1\n1.5,2\n");
        TimeSeries ts = load_csv(path);
        CHECK(ts.channels == 1);
        REQUIRE(ts.timestamps.has_value());
        CHECK((*ts.timestamps)[1] == 1.5);
    }
    SUBCASE("non-numeric cell names the row") {
        auto path = write_temp("ltm_t3.csv", "a\n1\nbogus\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 3"), std::runtime_error);
    }
    SUBCASE("header-only file is an empty series") {
        auto path = write_temp("ltm_t4.csv", "a,b\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("empty"), std::runtime_error);
    }
    SUBCASE("ragged row rejected with its number") {
        auto path = write_temp("ltm_t5.csv", "a,b\n1,2\n3\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 3"), std::runtime_error);
    }
    SUBCASE("non-monotone timestamps rejected") {
        auto path = write_temp("ltm_t6.csv", "timestamp,x\n2,1\n1,2\n");
        CHECK_THROWS_AS(load_csv(path), std::runtime_error);
    }
}
