#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ltm/checkpoint.hpp"
#include "ltm/svg.hpp"
#include "ltm/trainer.hpp"

using namespace ltm;

namespace {

namespace fs = std::filesystem;

std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// A configuration small enough that train + evaluate runs in well under a
// second but still exercises every module.
ExperimentConfig tiny_config() {
    std::map<std::string, std::string> kv;
    kv["task"] = "forecasting";
    kv["dataset"] = "synth:sine+noise:L=256,period=16,noise=0.02";
    kv["patch_len"] = "8";
    kv["stride"] = "8";
    kv["kernel_sizes"] = "3";
    kv["epochs"] = "2";
    kv["batch"] = "4";
    kv["seed"] = "5";
    kv["window_patches"] = "4";
    kv["horizon"] = "16";
    kv["query"] = "q";
    kv["backbone.layers"] = "1";
    kv["backbone.heads"] = "2";
    kv["backbone.d_model"] = "16";
    kv["backbone.d_ff"] = "32";
    kv["backbone.max_seq"] = "160";
    return ExperimentConfig::from_map(kv);
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("sections, comments and overrides") {
        auto kv = parse_config_text(
            "# experiment\n"
            "task = imputation\n"
            "seed = 9\n"
            "\n"
            "[backbone]\n"
            "layers = 3   # small\n"
            "arch = encoder_only\n");
        CHECK(kv.at("task") == "imputation");
        CHECK(kv.at("backbone.layers") == "3");
        apply_override(kv, "backbone.layers=5");
        apply_override(kv, "lambda=0.25");
        ExperimentConfig cfg = ExperimentConfig::from_map(kv);
        CHECK(cfg.task == Task::kImputation);
        CHECK(cfg.backbone.layers == 5);
        CHECK(cfg.backbone.arch == BackboneConfig::Arch::kEncoderOnly);
        CHECK(cfg.lambda == doctest::Approx(0.25));
        CHECK(cfg.seed == 9);
    }
    SUBCASE("bad inputs produce errors") {
        CHECK_THROWS_AS(parse_config_text("novalue\n"), std::runtime_error);
        CHECK_THROWS_AS(parse_config_text("[unclosed\nk = v\n"), std::runtime_error);
        std::map<std::string, std::string> kv{{"task", "nosuch"}};
        CHECK_THROWS_AS(ExperimentConfig::from_map(kv), std::runtime_error);
        kv = {{"lambda", "1.5"}};
        CHECK_THROWS_AS(ExperimentConfig::from_map(kv), std::runtime_error);
        kv = {{"missing_rate", "0"}};
        CHECK_THROWS_AS(ExperimentConfig::from_map(kv), std::runtime_error);
        kv = {{"ablation", "no_everything"}};
        CHECK_THROWS_AS(ExperimentConfig::from_map(kv), std::runtime_error);
    }
    SUBCASE("round trip through to_map") {
        ExperimentConfig cfg = tiny_config();
        cfg.no_fatm = true;
        cfg.few_shot_fraction = 0.05;
        ExperimentConfig back = ExperimentConfig::from_map(cfg.to_map());
        CHECK(back.task == cfg.task);
        CHECK(back.dataset == cfg.dataset);
        CHECK(back.no_fatm == cfg.no_fatm);
        CHECK(back.patch_len == cfg.patch_len);
        CHECK(back.backbone.d_model == cfg.backbone.d_model);
        REQUIRE(back.few_shot_fraction.has_value());
        CHECK(*back.few_shot_fraction == doctest::Approx(0.05));
    }
}

TEST_CASE("dataset loading") {
    ExperimentConfig cfg = tiny_config();
    SUBCASE("synth spec with parameters") {
        DatasetBundle d = load_dataset(cfg);
        CHECK(d.full.length == 256);
        CHECK(d.full.channels == 1);
    }
    SUBCASE("anomaly spec records ground truth") {
        cfg.dataset = "synth:anomaly:L=512,spikes=2";
        DatasetBundle d = load_dataset(cfg);
        CHECK_FALSE(d.annotations.anomaly_indices.empty());
    }
    SUBCASE("csv path") {
        const std::string path = tmp_path("ltm_ds.csv");
        std::ofstream(path) << "a\n1\n2\n3\n4\n";
        cfg.dataset = "csv:" + path;
        DatasetBundle d = load_dataset(cfg);
        CHECK(d.full.length == 4);
    }
}

TEST_CASE("training descends, freezes the backbone and counts points") {
    ExperimentConfig cfg = tiny_config();
    cfg.epochs = 5;
    DatasetBundle data = load_dataset(cfg);
    MetricsReport report;
    TrainedModel tm = train(cfg, data, report);

    REQUIRE(report.epoch_loss.size() == 5);
    CHECK(report.epoch_loss.back() < report.epoch_loss.front());
    CHECK(report.checksum_before == report.checksum_after);
    CHECK(report.train_points == 192);  // floor(0.75 * 256)
    CHECK(report.trainable_fraction < 0.5);
    CHECK(report.trainable_fraction ==
          static_cast<double>(report.trainable_params) / static_cast<double>(report.total_params));

    evaluate(tm, data, report);
    CHECK(std::isfinite(report.mse));
    CHECK(report.baseline_mse > 0.0);
}

TEST_CASE("few-shot training consumes exactly the configured prefix") {
    ExperimentConfig cfg = tiny_config();
    cfg.dataset = "synth:sine:L=1024,period=16";
    cfg.few_shot_fraction = 0.2;
    DatasetBundle data = load_dataset(cfg);
    MetricsReport report;
    TrainedModel tm = train(cfg, data, report);
    // split = floor(0.75*1024) = 768; subset = floor(0.2*768)
    CHECK(report.train_points == 153);
    CHECK(tm.train_split == 768);
    evaluate(tm, data, report);
    CHECK(std::isfinite(report.mse));
}

TEST_CASE("prompt construction honors ablation switches") {
    ExperimentConfig cfg = tiny_config();
    DatasetBundle data = load_dataset(cfg);
    TimeSeries train_raw = TimeSeries::zeros(1, 128);
    for (int t = 0; t < 128; ++t) train_raw.set(0, t, std::sin(0.3 * t));

    SUBCASE("full prompt carries the query and a summary") {
        cfg.query = "predict weekend load";
        std::string p = build_prompt_text(cfg, train_raw);
        CHECK(p.find("predict weekend load") != std::string::npos);
        CHECK(p.find("Series summary") != std::string::npos);
    }
    SUBCASE("no_kdtp reduces to the raw query") {
        cfg.no_kdtp = true;
        cfg.query = "predict weekend load";
        CHECK(build_prompt_text(cfg, train_raw) == "predict weekend load");
    }
    SUBCASE("no_kdtp with an empty query disables the prompt path") {
        cfg.no_kdtp = true;
        cfg.query = "";
        CHECK(build_prompt_text(cfg, train_raw).empty());
        LtmModel model = LtmModel::build(cfg.to_model_config());
        Tensor prompt = model.embed_prompt("");
        CHECK_FALSE(prompt.defined());
        Rng rng(1);
        LtmModel::Output out = model.forward(Tensor::randn({4, 8}, rng), prompt);
        CHECK(out.t_p == 0);  // strip_prefix is the identity
        CHECK(out.pred_patches.dim(0) == 4);
        Tape::active().reset();
    }
}

TEST_CASE("ablation harness structural assertions") {
    ExperimentConfig cfg = tiny_config();
    cfg.epochs = 1;
    auto rows = run_ablation(cfg);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].name == "full");
    CHECK(rows[1].name == "no_fatm");
    CHECK(rows[2].name == "no_kdtp");
    CHECK(rows[3].name == "no_llm");
    CHECK(rows[3].frozen_params == 0);
    CHECK(rows[0].frozen_params > 0);
    CHECK(rows[2].report.prompt_text == cfg.query);  // raw query only
    CHECK(rows[0].report.prompt_text.find("Series summary") != std::string::npos);
    for (const auto& r : rows) CHECK(std::isfinite(r.report.mse));

    const std::string path = tmp_path("ltm_ablation.csv");
    write_ablation_csv(path, rows);
    const std::string text = read_file(path);
    CHECK(text.find("no_llm") != std::string::npos);
}

TEST_CASE("metrics CSV is byte-reproducible and schema-stable") {
    ExperimentConfig cfg = tiny_config();
    const std::string p1 = tmp_path("ltm_m1.csv"), p2 = tmp_path("ltm_m2.csv");
    {
        auto [tm, report] = run_experiment(cfg);
        write_metrics_csv(p1, cfg, report);
    }
    {
        auto [tm, report] = run_experiment(cfg);
        write_metrics_csv(p2, cfg, report);
    }
    const std::string a = read_file(p1), b = read_file(p2);
    CHECK(a == b);
    CHECK(a.rfind("task,dataset,seed,epoch,loss,mae,mse,trainable_params,total_params,sec_per_iter\n",
                  0) == 0);
}

TEST_CASE("checkpoint round trip and validation") {
    ExperimentConfig cfg = tiny_config();
    cfg.epochs = 1;
    DatasetBundle data = load_dataset(cfg);
    MetricsReport report;
    TrainedModel tm = train(cfg, data, report);
    const std::string path = tmp_path("ltm_ckpt.bin");
    save_checkpoint(path, tm.model.parameters(), cfg.to_map());

    SUBCASE("bit-exact round trip") {
        TrainedModel fresh = prepare_untrained(cfg, data);
        auto params = fresh.model.parameters();
        auto echo = load_checkpoint(path, params);
        CHECK(echo.at("task") == "forecasting");
        auto trained = tm.model.parameters();
        REQUIRE(trained.size() == params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            const auto& a = trained[i].tensor.values();
            const auto& b = params[i].tensor.values();
            REQUIRE(a.size() == b.size());
            for (size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
        }
    }
    SUBCASE("truncated payload is caught by checksums") {
        const std::string broken = tmp_path("ltm_ckpt_broken.bin");
        std::string bytes = read_file(path);
        bytes.resize(bytes.size() - 64);
        std::ofstream(broken, std::ios::binary) << bytes;
        TrainedModel fresh = prepare_untrained(cfg, data);
        auto params = fresh.model.parameters();
        CHECK_THROWS_AS(load_checkpoint(broken, params), std::runtime_error);
    }
    SUBCASE("mismatched config names the offending parameter") {
        ExperimentConfig other = cfg;
        other.backbone.d_model = 32;
        other.backbone.d_ff = 64;
        other.d_red = 8;
        DatasetBundle d2 = load_dataset(other);
        TrainedModel fresh = prepare_untrained(other, d2);
        auto params = fresh.model.parameters();
        CHECK_THROWS_WITH_AS(load_checkpoint(path, params), doctest::Contains("patch_embed"),
                             std::runtime_error);
    }
    SUBCASE("not a checkpoint file") {
        const std::string garbage = tmp_path("ltm_ckpt_garbage.bin");
        std::ofstream(garbage, std::ios::binary) << "definitely not a checkpoint";
        TrainedModel fresh = prepare_untrained(cfg, data);
        auto params = fresh.model.parameters();
        CHECK_THROWS_AS(load_checkpoint(garbage, params), std::runtime_error);
    }
}

TEST_CASE("imputation and anomaly evaluation paths") {
    SUBCASE("imputation beats or at least produces finite masked error") {
        ExperimentConfig cfg = tiny_config();
        cfg.task = Task::kImputation;
        cfg.missing_rate = 0.25;
        cfg.epochs = 3;
        auto [tm, report] = run_experiment(cfg);
        CHECK(std::isfinite(report.mse));
        CHECK(report.baseline_mse > 0.0);
    }
    SUBCASE("anomaly report flags spikes and stays monotone in alpha") {
        ExperimentConfig cfg = tiny_config();
        cfg.task = Task::kAnomaly;
        cfg.dataset = "synth:anomaly:L=768,period=16,noise=0.05,spikes=2,sigma=8";
        cfg.train_frac = 0.5;
        cfg.epochs = 3;
        DatasetBundle data = load_dataset(cfg);
        MetricsReport report;
        TrainedModel tm = train(cfg, data, report);
        AnomalyReport r99 = detect_anomalies(tm, data, 0.99);
        AnomalyReport r90 = detect_anomalies(tm, data, 0.90);
        CHECK(r99.tau >= r90.tau);
        int f99 = 0, f90 = 0;
        for (int f : r99.flags) f99 += f;
        for (int f : r90.flags) f90 += f;
        CHECK(f99 <= f90);
        double precision = 0.0, recall = 0.0;
        score_anomaly_report(r99, data, cfg.patch_len, &precision, &recall);
        CHECK(recall >= 0.0);
        CHECK(precision >= 0.0);
    }
}

TEST_CASE("svg plots are written and well formed") {
    SvgPlot plot(400, 200, "demo");
    plot.add_series("a", {0.0, 1.0, 0.5, -0.25}, "#1f77b4");
    plot.add_hline(0.5, "tau", "#d62728");
    plot.add_markers("m", {1, 2}, {1.0, 0.5}, "#2ca02c");
    const std::string path = tmp_path("ltm_plot.svg");
    plot.write(path);
    const std::string text = read_file(path);
    CHECK(text.rfind("<svg", 0) == 0);
    CHECK(text.find("</svg>") != std::string::npos);
    CHECK(text.find("polyline") != std::string::npos);
    CHECK(text.find("tau") != std::string::npos);
}
