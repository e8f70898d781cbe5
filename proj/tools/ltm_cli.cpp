#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltm/checkpoint.hpp"
#include "ltm/config.hpp"
#include "ltm/gradcheck.hpp"
#include "ltm/svg.hpp"
#include "ltm/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ltm;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
    std::string checkpoint_path;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_checkpoint = true) {
    cmd->add_option("--config", args.config_path, "experiment config file (key = value)");
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set epochs=4");
    cmd->add_option("--out", args.out_dir, "output directory");
    if (with_checkpoint)
        cmd->add_option("--checkpoint", args.checkpoint_path, "load model weights instead of training");
}

void add_shortcut(CLI::App* cmd, CommonArgs& args, const std::string& flag, const std::string& key,
                  const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&args, key](const std::string& v) { args.overrides.push_back(key + "=" + v); }, help);
}

ExperimentConfig make_config(const CommonArgs& args) {
    if (!args.config_path.empty()) return ExperimentConfig::from_file(args.config_path, args.overrides);
    std::map<std::string, std::string> kv;
    for (const auto& o : args.overrides) apply_override(kv, o);
    return ExperimentConfig::from_map(kv);
}

// Either trains from scratch or rehydrates the model from a checkpoint.
std::pair<TrainedModel, MetricsReport> obtain_model(const ExperimentConfig& cfg,
                                                    const DatasetBundle& data,
                                                    const std::string& checkpoint_path) {
    MetricsReport report;
    if (checkpoint_path.empty()) {
        TrainedModel tm = train(cfg, data, report);
        return {std::move(tm), std::move(report)};
    }
    TrainedModel tm = prepare_untrained(cfg, data);
    auto params = tm.model.parameters();
    load_checkpoint(checkpoint_path, params);
    report.task = task_name(cfg.task);
    report.dataset = cfg.dataset;
    report.seed = cfg.seed;
    report.trainable_params = tm.model.trainable_params();
    report.total_params = tm.model.total_params();
    report.trainable_fraction =
        static_cast<double>(report.trainable_params) / static_cast<double>(report.total_params);
    report.prompt_text = tm.prompt_text;
    return {std::move(tm), std::move(report)};
}

ExperimentConfig config_for_checkpoint(const CommonArgs& args) {
    if (!args.checkpoint_path.empty() && args.config_path.empty()) {
        auto kv = peek_checkpoint_config(args.checkpoint_path);
        for (const auto& o : args.overrides) {
            auto kv2 = kv;  // overrides may not change model shape, but allow eval knobs
            apply_override(kv, o);
            (void)kv2;
        }
        return ExperimentConfig::from_map(kv);
    }
    return make_config(args);
}

void print_report(const MetricsReport& r) {
    std::printf("task=%s dataset=%s seed=%llu\n", r.task.c_str(), r.dataset.c_str(),
                static_cast<unsigned long long>(r.seed));
    if (!r.epoch_loss.empty())
        std::printf("epochs=%zu first_loss=%.6g final_loss=%.6g\n", r.epoch_loss.size(),
                    r.epoch_loss.front(), r.epoch_loss.back());
    std::printf("mae=%.6g mse=%.6g (baseline mae=%.6g mse=%.6g)\n", r.mae, r.mse, r.baseline_mae,
                r.baseline_mse);
    std::printf("params: trainable=%lld total=%lld fraction=%.4f\n",
                static_cast<long long>(r.trainable_params), static_cast<long long>(r.total_params),
                r.trainable_fraction);
    std::printf("train_points=%lld optimizer_steps=%lld sec_per_iter=%.4f\n",
                static_cast<long long>(r.train_points), static_cast<long long>(r.optimizer_steps),
                r.sec_per_iter);
    if (r.checksum_before || r.checksum_after)
        std::printf("backbone_checksum %016llx -> %016llx (%s)\n",
                    static_cast<unsigned long long>(r.checksum_before),
                    static_cast<unsigned long long>(r.checksum_after),
                    r.checksum_before == r.checksum_after ? "frozen" : "CHANGED");
}

int cmd_train(const CommonArgs& args) {
    ExperimentConfig cfg = make_config(args);
    DatasetBundle data = load_dataset(cfg);
    MetricsReport report;
    TrainedModel tm = train(cfg, data, report);
    evaluate(tm, data, report);
    fs::create_directories(args.out_dir);
    write_metrics_csv(args.out_dir + "/metrics.csv", cfg, report);
    save_checkpoint(args.out_dir + "/model.ltmckpt", tm.model.parameters(), cfg.to_map());
    print_report(report);
    std::printf("wrote %s/metrics.csv and %s/model.ltmckpt\n", args.out_dir.c_str(),
                args.out_dir.c_str());
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    if (args.checkpoint_path.empty()) {
        std::fprintf(stderr, "evaluate: --checkpoint is required\n");
        return 2;
    }
    ExperimentConfig cfg = config_for_checkpoint(args);
    DatasetBundle data = load_dataset(cfg);
    auto [tm, report] = obtain_model(cfg, data, args.checkpoint_path);
    evaluate(tm, data, report);
    fs::create_directories(args.out_dir);
    write_metrics_csv(args.out_dir + "/metrics.csv", cfg, report);
    print_report(report);
    return 0;
}

int cmd_forecast(const CommonArgs& args) {
    ExperimentConfig cfg = config_for_checkpoint(args);
    cfg.task = Task::kForecasting;
    DatasetBundle data = load_dataset(cfg);
    auto [tm, report] = obtain_model(cfg, data, args.checkpoint_path);
    evaluate(tm, data, report);

    const int test_len = data.full.length - tm.train_split;
    const int H = std::min(cfg.horizon, test_len);
    auto pred = forecast_from_train_tail(tm, data, H);
    fs::create_directories(args.out_dir);

    std::ofstream csv(args.out_dir + "/forecast.csv");
    csv << "t,truth,prediction\n";
    std::vector<double> truth(H);
    for (int t = 0; t < H; ++t) {
        truth[t] = data.full.at(0, tm.train_split + t);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", t, truth[t], pred[t]);
        csv << buf;
    }
    const int ctx_show = std::min(tm.train_split, 2 * H);
    std::vector<double> ctx_tail(data.full.channel(0) + tm.train_split - ctx_show,
                                 data.full.channel(0) + tm.train_split);
    SvgPlot plot(900, 360, "forecast vs truth (horizon " + std::to_string(H) + ")");
    plot.add_series("context", ctx_tail, "#888888", 0.0);
    plot.add_series("truth", truth, "#1f77b4", ctx_show);
    plot.add_series("forecast", pred, "#d62728", ctx_show);
    plot.write(args.out_dir + "/forecast.svg");

    print_report(report);
    std::printf("wrote %s/forecast.csv and %s/forecast.svg\n", args.out_dir.c_str(),
                args.out_dir.c_str());
    return 0;
}

int cmd_impute(const CommonArgs& args, bool sweep) {
    ExperimentConfig cfg = config_for_checkpoint(args);
    cfg.task = Task::kImputation;
    fs::create_directories(args.out_dir);
    if (sweep) {
        const std::vector<double> rates{0.125, 0.25, 0.375, 0.5};
        const std::vector<uint64_t> seeds{cfg.seed, cfg.seed + 1, cfg.seed + 2};
        auto rows = imputation_sweep(cfg, rates, seeds);
        write_sweep_csv(args.out_dir + "/imputation_sweep.csv", rows);
        std::printf("rate     seed  model_mse     meanfill_mse\n");
        for (const auto& r : rows)
            std::printf("%-8.3g %-5llu %-13.6g %-13.6g\n", r.rate,
                        static_cast<unsigned long long>(r.seed), r.model_mse, r.baseline_mse);
        std::printf("wrote %s/imputation_sweep.csv\n", args.out_dir.c_str());
        return 0;
    }
    DatasetBundle data = load_dataset(cfg);
    auto [tm, report] = obtain_model(cfg, data, args.checkpoint_path);
    evaluate(tm, data, report);
    ImputationResult res = impute_test_region(tm, data);

    std::ofstream csv(args.out_dir + "/imputed.csv");
    csv << "t,truth,observed,reconstruction\n";
    for (size_t t = 0; t < res.truth.size(); ++t) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%zu,%.12g,%d,%.12g\n", t, res.truth[t],
                      res.mask.at(0, static_cast<int>(t)) == 1.0 ? 1 : 0, res.reconstruction[t]);
        csv << buf;
    }
    SvgPlot plot(900, 360, "imputation fill-in (missing rate " + std::to_string(cfg.missing_rate) + ")");
    plot.add_series("truth", res.truth, "#1f77b4");
    plot.add_series("reconstruction", res.reconstruction, "#d62728");
    std::vector<int> xs;
    std::vector<double> ys;
    for (size_t t = 0; t < res.truth.size(); ++t)
        if (res.mask.at(0, static_cast<int>(t)) == 0.0) {
            xs.push_back(static_cast<int>(t));
            ys.push_back(res.reconstruction[t]);
        }
    plot.add_markers("imputed", xs, ys, "#2ca02c");
    plot.write(args.out_dir + "/impute.svg");

    print_report(report);
    std::printf("masked_mse=%.6g meanfill_mse=%.6g\n", res.model_masked_mse, res.baseline_masked_mse);
    std::printf("wrote %s/imputed.csv and %s/impute.svg\n", args.out_dir.c_str(), args.out_dir.c_str());
    return 0;
}

int cmd_detect(const CommonArgs& args) {
    ExperimentConfig cfg = config_for_checkpoint(args);
    cfg.task = Task::kAnomaly;
    DatasetBundle data = load_dataset(cfg);
    auto [tm, report] = obtain_model(cfg, data, args.checkpoint_path);
    evaluate(tm, data, report);
    const AnomalyReport& rep = report.anomaly;

    fs::create_directories(args.out_dir);
    std::ofstream csv(args.out_dir + "/anomaly_scores.csv");
    csv << "window_start,score,flag\n";
    for (size_t i = 0; i < rep.scores.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%d\n", rep.window_starts[i], rep.scores[i],
                      rep.flags[i]);
        csv << buf;
    }
    SvgPlot plot(900, 360, "anomaly scores, alpha " + std::to_string(cfg.alpha));
    plot.add_series("window score", rep.scores, "#1f77b4");
    plot.add_hline(rep.tau, "tau", "#d62728");
    plot.write(args.out_dir + "/anomaly.svg");

    std::printf("alpha=%.4g tau=%.6g windows=%zu flagged=", cfg.alpha, rep.tau, rep.scores.size());
    bool first = true;
    for (size_t i = 0; i < rep.flags.size(); ++i)
        if (rep.flags[i]) {
            std::printf("%s%d", first ? "" : ",", rep.window_starts[i]);
            first = false;
        }
    if (first) std::printf("none");
    std::printf("\n");
    if (report.has_ground_truth)
        std::printf("precision=%.3f recall=%.3f\n", report.precision, report.recall);
    print_report(report);
    std::printf("wrote %s/anomaly_scores.csv and %s/anomaly.svg\n", args.out_dir.c_str(),
                args.out_dir.c_str());
    return 0;
}

int cmd_ablate(const CommonArgs& args) {
    ExperimentConfig cfg = make_config(args);
    auto rows = run_ablation(cfg);
    fs::create_directories(args.out_dir);
    write_ablation_csv(args.out_dir + "/ablation.csv", rows);
    std::printf("%-10s %-12s %-12s %-12s %-12s %-12s\n", "variant", "mae", "mse", "trainable",
                "total", "frozen");
    for (const auto& r : rows)
        std::printf("%-10s %-12.6g %-12.6g %-12lld %-12lld %-12lld\n", r.name.c_str(), r.report.mae,
                    r.report.mse, static_cast<long long>(r.report.trainable_params),
                    static_cast<long long>(r.report.total_params),
                    static_cast<long long>(r.frozen_params));
    std::printf("wrote %s/ablation.csv\n", args.out_dir.c_str());
    return 0;
}

int cmd_index(const std::string& corpus, const std::string& out_path) {
    auto docs = kdtp::load_corpus(corpus);
    auto index = kdtp::DocumentIndex::build(docs);
    nlohmann::json j;
    j["d_emb"] = kdtp::kEmbedDim;
    j["embedder_seed"] = index.embedder_seed();
    j["skipped_empty"] = index.skipped_empty();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : index.documents()) {
        nlohmann::json e;
        e["id"] = d.id;
        e["keywords"] = d.keywords;
        e["embedding"] = d.embedding;
        arr.push_back(std::move(e));
    }
    j["documents"] = std::move(arr);
    std::ofstream out(out_path);
    out << j.dump(2) << "\n";
    std::printf("indexed %zu documents (%d empty skipped) -> %s\n", index.size(),
                index.skipped_empty(), out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ltm - patch-token time-series modeling with prompt fusion on a frozen backbone"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, fc_args, imp_args, det_args, abl_args;
    bool imp_sweep = false;
    std::string corpus_path, index_out = "index.json";
    bool gc_verbose = true;

    auto* c_train = app.add_subcommand("train", "train a model and write metrics + checkpoint");
    add_common(c_train, train_args, false);
    add_shortcut(c_train, train_args, "--task", "task", "forecasting | imputation | anomaly");
    add_shortcut(c_train, train_args, "--dataset", "dataset", "csv:<path> or synth:<kind>[:k=v,...]");
    add_shortcut(c_train, train_args, "--seed", "seed", "experiment seed");
    add_shortcut(c_train, train_args, "--epochs", "epochs", "training epochs");
    add_shortcut(c_train, train_args, "--few-shot", "few_shot", "train on this fraction of the training steps");
    add_shortcut(c_train, train_args, "--corpus", "corpus", "document corpus (dir of .txt or JSON-lines)");
    add_shortcut(c_train, train_args, "--query", "query", "user instruction for the prompt");
    add_shortcut(c_train, train_args, "--ablate", "ablation", "comma list of no_fatm,no_kdtp,no_llm");

    auto* c_eval = app.add_subcommand("evaluate", "evaluate a checkpoint on the configured dataset");
    add_common(c_eval, eval_args);

    auto* c_fc = app.add_subcommand("forecast", "roll out a forecast and plot it against truth");
    add_common(c_fc, fc_args);
    add_shortcut(c_fc, fc_args, "--horizon", "horizon", "forecast horizon");
    add_shortcut(c_fc, fc_args, "--seed", "seed", "experiment seed");
    add_shortcut(c_fc, fc_args, "--dataset", "dataset", "dataset spec");

    auto* c_imp = app.add_subcommand("impute", "reconstruct masked values on the test region");
    add_common(c_imp, imp_args);
    c_imp->add_flag("--sweep", imp_sweep, "run the 4-rate x 3-seed missing-rate sweep");
    add_shortcut(c_imp, imp_args, "--missing-rate", "missing_rate", "fraction of masked points");
    add_shortcut(c_imp, imp_args, "--seed", "seed", "experiment seed");
    add_shortcut(c_imp, imp_args, "--dataset", "dataset", "dataset spec");

    auto* c_det = app.add_subcommand("detect", "flag anomalous windows above the alpha-quantile");
    add_common(c_det, det_args);
    add_shortcut(c_det, det_args, "--alpha", "alpha", "quantile level for the threshold");
    add_shortcut(c_det, det_args, "--seed", "seed", "experiment seed");
    add_shortcut(c_det, det_args, "--dataset", "dataset", "dataset spec");

    auto* c_abl = app.add_subcommand("ablate", "run full / no_fatm / no_kdtp / no_llm on one dataset");
    add_common(c_abl, abl_args, false);
    add_shortcut(c_abl, abl_args, "--seed", "seed", "experiment seed");
    add_shortcut(c_abl, abl_args, "--dataset", "dataset", "dataset spec");
    add_shortcut(c_abl, abl_args, "--epochs", "epochs", "training epochs");

    auto* c_gc = app.add_subcommand("gradcheck", "finite-difference check of every differentiable block");
    c_gc->add_flag("--quiet{false}", gc_verbose, "suppress per-check output");

    auto* c_idx = app.add_subcommand("index", "build and save a KDTP corpus index");
    c_idx->add_option("--corpus", corpus_path, "corpus path")->required();
    c_idx->add_option("--out", index_out, "output JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_train->parsed()) return cmd_train(train_args);
        if (c_eval->parsed()) return cmd_evaluate(eval_args);
        if (c_fc->parsed()) return cmd_forecast(fc_args);
        if (c_imp->parsed()) return cmd_impute(imp_args, imp_sweep);
        if (c_det->parsed()) return cmd_detect(det_args);
        if (c_abl->parsed()) return cmd_ablate(abl_args);
        if (c_gc->parsed()) {
            const double worst = ltm::run_gradcheck_battery(gc_verbose);
            std::printf("max relative error: %.3g (threshold 1e-4)\n", worst);
            return worst <= 1e-4 ? 0 : 1;
        }
        if (c_idx->parsed()) return cmd_index(corpus_path, index_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
