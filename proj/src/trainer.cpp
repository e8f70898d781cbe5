#include "ltm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ltm {

namespace {

std::string fmt_csv(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

TimeSeries slice_series(const TimeSeries& x, int start, int len) {
    TimeSeries out = TimeSeries::zeros(x.channels, len);
    for (int ch = 0; ch < x.channels; ++ch)
        std::copy(x.channel(ch) + start, x.channel(ch) + start + len, out.channel(ch));
    if (x.timestamps)
        out.timestamps = std::vector<double>(x.timestamps->begin() + start,
                                             x.timestamps->begin() + start + len);
    return out;
}

struct WindowRef {
    int channel;
    int start;
};

// Patches of `wp` rows starting at `start`, rows offset by the stride.
Tensor window_patches_tensor(const TimeSeries& x, int ch, int start, int wp, int patch_len,
                             int stride) {
    std::vector<double> vals(static_cast<size_t>(wp) * patch_len);
    const double* base = x.channel(ch);
    for (int i = 0; i < wp; ++i)
        for (int j = 0; j < patch_len; ++j)
            vals[static_cast<size_t>(i) * patch_len + j] = base[start + i * stride + j];
    return Tensor::from({wp, patch_len}, std::move(vals));
}

struct SynthSpec {
    std::string kind;
    int length = 512;
    SynthParams params;
};

SynthSpec parse_synth_spec(const std::string& spec) {
    SynthSpec s;
    // synth:<kind>[:k=v,...]
    const auto first = spec.find(':');
    const auto second = spec.find(':', first + 1);
    s.kind = spec.substr(first + 1, second == std::string::npos ? std::string::npos
                                                                : second - first - 1);
    if (second != std::string::npos) {
        std::istringstream ss(spec.substr(second + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("dataset: bad synth parameter '" + tok + "'");
            const std::string key = tok.substr(0, eq);
            const double val = std::stod(tok.substr(eq + 1));
            if (key == "L")
                s.length = static_cast<int>(val);
            else if (key == "period")
                s.params.period = val;
            else if (key == "amplitude")
                s.params.amplitude = val;
            else if (key == "slope")
                s.params.trend_slope = val;
            else if (key == "noise")
                s.params.noise_std = val;
            else if (key == "spikes")
                s.params.n_anomalies = static_cast<int>(val);
            else if (key == "sigma")
                s.params.anomaly_sigma = val;
            else if (key == "spike_len")
                s.params.anomaly_len = static_cast<int>(val);
            else if (key == "region")
                s.params.anomaly_region = val;
            else
                throw std::runtime_error("dataset: unknown synth parameter '" + key + "'");
        }
    }
    return s;
}

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

// Groups flat anomaly indices into contiguous segments.
std::vector<std::pair<int, int>> anomaly_segments(const std::vector<int>& indices) {
    std::vector<std::pair<int, int>> segs;
    for (int idx : indices) {
        if (!segs.empty() && idx == segs.back().second + 1)
            segs.back().second = idx;
        else
            segs.emplace_back(idx, idx);
    }
    return segs;
}

}  // namespace

DatasetBundle load_dataset(const ExperimentConfig& cfg) {
    DatasetBundle d;
    if (cfg.dataset.rfind("synth:", 0) == 0) {
        SynthSpec spec = parse_synth_spec(cfg.dataset);
        Rng rng = Rng(cfg.seed).split("data");
        auto [ts, ann] = synth_series(spec.kind, spec.length, spec.params, rng);
        d.full = std::move(ts);
        d.annotations = std::move(ann);
    } else {
        std::string path = cfg.dataset;
        if (path.rfind("csv:", 0) == 0) path = path.substr(4);
        d.full = load_csv(path);
    }
    return d;
}

std::string build_prompt_text(const ExperimentConfig& cfg, const TimeSeries& train_split_raw) {
    if (cfg.no_kdtp) return cfg.query;  // raw user query, possibly empty
    const kdtp::SeriesDescriptor desc = kdtp::describe_series(train_split_raw);
    std::vector<kdtp::ScoredDocument> docs;
    kdtp::DocumentIndex index;  // must outlive the scored pointers
    if (!cfg.corpus.empty() && !kdtp::tokenize(cfg.query).empty()) {
        index = kdtp::DocumentIndex::build(kdtp::load_corpus(cfg.corpus));
        docs = index.retrieve(cfg.query, cfg.retrieve_k);
    }
    return kdtp::generate_enhanced_prompt(cfg.query, docs, desc).text;
}

namespace {

struct Prepared {
    TrainedModel tm;
    TimeSeries train_raw;
    TimeSeries train_norm;
};

Prepared prepare_internal(const ExperimentConfig& cfg, const DatasetBundle& data) {
    cfg.validate();
    const int L = data.full.length;
    const int P = cfg.patch_len;
    const int S = cfg.stride;

    int split = static_cast<int>(std::floor(cfg.train_frac * L));
    if (!data.annotations.anomaly_indices.empty()) {
        // Training data must stay anomaly-free.
        const int first = *std::min_element(data.annotations.anomaly_indices.begin(),
                                            data.annotations.anomaly_indices.end());
        split = std::min(split, first);
    }
    if (split < 2 * P) throw std::runtime_error("train: training split too short");
    if (split >= L) throw std::runtime_error("train: empty test split");

    TimeSeries train_raw = slice_series(data.full, 0, split);
    if (cfg.few_shot_fraction) train_raw = few_shot_subset(train_raw, *cfg.few_shot_fraction);
    const int train_len = train_raw.length;

    NormStats stats = compute_norm_stats(train_raw);
    TimeSeries train_norm = apply_normalization(train_raw, stats);
    const std::string prompt_text = build_prompt_text(cfg, train_raw);
    LtmModel model = LtmModel::build(cfg.to_model_config());

    // Effective window: anomaly scoring uses a two-patch context; otherwise
    // shrink the configured window until it (plus the forecast target) fits.
    const bool next_patch_task = cfg.task != Task::kImputation;
    int wp = cfg.task == Task::kAnomaly ? 2 : cfg.window_patches;
    auto window_pts = [&](int w) { return (w - 1) * S + P; };
    auto need_pts = [&](int w) { return window_pts(w) + (next_patch_task ? P : 0); };
    while (wp > 1 && need_pts(wp) > train_len) --wp;
    if (need_pts(wp) > train_len)
        throw std::runtime_error("train: training split of " + std::to_string(train_len) +
                                 " points cannot fit one window of " + std::to_string(need_pts(wp)));

    Prepared prep{TrainedModel{cfg, std::move(model), std::move(stats), prompt_text, wp, split},
                  std::move(train_raw), std::move(train_norm)};
    return prep;
}

}  // namespace

TrainedModel prepare_untrained(const ExperimentConfig& cfg, const DatasetBundle& data) {
    return std::move(prepare_internal(cfg, data).tm);
}

TrainedModel train(const ExperimentConfig& cfg, const DatasetBundle& data, MetricsReport& report) {
    Prepared prep = prepare_internal(cfg, data);
    LtmModel& model = prep.tm.model;
    const TimeSeries& train_norm = prep.train_norm;
    const int train_len = prep.train_raw.length;
    const int P = cfg.patch_len;
    const int S = cfg.stride;
    const int wp = prep.tm.window_patches;
    const std::string& prompt_text = prep.tm.prompt_text;
    auto window_pts = [&](int w) { return (w - 1) * S + P; };
    auto need_pts = [&](int w) {
        return window_pts(w) + (cfg.task != Task::kImputation ? P : 0);
    };

    report.checksum_before = model.backbone_checksum();
    std::vector<Parameter> params = model.parameters();
    Optimizer opt(cfg.lr);

    std::vector<WindowRef> windows;
    for (int ch = 0; ch < train_norm.channels; ++ch)
        for (int start = 0; start + need_pts(wp) <= train_len; start += S)
            windows.push_back({ch, start});
    if (windows.empty()) throw std::runtime_error("train: no training windows");

    // Imputation: mask the training input; targets stay unmasked.
    Mask train_mask;
    TimeSeries masked_norm;
    if (cfg.task == Task::kImputation) {
        Rng mask_rng = Rng(cfg.seed).split("train_mask");
        train_mask = random_mask(train_norm.channels, train_len, cfg.missing_rate, mask_rng);
        masked_norm = apply_mask(train_norm, train_mask);
    }

    Rng shuffle_rng = Rng(cfg.seed).split("shuffle");
    const auto t0 = std::chrono::steady_clock::now();
    int64_t steps = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<WindowRef> order = windows;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

        double loss_sum = 0.0;
        int batches = 0;
        for (size_t i = 0; i < order.size(); i += static_cast<size_t>(cfg.batch)) {
            Tensor prompt = model.embed_prompt(prompt_text);
            std::vector<Tensor> losses;
            const size_t hi = std::min(order.size(), i + static_cast<size_t>(cfg.batch));
            for (size_t w = i; w < hi; ++w) {
                const auto [ch, start] = order[w];
                if (cfg.task == Task::kImputation) {
                    Tensor mask_t = window_patches_tensor(
                        TimeSeries{train_mask.channels, train_mask.length, train_mask.values, {}},
                        ch, start, wp, P, S);
                    double masked = 0.0;
                    for (double m : mask_t.values()) masked += 1.0 - m;
                    if (masked == 0.0) continue;  // fully observed window teaches nothing
                    Tensor x_in = window_patches_tensor(masked_norm, ch, start, wp, P, S);
                    Tensor x_true = window_patches_tensor(train_norm, ch, start, wp, P, S);
                    LtmModel::Output out = model.forward(x_in, prompt);
                    Tensor l_reg = imputation_loss(x_true, out.pred_patches, mask_t);
                    losses.push_back(out.prompt_rows.defined()
                                         ? total_loss(l_reg, out.prompt_rows, out.fused, cfg.lambda)
                                         : l_reg);
                } else {
                    Tensor x_in = window_patches_tensor(train_norm, ch, start, wp, P, S);
                    std::vector<double> tgt(train_norm.channel(ch) + start + window_pts(wp),
                                            train_norm.channel(ch) + start + window_pts(wp) + P);
                    Tensor target = Tensor::from({1, P}, std::move(tgt));
                    LtmModel::Output out = model.forward(x_in, prompt);
                    Tensor pred = slice(out.pred_patches, 0, wp - 1, 1);
                    Tensor l_reg = forecasting_loss(pred, target);
                    losses.push_back(out.prompt_rows.defined()
                                         ? total_loss(l_reg, out.prompt_rows, out.fused, cfg.lambda)
                                         : l_reg);
                }
            }
            if (losses.empty()) {
                Tape::active().reset();
                continue;
            }
            Tensor total = losses[0];
            for (size_t k = 1; k < losses.size(); ++k) total = add(total, losses[k]);
            total = scalar_mul(total, 1.0 / static_cast<double>(losses.size()));
            if (!std::isfinite(total.item()))
                throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch));
            backward(total);
            opt.step(params);
            ++steps;
            loss_sum += total.item();
            ++batches;
        }
        report.epoch_loss.push_back(batches ? loss_sum / batches : 0.0);
    }
    const auto t1 = std::chrono::steady_clock::now();

    report.task = task_name(cfg.task);
    report.dataset = cfg.dataset;
    report.seed = cfg.seed;
    report.trainable_params = model.trainable_params();
    report.total_params = model.total_params();
    report.trainable_fraction =
        static_cast<double>(report.trainable_params) / static_cast<double>(report.total_params);
    report.optimizer_steps = steps;
    report.sec_per_iter =
        steps == 0 ? 0.0
                   : std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(steps);
    report.train_points = train_len;
    report.prompt_text = prompt_text;
    report.checksum_after = model.backbone_checksum();

    return std::move(prep.tm);
}

std::vector<double> forecast_from_train_tail(TrainedModel& tm, const DatasetBundle& data,
                                             int horizon) {
    const auto& cfg = tm.cfg;
    std::vector<double> ctx(data.full.channel(0), data.full.channel(0) + tm.train_split);
    for (auto& v : ctx) v = tm.stats.normalize_value(0, v);
    Tensor prompt = tm.model.embed_prompt(tm.prompt_text);
    auto pred = tm.model.forecast_rollout(ctx, prompt, horizon, tm.window_patches);
    Tape::active().reset();
    for (auto& v : pred) v = tm.stats.denormalize_value(0, v);
    (void)cfg;
    return pred;
}

void evaluate(TrainedModel& tm, const DatasetBundle& data, MetricsReport& report) {
    const auto& cfg = tm.cfg;
    const int L = data.full.length;
    const int split = tm.train_split;
    const int test_len = L - split;
    if (test_len < 1) throw std::runtime_error("evaluate: empty test split");

    if (cfg.task == Task::kForecasting) {
        const int H = std::min(cfg.horizon, test_len);
        Tensor prompt = tm.model.embed_prompt(tm.prompt_text);
        double se = 0.0, ae = 0.0, bse = 0.0, bae = 0.0;
        int count = 0;
        for (int ch = 0; ch < data.full.channels; ++ch) {
            std::vector<double> ctx(data.full.channel(ch), data.full.channel(ch) + split);
            const double naive = ctx.back();  // last observed value baseline
            for (auto& v : ctx) v = tm.stats.normalize_value(ch, v);
            auto pred = tm.model.forecast_rollout(ctx, prompt, H, tm.window_patches);
            Tape::active().reset();
            for (int t = 0; t < H; ++t) {
                const double truth = data.full.at(ch, split + t);
                const double p = tm.stats.denormalize_value(ch, pred[t]);
                se += (p - truth) * (p - truth);
                ae += std::fabs(p - truth);
                bse += (naive - truth) * (naive - truth);
                bae += std::fabs(naive - truth);
                ++count;
            }
        }
        report.mse = safe_div(se, count);
        report.mae = safe_div(ae, count);
        report.baseline_mse = safe_div(bse, count);
        report.baseline_mae = safe_div(bae, count);
    } else if (cfg.task == Task::kImputation) {
        ImputationResult res = impute_test_region(tm, data);
        report.mse = res.model_masked_mse;
        report.mae = res.model_masked_mae;
        report.baseline_mse = res.baseline_masked_mse;
        report.baseline_mae = 0.0;
    } else {
        report.anomaly = detect_anomalies(tm, data, cfg.alpha);
        report.has_ground_truth = !data.annotations.anomaly_indices.empty();
        if (report.has_ground_truth) {
            score_anomaly_report(report.anomaly, data, cfg.patch_len, &report.precision,
                                 &report.recall);
        }
        // Mean test-window score doubles as the task's error metric.
        double s = 0.0;
        for (double v : report.anomaly.scores) s += v;
        report.mse = safe_div(s, static_cast<double>(report.anomaly.scores.size()));
        report.mae = std::sqrt(report.mse);
    }
}

ImputationResult impute_test_region(TrainedModel& tm, const DatasetBundle& data) {
    const auto& cfg = tm.cfg;
    const int P = cfg.patch_len;
    const int L = data.full.length;
    const int split = tm.train_split;
    const int test_len = L - split;
    if (test_len < P)
        throw std::runtime_error("impute: test split of " + std::to_string(test_len) +
                                 " points is shorter than one patch");

    TimeSeries test_raw = slice_series(data.full, split, test_len);
    Rng mask_rng = Rng(cfg.seed).split("eval_mask");
    Mask mask = random_mask(test_raw.channels, test_len, cfg.missing_rate, mask_rng);
    TimeSeries test_norm = apply_normalization(test_raw, tm.stats);
    TimeSeries masked_norm = apply_mask(test_norm, mask);

    Tensor prompt = tm.model.embed_prompt(tm.prompt_text);
    const int wp = std::min(tm.window_patches, test_len / P);
    const int win_pts = wp * P;  // reconstruction decodes non-overlapping patches

    ImputationResult res;
    res.mask = mask;
    double se = 0.0, ae = 0.0, bse = 0.0;
    int64_t masked_count = 0;

    for (int ch = 0; ch < test_raw.channels; ++ch) {
        std::vector<double> recon(masked_norm.channel(ch), masked_norm.channel(ch) + test_len);
        int t = 0;
        while (true) {
            const int start = std::min(t, test_len - win_pts);
            Tensor patches = window_patches_tensor(masked_norm, ch, start, wp, P, P);
            LtmModel::Output out = tm.model.forward(patches, prompt);
            const auto& pv = out.pred_patches.values();
            for (int j = 0; j < win_pts; ++j) recon[start + j] = pv[j];
            Tape::active().reset();
            if (start >= test_len - win_pts) break;
            t += win_pts;
        }
        double observed_mean = 0.0;
        int observed = 0;
        for (int j = 0; j < test_len; ++j)
            if (mask.at(ch, j) == 1.0) {
                observed_mean += test_raw.at(ch, j);
                ++observed;
            }
        observed_mean = observed ? observed_mean / observed : 0.0;
        for (int j = 0; j < test_len; ++j) {
            if (mask.at(ch, j) == 1.0) continue;
            const double truth = test_raw.at(ch, j);
            const double model_v = tm.stats.denormalize_value(ch, recon[j]);
            se += (model_v - truth) * (model_v - truth);
            ae += std::fabs(model_v - truth);
            bse += (observed_mean - truth) * (observed_mean - truth);
            ++masked_count;
        }
        if (ch == 0) {
            res.truth.assign(test_raw.channel(0), test_raw.channel(0) + test_len);
            res.reconstruction.resize(test_len);
            for (int j = 0; j < test_len; ++j)
                res.reconstruction[j] = tm.stats.denormalize_value(0, recon[j]);
        }
    }
    res.model_masked_mse = safe_div(se, static_cast<double>(masked_count));
    res.model_masked_mae = safe_div(ae, static_cast<double>(masked_count));
    res.baseline_masked_mse = safe_div(bse, static_cast<double>(masked_count));
    return res;
}

AnomalyReport detect_anomalies(TrainedModel& tm, const DatasetBundle& data, double alpha) {
    const auto& cfg = tm.cfg;
    const int P = cfg.patch_len;
    const int S = cfg.stride;
    const int wp = tm.window_patches;
    const int ctx_pts = (wp - 1) * S + P;
    const int L = data.full.length;
    const int split = tm.train_split;

    TimeSeries full_norm = apply_normalization(data.full, tm.stats);
    Tensor prompt = tm.model.embed_prompt(tm.prompt_text);

    std::vector<double> train_scores, test_scores;
    std::vector<int> test_starts;
    for (int t = ctx_pts; t + P <= L; t += P) {
        double se = 0.0;
        for (int ch = 0; ch < full_norm.channels; ++ch) {
            Tensor patches = window_patches_tensor(full_norm, ch, t - ctx_pts, wp, P, S);
            LtmModel::Output out = tm.model.forward(patches, prompt);
            Tensor pred = slice(out.pred_patches, 0, wp - 1, 1);
            const auto& pv = pred.values();
            for (int j = 0; j < P; ++j) {
                const double e = pv[j] - full_norm.at(ch, t + j);
                se += e * e;
            }
            Tape::active().reset();
        }
        const double score = se / (P * full_norm.channels);
        if (t + P <= split)
            train_scores.push_back(score);
        else if (t >= split) {
            test_scores.push_back(score);
            test_starts.push_back(t);
        }
    }
    if (train_scores.empty()) throw std::runtime_error("detect: no anomaly-free training windows");
    if (test_scores.empty()) throw std::runtime_error("detect: no test windows to score");
    return anomaly_score_and_flag(train_scores, test_scores, test_starts, alpha);
}

void score_anomaly_report(const AnomalyReport& rep, const DatasetBundle& data, int patch_len,
                          double* precision, double* recall) {
    const auto segs = anomaly_segments(data.annotations.anomaly_indices);
    const int k = 2 * patch_len;
    int flagged = 0, tp = 0;
    for (size_t i = 0; i < rep.flags.size(); ++i) {
        if (!rep.flags[i]) continue;
        ++flagged;
        const int lo = rep.window_starts[i] - k;  // a spike in the context also corrupts the score
        const int hi = rep.window_starts[i] + patch_len;
        for (const auto& [a, b] : segs)
            if (b >= lo && a < hi) {
                ++tp;
                break;
            }
    }
    int detected = 0;
    for (const auto& [a, b] : segs) {
        bool hit = false;
        for (size_t i = 0; i < rep.flags.size() && !hit; ++i) {
            if (!rep.flags[i]) continue;
            const int lo = rep.window_starts[i];
            const int hi = rep.window_starts[i] + patch_len;
            hit = b >= lo && a < hi;
        }
        if (hit) ++detected;
    }
    *precision = flagged == 0 ? 1.0 : static_cast<double>(tp) / flagged;
    *recall = segs.empty() ? 1.0 : static_cast<double>(detected) / static_cast<double>(segs.size());
}

std::pair<TrainedModel, MetricsReport> run_experiment(const ExperimentConfig& cfg) {
    DatasetBundle data = load_dataset(cfg);
    MetricsReport report;
    TrainedModel tm = train(cfg, data, report);
    evaluate(tm, data, report);
    return {std::move(tm), std::move(report)};
}

std::vector<SweepRow> imputation_sweep(ExperimentConfig cfg, const std::vector<double>& rates,
                                       const std::vector<uint64_t>& seeds) {
    cfg.task = Task::kImputation;
    std::vector<SweepRow> rows;
    for (double rate : rates)
        for (uint64_t seed : seeds) {
            ExperimentConfig c = cfg;
            c.missing_rate = rate;
            c.seed = seed;
            c.backbone.seed = seed ^ 0xb0c4b0c4ULL;
            auto [tm, report] = run_experiment(c);
            rows.push_back({rate, seed, report.mse, report.baseline_mse});
        }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("sweep: cannot write '" + path + "'");
    out << "missing_rate,seed,model_masked_mse,meanfill_masked_mse\n";
    for (const auto& r : rows)
        out << fmt_csv(r.rate) << ',' << r.seed << ',' << fmt_csv(r.model_mse) << ','
            << fmt_csv(r.baseline_mse) << '\n';
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base) {
    DatasetBundle data = load_dataset(base);
    const char* names[4] = {"full", "no_fatm", "no_kdtp", "no_llm"};
    std::vector<AblationRow> rows;
    for (int v = 0; v < 4; ++v) {
        ExperimentConfig cfg = base;
        cfg.no_fatm = v == 1;
        cfg.no_kdtp = v == 2;
        cfg.no_llm = v == 3;
        MetricsReport report;
        TrainedModel tm = train(cfg, data, report);
        evaluate(tm, data, report);
        AblationRow row;
        row.name = names[v];
        row.frozen_params = report.total_params - report.trainable_params;
        row.report = std::move(report);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("ablate: cannot write '" + path + "'");
    out << "variant,mae,mse,trainable_params,total_params,frozen_params\n";
    for (const auto& r : rows)
        out << r.name << ',' << fmt_csv(r.report.mae) << ',' << fmt_csv(r.report.mse) << ','
            << r.report.trainable_params << ',' << r.report.total_params << ','
            << r.frozen_params << '\n';
}

void write_metrics_csv(const std::string& path, const ExperimentConfig& cfg,
                       const MetricsReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("metrics: cannot write '" + path + "'");
    out << "task,dataset,seed,epoch,loss,mae,mse,trainable_params,total_params,sec_per_iter\n";
    const double timing = cfg.timing_in_csv ? report.sec_per_iter : 0.0;
    for (size_t e = 0; e < report.epoch_loss.size(); ++e) {
        out << report.task << ',' << report.dataset << ',' << report.seed << ',' << (e + 1) << ','
            << fmt_csv(report.epoch_loss[e]) << ',' << fmt_csv(report.mae) << ','
            << fmt_csv(report.mse) << ',' << report.trainable_params << ',' << report.total_params
            << ',' << fmt_csv(timing) << '\n';
    }
}

}  // namespace ltm
