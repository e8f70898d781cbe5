#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ltm/config.hpp"
#include "ltm/heads.hpp"
#include "ltm/kdtp.hpp"
#include "ltm/model.hpp"
#include "ltm/optim.hpp"
#include "ltm/series.hpp"

namespace ltm {

struct MetricsReport {
    std::string task;
    std::string dataset;
    uint64_t seed = 0;
    std::vector<double> epoch_loss;
    double mae = 0.0, mse = 0.0;
    double baseline_mae = 0.0, baseline_mse = 0.0;
    double precision = 0.0, recall = 0.0;
    bool has_ground_truth = false;
    int64_t trainable_params = 0;
    int64_t total_params = 0;
    double trainable_fraction = 0.0;
    double sec_per_iter = 0.0;
    int64_t optimizer_steps = 0;
    int64_t train_points = 0;  // training time steps consumed (few-shot contract)
    uint64_t checksum_before = 0, checksum_after = 0;
    std::string prompt_text;
    AnomalyReport anomaly;
};

struct DatasetBundle {
    TimeSeries full;
    SynthAnnotations annotations;  // non-empty only for synthetic anomaly data
};

struct TrainedModel {
    ExperimentConfig cfg;
    LtmModel model;
    NormStats stats;          // from the effective training split
    std::string prompt_text;  // prompt actually used (empty = prompt path disabled)
    int window_patches = 0;   // effective training window, in patches
    int train_split = 0;      // index where the test region starts
};

// Dataset spec: "csv:<path>", a bare path, or
// "synth:<kind>[:k=v,...]" with keys L, period, amplitude, slope, noise,
// spikes, sigma, spike_len, region.
DatasetBundle load_dataset(const ExperimentConfig& cfg);

// KDTP prompt assembly honoring the no_kdtp switch (raw query only).
std::string build_prompt_text(const ExperimentConfig& cfg, const TimeSeries& train_split_raw);

// Builds the model and derives split/stats/prompt without training; used to
// rehydrate a checkpoint (all of these are deterministic given cfg + data).
TrainedModel prepare_untrained(const ExperimentConfig& cfg, const DatasetBundle& data);

TrainedModel train(const ExperimentConfig& cfg, const DatasetBundle& data, MetricsReport& report);
void evaluate(TrainedModel& tm, const DatasetBundle& data, MetricsReport& report);

// train + evaluate on the configured dataset.
std::pair<TrainedModel, MetricsReport> run_experiment(const ExperimentConfig& cfg);

// Forecast helper used by the CLI and acceptance suite: rollout from the end
// of the training region, denormalized.
std::vector<double> forecast_from_train_tail(TrainedModel& tm, const DatasetBundle& data,
                                             int horizon);

// Full imputed reconstruction of the test region (channel 0), denormalized,
// plus the evaluation mask used.
struct ImputationResult {
    std::vector<double> truth;
    std::vector<double> reconstruction;
    Mask mask;
    double model_masked_mse = 0.0;
    double model_masked_mae = 0.0;
    double baseline_masked_mse = 0.0;  // mean-fill over observed test values
};
ImputationResult impute_test_region(TrainedModel& tm, const DatasetBundle& data);

// Anomaly window scoring at stride P with context 2P; scores are normalized-
// space MSE. Threshold from the alpha-quantile of training-region scores.
AnomalyReport detect_anomalies(TrainedModel& tm, const DatasetBundle& data, double alpha);
void score_anomaly_report(const AnomalyReport& rep, const DatasetBundle& data, int patch_len,
                          double* precision, double* recall);

struct SweepRow {
    double rate;
    uint64_t seed;
    double model_mse;
    double baseline_mse;
};
std::vector<SweepRow> imputation_sweep(ExperimentConfig cfg, const std::vector<double>& rates,
                                       const std::vector<uint64_t>& seeds);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

struct AblationRow {
    std::string name;
    MetricsReport report;
    int64_t frozen_params = 0;
};
std::vector<AblationRow> run_ablation(const ExperimentConfig& base);
void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);

// Stable schema: task,dataset,seed,epoch,loss,mae,mse,trainable_params,
// total_params,sec_per_iter. One row per epoch; timing is zeroed unless
// cfg.timing_in_csv so identical runs produce byte-identical files.
void write_metrics_csv(const std::string& path, const ExperimentConfig& cfg,
                       const MetricsReport& report);

}  // namespace ltm
