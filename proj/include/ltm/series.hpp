#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltm/rng.hpp"
#include "ltm/tensor.hpp"

namespace ltm {

// Multichannel series, channel-major storage. Missing values are always
// expressed through a Mask, never as NaN.
struct TimeSeries {
    int channels = 0;
    int length = 0;
    std::vector<double> values;  // channels * length, row per channel
    std::optional<std::vector<double>> timestamps;

    double at(int ch, int t) const { return values[static_cast<size_t>(ch) * length + t]; }
    void set(int ch, int t, double v) { values[static_cast<size_t>(ch) * length + t] = v; }
    const double* channel(int ch) const { return values.data() + static_cast<size_t>(ch) * length; }
    double* channel(int ch) { return values.data() + static_cast<size_t>(ch) * length; }

    static TimeSeries zeros(int channels, int length);
};

constexpr double kStdFloor = 1e-8;

struct NormStats {
    std::vector<double> mean;  // per channel
    std::vector<double> std;   // per channel, floored at kStdFloor

    double normalize_value(int ch, double v) const { return (v - mean[ch]) / std[ch]; }
    double denormalize_value(int ch, double v) const { return v * std[ch] + mean[ch]; }
};

// Binary observation mask, same layout as TimeSeries values; 1 = observed.
struct Mask {
    int channels = 0;
    int length = 0;
    std::vector<double> values;

    double at(int ch, int t) const { return values[static_cast<size_t>(ch) * length + t]; }
    static Mask ones(int channels, int length);
};

// Segmentation of one channel into patches of length P at stride S.
struct PatchSequence {
    int n = 0;          // patch count
    int patch_len = 0;  // P
    int stride = 0;     // S
    Tensor patches;     // (n, P), raw values
};

// Per-channel z-score with population std; constant channels map to zeros.
std::pair<TimeSeries, NormStats> zscore_normalize(const TimeSeries& x);
NormStats compute_norm_stats(const TimeSeries& x);
TimeSeries apply_normalization(const TimeSeries& x, const NormStats& stats);
TimeSeries denormalize(const TimeSeries& x, const NormStats& stats);

// n = floor((L - P)/S) + 1 patches; the trailing remainder is dropped.
PatchSequence segment(const TimeSeries& x, int channel, int patch_len, int stride);
PatchSequence segment_values(const std::vector<double>& v, int patch_len, int stride);

TimeSeries apply_mask(const TimeSeries& x, const Mask& m);
// Exactly round(missing_rate * L) zeros per channel, uniform without replacement.
Mask random_mask(int channels, int length, double missing_rate, Rng& rng);

struct SynthParams {
    double amplitude = 1.0;
    double period = 32.0;
    double trend_slope = 0.0;
    double noise_std = 0.0;
    int n_anomalies = 3;
    double anomaly_sigma = 8.0;   // spike height in units of base-series std
    int anomaly_len = 2;          // points per spike segment
    double anomaly_region = 0.55; // spikes placed in [region*L, L)
};

struct SynthAnnotations {
    std::vector<int> anomaly_indices;       // every injected point
    std::vector<double> anomaly_magnitudes; // added offset per point
};

// kind: "sine", "sine+trend", "sine+noise", "sine+trend+noise", "anomaly".
// Deterministic per rng seed; the anomaly kind reports exact injected indices.
std::pair<TimeSeries, SynthAnnotations> synth_series(const std::string& kind, int length,
                                                     const SynthParams& params, Rng& rng);

// Contiguous prefix of floor(fraction * L) time steps.
TimeSeries few_shot_subset(const TimeSeries& train, double fraction);

// UTF-8 comma-separated, first line header; an optional leading "timestamp"
// column is parsed as fp64 and must strictly increase.
TimeSeries load_csv(const std::string& path);
void write_csv(const std::string& path, const TimeSeries& x);

}  // namespace ltm
