#include "ltm/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ltm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double parse_cell(const std::string& cell, int row, int col) {
    double v = 0.0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t' || *(e - 1) == '\r')) --e;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw std::runtime_error("load_csv: non-numeric cell '" + cell + "' at row " +
                                 std::to_string(row) + ", column " + std::to_string(col));
    return v;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string lower_trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
    s = s.substr(b);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

TimeSeries TimeSeries::zeros(int channels, int length) {
    TimeSeries ts;
    ts.channels = channels;
    ts.length = length;
    ts.values.assign(static_cast<size_t>(channels) * length, 0.0);
    return ts;
}

Mask Mask::ones(int channels, int length) {
    Mask m;
    m.channels = channels;
    m.length = length;
    m.values.assign(static_cast<size_t>(channels) * length, 1.0);
    return m;
}

NormStats compute_norm_stats(const TimeSeries& x) {
    if (x.length < 2) throw std::runtime_error("zscore_normalize: series length must be >= 2");
    NormStats st;
    st.mean.resize(x.channels);
    st.std.resize(x.channels);
    for (int ch = 0; ch < x.channels; ++ch) {
        const double* v = x.channel(ch);
        double mu = 0.0;
        for (int t = 0; t < x.length; ++t) mu += v[t];
        mu /= x.length;
        double var = 0.0;
        for (int t = 0; t < x.length; ++t) {
            const double c = v[t] - mu;
            var += c * c;
        }
        var /= x.length;  // population variance
        st.mean[ch] = mu;
        st.std[ch] = std::max(std::sqrt(var), kStdFloor);
    }
    return st;
}

TimeSeries apply_normalization(const TimeSeries& x, const NormStats& stats) {
    TimeSeries out = x;
    for (int ch = 0; ch < x.channels; ++ch) {
        double* v = out.channel(ch);
        for (int t = 0; t < x.length; ++t) v[t] = stats.normalize_value(ch, v[t]);
    }
    return out;
}

TimeSeries denormalize(const TimeSeries& x, const NormStats& stats) {
    TimeSeries out = x;
    for (int ch = 0; ch < x.channels; ++ch) {
        double* v = out.channel(ch);
        for (int t = 0; t < x.length; ++t) v[t] = stats.denormalize_value(ch, v[t]);
    }
    return out;
}

std::pair<TimeSeries, NormStats> zscore_normalize(const TimeSeries& x) {
    NormStats st = compute_norm_stats(x);
    return {apply_normalization(x, st), st};
}

PatchSequence segment_values(const std::vector<double>& v, int patch_len, int stride) {
    const int L = static_cast<int>(v.size());
    if (patch_len > L)
        throw std::runtime_error("segment: patch length " + std::to_string(patch_len) +
                                 " exceeds series length " + std::to_string(L));
    if (stride < 1) throw std::runtime_error("segment: stride must be >= 1");
    PatchSequence ps;
    ps.patch_len = patch_len;
    ps.stride = stride;
    ps.n = (L - patch_len) / stride + 1;
    ps.patches = Tensor::zeros({ps.n, patch_len});
    auto& pv = ps.patches.values();
    for (int i = 0; i < ps.n; ++i)
        for (int j = 0; j < patch_len; ++j)
            pv[static_cast<size_t>(i) * patch_len + j] = v[static_cast<size_t>(i) * stride + j];
    return ps;
}

PatchSequence segment(const TimeSeries& x, int channel, int patch_len, int stride) {
    if (channel < 0 || channel >= x.channels)
        throw std::runtime_error("segment: channel " + std::to_string(channel) + " out of range");
    std::vector<double> v(x.channel(channel), x.channel(channel) + x.length);
    return segment_values(v, patch_len, stride);
}

TimeSeries apply_mask(const TimeSeries& x, const Mask& m) {
    if (m.channels != x.channels || m.length != x.length)
        throw std::runtime_error("apply_mask: mask shape (" + std::to_string(m.channels) + "," +
                                 std::to_string(m.length) + ") does not match series (" +
                                 std::to_string(x.channels) + "," + std::to_string(x.length) + ")");
    TimeSeries out = x;
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] *= m.values[i];
    return out;
}

Mask random_mask(int channels, int length, double missing_rate, Rng& rng) {
    if (!(missing_rate > 0.0 && missing_rate < 1.0))
        throw std::runtime_error("random_mask: missing rate " + std::to_string(missing_rate) +
                                 " outside (0,1)");
    Mask m = Mask::ones(channels, length);
    const int zeros = static_cast<int>(std::lround(missing_rate * length));
    for (int ch = 0; ch < channels; ++ch) {
        // Partial Fisher-Yates: first `zeros` positions of a shuffled index set.
        std::vector<int> idx(length);
        for (int i = 0; i < length; ++i) idx[i] = i;
        for (int i = 0; i < zeros; ++i) {
            const int j = i + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(length - i)));
            std::swap(idx[i], idx[j]);
            m.values[static_cast<size_t>(ch) * length + idx[i]] = 0.0;
        }
    }
    return m;
}

std::pair<TimeSeries, SynthAnnotations> synth_series(const std::string& kind, int length,
                                                     const SynthParams& params, Rng& rng) {
    if (length < 32) throw std::runtime_error("synth_series: length must be >= 32");
    const bool anomaly = kind == "anomaly" || kind == "anomaly-injected";
    bool trend = kind.find("+trend") != std::string::npos;
    bool noise = kind.find("+noise") != std::string::npos || anomaly;
    if (!anomaly && kind.rfind("sine", 0) != 0)
        throw std::runtime_error("synth_series: unknown kind '" + kind + "'");

    TimeSeries ts = TimeSeries::zeros(1, length);
    const double phase = rng.uniform(0.0, kTwoPi);
    for (int t = 0; t < length; ++t) {
        double v = params.amplitude * std::sin(kTwoPi * t / params.period + phase);
        if (trend) v += params.trend_slope * t;
        if (noise) v += rng.normal(0.0, params.noise_std);
        ts.set(0, t, v);
    }

    SynthAnnotations ann;
    if (anomaly) {
        double mu = 0.0;
        for (int t = 0; t < length; ++t) mu += ts.at(0, t);
        mu /= length;
        double var = 0.0;
        for (int t = 0; t < length; ++t) var += (ts.at(0, t) - mu) * (ts.at(0, t) - mu);
        const double sigma = std::sqrt(var / length);
        const int lo = static_cast<int>(params.anomaly_region * length);
        const int hi = length - params.anomaly_len;
        const int min_gap = 4 * params.anomaly_len + 32;  // keep spikes in distinct windows
        std::vector<int> starts;
        int attempts = 0;
        while (static_cast<int>(starts.size()) < params.n_anomalies && attempts < 10000) {
            ++attempts;
            const int s = lo + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(hi - lo)));
            bool ok = true;
            for (int prev : starts)
                if (std::abs(prev - s) < min_gap) ok = false;
            if (ok) starts.push_back(s);
        }
        if (static_cast<int>(starts.size()) < params.n_anomalies)
            throw std::runtime_error("synth_series: could not place anomalies; series too short");
        std::sort(starts.begin(), starts.end());
        for (int s : starts)
            for (int i = 0; i < params.anomaly_len; ++i) {
                const double mag = params.anomaly_sigma * sigma;
                ts.set(0, s + i, ts.at(0, s + i) + mag);
                ann.anomaly_indices.push_back(s + i);
                ann.anomaly_magnitudes.push_back(mag);
            }
    }
    return {ts, ann};
}

TimeSeries few_shot_subset(const TimeSeries& train, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::runtime_error("few_shot_subset: fraction " + std::to_string(fraction) +
                                 " outside (0,1]");
    const int keep = static_cast<int>(std::floor(fraction * train.length));
    if (keep < 1) throw std::runtime_error("few_shot_subset: subset would be empty");
    TimeSeries out = TimeSeries::zeros(train.channels, keep);
    for (int ch = 0; ch < train.channels; ++ch)
        std::copy(train.channel(ch), train.channel(ch) + keep, out.channel(ch));
    if (train.timestamps) {
        out.timestamps = std::vector<double>(train.timestamps->begin(), train.timestamps->begin() + keep);
    }
    return out;
}

TimeSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file '" + path + "'");
    const auto header = split_commas(line);
    const bool has_ts = !header.empty() && lower_trim(header[0]) == "timestamp";
    const int channels = static_cast<int>(header.size()) - (has_ts ? 1 : 0);
    if (channels < 1) throw std::runtime_error("load_csv: no data columns in '" + path + "'");

    std::vector<std::vector<double>> cols(static_cast<size_t>(channels));
    std::vector<double> timestamps;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_commas(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        int col = 0;
        if (has_ts) {
            const double t = parse_cell(cells[0], row, 1);
            if (!timestamps.empty() && t <= timestamps.back())
                throw std::runtime_error("load_csv: timestamps must strictly increase (row " +
                                         std::to_string(row) + ")");
            timestamps.push_back(t);
            col = 1;
        }
        for (int ch = 0; ch < channels; ++ch)
            cols[ch].push_back(parse_cell(cells[col + ch], row, col + ch + 1));
    }
    if (cols[0].empty()) throw std::runtime_error("load_csv: empty series in '" + path + "'");

    TimeSeries ts = TimeSeries::zeros(channels, static_cast<int>(cols[0].size()));
    for (int ch = 0; ch < channels; ++ch)
        std::copy(cols[ch].begin(), cols[ch].end(), ts.channel(ch));
    if (has_ts) ts.timestamps = std::move(timestamps);
    return ts;
}

void write_csv(const std::string& path, const TimeSeries& x) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
    if (x.timestamps) out << "timestamp,";
    for (int ch = 0; ch < x.channels; ++ch) out << "ch" << ch << (ch + 1 < x.channels ? "," : "\n");
    char buf[64];
    for (int t = 0; t < x.length; ++t) {
        if (x.timestamps) {
            std::snprintf(buf, sizeof(buf), "%.9g,", (*x.timestamps)[t]);
            out << buf;
        }
        for (int ch = 0; ch < x.channels; ++ch) {
            std::snprintf(buf, sizeof(buf), "%.17g", x.at(ch, t));
            out << buf << (ch + 1 < x.channels ? "," : "\n");
        }
    }
}

}  // namespace ltm
