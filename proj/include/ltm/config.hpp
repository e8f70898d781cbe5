#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltm/model.hpp"

namespace ltm {

enum class Task { kForecasting, kImputation, kAnomaly };
const char* task_name(Task t);
Task task_from_name(const std::string& name);

// The full experiment knob set. Loaded from a flat key = value file with
// optional [section] headers (keys become "section.key"); CLI overrides are
// applied as further key=value pairs on top.
struct ExperimentConfig {
    Task task = Task::kForecasting;
    std::string dataset = "synth:sine+trend+noise";
    int patch_len = 16;
    int stride = 16;
    std::vector<int> kernel_sizes{3, 5, 7};
    double lambda = 0.1;
    double alpha = 0.99;
    double missing_rate = 0.25;
    std::optional<double> few_shot_fraction;
    bool no_fatm = false, no_kdtp = false, no_llm = false;
    int epochs = 8;
    int batch = 4;
    double lr = 1e-3;
    uint64_t seed = 42;
    std::string corpus;  // optional document corpus path
    std::string query = "predict the continuation of the series";
    int retrieve_k = 3;

    int horizon = 96;
    int window_patches = 8;
    double train_frac = 0.75;
    int d_red = 32;
    int fc_hidden = 128;
    bool timing_in_csv = false;  // CSVs are byte-reproducible by default

    BackboneConfig backbone;

    static ExperimentConfig from_file(const std::string& path,
                                      const std::vector<std::string>& overrides = {});
    static ExperimentConfig from_map(const std::map<std::string, std::string>& kv);
    std::map<std::string, std::string> to_map() const;

    ModelConfig to_model_config() const;
    void validate() const;
};

// Raw config-file parsing, exposed for tests.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);
void apply_override(std::map<std::string, std::string>& kv, const std::string& assignment);

}  // namespace ltm
