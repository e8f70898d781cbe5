#include "ltm/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ltm {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double to_double(const std::map<std::string, std::string>& kv, const std::string& key, double dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw std::runtime_error("config: bad numeric value for '" + key + "': " + it->second);
    }
}

int to_int(const std::map<std::string, std::string>& kv, const std::string& key, int dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        return std::stoi(it->second);
    } catch (...) {
        throw std::runtime_error("config: bad integer value for '" + key + "': " + it->second);
    }
}

uint64_t to_u64(const std::map<std::string, std::string>& kv, const std::string& key, uint64_t dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        return std::stoull(it->second);
    } catch (...) {
        throw std::runtime_error("config: bad seed value for '" + key + "': " + it->second);
    }
}

bool to_bool(const std::map<std::string, std::string>& kv, const std::string& key, bool dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: bad boolean value for '" + key + "': " + v);
}

std::string get(const std::map<std::string, std::string>& kv, const std::string& key,
                const std::string& dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
}

}  // namespace

const char* task_name(Task t) {
    switch (t) {
        case Task::kForecasting: return "forecasting";
        case Task::kImputation: return "imputation";
        default: return "anomaly";
    }
}

Task task_from_name(const std::string& name) {
    if (name == "forecasting" || name == "forecast") return Task::kForecasting;
    if (name == "imputation" || name == "impute") return Task::kImputation;
    if (name == "anomaly" || name == "detect") return Task::kAnomaly;
    throw std::runtime_error("config: unknown task '" + name + "'");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line, section;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config: malformed section header at line " +
                                         std::to_string(row));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key = value at line " + std::to_string(row));
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config: empty key at line " + std::to_string(row));
        if (!section.empty()) key = section + "." + key;
        kv[key] = val;
    }
    return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

void apply_override(std::map<std::string, std::string>& kv, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::runtime_error("config: override '" + assignment + "' is not key=value");
    kv[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path,
                                             const std::vector<std::string>& overrides) {
    auto kv = parse_config_file(path);
    for (const auto& o : overrides) apply_override(kv, o);
    return from_map(kv);
}

ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& kv) {
    ExperimentConfig c;
    c.task = task_from_name(get(kv, "task", "forecasting"));
    c.dataset = get(kv, "dataset", c.dataset);
    c.patch_len = to_int(kv, "patch_len", c.patch_len);
    c.stride = to_int(kv, "stride", c.stride);
    if (auto it = kv.find("kernel_sizes"); it != kv.end()) {
        c.kernel_sizes.clear();
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) c.kernel_sizes.push_back(std::stoi(trim(tok)));
    }
    c.lambda = to_double(kv, "lambda", c.lambda);
    c.alpha = to_double(kv, "alpha", c.alpha);
    c.missing_rate = to_double(kv, "missing_rate", c.missing_rate);
    if (auto it = kv.find("few_shot"); it != kv.end() && !it->second.empty())
        c.few_shot_fraction = std::stod(it->second);
    if (auto it = kv.find("ablation"); it != kv.end()) {
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            if (tok == "no_fatm")
                c.no_fatm = true;
            else if (tok == "no_kdtp")
                c.no_kdtp = true;
            else if (tok == "no_llm")
                c.no_llm = true;
            else
                throw std::runtime_error("config: unknown ablation '" + tok + "'");
        }
    }
    c.epochs = to_int(kv, "epochs", c.epochs);
    c.batch = to_int(kv, "batch", c.batch);
    c.lr = to_double(kv, "lr", c.lr);
    c.seed = to_u64(kv, "seed", c.seed);
    c.corpus = get(kv, "corpus", "");
    c.query = get(kv, "query", c.query);
    c.retrieve_k = to_int(kv, "retrieve_k", c.retrieve_k);
    c.horizon = to_int(kv, "horizon", c.horizon);
    c.window_patches = to_int(kv, "window_patches", c.window_patches);
    c.train_frac = to_double(kv, "train_frac", c.train_frac);
    c.fc_hidden = to_int(kv, "fc_hidden", c.fc_hidden);
    c.timing_in_csv = to_bool(kv, "timing_in_csv", c.timing_in_csv);

    c.backbone.arch = arch_from_name(get(kv, "backbone.arch", "decoder_only"));
    c.backbone.layers = to_int(kv, "backbone.layers", c.backbone.layers);
    c.backbone.heads = to_int(kv, "backbone.heads", c.backbone.heads);
    c.backbone.d_model = to_int(kv, "backbone.d_model", c.backbone.d_model);
    c.backbone.d_ff = to_int(kv, "backbone.d_ff", c.backbone.d_ff);
    c.backbone.max_seq = to_int(kv, "backbone.max_seq", c.backbone.max_seq);
    c.backbone.seed = to_u64(kv, "backbone.seed", c.seed ^ 0xb0c4b0c4ULL);

    c.d_red = to_int(kv, "d_red", std::max(1, c.backbone.d_model / 4));
    c.validate();
    return c;
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
    std::map<std::string, std::string> kv;
    kv["task"] = task_name(task);
    kv["dataset"] = dataset;
    kv["patch_len"] = std::to_string(patch_len);
    kv["stride"] = std::to_string(stride);
    {
        std::string ks;
        for (size_t i = 0; i < kernel_sizes.size(); ++i)
            ks += (i ? "," : "") + std::to_string(kernel_sizes[i]);
        kv["kernel_sizes"] = ks;
    }
    kv["lambda"] = fmt_double(lambda);
    kv["alpha"] = fmt_double(alpha);
    kv["missing_rate"] = fmt_double(missing_rate);
    if (few_shot_fraction) kv["few_shot"] = fmt_double(*few_shot_fraction);
    {
        std::string ab;
        if (no_fatm) ab += "no_fatm";
        if (no_kdtp) ab += std::string(ab.empty() ? "" : ",") + "no_kdtp";
        if (no_llm) ab += std::string(ab.empty() ? "" : ",") + "no_llm";
        if (!ab.empty()) kv["ablation"] = ab;
    }
    kv["epochs"] = std::to_string(epochs);
    kv["batch"] = std::to_string(batch);
    kv["lr"] = fmt_double(lr);
    kv["seed"] = std::to_string(seed);
    if (!corpus.empty()) kv["corpus"] = corpus;
    kv["query"] = query;
    kv["retrieve_k"] = std::to_string(retrieve_k);
    kv["horizon"] = std::to_string(horizon);
    kv["window_patches"] = std::to_string(window_patches);
    kv["train_frac"] = fmt_double(train_frac);
    kv["d_red"] = std::to_string(d_red);
    kv["fc_hidden"] = std::to_string(fc_hidden);
    kv["timing_in_csv"] = timing_in_csv ? "true" : "false";
    kv["backbone.arch"] = arch_name(backbone.arch);
    kv["backbone.layers"] = std::to_string(backbone.layers);
    kv["backbone.heads"] = std::to_string(backbone.heads);
    kv["backbone.d_model"] = std::to_string(backbone.d_model);
    kv["backbone.d_ff"] = std::to_string(backbone.d_ff);
    kv["backbone.max_seq"] = std::to_string(backbone.max_seq);
    kv["backbone.seed"] = std::to_string(backbone.seed);
    return kv;
}

ModelConfig ExperimentConfig::to_model_config() const {
    ModelConfig m;
    m.patch_len = patch_len;
    m.stride = stride;
    m.d_model = backbone.d_model;
    m.d_red = d_red;
    m.kernel_sizes = kernel_sizes;
    m.backbone = backbone;
    m.no_fatm = no_fatm;
    m.no_kdtp = no_kdtp;
    m.no_llm = no_llm;
    m.fc_hidden = fc_hidden;
    m.seed = seed;
    return m;
}

void ExperimentConfig::validate() const {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::runtime_error("config: lambda " + fmt_double(lambda) + " outside [0,1]");
    if (!(missing_rate > 0.0 && missing_rate < 1.0))
        throw std::runtime_error("config: missing_rate " + fmt_double(missing_rate) +
                                 " outside (0,1)");
    if (few_shot_fraction && !(*few_shot_fraction > 0.0 && *few_shot_fraction <= 1.0))
        throw std::runtime_error("config: few_shot fraction outside (0,1]");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::runtime_error("config: alpha " + fmt_double(alpha) + " outside (0,1)");
    if (patch_len < 1 || stride < 1) throw std::runtime_error("config: patch_len/stride must be >= 1");
    if (epochs < 1 || batch < 1) throw std::runtime_error("config: epochs/batch must be >= 1");
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw std::runtime_error("config: train_frac outside (0,1)");
    if (window_patches < 2)
        throw std::runtime_error("config: window_patches must be >= 2");
    const int prompt_cap = (no_kdtp && query.empty()) ? 0 : kPromptTokenMax;
    if (backbone.max_seq < prompt_cap + window_patches)
        throw std::runtime_error("config: backbone.max_seq must cover the prompt cap plus window");
}

}  // namespace ltm
