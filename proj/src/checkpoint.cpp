#include "ltm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ltm/rng.hpp"
#include "ltm/tensor.hpp"

namespace ltm {

namespace {

constexpr char kMagic[8] = {'L', 'T', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr int kFormatVersion = 1;

void write_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

std::vector<unsigned char> doubles_to_le(const std::vector<double>& v) {
    std::vector<unsigned char> out(v.size() * 8);
    for (size_t i = 0; i < v.size(); ++i) {
        uint64_t bits;
        std::memcpy(&bits, &v[i], 8);
        for (int k = 0; k < 8; ++k) out[i * 8 + k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xff);
    }
    return out;
}

void le_to_doubles(const std::vector<unsigned char>& bytes, std::vector<double>& v) {
    for (size_t i = 0; i < v.size(); ++i) {
        uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<uint64_t>(bytes[i * 8 + k]) << (8 * k);
        std::memcpy(&v[i], &bits, 8);
    }
}

nlohmann::json read_manifest(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic, not a checkpoint file");
    const uint64_t mlen = read_u64(in);
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw std::runtime_error("checkpoint: truncated manifest");
    nlohmann::json m = nlohmann::json::parse(mtext);
    if (m.at("version").get<int>() != kFormatVersion)
        throw std::runtime_error("checkpoint: format version " +
                                 std::to_string(m.at("version").get<int>()) + " not supported");
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Parameter>& params,
                     const std::map<std::string, std::string>& config_echo) {
    nlohmann::json manifest;
    manifest["version"] = kFormatVersion;
    manifest["config"] = config_echo;
    nlohmann::json plist = nlohmann::json::array();
    uint64_t payload_sum = 0xcbf29ce484222325ULL;
    std::vector<std::vector<unsigned char>> payloads;
    payloads.reserve(params.size());
    for (const auto& p : params) {
        auto bytes = doubles_to_le(p.tensor.values());
        nlohmann::json e;
        e["name"] = p.name;
        e["shape"] = p.tensor.shape();
        e["frozen"] = p.frozen;
        e["checksum"] = fnv1a64(bytes.data(), bytes.size());
        plist.push_back(std::move(e));
        payload_sum = fnv1a64(bytes.data(), bytes.size(), payload_sum);
        payloads.push_back(std::move(bytes));
    }
    manifest["params"] = std::move(plist);
    manifest["payload_checksum"] = payload_sum;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
    const std::string mtext = manifest.dump();
    out.write(kMagic, 8);
    write_u64(out, mtext.size());
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    for (const auto& b : payloads)
        out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

std::map<std::string, std::string> load_checkpoint(const std::string& path,
                                                   std::vector<Parameter>& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    nlohmann::json manifest = read_manifest(in);

    const auto& plist = manifest.at("params");
    if (plist.size() != params.size())
        throw std::runtime_error("checkpoint: holds " + std::to_string(plist.size()) +
                                 " parameters, model has " + std::to_string(params.size()));
    // Validate the whole manifest before touching any tensor.
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& e = plist[i];
        const std::string name = e.at("name").get<std::string>();
        if (name != params[i].name)
            throw std::runtime_error("checkpoint: parameter '" + name + "' does not match model '" +
                                     params[i].name + "'");
        const auto shape = e.at("shape").get<std::vector<int>>();
        if (shape != params[i].tensor.shape())
            throw std::runtime_error("checkpoint: shape mismatch for parameter '" + name +
                                     "': file " + shape_str(shape) + ", model " +
                                     shape_str(params[i].tensor.shape()));
        if (e.at("frozen").get<bool>() != params[i].frozen)
            throw std::runtime_error("checkpoint: frozen flag mismatch for parameter '" + name + "'");
    }

    uint64_t payload_sum = 0xcbf29ce484222325ULL;
    std::vector<std::vector<double>> staged(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        auto& vals = staged[i];
        vals.resize(params[i].tensor.values().size());
        std::vector<unsigned char> bytes(vals.size() * 8);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!in)
            throw std::runtime_error("checkpoint: truncated payload at parameter '" +
                                     params[i].name + "'");
        const uint64_t sum = fnv1a64(bytes.data(), bytes.size());
        if (sum != plist[i].at("checksum").get<uint64_t>())
            throw std::runtime_error("checkpoint: checksum mismatch for parameter '" +
                                     params[i].name + "'");
        payload_sum = fnv1a64(bytes.data(), bytes.size(), payload_sum);
        le_to_doubles(bytes, vals);
    }
    if (payload_sum != manifest.at("payload_checksum").get<uint64_t>())
        throw std::runtime_error("checkpoint: payload checksum mismatch");
    for (size_t i = 0; i < params.size(); ++i) params[i].tensor.values() = std::move(staged[i]);
    return manifest.at("config").get<std::map<std::string, std::string>>();
}

std::map<std::string, std::string> peek_checkpoint_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    nlohmann::json manifest = read_manifest(in);
    return manifest.at("config").get<std::map<std::string, std::string>>();
}

}  // namespace ltm
