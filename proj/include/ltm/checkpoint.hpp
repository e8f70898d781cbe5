#pragma once

#include <map>
#include <string>
#include <vector>

#include "ltm/optim.hpp"

namespace ltm {

// Binary checkpoint: magic, JSON manifest (format version, config echo,
// parameter names/shapes/frozen flags, per-tensor and whole-payload
// checksums), then flat little-endian fp64 payloads in manifest order.
// Round trips are bit-exact.

void save_checkpoint(const std::string& path, const std::vector<Parameter>& params,
                     const std::map<std::string, std::string>& config_echo);

// Validates manifest names/shapes/frozen flags against `params` before
// accepting any payload, then overwrites the tensor values in place.
// Returns the config echo stored at save time.
std::map<std::string, std::string> load_checkpoint(const std::string& path,
                                                   std::vector<Parameter>& params);

// Reads just the config echo (for reconstructing a model before loading).
std::map<std::string, std::string> peek_checkpoint_config(const std::string& path);

}  // namespace ltm
