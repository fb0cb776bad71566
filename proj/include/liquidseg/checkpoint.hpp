#pragma once

#include <string>
#include <vector>

#include "liquidseg/nn.hpp"

namespace liquidseg {

// Versioned binary container: config echo plus named parameter tensors.
// Shared by the translation and segmentation models.
void save_checkpoint(const std::string& path, const std::string& config_json,
                     const std::vector<nn::ParamRef>& params);

// Loads values into an already-constructed parameter set (names and shapes
// must match); returns the embedded config echo.
std::string load_checkpoint(const std::string& path, std::vector<nn::ParamRef>& params);

// Reads only the config echo (to reconstruct model shapes before loading).
std::string read_checkpoint_config(const std::string& path);

}  // namespace liquidseg
