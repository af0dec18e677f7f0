#pragma once

#include <string>
#include <vector>

#include "hc/params.hpp"
#include "hc/tensor.hpp"

namespace hc {

// Versioned binary container of named tensors; checkpoints and prior files
// share it. The trailing blob carries the run config as plain text.
struct NamedTensorD {
    std::string name;
    std::uint8_t side = 0;  // 0 coarse, 1 fine
    Tensor<double> data;
};

void save_tensors(const std::vector<NamedTensorD>& tensors, const std::string& path,
                  const std::string& config_blob = "");
std::vector<NamedTensorD> load_tensors(const std::string& path, std::string* config_blob = nullptr);

template <typename T>
void save_params(const ModelParams<T>& params, const std::string& path,
                 const std::string& config_blob = "");

// Loads by name into already-constructed params; shape mismatch is an error.
template <typename T>
void load_params(ModelParams<T>& params, const std::string& path, std::string* config_blob = nullptr);

}  // namespace hc
