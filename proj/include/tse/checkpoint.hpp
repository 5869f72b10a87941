#pragma once
// Self-describing model checkpoint: 8-byte magic "TSECKPT1", a u32
// little-endian JSON header length, the JSON header (network description,
// training echo, tensor index), then all tensors as raw float32
// little-endian in params() order.

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tse/nn/models.hpp"

namespace tse {

struct CheckpointMeta {
  nn::NetDesc desc;
  nlohmann::json train_info;  // config echo, per-epoch history, best epoch
  std::vector<std::string> trained_scenarios;
  std::vector<std::string> holdout;  // scenarios excluded from training
  uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, nn::Net<float>& net,
                     const CheckpointMeta& meta);

std::unique_ptr<nn::Net<float>> load_checkpoint(const std::string& path,
                                                CheckpointMeta* meta = nullptr);

}  // namespace tse
