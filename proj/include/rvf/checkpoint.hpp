#pragma once

#include <cstdint>
#include <string>

#include "rvf/model.hpp"

namespace rvf {

// A trained (or initial) model snapshot: configuration echo, step counter,
// and every named parameter tensor.
struct Checkpoint {
    ModelConfig config;
    std::int64_t step = 0;
    ParamMap params;
};

// Container layout: magic "RVFC", format version byte, u64 little-endian
// header length, JSON header (config echo, step, tensor names in order), then
// one float32 tensor record per name in the same order. Loading and saving
// round-trip bit for bit.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Convenience: materialize a model from a checkpoint.
Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace rvf
