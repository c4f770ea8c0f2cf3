#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "rvf/tensor.hpp"

namespace rvf {

// Flat tensor container: magic "RVFT", one version byte (currently 1), one
// rank byte, rank little-endian uint32 extents, then float32 little-endian
// values in row-major order. Truncated or malformed input raises IoError.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace rvf
