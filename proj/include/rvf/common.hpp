#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rvf {

// Thrown when tensor extents do not line up (matmul inner dims, conv groups, ...).
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad parameter value (negative sigma, quality out of range, invalid squeeze ratio).
struct ParamError : std::runtime_error {
    explicit ParamError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration file / key. CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / decode failures. CLI maps this to exit code 2.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training aborts (non-finite loss).
struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense tensors are rank <= 4, row-major.
using Shape = std::vector<int>;

inline std::int64_t numel_of(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s);

}  // namespace rvf
