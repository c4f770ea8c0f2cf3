#include <cstring>
#include <fstream>
#include <ostream>

#include "rvf/tensor_io.hpp"

namespace rvf {

namespace {

constexpr char kMagic[4] = {'R', 'V', 'F', 'T'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("tensor stream truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    os.put(static_cast<char>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) put_u32(os, static_cast<std::uint32_t>(t.extent(i)));
    static_assert(sizeof(float) == 4);
    for (float v : t.data()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(os, bits);
    }
    if (!os) throw IoError("tensor write failed");
}

Tensor read_tensor(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not a tensor stream (bad magic)");
    const int version = is.get();
    if (version != kVersion)
        throw IoError("unsupported tensor format version " + std::to_string(version));
    const int rank = is.get();
    if (rank < 1 || rank > 4) throw IoError("tensor rank out of range: " + std::to_string(rank));
    Shape shape(static_cast<std::size_t>(rank));
    for (auto& e : shape) {
        const std::uint32_t v = get_u32(is);
        if (v == 0 || v > (1u << 24)) throw IoError("tensor extent out of range");
        e = static_cast<int>(v);
    }
    std::vector<float> data(static_cast<std::size_t>(numel_of(shape)));
    for (auto& v : data) {
        const std::uint32_t bits = get_u32(is);
        std::memcpy(&v, &bits, 4);
    }
    return Tensor::from_data(shape, std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_tensor(os, t);
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    return read_tensor(is);
}

}  // namespace rvf
