#include "rvf/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "rvf/common.hpp"
#include "rvf/tensor_io.hpp"

namespace rvf {

namespace {

constexpr char kMagic[4] = {'R', 'V', 'F', 'C'};
constexpr unsigned char kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
    return nlohmann::json{{"levels", c.levels},
                          {"blocks_per_level", c.blocks_per_level},
                          {"channels_per_level", c.channels_per_level},
                          {"heads_per_level", c.heads_per_level},
                          {"squeeze_ratio", c.squeeze_ratio},
                          {"window", c.window},
                          {"scale", c.scale},
                          {"fusion", c.fusion},
                          {"block_kind", c.block_kind}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.levels = j.at("levels").get<int>();
    c.blocks_per_level = j.at("blocks_per_level").get<std::vector<int>>();
    c.channels_per_level = j.at("channels_per_level").get<std::vector<int>>();
    c.heads_per_level = j.at("heads_per_level").get<std::vector<int>>();
    c.squeeze_ratio = j.at("squeeze_ratio").get<int>();
    c.window = j.at("window").get<int>();
    c.scale = j.at("scale").get<int>();
    c.fusion = j.at("fusion").get<std::string>();
    c.block_kind = j.at("block_kind").get<std::string>();
    return c;
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("checkpoint: truncated header length");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");

    nlohmann::json header;
    header["config"] = config_to_json(ckpt.config);
    header["step"] = ckpt.step;
    std::vector<std::string> names;
    names.reserve(ckpt.params.size());
    for (const auto& [name, t] : ckpt.params) names.push_back(name);
    header["tensors"] = names;
    const std::string htext = header.dump();

    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    write_u64(os, htext.size());
    os.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& [name, t] : ckpt.params) {
        write_tensor(os, t);
    }
    if (!os) throw IoError("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != std::string(kMagic, 4)) {
        throw IoError("checkpoint: bad magic in '" + path + "'");
    }
    const int version = is.get();
    if (version != kVersion) {
        throw IoError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint64_t hlen = read_u64(is);
    std::string htext(hlen, '\0');
    is.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw IoError("checkpoint: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(htext);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: invalid header: ") + e.what());
    }
    Checkpoint ckpt;
    try {
        ckpt.config = config_from_json(header.at("config"));
        ckpt.step = header.at("step").get<std::int64_t>();
        const auto names = header.at("tensors").get<std::vector<std::string>>();
        for (const std::string& name : names) {
            ckpt.params[name] = read_tensor(is);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: malformed header field: ") + e.what());
    }
    return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
    Model m(ckpt.config, 0);
    m.load_parameters(ckpt.params);
    return m;
}

}  // namespace rvf
