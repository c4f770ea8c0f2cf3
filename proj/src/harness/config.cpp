#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "rvf/common.hpp"
#include "rvf/harness.hpp"
#include "rvf/prng.hpp"

namespace rvf {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& key, const std::string& value, long long lo,
                    long long hi) {
    long long v = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || v < lo || v > hi) {
        throw ConfigError("config key '" + key + "': expected integer in [" +
                          std::to_string(lo) + "," + std::to_string(hi) + "], got '" + value +
                          "'");
    }
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(static_cast<int>(parse_int(key, trim(item), 1, 1 << 20)));
    }
    if (out.empty()) {
        throw ConfigError("config key '" + key + "': expected a comma-separated list");
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "experiment") {
        cfg.experiment = value;
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(
            parse_int(key, value, 0, std::numeric_limits<long long>::max()));
        cfg.seed_set = true;
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "model.levels") {
        cfg.model.levels = static_cast<int>(parse_int(key, value, 1, 8));
    } else if (key == "model.blocks") {
        cfg.model.blocks_per_level = parse_int_list(key, value);
    } else if (key == "model.channels") {
        cfg.model.channels_per_level = parse_int_list(key, value);
    } else if (key == "model.heads") {
        cfg.model.heads_per_level = parse_int_list(key, value);
    } else if (key == "model.squeeze") {
        cfg.model.squeeze_ratio = static_cast<int>(parse_int(key, value, 1, 64));
    } else if (key == "model.window") {
        cfg.model.window = static_cast<int>(parse_int(key, value, 1, 256));
    } else if (key == "model.scale") {
        cfg.model.scale = static_cast<int>(parse_int(key, value, 1, 8));
    } else if (key == "model.fusion") {
        cfg.model.fusion = value;
    } else if (key == "model.block_kind") {
        cfg.model.block_kind = value;
    } else if (key == "data.in") {
        cfg.in_dir = value;
    } else if (key == "data.ref") {
        cfg.ref_dir = value;
    } else if (key == "data.ckpt") {
        cfg.ckpt_path = value;
    } else if (key == "probe.clips") {
        cfg.probe_clips = static_cast<int>(parse_int(key, value, 1, 1 << 16));
    } else if (key == "probe.size") {
        cfg.probe_size = static_cast<int>(parse_int(key, value, 8, 4096));
    } else if (key == "probe.grain") {
        cfg.probe_grain = parse_double(key, value);
    } else if (key == "probe.inputs") {
        cfg.probe_inputs = static_cast<int>(parse_int(key, value, 2, 1 << 16));
    } else if (key == "corpus.clips") {
        cfg.corpus_clips = static_cast<int>(parse_int(key, value, 1, 1 << 12));
    } else if (key == "corpus.frames") {
        cfg.corpus_frames = static_cast<int>(parse_int(key, value, 1, 1 << 12));
    } else if (key == "corpus.hr") {
        cfg.corpus_hr = static_cast<int>(parse_int(key, value, 8, 4096));
    } else if (key == "corpus.grain") {
        cfg.corpus_grain = parse_double(key, value);
    } else if (key == "train.steps") {
        cfg.train_steps = static_cast<int>(parse_int(key, value, 1, 1 << 20));
    } else if (key == "train.optimizer") {
        cfg.train_optimizer = value;
    } else if (key == "train.lr") {
        cfg.train_lr = parse_double(key, value);
    } else if (key == "ablate.test_clips") {
        cfg.ablate_test_clips = static_cast<int>(parse_int(key, value, 1, 1 << 12));
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    static const char* kinds[] = {"sensitivity", "covariance", "ablation", "train", "infer"};
    bool known = false;
    for (const char* k : kinds) known = known || experiment == k;
    if (!known) {
        throw ConfigError("config key 'experiment': got '" + experiment +
                          "', expected one of sensitivity, covariance, ablation, train, infer");
    }
    if (!seed_set && experiment != "infer") {
        throw ConfigError("config key 'seed': required for experiment '" + experiment + "'");
    }
    if (!(probe_grain >= 0.0 && probe_grain <= 1.0)) {
        throw ConfigError("config key 'probe.grain': must be in [0,1]");
    }
    if (!(corpus_grain >= 0.0 && corpus_grain <= 1.0)) {
        throw ConfigError("config key 'corpus.grain': must be in [0,1]");
    }
    if (!(train_lr > 0.0)) {
        throw ConfigError("config key 'train.lr': must be > 0");
    }
    if (train_optimizer != "adam" && train_optimizer != "sgd") {
        throw ConfigError("config key 'train.optimizer': got '" + train_optimizer +
                          "', expected adam or sgd");
    }
    if (experiment == "infer" && ckpt_path.empty()) {
        throw ConfigError("config key 'data.ckpt': required for experiment 'infer'");
    }
    if (experiment == "infer" && in_dir.empty()) {
        throw ConfigError("config key 'data.in': required for experiment 'infer'");
    }
    try {
        model.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config section 'model': ") + e.what());
    }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": empty key or value in '" + t + "'");
        }
        apply_key(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
    std::string out;
    out += "experiment = " + cfg.experiment + "\n";
    out += "seed = " + (cfg.seed_set ? std::to_string(cfg.seed) : std::string("unset")) + "\n";
    out += "out = " + cfg.out_dir + "\n";
    out += "model.levels = " + std::to_string(cfg.model.levels) + "\n";
    out += "model.blocks = " + join_ints(cfg.model.blocks_per_level) + "\n";
    out += "model.channels = " + join_ints(cfg.model.channels_per_level) + "\n";
    out += "model.heads = " + join_ints(cfg.model.heads_per_level) + "\n";
    out += "model.squeeze = " + std::to_string(cfg.model.squeeze_ratio) + "\n";
    out += "model.window = " + std::to_string(cfg.model.window) + "\n";
    out += "model.scale = " + std::to_string(cfg.model.scale) + "\n";
    out += "model.fusion = " + cfg.model.fusion + "\n";
    out += "model.block_kind = " + cfg.model.block_kind + "\n";
    out += "data.in = " + cfg.in_dir + "\n";
    out += "data.ref = " + cfg.ref_dir + "\n";
    out += "data.ckpt = " + cfg.ckpt_path + "\n";
    out += "probe.clips = " + std::to_string(cfg.probe_clips) + "\n";
    out += "probe.size = " + std::to_string(cfg.probe_size) + "\n";
    out += "probe.grain = " + format_value(cfg.probe_grain) + "\n";
    out += "probe.inputs = " + std::to_string(cfg.probe_inputs) + "\n";
    out += "corpus.clips = " + std::to_string(cfg.corpus_clips) + "\n";
    out += "corpus.frames = " + std::to_string(cfg.corpus_frames) + "\n";
    out += "corpus.hr = " + std::to_string(cfg.corpus_hr) + "\n";
    out += "corpus.grain = " + format_value(cfg.corpus_grain) + "\n";
    out += "train.steps = " + std::to_string(cfg.train_steps) + "\n";
    out += "train.optimizer = " + cfg.train_optimizer + "\n";
    out += "train.lr = " + format_value(cfg.train_lr) + "\n";
    out += "ablate.test_clips = " + std::to_string(cfg.ablate_test_clips) + "\n";
    return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
    return digest_hex(fnv1a64(canonical_config_text(cfg)));
}

std::string format_value(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace rvf
