#include "rvf/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "rvf/common.hpp"
#include "rvf/prng.hpp"

namespace rvf {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
    std::FILE* fp = nullptr;
    ~FileCloser() {
        if (fp) std::fclose(fp);
    }
};

void check_frame(const Tensor& img, const char* who) {
    if (img.rank() != 3 || img.extent(0) != 3) {
        throw ShapeError(std::string(who) + " expects a [3,H,W] frame, got " +
                         shape_str(img.shape()));
    }
}

}  // namespace

Tensor load_png(const std::string& path) {
    FileCloser file;
    file.fp = std::fopen(path.c_str(), "rb");
    if (!file.fp) throw IoError("cannot open " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, file.fp) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw IoError("not a PNG file: " + path);
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png decoder init failed for " + path);
    }

    std::vector<float> values;
    std::vector<png_byte> row;
    png_uint_32 w = 0, h = 0;
    bool failed = false;
    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, file.fp);
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);

        int bit_depth = 0, color_type = 0;
        png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
        png_set_expand(png);
        if (bit_depth == 16) png_set_strip_16(png);
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
            png_set_gray_to_rgb(png);
        }
        png_set_strip_alpha(png);
        png_read_update_info(png, info);
        if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
            png_destroy_read_struct(&png, &info, nullptr);
            throw IoError("unsupported PNG layout in " + path);
        }

        values.assign(static_cast<std::size_t>(3) * h * w, 0.0f);
        row.resize(static_cast<std::size_t>(w) * 3);
        for (png_uint_32 y = 0; y < h; ++y) {
            png_read_row(png, row.data(), nullptr);
            for (png_uint_32 x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    values[(static_cast<std::size_t>(c) * h + y) * w + x] =
                        static_cast<float>(row[x * 3 + c]) / 255.0f;
                }
            }
        }
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (failed) throw IoError("corrupt PNG data in " + path);
    return Tensor::from_data({3, static_cast<int>(h), static_cast<int>(w)}, std::move(values));
}

void save_png(const std::string& path, const Tensor& img) {
    check_frame(img, "save_png");
    const int h = img.extent(1), w = img.extent(2);

    FileCloser file;
    file.fp = std::fopen(path.c_str(), "wb");
    if (!file.fp) throw IoError("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encoder init failed for " + path);
    }

    std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
    bool failed = false;
    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, file.fp);
        png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                     PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        const float* data = img.data().data();
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const float v = std::clamp(data[(static_cast<std::size_t>(c) * h + y) * w + x],
                                               0.0f, 1.0f);
                    row[static_cast<std::size_t>(x) * 3 + c] =
                        static_cast<png_byte>(std::lround(v * 255.0f));
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    if (failed) throw IoError("png encode failed for " + path);
}

std::vector<std::string> list_frame_files(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            names.push_back(entry.path().filename().string());
        }
    }
    if (ec) throw IoError("cannot list " + dir + ": " + ec.message());
    if (names.empty()) throw IoError("empty corpus: no .png frames in " + dir);
    std::sort(names.begin(), names.end());
    std::vector<std::string> paths;
    paths.reserve(names.size());
    for (const std::string& n : names) paths.push_back((fs::path(dir) / n).string());
    return paths;
}

VideoSequence load_frames(const std::string& dir) {
    VideoSequence seq;
    for (const std::string& path : list_frame_files(dir)) {
        seq.push_back(load_png(path));
        if (seq.back().shape() != seq.front().shape()) {
            throw IoError("frame size mismatch in " + dir + " at " + path);
        }
    }
    return seq;
}

void save_frames(const VideoSequence& seq, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    char name[32];
    for (std::size_t i = 0; i < seq.size(); ++i) {
        std::snprintf(name, sizeof(name), "frame_%04zu.png", i);
        save_png((fs::path(dir) / name).string(), seq[i]);
    }
}

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

struct Wave {
    double fx, fy, phase, amp;
};

// Per-clip wave set: 6 sinusoids per channel, band-limited below Nyquist.
std::vector<Wave> draw_waves(SeedStream& rng) {
    std::vector<Wave> waves(18);
    for (Wave& wv : waves) {
        wv.fx = rng.uniform(-0.35, 0.35);
        wv.fy = rng.uniform(-0.35, 0.35);
        wv.phase = rng.uniform(0.0, kTwoPi);
        wv.amp = rng.uniform(0.05, 0.25);
    }
    return waves;
}

Tensor render_waves(const std::vector<Wave>& waves, int h, int w, double dx, double dy,
                    double grain, std::uint64_t grain_seed) {
    std::vector<float> v(static_cast<std::size_t>(3) * h * w, 0.0f);
    for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < 6; ++k) {
            const Wave& wv = waves[static_cast<std::size_t>(c * 6 + k)];
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    v[(static_cast<std::size_t>(c) * h + y) * w + x] += static_cast<float>(
                        wv.amp *
                        std::sin(kTwoPi * (wv.fx * (x - dx) + wv.fy * (y - dy)) + wv.phase));
                }
            }
        }
    }
    SeedStream grng(grain_seed);
    for (float& x : v) {
        const double base = std::clamp(0.5 + static_cast<double>(x), 0.0, 1.0);
        const double g = grng.uniform(0.0, 1.0);
        x = static_cast<float>(std::clamp((1.0 - grain) * base + grain * g, 0.0, 1.0));
    }
    return Tensor::from_data({3, h, w}, std::move(v));
}

}  // namespace

VideoSequence synth_clip(int frames, int h, int w, std::uint64_t seed, double grain) {
    if (frames < 1 || h < 1 || w < 1) {
        throw ParamError("synth_clip: frames and extents must be positive");
    }
    if (!(grain >= 0.0 && grain <= 1.0)) {
        throw ParamError("synth_clip: grain must be in [0,1]");
    }
    SeedStream rng(derive_seed(seed, "synth-clip"));
    const std::vector<Wave> waves = draw_waves(rng);
    const double vx = rng.uniform(-1.5, 1.5);
    const double vy = rng.uniform(-1.5, 1.5);
    VideoSequence seq;
    seq.reserve(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        seq.push_back(render_waves(waves, h, w, vx * t, vy * t, grain,
                                   derive_seed(seed, static_cast<std::uint64_t>(t))));
    }
    return seq;
}

std::pair<Tensor, Tensor> probe_frame_pair(int h, int w, std::uint64_t seed, double grain) {
    SeedStream rng(seed);
    std::vector<float> v(static_cast<std::size_t>(3) * h * w, 0.0f);
    for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < 6; ++k) {
            const double fx = rng.uniform(-0.35, 0.35);
            const double fy = rng.uniform(-0.35, 0.35);
            const double ph = rng.uniform(0.0, kTwoPi);
            const double amp = rng.uniform(0.05, 0.25);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    v[(static_cast<std::size_t>(c) * h + y) * w + x] +=
                        static_cast<float>(amp * std::sin(kTwoPi * (fx * x + fy * y) + ph));
                }
            }
        }
    }
    SeedStream grng(seed ^ 0x9e3779b97f4a7c15ull);
    for (float& x : v) {
        const double base = std::clamp(0.5 + static_cast<double>(x), 0.0, 1.0);
        const double g = grng.uniform(0.0, 1.0);
        x = static_cast<float>(std::clamp((1.0 - grain) * base + grain * g, 0.0, 1.0));
    }
    Tensor prev = Tensor::from_data({3, h, w}, std::move(v));

    // curr(y, x) = prev(y + 1, x + 1), clamped at the borders.
    std::vector<float> d(prev.data().size());
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int sy = std::min(y + 1, h - 1), sx = std::min(x + 1, w - 1);
                d[(static_cast<std::size_t>(c) * h + y) * w + x] =
                    prev.data()[(static_cast<std::size_t>(c) * h + sy) * w + sx];
            }
        }
    }
    Tensor curr = Tensor::from_data(prev.shape(), std::move(d));
    return {prev, curr};
}

std::uint64_t sequence_digest(const VideoSequence& seq) {
    std::uint64_t d = fnv1a64("frames", 6);
    for (const Tensor& t : seq) {
        for (int e : t.shape()) {
            const std::uint32_t ext = static_cast<std::uint32_t>(e);
            d = fnv1a64(&ext, sizeof(ext), d);
        }
        d = fnv1a64(t.data().data(), t.data().size() * sizeof(float), d);
    }
    return d;
}

}  // namespace rvf
