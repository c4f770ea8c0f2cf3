#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rvf/tensor.hpp"

namespace rvf {

// Parameters actually applied to one frame; logged alongside outputs so any
// degraded artifact can be regenerated exactly.
struct DegradationSpec {
    std::string kind;  // "blur" | "noise" | "jpeg" | "resize" | "pipeline"
    double blur_sigma = 0.0;
    double noise_sigma = 0.0;
    int jpeg_quality = 0;
    double scale = 1.0;
    std::uint64_t seed = 0;
};

// Discrete Gaussian taps, radius ceil(3*sigma), normalized to sum 1.
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian blur with replicate borders; sigma = 0 is the identity.
Tensor gaussian_blur(const Tensor& img, double sigma);

// img + N(0, sigma^2) per pixel from the counter-based generator, clipped to
// [0,1]. Same (img, sigma, seed) always reproduces the same bits.
Tensor add_gaussian_noise(const Tensor& img, double sigma, std::uint64_t seed);

// Block-transform compression: YCbCr, 8x8 DCT, quantization by the standard
// luminance/chrominance tables under the libjpeg quality scaling law,
// dequantize, inverse, clip. No chroma subsampling.
Tensor jpeg_like_compress(const Tensor& img, int quality);

// Cubic-convolution resampling (a = -0.5), centers aligned, borders clamped.
Tensor resize_bicubic(const Tensor& img, double factor);

// Quality law used by jpeg_like_compress, exposed for tests: the effective
// table entry for base value b at quality q.
int jpeg_scaled_entry(int base, int quality);

struct DegradedFrame {
    Tensor image;
    DegradationSpec spec;
};

// Re-applies a recorded spec: kind selects the op, the numeric fields feed
// it, and `seed` is the noise-field seed. kind "identity" (or empty) returns
// the input unchanged; kind "pipeline" replays blur -> noise -> compression
// -> resize with the stored parameters, reproducing a pipeline frame bit for
// bit.
Tensor apply_spec(const Tensor& img, const DegradationSpec& spec);

// Frame pipeline: draws blur sigma in [0.2,3], noise sigma in [0,0.1],
// quality in [30,95] from streams derived off `seed`, applies
// blur -> noise -> compression -> resize(1/s), and reports the draw.
DegradedFrame random_pipeline(const Tensor& img, std::uint64_t seed, int s = 4);

// Clip pipeline: one base draw per clip, per-frame noise fields, and
// temporally correlated quality (base plus per-frame jitter within +-5).
std::vector<DegradedFrame> degrade_sequence(const std::vector<Tensor>& frames,
                                            std::uint64_t seed, int s = 4);

}  // namespace rvf
