#pragma once

#include <map>
#include <string>
#include <vector>

#include "rvf/tensor.hpp"

namespace rvf {

// A batch of same-shaped [C,H,W] feature maps treated as samples.
using FeatureBatch = std::vector<Tensor>;

// Unbiased sample covariance [C,C] of the batch: each sample is flattened to
// a C x HW matrix, deviations from the batch mean are contracted over the
// position axis, and the sum over samples is divided by N-1.
Tensor covariance_matrix(const FeatureBatch& samples);

// Mean absolute off-diagonal entry of covariance_matrix. With `normalized`
// the covariance is first rescaled to correlation form (unit diagonal), which
// makes the indicator comparable across feature scales.
double ac_indicator(const FeatureBatch& samples, bool normalized = false);

// <a,b> / (|a| |b|) over flattened values, clamped to [-1,1]; 0 if either
// argument is all zeros.
double cosine_similarity(const Tensor& a, const Tensor& b);

// 10*log10(1/MSE) for values on the [0,1] scale; identical inputs give +inf.
double psnr(const Tensor& ref, const Tensor& out);

// Mean local structural similarity on the grayscale conversion: Gaussian
// window 11, sigma 1.5, K1=0.01, K2=0.03, dynamic range 1, windows fully
// inside the image. Needs at least 11x11 pixels.
double ssim(const Tensor& ref, const Tensor& out);

// Mean over pixels of sqrt(diff^2 + eps^2); equal inputs give exactly eps.
double charbonnier_value(const Tensor& ref, const Tensor& out, double eps = 1e-3);

struct RpsResult {
    std::vector<double> power;     // mean spectral power per annular bin
    std::vector<long long> count;  // frequency samples in each bin
    double total_energy = 0.0;     // sum of |X|^2 over all frequencies
};

// Radial power spectrum of the grayscale image: 2-D DFT magnitude squared,
// averaged over `bins` annuli of equal radial width up to the Nyquist radius;
// diagonal frequencies beyond Nyquist fall into the last bin.
RpsResult radial_power_spectrum(const Tensor& img, int bins);

// Per-frame metric values plus their arithmetic means, as written to reports.
struct MetricReport {
    std::vector<std::string> frames;
    std::map<std::string, std::vector<double>> per_frame;
    double mean(const std::string& metric) const;
};

}  // namespace rvf
