#include "rvf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "rvf/common.hpp"

namespace rvf {

namespace {

std::vector<double> luma_plane(const Tensor& img) {
    const int c = img.extent(0), h = img.extent(1), w = img.extent(2);
    const float* d = img.data().data();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<double> g(plane, 0.0);
    if (c == 3) {
        for (std::size_t i = 0; i < plane; ++i)
            g[i] = 0.299 * d[i] + 0.587 * d[plane + i] + 0.114 * d[2 * plane + i];
    } else {
        for (int ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < plane; ++i) g[i] += d[ch * plane + i] / c;
    }
    return g;
}

}  // namespace

Tensor estimate_flow(const Tensor& prev, const Tensor& curr, int block, int radius) {
    if (prev.rank() != 3 || curr.rank() != 3 || prev.shape() != curr.shape()) {
        throw ShapeError("estimate_flow expects two [C,H,W] frames of one shape");
    }
    if (block < 1 || radius < 0) {
        throw ParamError("estimate_flow: block must be >= 1 and radius >= 0");
    }
    const int h = prev.extent(1), w = prev.extent(2);
    const std::vector<double> p = luma_plane(prev);
    const std::vector<double> c = luma_plane(curr);
    auto at = [&](const std::vector<double>& g, int y, int x) {
        y = std::clamp(y, 0, h - 1);
        x = std::clamp(x, 0, w - 1);
        return g[static_cast<std::size_t>(y) * w + x];
    };

    std::vector<float> flow(2 * static_cast<std::size_t>(h) * w, 0.0f);
    for (int by = 0; by < h; by += block) {
        const int bh = std::min(block, h - by);
        for (int bx = 0; bx < w; bx += block) {
            const int bw = std::min(block, w - bx);
            double best = 0.0;
            int best_dy = 0, best_dx = 0;
            bool first = true;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    double sad = 0.0;
                    for (int y = 0; y < bh; ++y)
                        for (int x = 0; x < bw; ++x)
                            sad += std::fabs(c[static_cast<std::size_t>(by + y) * w + bx + x] -
                                             at(p, by + y + dy, bx + x + dx));
                    // Strictly better wins; exact ties prefer zero, then the
                    // smaller magnitude, then lexicographic order.
                    const auto cand = std::make_tuple(sad, std::abs(dy) + std::abs(dx), dy, dx);
                    const auto cur = std::make_tuple(best, std::abs(best_dy) + std::abs(best_dx),
                                                     best_dy, best_dx);
                    if (first || cand < cur) {
                        first = false;
                        best = sad;
                        best_dy = dy;
                        best_dx = dx;
                    }
                }
            }
            for (int y = 0; y < bh; ++y) {
                for (int x = 0; x < bw; ++x) {
                    flow[static_cast<std::size_t>(by + y) * w + bx + x] =
                        static_cast<float>(best_dx);
                    flow[static_cast<std::size_t>(h) * w +
                         static_cast<std::size_t>(by + y) * w + bx + x] =
                        static_cast<float>(best_dy);
                }
            }
        }
    }
    return Tensor::from_data({2, h, w}, std::move(flow));
}

}  // namespace rvf
