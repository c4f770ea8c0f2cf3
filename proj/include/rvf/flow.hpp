#pragma once

#include "rvf/tensor.hpp"

namespace rvf {

// Integer block-matching flow from prev to curr: for every 8x8 block of the
// current frame, the displacement in [-4,4]^2 minimizing the luma SAD against
// the previous frame, assigned to each pixel of the block. Ties prefer zero
// motion, then smaller magnitude. Channel 0 holds dx, channel 1 dy, so
// sampling prev at (x + dx, y + dy) aligns it with curr.
Tensor estimate_flow(const Tensor& prev, const Tensor& curr, int block = 8,
                     int radius = 4);

}  // namespace rvf
