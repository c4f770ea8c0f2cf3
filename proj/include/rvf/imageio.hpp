#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rvf/tensor.hpp"

namespace rvf {

// Frames of one clip in time order, each [3,H,W] in [0,1].
using VideoSequence = std::vector<Tensor>;

// 8-bit RGB PNG decode to [3,H,W] floats in [0,1]. Grayscale, palette, and
// alpha inputs are expanded/stripped to RGB; 16-bit depth is reduced to 8.
Tensor load_png(const std::string& path);

// Encode to 8-bit RGB PNG. Values are clamped to [0,1] and rounded to the
// nearest of 255 levels; a load of the result reproduces those levels
// exactly, so quantized data round-trips bit for bit.
void save_png(const std::string& path, const Tensor& img);

// Lexicographically sorted .png paths under dir. Missing directory or no
// frames is an error (empty corpus).
std::vector<std::string> list_frame_files(const std::string& dir);

// Load every .png in dir (lexicographic order) as one clip; all frames must
// share extents.
VideoSequence load_frames(const std::string& dir);

// Write frames as frame_0000.png, frame_0001.png, ... creating dir first.
void save_frames(const VideoSequence& seq, const std::string& dir);

// Procedural clip: per channel a fixed set of random sinusoids translating
// at a constant per-clip velocity (pure phase motion), mixed with per-frame
// pixel grain. Band-limited waves carry enough fine structure for blur and
// compression to bite, grain keeps noise measurable, and the analytic motion
// gives the recurrent pipeline real temporal correlation.
VideoSequence synth_clip(int frames, int h, int w, std::uint64_t seed,
                         double grain = 0.15);

// Static pair used by the sensitivity study: a wave-plus-grain frame and its
// one-pixel diagonal shift (the whole pattern moves, grain included).
std::pair<Tensor, Tensor> probe_frame_pair(int h, int w, std::uint64_t seed,
                                           double grain = 0.15);

// FNV-1a over the frame bytes of a sequence, for rerun comparisons.
std::uint64_t sequence_digest(const VideoSequence& seq);

}  // namespace rvf
