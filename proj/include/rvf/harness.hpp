#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rvf/model.hpp"

namespace rvf {

// Worker count for data-parallel loops: RVF_THREADS if set (min 1), else the
// hardware concurrency. Malformed values raise ConfigError.
int thread_budget();

// Runs fn(i) for every i in [0,n) across up to thread_budget() workers in
// contiguous chunks. Each item must touch only its own slot of any shared
// output; with that discipline results are identical for every worker count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

// One experiment run, parsed from a flat key-value config file. Lines are
// `key = value`, `#` starts a comment, keys are dotted per section:
//
//   experiment = sensitivity | covariance | ablation | train | infer
//   seed       = 42          (required for every stochastic experiment)
//   out        = runs/demo   (report directory, created on demand)
//   model.levels / model.blocks / model.channels / model.heads  (lists comma-separated)
//   model.squeeze / model.window / model.scale / model.fusion / model.block_kind
//   data.in    = DIR   (infer input frames; train LR frames)
//   data.ref   = DIR   (train HR frames)
//   data.ckpt  = FILE  (infer checkpoint; also written by train)
//   probe.clips / probe.size / probe.grain   (sensitivity corpus)
//   probe.inputs                             (covariance batch size)
//   corpus.clips / corpus.frames / corpus.hr / corpus.grain  (synthetic training corpus)
//   train.steps / train.optimizer / train.lr
//   ablate.test_clips
struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = "runs/out";

    ModelConfig model;

    std::string in_dir;
    std::string ref_dir;
    std::string ckpt_path;

    int probe_clips = 20;
    int probe_size = 32;
    double probe_grain = 0.15;
    int probe_inputs = 128;

    int corpus_clips = 2;
    int corpus_frames = 3;
    int corpus_hr = 32;
    double corpus_grain = 0.15;

    int train_steps = 200;
    std::string train_optimizer = "adam";
    double train_lr = 1e-3;

    int ablate_test_clips = 3;

    // Structural checks only (known experiment, seed where required, sane
    // counts). Path existence is checked when the run opens the paths.
    void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Fixed-order echo of every setting; equal configs produce equal text.
std::string canonical_config_text(const ExperimentConfig& cfg);
// FNV-1a of the canonical text; stamped on every CSV row so results are
// self-identifying.
std::string config_digest(const ExperimentConfig& cfg);

struct RunReport {
    std::string experiment;
    std::string digest;
    std::string config_echo;
    std::vector<std::string> csv_paths;
    std::string json_path;
    std::map<std::string, double> seconds;  // wall clock per stage
};

// Dispatches on cfg.experiment, writes CSVs plus a JSON report into
// cfg.out_dir, and returns what was written. Same config + seed + corpus
// produce byte-identical CSVs.
RunReport run_experiment(const ExperimentConfig& cfg);

// Deterministic CSV writing: rows of preformatted cells, one digest column
// first. Doubles should be formatted with format_value below.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Shortest decimal form that parses back to the same double.
std::string format_value(double v);

}  // namespace rvf
