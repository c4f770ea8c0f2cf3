#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rvf/common.hpp"
#include "rvf/degrade.hpp"
#include "rvf/flow.hpp"
#include "rvf/harness.hpp"
#include "rvf/imageio.hpp"
#include "rvf/metrics.hpp"
#include "rvf/ops.hpp"
#include "rvf/prng.hpp"
#include "rvf/probes.hpp"
#include "rvf/train.hpp"

namespace rvf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

// The sensitivity study's frame pairs: clip i uses stream seed*100+i so each
// pair is an independent draw but the whole corpus is pinned by one seed.
std::vector<std::pair<Tensor, Tensor>> sensitivity_pairs(const ExperimentConfig& cfg) {
    std::vector<std::pair<Tensor, Tensor>> pairs(cfg.probe_clips);
    parallel_for(cfg.probe_clips, [&](std::int64_t i) {
        pairs[static_cast<std::size_t>(i)] =
            probe_frame_pair(cfg.probe_size, cfg.probe_size,
                             cfg.seed * 100 + static_cast<std::uint64_t>(i), cfg.probe_grain);
    });
    return pairs;
}

void run_sensitivity(const ExperimentConfig& cfg, const std::string& digest,
                     RunReport& rep, nlohmann::json& extra) {
    const auto t0 = Clock::now();
    const auto pairs = sensitivity_pairs(cfg);
    rep.seconds["frames"] = elapsed_s(t0);

    const auto t1 = Clock::now();
    const std::vector<SensitivityRow> rows = sensitivity_table(pairs, cfg.seed);
    rep.seconds["probe"] = elapsed_s(t1);

    std::vector<std::string> header{"digest", "attention"};
    std::vector<std::string> spatial{digest, "spatial"};
    std::vector<std::string> channel{digest, "channel"};
    for (const SensitivityRow& r : rows) {
        header.push_back(r.degradation);
        spatial.push_back(format_value(r.s_spatial));
        channel.push_back(format_value(r.s_channel));
        extra["margin"][r.degradation] = r.s_channel - r.s_spatial;
    }
    const std::string csv = join_path(cfg.out_dir, "sensitivity.csv");
    write_csv(csv, header, {spatial, channel});
    rep.csv_paths.push_back(csv);
}

void run_covariance(const ExperimentConfig& cfg, const std::string& digest,
                    RunReport& rep, nlohmann::json& extra) {
    const auto t0 = Clock::now();
    const std::uint64_t base = derive_seed(cfg.seed, "covariance-inputs");
    std::vector<Tensor> inputs(cfg.probe_inputs);
    parallel_for(cfg.probe_inputs, [&](std::int64_t i) {
        SeedStream ss(derive_seed(base, static_cast<std::uint64_t>(i)));
        std::vector<float> v(8 * 8 * 8);
        for (float& x : v) x = static_cast<float>(ss.uniform(-1.0, 1.0));
        inputs[static_cast<std::size_t>(i)] = Tensor::from_data(Shape{8, 8, 8}, std::move(v));
    });
    rep.seconds["inputs"] = elapsed_s(t0);

    const auto t1 = Clock::now();
    const CovarianceProbe probe = covariance_probe(inputs, cfg.seed);
    rep.seconds["probe"] = elapsed_s(t1);

    const std::string csv = join_path(cfg.out_dir, "covariance.csv");
    write_csv(csv, {"digest", "quantity", "value"},
              {{digest, "input_ac", format_value(probe.input_ac)},
               {digest, "channel_ac", format_value(probe.channel_ac)},
               {digest, "spatial_ac", format_value(probe.spatial_ac)}});
    rep.csv_paths.push_back(csv);
    extra["input_ac"] = probe.input_ac;
    extra["channel_ac"] = probe.channel_ac;
    extra["spatial_ac"] = probe.spatial_ac;
}

std::vector<TrainSample> synthetic_corpus(const ExperimentConfig& cfg) {
    const std::uint64_t content = derive_seed(cfg.seed, "corpus-content");
    const std::uint64_t wear = derive_seed(cfg.seed, "corpus-degradation");
    std::vector<TrainSample> data(cfg.corpus_clips);
    parallel_for(cfg.corpus_clips, [&](std::int64_t i) {
        const auto u = static_cast<std::uint64_t>(i);
        VideoSequence hr = synth_clip(cfg.corpus_frames, cfg.corpus_hr, cfg.corpus_hr,
                                      derive_seed(content, u), cfg.corpus_grain);
        std::vector<DegradedFrame> degraded =
            degrade_sequence(hr, derive_seed(wear, u), cfg.model.scale);
        TrainSample s;
        s.hr = std::move(hr);
        for (DegradedFrame& f : degraded) s.lr.push_back(std::move(f.image));
        data[static_cast<std::size_t>(i)] = std::move(s);
    });
    return data;
}

TrainConfig train_config(const ExperimentConfig& cfg) {
    TrainConfig tc;
    tc.opt.kind = cfg.train_optimizer;
    tc.opt.lr = cfg.train_lr;
    tc.steps = cfg.train_steps;
    tc.seed = derive_seed(cfg.seed, "train-order");
    return tc;
}

// Evaluation clips for the ablation: clean HR plus one fixed degradation per
// split, downscaled bicubically. Built from the ops directly so each split
// isolates a single corruption.
struct EvalClip {
    VideoSequence hr;
    std::map<std::string, VideoSequence> lr;  // split name -> frames
};

std::vector<EvalClip> ablation_eval_clips(const ExperimentConfig& cfg) {
    const std::uint64_t content = derive_seed(cfg.seed, "eval-content");
    const std::uint64_t noise = derive_seed(cfg.seed, "eval-noise");
    const double inv = 1.0 / cfg.model.scale;
    std::vector<EvalClip> clips(cfg.ablate_test_clips);
    parallel_for(cfg.ablate_test_clips, [&](std::int64_t i) {
        const auto u = static_cast<std::uint64_t>(i);
        EvalClip clip;
        clip.hr = synth_clip(cfg.corpus_frames, cfg.corpus_hr, cfg.corpus_hr,
                             derive_seed(content, u), cfg.corpus_grain);
        for (std::size_t t = 0; t < clip.hr.size(); ++t) {
            const Tensor& hr = clip.hr[t];
            clip.lr["blur"].push_back(resize_bicubic(gaussian_blur(hr, 2.0), inv));
            clip.lr["noise"].push_back(resize_bicubic(
                add_gaussian_noise(hr, 0.05, derive_seed(derive_seed(noise, u), t)), inv));
            clip.lr["jpeg"].push_back(resize_bicubic(jpeg_like_compress(hr, 30), inv));
        }
        clips[static_cast<std::size_t>(i)] = std::move(clip);
    });
    return clips;
}

// Rollout that also returns the per-step hidden states. Frame extents must
// already be divisible by the model's downsampling factor so this loop is
// the same computation as Model::run_sequence (no padding branch).
std::vector<Tensor> hidden_states(const Model& model, const VideoSequence& frames) {
    NoGradGuard guard;
    std::vector<Tensor> hs;
    Tensor hidden, prev;
    for (const Tensor& cur : frames) {
        Tensor aligned;
        if (hidden.defined()) {
            Tensor flow = estimate_flow(prev, cur);
            aligned = bilinear_warp(hidden, flow);
        }
        Tensor h_next;
        model.step(cur, aligned, h_next);
        hs.push_back(h_next);
        hidden = h_next;
        prev = cur;
    }
    return hs;
}

void run_ablation(const ExperimentConfig& cfg, const std::string& digest,
                  RunReport& rep, nlohmann::json& extra) {
    const int down = 1 << (cfg.model.levels - 1);
    if (cfg.corpus_hr % cfg.model.scale != 0 ||
        (cfg.corpus_hr / cfg.model.scale) % down != 0) {
        throw ConfigError("config key 'corpus.hr': must be divisible by model.scale times 2^(model.levels-1)");
    }

    const auto t0 = Clock::now();
    const std::vector<TrainSample> corpus = synthetic_corpus(cfg);
    const std::vector<EvalClip> eval = ablation_eval_clips(cfg);
    rep.seconds["data"] = elapsed_s(t0);

    const TrainConfig tc = train_config(cfg);
    const std::uint64_t init_seed = derive_seed(cfg.seed, "init");
    static const char* fusions[] = {"concat", "channel"};
    static const char* blocks[] = {"channel-attn", "ica"};

    std::vector<std::vector<std::string>> rows;
    for (const char* fusion : fusions) {
        for (const char* block : blocks) {
            ModelConfig mcfg = cfg.model;
            mcfg.fusion = fusion;
            mcfg.block_kind = block;
            const auto tv = Clock::now();
            Model model(mcfg, init_seed);
            const TrainResult tr = train_stage1(model, corpus, tc);

            // One per-variant ac over the hidden states of every eval rollout.
            FeatureBatch hidden;
            std::map<std::string, double> psnr_sum, ssim_sum;
            std::map<std::string, int> counts;
            for (const EvalClip& clip : eval) {
                for (const auto& [split, lr] : clip.lr) {
                    const std::vector<Tensor> out = model.run_sequence(lr);
                    for (std::size_t t = 0; t < out.size(); ++t) {
                        psnr_sum[split] += psnr(clip.hr[t], out[t]);
                        ssim_sum[split] += ssim(clip.hr[t], out[t]);
                        counts[split] += 1;
                    }
                    for (Tensor& h : hidden_states(model, lr)) hidden.push_back(std::move(h));
                }
            }
            const double hidden_ac = ac_indicator(hidden, true);

            const std::string variant = std::string(fusion) + "/" + block;
            rep.seconds["variant " + variant] = elapsed_s(tv);
            extra["hidden_ac"][variant] = hidden_ac;
            extra["final_loss"][variant] = tr.loss_trace.back();
            for (const auto& [split, n] : counts) {
                rows.push_back({digest, fusion, block, split,
                                format_value(psnr_sum[split] / n),
                                format_value(ssim_sum[split] / n), format_value(hidden_ac)});
            }
        }
    }

    const std::string csv = join_path(cfg.out_dir, "ablation.csv");
    write_csv(csv, {"digest", "fusion", "blocks", "split", "psnr", "ssim", "hidden_ac"}, rows);
    rep.csv_paths.push_back(csv);
}

std::vector<TrainSample> loaded_corpus(const ExperimentConfig& cfg) {
    TrainSample s;
    s.lr = load_frames(cfg.in_dir);
    s.hr = load_frames(cfg.ref_dir);
    if (s.lr.size() != s.hr.size()) {
        throw IoError("training corpus: " + cfg.in_dir + " and " + cfg.ref_dir +
                      " hold different frame counts");
    }
    return {std::move(s)};
}

void run_train(const ExperimentConfig& cfg, const std::string& digest, RunReport& rep,
               nlohmann::json& extra) {
    const auto t0 = Clock::now();
    const std::vector<TrainSample> corpus =
        (!cfg.in_dir.empty() && !cfg.ref_dir.empty()) ? loaded_corpus(cfg)
                                                      : synthetic_corpus(cfg);
    rep.seconds["data"] = elapsed_s(t0);

    const auto t1 = Clock::now();
    Model model(cfg.model, derive_seed(cfg.seed, "init"));
    const TrainResult tr = train_stage1(model, corpus, train_config(cfg));
    rep.seconds["train"] = elapsed_s(t1);

    const std::string ckpt =
        cfg.ckpt_path.empty() ? join_path(cfg.out_dir, "model.ckpt") : cfg.ckpt_path;
    save_checkpoint(ckpt, tr.ckpt);
    extra["checkpoint"] = ckpt;
    extra["final_loss"] = tr.loss_trace.back();

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < tr.loss_trace.size(); ++i) {
        rows.push_back({digest, std::to_string(i), format_value(tr.loss_trace[i])});
    }
    const std::string csv = join_path(cfg.out_dir, "train_loss.csv");
    write_csv(csv, {"digest", "step", "loss"}, rows);
    rep.csv_paths.push_back(csv);
}

void run_infer(const ExperimentConfig& cfg, const std::string& digest, RunReport& rep,
               nlohmann::json& extra) {
    const auto t0 = Clock::now();
    const Checkpoint ckpt = load_checkpoint(cfg.ckpt_path);
    Model model = model_from_checkpoint(ckpt);
    const VideoSequence frames = load_frames(cfg.in_dir);
    rep.seconds["load"] = elapsed_s(t0);

    const auto t1 = Clock::now();
    const VideoSequence out = model.run_sequence(frames);
    rep.seconds["sequence"] = elapsed_s(t1);

    const std::string frame_dir = join_path(cfg.out_dir, "frames");
    save_frames(out, frame_dir);
    extra["frame_dir"] = frame_dir;
    extra["frames"] = out.size();

    const std::string csv = join_path(cfg.out_dir, "infer.csv");
    write_csv(csv, {"digest", "quantity", "value"},
              {{digest, "frames", std::to_string(out.size())},
               {digest, "input_digest", digest_hex(sequence_digest(frames))},
               {digest, "output_digest", digest_hex(sequence_digest(out))}});
    rep.csv_paths.push_back(csv);
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ensure_dir(cfg.out_dir);

    RunReport rep;
    rep.experiment = cfg.experiment;
    rep.digest = config_digest(cfg);
    rep.config_echo = canonical_config_text(cfg);

    const auto t0 = Clock::now();
    nlohmann::json extra;
    if (cfg.experiment == "sensitivity") {
        run_sensitivity(cfg, rep.digest, rep, extra);
    } else if (cfg.experiment == "covariance") {
        run_covariance(cfg, rep.digest, rep, extra);
    } else if (cfg.experiment == "ablation") {
        run_ablation(cfg, rep.digest, rep, extra);
    } else if (cfg.experiment == "train") {
        run_train(cfg, rep.digest, rep, extra);
    } else if (cfg.experiment == "infer") {
        run_infer(cfg, rep.digest, rep, extra);
    } else {
        throw ConfigError("unknown experiment '" + cfg.experiment + "'");
    }
    rep.seconds["total"] = elapsed_s(t0);

    nlohmann::json j;
    j["experiment"] = rep.experiment;
    j["digest"] = rep.digest;
    j["config"] = rep.config_echo;
    j["csv"] = rep.csv_paths;
    j["seconds"] = rep.seconds;
    j["summary"] = extra;
    rep.json_path = join_path(cfg.out_dir, "report.json");
    std::ofstream out(rep.json_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + rep.json_path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + rep.json_path);
    return rep;
}

}  // namespace rvf
