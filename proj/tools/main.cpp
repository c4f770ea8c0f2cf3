#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rvf/checkpoint.hpp"
#include "rvf/common.hpp"
#include "rvf/degrade.hpp"
#include "rvf/harness.hpp"
#include "rvf/imageio.hpp"
#include "rvf/metrics.hpp"
#include "rvf/prng.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::string in_dir, out_dir, ref_dir, ckpt;
    std::string metric_list = "psnr,ssim,charbonnier";
    std::string csv_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int scale = 4;
    int bins = 32;
    int frames = 10;
    int size = 64;
    double grain = 0.15;
};

void print_report(const rvf::RunReport& rep) {
    std::cout << rep.experiment << " done, config digest " << rep.digest << "\n";
    for (const std::string& p : rep.csv_paths) std::cout << "  csv  " << p << "\n";
    std::cout << "  json " << rep.json_path << "\n";
    const auto it = rep.seconds.find("total");
    if (it != rep.seconds.end()) {
        std::printf("  %.2fs total\n", it->second);
    }
}

// Config-file experiments: the subcommand pins the experiment kind, the file
// provides the rest, and --out / --seed override the file when given.
void run_config_experiment(const CliArgs& args, const std::string& kind) {
    rvf::ExperimentConfig cfg = args.config_path.empty()
                                    ? rvf::ExperimentConfig{}
                                    : rvf::load_experiment_config(args.config_path);
    cfg.experiment = kind;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed_given) {
        cfg.seed = args.seed;
        cfg.seed_set = true;
    }
    print_report(rvf::run_experiment(cfg));
}

void run_infer_cli(const CliArgs& args) {
    rvf::ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = rvf::load_experiment_config(args.config_path);
    cfg.experiment = "infer";
    if (!args.ckpt.empty()) cfg.ckpt_path = args.ckpt;
    if (!args.in_dir.empty()) cfg.in_dir = args.in_dir;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    const rvf::Checkpoint ckpt = rvf::load_checkpoint(cfg.ckpt_path);
    if (ckpt.config.scale != args.scale) {
        throw rvf::ConfigError("--scale " + std::to_string(args.scale) +
                               " does not match the checkpoint (scale " +
                               std::to_string(ckpt.config.scale) + ")");
    }
    print_report(rvf::run_experiment(cfg));
}

void run_degrade_cli(const CliArgs& args) {
    if (!args.seed_given) throw rvf::ConfigError("degrade: --seed is required");
    const rvf::VideoSequence hr = rvf::load_frames(args.in_dir);
    const std::vector<rvf::DegradedFrame> lr =
        rvf::degrade_sequence(hr, args.seed, args.scale);

    rvf::VideoSequence out;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t t = 0; t < lr.size(); ++t) {
        out.push_back(lr[t].image);
        const rvf::DegradationSpec& s = lr[t].spec;
        rows.push_back({std::to_string(t), s.kind, rvf::format_value(s.blur_sigma),
                        rvf::format_value(s.noise_sigma), std::to_string(s.jpeg_quality),
                        rvf::format_value(s.scale), std::to_string(s.seed)});
    }
    rvf::save_frames(out, (std::filesystem::path(args.out_dir) / "frames").string());
    const std::string csv = (std::filesystem::path(args.out_dir) / "degrade.csv").string();
    rvf::write_csv(csv,
                   {"frame", "kind", "blur_sigma", "noise_sigma", "jpeg_quality", "scale",
                    "seed"},
                   rows);
    std::cout << "degraded " << out.size() << " frames into " << args.out_dir << "\n";
    std::cout << "  csv  " << csv << "\n";
}

void emit_csv(const CliArgs& args, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows) {
    if (!args.csv_path.empty()) {
        rvf::write_csv(args.csv_path, header, rows);
        std::cout << "wrote " << args.csv_path << "\n";
        return;
    }
    auto emit = [](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) std::cout << ',';
            std::cout << cells[i];
        }
        std::cout << '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
}

void run_synth_cli(const CliArgs& args) {
    if (!args.seed_given) throw rvf::ConfigError("synth: --seed is required");
    const rvf::VideoSequence clip =
        rvf::synth_clip(args.frames, args.size, args.size, args.seed, args.grain);
    rvf::save_frames(clip, args.out_dir);
    std::cout << "wrote " << clip.size() << " frames to " << args.out_dir << "\n";
}

void run_metrics_cli(const CliArgs& args) {
    const std::vector<std::string> ref_files = rvf::list_frame_files(args.ref_dir);
    const rvf::VideoSequence ref = rvf::load_frames(args.ref_dir);
    const rvf::VideoSequence out = rvf::load_frames(args.out_dir);
    if (ref.size() != out.size()) {
        throw rvf::IoError("metrics: " + args.ref_dir + " and " + args.out_dir +
                           " hold different frame counts");
    }

    std::vector<std::string> metrics;
    std::stringstream ss(args.metric_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item != "psnr" && item != "ssim" && item != "charbonnier") {
            throw rvf::ConfigError("unknown metric '" + item +
                                   "', expected psnr, ssim or charbonnier");
        }
        metrics.push_back(item);
    }
    if (metrics.empty()) throw rvf::ConfigError("--metrics: empty selection");

    auto value_of = [&](const std::string& m, std::size_t t) {
        if (m == "psnr") return rvf::psnr(ref[t], out[t]);
        if (m == "ssim") return rvf::ssim(ref[t], out[t]);
        return rvf::charbonnier_value(ref[t], out[t]);
    };

    std::vector<std::vector<std::string>> rows;
    std::map<std::string, double> sums;
    for (std::size_t t = 0; t < ref.size(); ++t) {
        const std::string frame_id = std::filesystem::path(ref_files[t]).stem().string();
        for (const std::string& m : metrics) {
            const double v = value_of(m, t);
            sums[m] += v;
            rows.push_back({frame_id, m, rvf::format_value(v)});
        }
    }
    for (const std::string& m : metrics) {
        rows.push_back({"mean", m, rvf::format_value(sums[m] / static_cast<double>(ref.size()))});
    }
    emit_csv(args, {"frame_id", "metric", "value"}, rows);
}

void run_rps_cli(const CliArgs& args) {
    const std::vector<std::string> files = rvf::list_frame_files(args.in_dir);
    const rvf::VideoSequence frames = rvf::load_frames(args.in_dir);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const std::string frame_id = std::filesystem::path(files[t]).stem().string();
        const rvf::RpsResult r = rvf::radial_power_spectrum(frames[t], args.bins);
        for (std::size_t b = 0; b < r.power.size(); ++b) {
            rows.push_back({frame_id, std::to_string(b), rvf::format_value(r.power[b]),
                            std::to_string(r.count[b])});
        }
    }
    emit_csv(args, {"frame_id", "bin", "power", "count"}, rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent video super-resolution toolkit"};
    app.require_subcommand(1);
    CliArgs args;

    auto add_seed = [&args](CLI::App* cmd) {
        cmd->add_option("--seed", args.seed, "run seed")->each([&args](const std::string&) {
            args.seed_given = true;
        });
    };

    CLI::App* synth = app.add_subcommand("synth", "Write a synthetic test clip");
    synth->add_option("--out", args.out_dir, "output frame directory")->required();
    synth->add_option("--frames", args.frames, "frame count");
    synth->add_option("--size", args.size, "square frame extent");
    synth->add_option("--grain", args.grain, "pixel grain share in [0,1]");
    add_seed(synth);

    CLI::App* degrade = app.add_subcommand("degrade", "Degrade an HR clip to LR");
    degrade->add_option("--in", args.in_dir, "HR frame directory")->required();
    degrade->add_option("--out", args.out_dir, "output directory")->required();
    degrade->add_option("--scale", args.scale, "downscale factor");
    add_seed(degrade);

    CLI::App* train = app.add_subcommand("train", "Train from a config file");
    train->add_option("--config", args.config_path, "experiment config")->required();
    train->add_option("--out", args.out_dir, "override report directory");
    add_seed(train);

    CLI::App* infer = app.add_subcommand("infer", "Upscale a clip with a checkpoint");
    infer->add_option("--ckpt", args.ckpt, "checkpoint file")->required();
    infer->add_option("--in", args.in_dir, "LR frame directory")->required();
    infer->add_option("--out", args.out_dir, "output directory")->required();
    infer->add_option("--scale", args.scale, "expected upscale factor");

    CLI::App* metrics = app.add_subcommand("metrics", "Full-reference metrics for two clips");
    metrics->add_option("--ref", args.ref_dir, "reference frame directory")->required();
    metrics->add_option("--out", args.out_dir, "output frame directory")->required();
    metrics->add_option("--metrics", args.metric_list, "comma-separated metric names");
    metrics->add_option("--csv", args.csv_path, "write CSV here instead of stdout");

    CLI::App* rps = app.add_subcommand("rps", "Radial power spectrum of a clip");
    rps->add_option("--in", args.in_dir, "frame directory")->required();
    rps->add_option("--bins", args.bins, "annular frequency bins");
    rps->add_option("--csv", args.csv_path, "write CSV here instead of stdout");

    CLI::App* sens = app.add_subcommand("probe-sensitivity",
                                        "Query-degradation sensitivity comparison");
    sens->add_option("--config", args.config_path, "experiment config")->required();
    sens->add_option("--out", args.out_dir, "override report directory");
    add_seed(sens);

    CLI::App* cov = app.add_subcommand("probe-covariance",
                                       "Channel covariance under both attention forms");
    cov->add_option("--config", args.config_path, "experiment config")->required();
    cov->add_option("--out", args.out_dir, "override report directory");
    add_seed(cov);

    CLI::App* ablate = app.add_subcommand("ablate", "Train and score the design lattice");
    ablate->add_option("--config", args.config_path, "experiment config")->required();
    ablate->add_option("--out", args.out_dir, "override report directory");
    add_seed(ablate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            run_synth_cli(args);
        } else if (degrade->parsed()) {
            run_degrade_cli(args);
        } else if (train->parsed()) {
            run_config_experiment(args, "train");
        } else if (infer->parsed()) {
            run_infer_cli(args);
        } else if (metrics->parsed()) {
            run_metrics_cli(args);
        } else if (rps->parsed()) {
            run_rps_cli(args);
        } else if (sens->parsed()) {
            run_config_experiment(args, "sensitivity");
        } else if (cov->parsed()) {
            run_config_experiment(args, "covariance");
        } else if (ablate->parsed()) {
            run_config_experiment(args, "ablation");
        }
    } catch (const rvf::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
