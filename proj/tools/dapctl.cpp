// dapctl: command-line harness for the drowsiness/attention pipeline.
//
// Exit codes: 0 success, 1 other failure, 2 ingest error, 3 alignment
// error, 4 configuration or usage error.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "dap/error.hpp"
#include "dap/harness/commands.hpp"

namespace {

using namespace dap;
using namespace dap::harness;

constexpr int kExitOther = 1, kExitIngest = 2, kExitAlignment = 3, kExitConfig = 4;

dsp::Label parse_label(const std::string& s) {
    if (s == "drowsy") return dsp::Label::drowsy;
    if (s == "wakeful") return dsp::Label::wakeful;
    throw ConfigError("--class must be drowsy|wakeful, got '" + s + "'");
}

BlobMotion parse_motion(const std::string& s) {
    if (s == "static") return BlobMotion::static_blob;
    if (s == "linear") return BlobMotion::linear;
    if (s == "corner_jump") return BlobMotion::corner_jump;
    throw ConfigError("--motion must be static|linear|corner_jump, got '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dapctl - PPG attention scoring, video saliency and alert fusion"};
    app.require_subcommand(1);

    std::string config_path, out;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "configuration file (section.key = value lines)");
    app.add_option("--seed", seed, "master seed (overrides the config file)");
    app.add_option("--out", out, "output file or directory")->required();

    // gen-ppg
    auto* gen_ppg = app.add_subcommand("gen-ppg", "generate synthetic PPG (one recording or a labelled dataset)");
    std::string ppg_class = "wakeful";
    GenPpgOptions ppg_opts;
    gen_ppg->add_option("--class", ppg_class, "drowsy|wakeful (single recording)");
    gen_ppg->add_option("--duration", ppg_opts.duration_s, "seconds per recording")->check(CLI::PositiveNumber);
    gen_ppg->add_option("--per-class", ppg_opts.per_class, "write a dataset with this many recordings per class");

    // gen-clips
    auto* gen_clips = app.add_subcommand("gen-clips", "generate synthetic video clips with truth maps");
    GenClipsOptions clip_opts;
    std::string motion = "linear";
    gen_clips->add_option("--count", clip_opts.count, "number of clips");
    gen_clips->add_option("--frames", clip_opts.spec.frames, "frames per clip");
    gen_clips->add_option("--height", clip_opts.spec.height, "frame height");
    gen_clips->add_option("--width", clip_opts.spec.width, "frame width");
    gen_clips->add_option("--fps", clip_opts.spec.frame_rate_fps, "frame rate (sets map timestamps)");
    gen_clips->add_option("--motion", motion, "static|linear|corner_jump");
    gen_clips->add_option("--sigma", clip_opts.spec.blob_sigma_px, "blob width in pixels");
    gen_clips->add_option("--flatness", clip_opts.spec.blob_flatness, "super-Gaussian exponent (1 = Gaussian)");

    // filter
    auto* filter = app.add_subcommand("filter", "decimate and run the 22-channel filter bank");
    std::string filter_input;
    filter->add_option("--input", filter_input, "PPG CSV")->required();

    // train-tcn
    auto* train_tcn = app.add_subcommand("train-tcn", "train the attention TCN on a labelled PPG dataset");
    std::string tcn_data;
    train_tcn->add_option("--data", tcn_data, "dataset directory with labels.csv")->required();

    // train-ssfcn
    auto* train_ssfcn = app.add_subcommand("train-ssfcn", "train the saliency network on clip directories");
    std::string ssfcn_clips;
    train_ssfcn->add_option("--clips", ssfcn_clips, "directory of clip_* folders")->required();

    // eval-saliency
    auto* eval = app.add_subcommand("eval-saliency", "score predicted maps against truth maps and fixations");
    std::string eval_pred, eval_truth, eval_ckpt, eval_clip;
    eval->add_option("--pred", eval_pred, "predicted map directory");
    eval->add_option("--truth", eval_truth, "truth map directory (defaults to <clip>/truth)");
    eval->add_option("--checkpoint", eval_ckpt, "saliency checkpoint; predictions go to <out>.pred/");
    eval->add_option("--clip", eval_clip, "clip directory to run the checkpoint on");

    // replay
    auto* replay = app.add_subcommand("replay", "fuse PPG attention scores with scene dynamics into an alert log");
    std::string replay_ppg, replay_maps, replay_tcn;
    replay->add_option("--ppg", replay_ppg, "PPG CSV")->required();
    replay->add_option("--maps", replay_maps, "saliency map directory (maps.csv manifest)")->required();
    replay->add_option("--tcn", replay_tcn, "TCN checkpoint")->required();

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "grid-search the fusion thresholds on labelled windows");
    std::string calib_input;
    calibrate->add_option("--input", calib_input, "CSV score,gradient,expected_alert")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;

        if (*gen_ppg) {
            if (ppg_opts.per_class == 0) ppg_opts.cls = parse_label(ppg_class);
            const auto n = cmd_gen_ppg(cfg, ppg_opts, out);
            std::printf("wrote %zu recording(s) to %s\n", n, out.c_str());
        } else if (*gen_clips) {
            clip_opts.spec.motion = parse_motion(motion);
            try {
                clip_opts.spec.validate();
            } catch (const InvalidSpec& e) {
                throw ConfigError(e.what());
            }
            const auto n = cmd_gen_clips(cfg, clip_opts, out);
            std::printf("wrote %zu clip(s) to %s\n", n, out.c_str());
        } else if (*filter) {
            cmd_filter(cfg, filter_input, out);
            std::printf("wrote filter taps and filtered.csv to %s\n", out.c_str());
        } else if (*train_tcn) {
            const auto s = cmd_train_tcn(cfg, tcn_data, out);
            std::printf("trained on %zu windows, final loss %.6f, test accuracy %.4f on %zu windows\n",
                        s.train_windows, s.final_loss, s.test_accuracy, s.test_windows);
        } else if (*train_ssfcn) {
            const auto s = cmd_train_ssfcn(cfg, ssfcn_clips, out);
            std::printf("trained on %zu clip windows, final loss %.6f\n", s.samples, s.final_loss);
        } else if (*eval) {
            std::string pred = eval_pred, truth = eval_truth;
            if (!eval_ckpt.empty()) {
                if (eval_clip.empty()) throw ConfigError("eval-saliency: --checkpoint requires --clip");
                pred = out + ".pred";
                cmd_predict_saliency(eval_ckpt, eval_clip, pred);
                if (truth.empty()) truth = (std::filesystem::path(eval_clip) / "truth").string();
            }
            if (pred.empty() || truth.empty())
                throw ConfigError("eval-saliency: give --pred and --truth, or --checkpoint and --clip");
            const auto rows = cmd_eval_saliency(pred, truth, out);
            double auc = 0, nss = 0, cc = 0, sim = 0;
            for (const auto& r : rows) auc += r.auc, nss += r.nss, cc += r.cc, sim += r.sim;
            const double n = static_cast<double>(rows.size());
            std::printf("%zu frames: mean auc %.4f nss %.4f cc %.4f sim %.4f\n", rows.size(), auc / n, nss / n,
                        cc / n, sim / n);
        } else if (*replay) {
            const auto s = cmd_replay(cfg, replay_ppg, replay_maps, replay_tcn, out);
            std::printf("%zu aligned windows, %zu alert decisions, %zu events\n", s.windows, s.alerts, s.events);
        } else if (*calibrate) {
            const auto r = cmd_calibrate(cfg, calib_input, out);
            std::printf("theta %.2f attention_high_min %.2f agreement %.4f\n", r.config.theta,
                        r.config.attention_high_min, r.agreement);
        }
    } catch (const IngestError& e) {
        std::fprintf(stderr, "ingest error: %s\n", e.what());
        return kExitIngest;
    } catch (const AlignmentError& e) {
        std::fprintf(stderr, "alignment error: %s\n", e.what());
        return kExitAlignment;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
    return 0;
}
