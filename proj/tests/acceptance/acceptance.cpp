// Acceptance run: executes each criterion, prints one PASS/FAIL line per
// criterion with its runtime and measurements, and exits nonzero if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dap/error.hpp"
#include "dap/fusion.hpp"
#include "dap/harness/commands.hpp"
#include "dap/harness/pipeline.hpp"
#include "dap/harness/synthetic.hpp"
#include "dap/ppg_dsp.hpp"
#include "dap/rng.hpp"
#include "dap/saliency_eval.hpp"
#include "dap/ssfcn.hpp"
#include "dap/tcn.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "saliency_oracles.hpp"

using namespace dap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- 1. Filter bank response --------------------------------------------------------------

// Passband and stopband exclude a guard band around each cutoff; 0.2 Hz is
// wider than half the Hamming transition width (3.3·fs/N ≈ 0.33 Hz at
// fs = 50 Hz, N = 501) so the measurement covers the design's claim.
Outcome filter_bank() {
    constexpr double fs_hz = 50.0, guard = 0.2;
    constexpr std::size_t npts = 65536;
    const auto bank = dsp::build_filter_bank(fs_hz, 501);
    if (bank.channels.size() != dsp::kBankChannels) return {false, "bank does not have 22 channels"};
    double worst_stop = 1e300, worst_pass = 0.0;
    for (std::size_t c = 0; c < bank.channels.size(); ++c) {
        const auto& ch = bank.channels[c];
        const auto mag = oracle::fir_response(dsp::channel_taps(bank, c), npts);
        const bool has_low = ch.kind != dsp::FilterKind::low_pass;
        const bool has_high = ch.kind != dsp::FilterKind::high_pass;
        const double lo = has_low ? ch.cutoff_low_hz : 0.0;
        const double hi = has_high ? *ch.cutoff_high_hz : fs_hz / 2.0;
        for (std::size_t i = 0; i < mag.size(); ++i) {
            const double f = static_cast<double>(i) * fs_hz / static_cast<double>(npts);
            const double db = oracle::to_db(mag[i]);
            if ((has_low && f <= lo - guard) || (has_high && f >= hi + guard)) worst_stop = std::min(worst_stop, -db);
            if (f >= lo + guard && f <= hi - guard) worst_pass = std::max(worst_pass, std::abs(db));
        }
    }
    return {worst_stop >= 50.0 && worst_pass <= 0.1,
            fmt("22 channels, min stopband attenuation %.2f dB (>= 50), max passband deviation %.4f dB (<= 0.1)",
                worst_stop, worst_pass)};
}

// ---- 2. TCN causality ---------------------------------------------------------------------

dsp::HyperPatternWindow random_window(Rng& rng, std::size_t channels, std::size_t len,
                                      std::optional<dsp::Label> label = std::nullopt) {
    dsp::HyperPatternWindow w;
    w.channels = Matrix(channels, len);
    for (auto& v : w.channels.data) v = rng.normal();
    w.label = label;
    return w;
}

void randomize(tcn::TcnParams& p, Rng& rng) {
    for (auto* t : p.tensors())
        for (auto& v : t->v) v = rng.uniform(-0.5, 0.5);
    for (auto& b : p.blocks) {
        for (auto& v : b.norm1_scale.v) v = rng.uniform(0.5, 1.5);
        for (auto& v : b.norm2_scale.v) v = rng.uniform(0.5, 1.5);
    }
}

Outcome tcn_causality() {
    Rng rng(20241);
    std::size_t compared = 0, mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        tcn::TcnConfig c;
        c.num_blocks = 1 + static_cast<int>(rng.below(4));
        c.kernel_size = 2 + static_cast<int>(rng.below(3));
        c.dilation_schedule = rng.bernoulli(0.5) ? tcn::DilationSchedule::increment : tcn::DilationSchedule::doubling;
        c.channels_per_block = 2 + static_cast<int>(rng.below(7));
        c.input_channels = 1 + static_cast<int>(rng.below(6));
        c.seed = rng.next_u64();
        c.strict_causal = true;
        auto p = tcn::init_params(c);
        randomize(p, rng);
        const std::size_t len = 16 + rng.below(113);
        const auto w = random_window(rng, static_cast<std::size_t>(c.input_channels), len);
        const std::size_t t = rng.below(len);  // perturbation index
        auto w2 = w;
        for (std::size_t r = 0; r < w2.channels.rows; ++r)
            for (std::size_t k = t; k < len; ++k) w2.channels(r, k) = rng.normal() * 10.0;
        const auto a = tcn::forward(p, w, tcn::Mode::eval).cache;
        const auto b = tcn::forward(p, w2, tcn::Mode::eval).cache;
        // Strict causality: activations at times <= t see inputs < t only.
        for (std::size_t blk = 0; blk < a.blocks.size(); ++blk)
            for (const auto member : {&tcn::BlockCache::conv1, &tcn::BlockCache::relu1, &tcn::BlockCache::conv2,
                                      &tcn::BlockCache::output}) {
                const Matrix& ma = a.blocks[blk].*member;
                const Matrix& mb = b.blocks[blk].*member;
                for (std::size_t r = 0; r < ma.rows; ++r)
                    for (std::size_t k = 0; k <= t; ++k) {
                        ++compared;
                        const double x = ma(r, k), y = mb(r, k);
                        if (std::memcmp(&x, &y, sizeof(double)) != 0) ++mismatches;
                    }
            }
    }
    return {mismatches == 0 && compared > 0,
            fmt("100 trials, %zu earlier activations compared bit-for-bit, %zu mismatches", compared, mismatches)};
}

// ---- 3. Gradient checks -------------------------------------------------------------------

Outcome gradient_checks() {
    constexpr std::size_t kCoords = 40;
    Rng rng(777);
    double worst = 0.0;
    std::size_t checked = 0, kinks = 0;
    bool ok = true;

    // TCN, 2 blocks, train mode (dropout mask fixed by the seed).
    {
        tcn::TcnConfig c;
        c.num_blocks = 2;
        c.channels_per_block = 4;
        c.input_channels = 3;
        c.seed = 5;
        auto p = tcn::init_params(c);
        randomize(p, rng);
        const auto w = random_window(rng, 3, 40, dsp::Label::drowsy);
        const auto lg = tcn::loss_and_grad(p, w, tcn::Mode::train, 9);
        const auto res = testing::gradient_check(
            p.tensors(), std::as_const(lg.grad).tensors(),
            [&] { return tcn::loss_and_grad(p, w, tcn::Mode::train, 9).loss; }, rng, kCoords);
        ok = ok && res.checked >= 20 && res.worst_rel < 1e-5;
        worst = std::max(worst, res.worst_rel);
        checked += res.checked;
        kinks += res.kinks;
    }
    const std::size_t tcn_checked = checked;
    // SS-FCN miniature: 2 encoder + 2 decoder blocks, input 1×16×16×1.
    for (bool separable : {false, true}) {
        ssfcn::SsfcnConfig c;
        c.clip_len = 1;
        c.encoder_channels = {2, 3};
        c.decoder_blocks = 2;
        c.separable = separable;
        c.seed = 13;
        auto p = ssfcn::init_params(c);
        for (auto* t : p.tensors())
            for (double& v : t->v) v += rng.uniform(-0.3, 0.3);
        ssfcn::VideoClip clip(1, 16, 16, 1);
        for (double& v : clip.frames) v = rng.uniform();
        Matrix target(16, 16);
        for (double& v : target.data) v = rng.uniform();
        const auto lg = ssfcn::ssfcn_loss_and_grad(p, clip, target);
        const auto res = testing::gradient_check(
            p.tensors(), std::as_const(lg.grad).tensors(),
            [&] { return ssfcn::ssfcn_loss_and_grad(p, clip, target).loss; }, rng, kCoords);
        ok = ok && res.checked >= 20 && res.worst_rel < 1e-5;
        worst = std::max(worst, res.worst_rel);
        checked += res.checked;
        kinks += res.kinks;
    }
    return {ok, fmt("TCN %zu coords, SS-FCN %zu coords (dense + separable), worst relative error %.2e (< 1e-5), "
                    "%zu kink-straddling probes redrawn",
                    tcn_checked, checked - tcn_checked, worst, kinks)};
}

// ---- 4. Synthetic drowsiness classification -------------------------------------------------

std::optional<tcn::TcnParams> g_trained_tcn;  // reused by criterion 8

Outcome drowsiness_classification() {
    constexpr std::size_t kPerClass = 200;
    std::vector<dsp::HyperPatternWindow> per_class[2];
    const harness::DspConfig dsp_cfg;
    std::uint64_t seed = 100;
    for (int cls = 0; cls < 2; ++cls)
        while (per_class[cls].size() < kPerClass) {
            const auto label = cls == 0 ? dsp::Label::drowsy : dsp::Label::wakeful;
            const auto rec = harness::gen_synthetic_ppg(harness::SyntheticPpgSpec::preset(label, 100.0, seed++));
            for (auto& w : harness::ppg_to_windows(rec.series, dsp_cfg, rec.label))
                if (per_class[cls].size() < kPerClass) per_class[cls].push_back(std::move(w));
        }
    std::vector<dsp::HyperPatternWindow> all;
    for (std::size_t i = 0; i < kPerClass; ++i) {
        all.push_back(per_class[0][i]);
        all.push_back(per_class[1][i]);
    }
    const auto split = harness::split_indices(all.size(), 0.7, 1);
    std::vector<dsp::HyperPatternWindow> train, test;
    for (auto i : split.train) train.push_back(all[i]);
    for (auto i : split.test) test.push_back(all[i]);

    tcn::TcnConfig c;  // default 12-block architecture
    c.seed = 7;
    const harness::TcnTrainSettings defaults;
    tcn::TrainOptions opts;
    opts.epochs = static_cast<int>(defaults.epochs);
    opts.learning_rate = defaults.learning_rate;
    opts.batch_size = defaults.batch_size;
    opts.optimizer = defaults.optimizer;
    opts.seed = 3;
    auto result = tcn::train(tcn::init_params(c), train, opts);
    const double acc = tcn::accuracy(result.params, test);
    g_trained_tcn = std::move(result.params);
    return {acc >= 0.95, fmt("%zu windows, split %zu/%zu, %d epochs Adam lr %g, final train loss %.4f, "
                             "test accuracy %.4f (>= 0.95)",
                             all.size(), train.size(), test.size(), opts.epochs, opts.learning_rate,
                             result.loss_history.back(), acc)};
}

// ---- 5. Metric oracle equivalence ------------------------------------------------------------

Outcome metric_oracles() {
    Rng rng(5150);
    auto random_map = [&](std::size_t h, std::size_t w) {
        Matrix m(h, w);
        for (auto& v : m.data) v = rng.uniform();
        return m;
    };
    auto random_fix = [&](std::size_t k) {
        saliency::FixationMap f{Matrix(8, 8)};
        for (std::size_t placed = 0; placed < k;) {
            auto& v = f.fixations.data[rng.below(64)];
            if (v == 0.0) v = 1.0, ++placed;
        }
        return f;
    };
    auto ints = [](const saliency::FixationMap& f) {
        std::vector<int> out;
        for (double v : f.fixations.data) out.push_back(v != 0.0);
        return out;
    };
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        Matrix p = random_map(8, 8);
        if (trial % 4 == 0)  // exercise tied predictions too
            for (auto& v : p.data) v = std::floor(v * 4.0) / 4.0;
        const auto t = random_map(8, 8);
        const auto f = random_fix(1 + rng.below(12));
        std::vector<saliency::SaliencyMap> seq;
        std::vector<std::vector<double>> raw;
        const std::size_t n = 2 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) {
            seq.push_back({random_map(8, 8), static_cast<std::int64_t>(i) * 100});
            raw.push_back(seq.back().values.data);
        }
        worst = std::max({worst, std::abs(saliency::metric_auc(p, f) - oracle::auc_judd(p.data, ints(f))),
                          std::abs(saliency::metric_nss(p, f) - oracle::nss(p.data, ints(f))),
                          std::abs(saliency::metric_cc(p, t) - oracle::cc(p.data, t.data)),
                          std::abs(saliency::metric_sim(p, t) - oracle::sim(p.data, t.data)),
                          std::abs(saliency::scene_dynamics(seq).gradient - oracle::temporal_change(raw))});
    }
    // Analytic identities.
    const auto a = random_map(8, 8);
    const auto f = random_fix(5);
    Matrix p22(2, 2);
    p22(0, 0) = 1.0;
    saliency::FixationMap f22{Matrix(2, 2)};
    f22.fixations(0, 0) = 1.0;
    const double id_cc = std::abs(saliency::metric_cc(a, a) - 1.0);
    const double id_sim = std::abs(saliency::metric_sim(a, a) - 1.0);
    const double id_auc = std::abs(saliency::metric_auc(Matrix(8, 8, 0.4), f) - 0.5);
    const double id_nss = std::abs(saliency::metric_nss(a, saliency::FixationMap{Matrix(8, 8, 1.0)}));
    const double id_sqrt3 = std::abs(saliency::metric_nss(p22, f22) - std::sqrt(3.0));
    const bool ids = id_cc < 1e-12 && id_sim < 1e-12 && id_auc < 1e-12 && id_nss < 1e-12 && id_sqrt3 < 1e-12;
    return {worst <= 1e-9 && ids,
            fmt("200 random 8x8 instances, max |metric - oracle| %.2e (<= 1e-9); identities CC=1 %.1e, SIM=1 %.1e, "
                "AUC chance %.1e, NSS all-pixels %.1e, 2x2 NSS sqrt3 %.1e",
                worst, id_cc, id_sim, id_auc, id_nss, id_sqrt3)};
}

// ---- 6. SS-FCN overfit ----------------------------------------------------------------------

Outcome ssfcn_overfit() {
    const auto clips = harness::gen_synthetic_clips(4, 42);
    ssfcn::SsfcnConfig c;  // full 5-block network, Adam lr 1e-3
    c.seed = 1;
    ssfcn::SsfcnTrainer trainer(ssfcn::init_params(c));
    double max_bce = 1e300, min_cc = -1.0;
    int epochs = 0;
    for (; epochs < 200;) {
        for (const auto& s : clips) trainer.step(s.clip, s.truth);
        ++epochs;
        if (epochs % 10 != 0) continue;
        max_bce = 0.0;
        min_cc = 1.0;
        for (const auto& s : clips) {
            const auto pred = ssfcn::ssfcn_forward(trainer.params(), s.clip);
            max_bce = std::max(max_bce, ssfcn::bce(pred.values, s.truth));
            min_cc = std::min(min_cc, saliency::metric_cc(pred.values, s.truth));
        }
        if (max_bce < 0.05 && min_cc > 0.95) break;
    }
    return {max_bce < 0.05 && min_cc > 0.95,
            fmt("4 clips 8x64x64, %d epochs (%d steps), worst per-clip BCE %.4f (< 0.05), worst per-clip CC %.4f "
                "(> 0.95)",
                epochs, epochs * 4, max_bce, min_cc)};
}

// ---- 7. Fusion truth table --------------------------------------------------------------------

// The score × gradient grid has 5 × 5 = 25 cells; every one is checked.

Outcome fusion_truth_table() {
    const fusion::FusionConfig cfg;
    std::size_t matched = 0, total = 0;
    std::string first_miss;
    for (double s : {0.0, 0.3, 0.6, 0.61, 1.0})
        for (double g : {0.0, 0.44, 0.45, 0.46, 1.0}) {
            ++total;
            // Specified table: medium-low is [0, 0.6] (and the gap below 0.61);
            // dynamic is strictly greater than 0.45.
            const bool low = s < 0.61, dynamic = g > 0.45;
            const auto d = fusion::decide({s, 0}, {g, 0}, cfg);
            const bool ok = (d.attention_class == fusion::AttentionClass::medium_low) == low &&
                            (d.scene_class == fusion::SceneClass::dynamic_scene) == dynamic &&
                            d.alert == (low && dynamic);
            if (ok)
                ++matched;
            else if (first_miss.empty())
                first_miss = fmt(" first mismatch at score %.2f gradient %.2f", s, g);
        }
    return {matched == total && total == 25, fmt("%zu/%zu cases match%s", matched, total, first_miss.c_str())};
}

// ---- 8. End-to-end replay determinism -------------------------------------------------------

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome replay_determinism() {
    const fs::path dir = fs::temp_directory_path() / "dap_acceptance_replay";
    fs::remove_all(dir);
    fs::create_directories(dir);
    if (!g_trained_tcn) drowsiness_classification();
    tcn::save_checkpoint(*g_trained_tcn, dir / "tcn.bin");

    harness::RunConfig cfg;
    cfg.seed = 2024;
    harness::GenPpgOptions ppg;
    ppg.duration_s = 60.0;
    ppg.cls = dsp::Label::drowsy;
    harness::cmd_gen_ppg(cfg, ppg, dir / "drowsy.csv");
    ppg.cls = dsp::Label::wakeful;
    harness::cmd_gen_ppg(cfg, ppg, dir / "wakeful.csv");

    // 120 maps at 2 fps cover 0..59.5 s: 20 maps per 10 s window.
    harness::GenClipsOptions clips;
    clips.count = 1;
    clips.spec.frames = 120;
    clips.spec.frame_rate_fps = 2.0;
    clips.spec.blob_sigma_px = 20.0;
    clips.spec.blob_flatness = 4.0;
    clips.spec.motion = harness::BlobMotion::corner_jump;
    harness::cmd_gen_clips(cfg, clips, dir / "dynamic");
    clips.spec.motion = harness::BlobMotion::static_blob;
    harness::cmd_gen_clips(cfg, clips, dir / "static");

    const auto maps_dyn = dir / "dynamic" / "clip_000" / "truth";
    const auto maps_sta = dir / "static" / "clip_000" / "truth";
    const auto r1 = harness::cmd_replay(cfg, dir / "drowsy.csv", maps_dyn, dir / "tcn.bin", dir / "run1.jsonl");
    const auto r2 = harness::cmd_replay(cfg, dir / "drowsy.csv", maps_dyn, dir / "tcn.bin", dir / "run2.jsonl");
    const auto rw = harness::cmd_replay(cfg, dir / "wakeful.csv", maps_sta, dir / "tcn.bin", dir / "wakeful.jsonl");
    const std::string log1 = read_file(dir / "run1.jsonl"), log2 = read_file(dir / "run2.jsonl");
    const bool identical = !log1.empty() && log1 == log2;
    fs::remove_all(dir);
    return {identical && r1.alerts >= 1 && rw.alerts == 0,
            fmt("logs %s (%zu bytes, %zu windows); drowsy+dynamic %zu alerts (>= 1); wakeful+static %zu alerts (== 0)",
                identical ? "byte-identical" : "DIFFER", log1.size(), r1.windows, r1.alerts, rw.alerts)};
    (void)r2;
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "filter bank response", 10.0, filter_bank},
        {2, "TCN causality", 30.0, tcn_causality},
        {3, "gradient checks", 120.0, gradient_checks},
        {4, "synthetic drowsiness classification", 600.0, drowsiness_classification},
        {5, "metric oracle equivalence", 30.0, metric_oracles},
        {6, "SS-FCN overfit", 900.0, ssfcn_overfit},
        {7, "fusion truth table", 1.0, fusion_truth_table},
        {8, "end-to-end replay determinism", 600.0, replay_determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.limit_s;
        const bool pass = o.pass && in_time;
        if (!pass) ++failures;
        std::printf("%s [%d] %s (%.2f s, limit %.0f s%s): %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    c.limit_s, in_time ? "" : ", OVER TIME", o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
