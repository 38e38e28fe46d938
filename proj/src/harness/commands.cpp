#include "dap/harness/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dap/error.hpp"
#include "dap/rng.hpp"

namespace dap::harness {

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::ofstream create(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IngestError("cannot create " + path.string());
    return os;
}

std::string trimmed(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Data rows of a CSV file with the given header, split on commas; each row
// keeps its 1-based line number for error messages.
struct CsvRow {
    std::size_t line;
    std::vector<std::string> fields;
};
std::vector<CsvRow> read_csv(const fs::path& path, const std::string& header) {
    std::istringstream in(slurp(path));
    std::string raw;
    std::vector<CsvRow> rows;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trimmed(raw);
        if (lineno == 1) {
            if (line != header) throw IngestError(path.string() + ":1: header must be '" + header + "'");
            continue;
        }
        if (line.empty()) continue;
        CsvRow row{lineno, {}};
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.fields.push_back(trimmed(field));
        const auto expected = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
        if (row.fields.size() != expected)
            throw IngestError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(expected) +
                              " fields");
        rows.push_back(std::move(row));
    }
    if (lineno == 0) throw IngestError(path.string() + ": empty file");
    return rows;
}

double to_double(const std::string& s, const fs::path& path, std::size_t line) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw IngestError(path.string() + ":" + std::to_string(line) + ": '" + s + "' is not a number");
    return v;
}

std::string numbered(const char* pattern, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, i);
    return buf;
}

const char* label_name(dsp::Label l) { return l == dsp::Label::drowsy ? "drowsy" : "wakeful"; }

// Centre crop or zero pad to rows x cols with the offsets preprocess_clip uses.
Matrix fit_to(const Matrix& m, std::size_t rows, std::size_t cols) {
    if (m.rows == rows && m.cols == cols) return m;
    Matrix out(rows, cols);
    const auto oh = (static_cast<std::ptrdiff_t>(m.rows) - static_cast<std::ptrdiff_t>(rows)) / 2;
    const auto ow = (static_cast<std::ptrdiff_t>(m.cols) - static_cast<std::ptrdiff_t>(cols)) / 2;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const auto sr = static_cast<std::ptrdiff_t>(r) + oh, sc = static_cast<std::ptrdiff_t>(c) + ow;
            if (sr >= 0 && sc >= 0 && sr < static_cast<std::ptrdiff_t>(m.rows) && sc < static_cast<std::ptrdiff_t>(m.cols))
                out(r, c) = m(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
        }
    return out;
}

std::vector<fs::path> clip_dirs(const fs::path& root) {
    if (!fs::is_directory(root)) throw IngestError(root.string() + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && e.path().filename().string().starts_with("clip_")) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw IngestError(root.string() + ": no clip_* directories");
    return out;
}

}  // namespace

Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (n == 0) throw InvalidDataset("cannot split an empty dataset");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must be in (0, 1)");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return s;
}

// ---- gen-ppg ------------------------------------------------------------------------------

std::size_t cmd_gen_ppg(const RunConfig& cfg, const GenPpgOptions& opts, const fs::path& out) {
    if (opts.per_class == 0) {
        const auto spec = SyntheticPpgSpec::preset(opts.cls, opts.duration_s, derive_seed(cfg.seed, "ppg"));
        save_ppg_csv(gen_synthetic_ppg(spec).series, out);
        return 1;
    }
    fs::create_directories(out);
    auto labels = create(out / "labels.csv");
    labels << "file,label\n";
    std::size_t k = 0;
    for (const auto cls : {dsp::Label::drowsy, dsp::Label::wakeful})
        for (std::size_t i = 0; i < opts.per_class; ++i, ++k) {
            const auto spec =
                SyntheticPpgSpec::preset(cls, opts.duration_s, derive_seed(cfg.seed, "ppg/" + std::to_string(k)));
            const std::string name = numbered("rec_%04zu.csv", k);
            save_ppg_csv(gen_synthetic_ppg(spec).series, out / name);
            labels << name << ',' << label_name(cls) << '\n';
        }
    return k;
}

// ---- gen-clips ----------------------------------------------------------------------------

std::size_t cmd_gen_clips(const RunConfig& cfg, const GenClipsOptions& opts, const fs::path& out) {
    opts.spec.validate();
    for (std::size_t i = 0; i < opts.count; ++i) {
        SyntheticClipSpec spec = opts.spec;
        spec.seed = derive_seed(cfg.seed, "clip/" + std::to_string(i));
        const auto clip = gen_synthetic_clip(spec);
        const fs::path dir = out / numbered("clip_%03zu", i);
        fs::create_directories(dir / "frames");
        fs::create_directories(dir / "truth");
        std::vector<std::pair<std::size_t, std::int64_t>> manifest;
        for (std::size_t t = 0; t < spec.frames; ++t) {
            Matrix frame(spec.height, spec.width);
            for (std::size_t h = 0; h < spec.height; ++h)
                for (std::size_t w = 0; w < spec.width; ++w) frame(h, w) = clip.clip.at(t, h, w);
            write_pnm(quantize(frame), dir / "frames" / frame_name(t));
            write_map(dir / "truth", t, clip.frame_truth[t]);
            write_fixations(dir / "truth", t, clip.frame_fixations[t]);
            manifest.emplace_back(t, std::llround(static_cast<double>(t) * 1000.0 / spec.frame_rate_fps));
        }
        write_manifest(dir / "truth", manifest);
    }
    return opts.count;
}

// ---- filter ---------------------------------------------------------------------------------

void cmd_filter(const RunConfig& cfg, const fs::path& ppg_csv, const fs::path& out_dir) {
    const auto raw = load_ppg_csv(ppg_csv);
    const auto low = dsp::decimate(raw, cfg.dsp.decimate_factor, cfg.dsp.fir_order);
    const auto bank = dsp::build_filter_bank(low.sample_rate_hz, cfg.dsp.fir_order);
    fs::create_directories(out_dir);
    for (std::size_t c = 0; c < bank.channels.size(); ++c)
        save_taps_csv(dsp::channel_taps(bank, c), out_dir / numbered("taps_%02zu.csv", c));
    const Matrix m = dsp::apply_filter_bank(low, bank);
    auto os = create(out_dir / "filtered.csv");
    os << "t_ms";
    for (std::size_t c = 0; c < m.rows; ++c) os << ',' << numbered("ch%02zu", c);
    os << '\n';
    char buf[32];
    for (std::size_t t = 0; t < m.cols; ++t) {
        os << low.time_ms(t);
        for (std::size_t c = 0; c < m.rows; ++c) {
            const auto res = std::to_chars(buf, buf + sizeof buf, m(c, t));
            os << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        os << '\n';
    }
    if (!os) throw IngestError("failed writing " + (out_dir / "filtered.csv").string());
}

// ---- train-tcn ----------------------------------------------------------------------------

std::vector<dsp::HyperPatternWindow> load_ppg_dataset(const RunConfig& cfg, const fs::path& data_dir) {
    const auto labels = data_dir / "labels.csv";
    std::vector<dsp::HyperPatternWindow> windows;
    for (const auto& row : read_csv(labels, "file,label")) {
        dsp::Label label;
        if (row.fields[1] == "drowsy")
            label = dsp::Label::drowsy;
        else if (row.fields[1] == "wakeful")
            label = dsp::Label::wakeful;
        else
            throw IngestError(labels.string() + ":" + std::to_string(row.line) + ": label must be drowsy|wakeful");
        auto w = ppg_to_windows(load_ppg_csv(data_dir / row.fields[0]), cfg.dsp, label);
        windows.insert(windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    if (windows.empty()) throw InvalidDataset(labels.string() + ": recordings produced no windows");
    return windows;
}

TrainTcnSummary cmd_train_tcn(const RunConfig& cfg, const fs::path& data_dir, const fs::path& checkpoint) {
    const auto windows = load_ppg_dataset(cfg, data_dir);
    const auto split = split_indices(windows.size(), cfg.train_fraction, derive_seed(cfg.seed, "split"));
    std::vector<dsp::HyperPatternWindow> train, test;
    for (auto i : split.train) train.push_back(windows[i]);
    for (auto i : split.test) test.push_back(windows[i]);
    if (train.empty()) throw InvalidDataset("training split is empty");

    tcn::TrainOptions opts;
    opts.epochs = static_cast<int>(cfg.tcn_train.epochs);
    opts.learning_rate = cfg.tcn_train.learning_rate;
    opts.batch_size = cfg.tcn_train.batch_size;
    opts.seed = derive_seed(cfg.seed, "tcn.train");
    opts.optimizer = cfg.tcn_train.optimizer;
    const auto result = tcn::train(tcn::init_params(cfg.effective_tcn()), train, opts);

    tcn::save_checkpoint(result.params, checkpoint);
    save_loss_csv(result.loss_history, fs::path(checkpoint.string() + ".loss.csv"));
    TrainTcnSummary s;
    s.train_windows = train.size();
    s.test_windows = test.size();
    s.final_loss = result.loss_history.empty() ? 0.0 : result.loss_history.back();
    s.test_accuracy = test.empty() ? 0.0 : tcn::accuracy(result.params, test);
    return s;
}

// ---- train-ssfcn --------------------------------------------------------------------------

std::vector<TrainingSample> load_clip_dataset(const RunConfig& cfg, const fs::path& clips_dir) {
    const auto& sc = cfg.ssfcn;
    std::vector<TrainingSample> out;
    for (const auto& dir : clip_dirs(clips_dir)) {
        const auto frames = load_frames_dir(dir / "frames");
        std::map<std::size_t, const saliency::SaliencyMap*> truth_by_frame;
        const auto truth = load_maps_dir(dir / "truth");
        for (const auto& e : truth) truth_by_frame[e.frame] = &e.map;

        std::vector<ssfcn::VideoClip> clips;
        try {
            clips = ssfcn::preprocess_clip(frames, sc.clip_len, sc.spatial_divisor());
        } catch (const IngestError& e) {
            throw IngestError(dir.string() + ": " + e.what());
        }
        const std::size_t hop = std::max<std::size_t>(1, sc.clip_len / 2);
        for (std::size_t k = 0; k < clips.size(); ++k) {
            const std::size_t last = k * hop + sc.clip_len - 1;
            const auto it = truth_by_frame.find(last);
            if (it == truth_by_frame.end())
                throw IngestError(dir.string() + ": no truth map for frame " + std::to_string(last));
            if (clips[k].C != sc.input_channels)
                throw IngestError(dir.string() + ": frames have " + std::to_string(clips[k].C) +
                                  " channels, ssfcn.input_channels is " + std::to_string(sc.input_channels));
            Matrix target = fit_to(it->second->values, clips[k].H, clips[k].W);
            out.push_back({std::move(clips[k]), std::move(target)});
        }
    }
    return out;
}

TrainSsfcnSummary cmd_train_ssfcn(const RunConfig& cfg, const fs::path& clips_dir, const fs::path& checkpoint) {
    const auto samples = load_clip_dataset(cfg, clips_dir);
    if (samples.empty()) throw InvalidDataset("no training samples");
    const auto mcfg = cfg.effective_ssfcn();
    ssfcn::SsfcnTrainer trainer(ssfcn::init_params(mcfg));
    Rng rng(derive_seed(cfg.seed, "ssfcn.shuffle"));
    std::vector<std::size_t> order(samples.size());
    std::vector<double> history;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t e = 0; e < cfg.ssfcn_epochs; ++e) {
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
        double sum = 0.0;
        for (auto i : order) sum += trainer.step(samples[i].clip, samples[i].target);
        history.push_back(sum / static_cast<double>(order.size()));
    }
    ssfcn::save_checkpoint(trainer.params(), checkpoint);
    save_loss_csv(history, fs::path(checkpoint.string() + ".loss.csv"));
    return {samples.size(), history.back()};
}

// ---- eval-saliency ------------------------------------------------------------------------

void cmd_predict_saliency(const fs::path& checkpoint, const fs::path& clip_dir, const fs::path& pred_dir) {
    const auto params = ssfcn::load_checkpoint(checkpoint);
    const auto& sc = params.config;
    const auto frames = load_frames_dir(clip_dir / "frames");
    const auto clips = ssfcn::preprocess_clip(frames, sc.clip_len, sc.spatial_divisor());
    const std::size_t hop = std::max<std::size_t>(1, sc.clip_len / 2);
    fs::create_directories(pred_dir);
    std::vector<std::pair<std::size_t, std::int64_t>> manifest;
    for (std::size_t k = 0; k < clips.size(); ++k) {
        const auto map = ssfcn::ssfcn_forward(params, clips[k]);
        const std::size_t frame = k * hop + sc.clip_len - 1;
        write_map(pred_dir, frame, map.values);
        manifest.emplace_back(frame, map.frame_ms);
    }
    write_manifest(pred_dir, manifest);
}

std::vector<MetricRow> cmd_eval_saliency(const fs::path& pred_dir, const fs::path& truth_dir, const fs::path& out_csv) {
    const auto preds = load_maps_dir(pred_dir);
    const auto truth = load_maps_dir(truth_dir);
    std::map<std::size_t, const saliency::SaliencyMap*> by_frame;
    for (const auto& e : truth) by_frame[e.frame] = &e.map;
    std::vector<MetricRow> rows;
    for (const auto& p : preds) {
        const auto it = by_frame.find(p.frame);
        if (it == by_frame.end()) continue;
        const auto fix = load_fixations(truth_dir, p.frame);
        MetricRow r;
        r.frame = p.frame;
        r.auc = saliency::metric_auc(p.map.values, fix);
        r.nss = saliency::metric_nss(p.map.values, fix);
        r.cc = saliency::metric_cc(p.map.values, it->second->values);
        r.sim = saliency::metric_sim(p.map.values, it->second->values);
        rows.push_back(r);
    }
    if (rows.empty()) throw AlignmentError("no predicted frame has a matching truth map");
    save_metrics_csv(rows, out_csv);
    return rows;
}

// ---- replay -------------------------------------------------------------------------------

ReplaySummary cmd_replay(const RunConfig& cfg, const fs::path& ppg_csv, const fs::path& maps_dir,
                         const fs::path& tcn_checkpoint, const fs::path& out_log) {
    const auto raw = load_ppg_csv(ppg_csv);
    const auto maps = load_maps_dir(maps_dir);
    const auto params = tcn::load_checkpoint(tcn_checkpoint);
    if (params.config.input_channels != static_cast<int>(dsp::kBankChannels))
        throw ConfigError("tcn checkpoint expects " + std::to_string(params.config.input_channels) +
                          " input channels, the filter bank produces " + std::to_string(dsp::kBankChannels));

    const std::int64_t rec_begin = raw.start_time_ms;
    const std::int64_t rec_end = raw.time_ms(raw.size() - 1);
    const std::int64_t map_begin = maps.front().map.frame_ms, map_end = maps.back().map.frame_ms;
    if (map_begin < rec_begin || map_end > rec_end)
        throw AlignmentError("saliency maps span [" + std::to_string(map_begin) + ", " + std::to_string(map_end) +
                             "] ms, outside the PPG recording [" + std::to_string(rec_begin) + ", " +
                             std::to_string(rec_end) + "] ms");

    const auto windows = ppg_to_windows(raw, cfg.dsp);
    const auto window_ms = static_cast<std::int64_t>(std::llround(cfg.dsp.window_len_s * 1000.0));
    std::vector<fusion::WindowPair> pairs;
    for (const auto& w : windows) {
        const std::int64_t lo = w.window_start_ms, hi = lo + window_ms;
        std::vector<saliency::SaliencyMap> inside;
        for (const auto& m : maps)
            if (m.map.frame_ms >= lo && m.map.frame_ms < hi) inside.push_back(m.map);
        if (inside.empty()) continue;
        if (inside.size() == 1)
            throw AlignmentError("window starting at " + std::to_string(lo) +
                                 " ms holds a single saliency map; scene dynamics needs at least two");
        auto dyn = saliency::scene_dynamics(inside);
        dyn.window_start_ms = lo;
        auto score = tcn::predict_score(params, w);
        score.window_start_ms = lo;
        pairs.push_back({score, dyn});
    }
    if (pairs.empty()) throw AlignmentError("no PPG window overlaps the saliency maps");

    const auto result = fusion::stream_decide(pairs, cfg.fusion);
    auto os = create(out_log);
    fusion::write_alert_log(os, result.decisions);
    if (!os) throw IngestError("failed writing " + out_log.string());
    ReplaySummary s;
    s.windows = result.decisions.size();
    s.alerts = static_cast<std::size_t>(
        std::count_if(result.decisions.begin(), result.decisions.end(), [](const auto& d) { return d.alert; }));
    s.events = result.events.size();
    return s;
}

// ---- calibrate ----------------------------------------------------------------------------

fusion::CalibrationResult cmd_calibrate(const RunConfig& cfg, const fs::path& labeled_csv, const fs::path& out) {
    std::vector<fusion::LabeledWindow> windows;
    for (const auto& row : read_csv(labeled_csv, "score,gradient,expected_alert")) {
        fusion::LabeledWindow w;
        w.score = to_double(row.fields[0], labeled_csv, row.line);
        w.gradient = to_double(row.fields[1], labeled_csv, row.line);
        if (row.fields[2] != "0" && row.fields[2] != "1")
            throw IngestError(labeled_csv.string() + ":" + std::to_string(row.line) + ": expected_alert must be 0 or 1");
        w.expected_alert = row.fields[2] == "1";
        windows.push_back(w);
    }
    const auto result = fusion::calibrate(windows, cfg.fusion);
    auto os = create(out);
    char buf[160];
    std::snprintf(buf, sizeof buf, "# agreement %.6f over %zu windows\nfusion.theta = %.2f\nfusion.attention_high_min = %.2f\n",
                  result.agreement, windows.size(), result.config.theta, result.config.attention_high_min);
    os << buf;
    return result;
}

}  // namespace dap::harness
