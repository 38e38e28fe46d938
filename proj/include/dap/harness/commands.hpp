#pragma once

// The operations behind each `dapctl` subcommand. They take a resolved
// RunConfig plus per-command options, write their artefacts and return a
// small summary; failures surface as IngestError, AlignmentError,
// ConfigError or another dap::Error.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dap/harness/config.hpp"
#include "dap/harness/io.hpp"
#include "dap/harness/synthetic.hpp"

namespace dap::harness {

namespace fs = std::filesystem;

/// Deterministic Fisher–Yates permutation of 0..n-1 split into the first
/// llround(n·train_fraction) indices (train) and the rest (test).
struct Split {
    std::vector<std::size_t> train, test;
};
Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

// ---- gen-ppg --------------------------------------------------------------------------

struct GenPpgOptions {
    dsp::Label cls = dsp::Label::wakeful;  ///< single-recording mode
    double duration_s = 60.0;
    /// When > 0, writes a dataset directory: `per_class` recordings of each
    /// class as rec_%04d.csv plus labels.csv (`file,label`).
    std::size_t per_class = 0;
};
/// Returns the number of recordings written.
std::size_t cmd_gen_ppg(const RunConfig& cfg, const GenPpgOptions& opts, const fs::path& out);

// ---- gen-clips ------------------------------------------------------------------------

struct GenClipsOptions {
    std::size_t count = 4;
    SyntheticClipSpec spec;  ///< seed is replaced per clip
};
/// Writes clip_%03d/frames/frame_%06d.pgm and clip_%03d/truth/{maps.csv,
/// map_%06d.pgm, map_%06d.f64, fix_%06d.pgm}. Frame i of a clip is stamped
/// round(i·1000/fps) ms.
std::size_t cmd_gen_clips(const RunConfig& cfg, const GenClipsOptions& opts, const fs::path& out);

// ---- filter ---------------------------------------------------------------------------

/// Decimates and filters one recording. Writes taps_%02d.csv per bank
/// channel (cascaded stages convolved into one kernel) and filtered.csv
/// (`t_ms,ch00,...,ch21`, decimated rate).
void cmd_filter(const RunConfig& cfg, const fs::path& ppg_csv, const fs::path& out_dir);

// ---- train-tcn ------------------------------------------------------------------------

struct TrainTcnSummary {
    std::size_t train_windows = 0, test_windows = 0;
    double final_loss = 0.0;
    double test_accuracy = 0.0;
};
/// Reads `data_dir/labels.csv`, windows every recording, splits the windows
/// with split.train_fraction, trains and writes the checkpoint plus
/// `<checkpoint>.loss.csv`.
TrainTcnSummary cmd_train_tcn(const RunConfig& cfg, const fs::path& data_dir, const fs::path& checkpoint);

/// Labelled windows of every recording listed in `data_dir/labels.csv`.
std::vector<dsp::HyperPatternWindow> load_ppg_dataset(const RunConfig& cfg, const fs::path& data_dir);

// ---- train-ssfcn ----------------------------------------------------------------------

struct TrainingSample {
    ssfcn::VideoClip clip;
    Matrix target;
};
/// Every clip_*/ directory under `clips_dir`, cut into ssfcn.clip_len
/// windows; each target is the truth map of the window's last frame.
std::vector<TrainingSample> load_clip_dataset(const RunConfig& cfg, const fs::path& clips_dir);

struct TrainSsfcnSummary {
    std::size_t samples = 0;
    double final_loss = 0.0;
};
TrainSsfcnSummary cmd_train_ssfcn(const RunConfig& cfg, const fs::path& clips_dir, const fs::path& checkpoint);

// ---- eval-saliency --------------------------------------------------------------------

/// Scores every predicted map whose frame index also appears in the truth
/// directory; returns the rows written to `out_csv`.
std::vector<MetricRow> cmd_eval_saliency(const fs::path& pred_dir, const fs::path& truth_dir, const fs::path& out_csv);

/// Runs a checkpoint over one clip directory, writes the predictions
/// (map directory) to `pred_dir`.
void cmd_predict_saliency(const fs::path& checkpoint, const fs::path& clip_dir, const fs::path& pred_dir);

// ---- replay ---------------------------------------------------------------------------

struct ReplaySummary {
    std::size_t windows = 0;  ///< aligned windows (one log line each)
    std::size_t alerts = 0;   ///< decisions with alert = true
    std::size_t events = 0;   ///< debounced alert events
};
/// Scores every PPG window with the TCN and pairs it with the scene dynamics
/// of the maps stamped inside [start, start + window length). Windows with no
/// maps are skipped; a window holding a single map, a map range outside the
/// recording, or no aligned window at all raises AlignmentError.
ReplaySummary cmd_replay(const RunConfig& cfg, const fs::path& ppg_csv, const fs::path& maps_dir,
                         const fs::path& tcn_checkpoint, const fs::path& out_log);

// ---- calibrate ------------------------------------------------------------------------

/// Reads `score,gradient,expected_alert` rows (expected_alert 0/1), grid
/// searches the fusion thresholds and writes them as config lines.
fusion::CalibrationResult cmd_calibrate(const RunConfig& cfg, const fs::path& labeled_csv, const fs::path& out);

}  // namespace dap::harness
