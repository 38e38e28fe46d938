#pragma once

// File formats used by the command-line harness. Every reader throws
// IngestError (with the path and, for text files, the 1-based line number)
// on malformed input.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dap/matrix.hpp"
#include "dap/ppg_dsp.hpp"
#include "dap/saliency_eval.hpp"
#include "dap/ssfcn.hpp"

namespace dap::harness {

namespace fs = std::filesystem;

// ---- PPG CSV: header `t_ms,value`, constant timestamp step --------------------

/// Sample rate is inferred from the first step (1000 / step_ms). Any later
/// step that differs from the first is rejected.
dsp::PpgSeries load_ppg_csv(const fs::path& path);
dsp::PpgSeries parse_ppg_csv(const std::string& text, const std::string& source = "<memory>");
void save_ppg_csv(const dsp::PpgSeries& series, const fs::path& path);

// ---- Small CSV writers ---------------------------------------------------------

void save_taps_csv(std::span<const double> taps, const fs::path& path);         ///< `idx,tap`
void save_loss_csv(std::span<const double> loss_history, const fs::path& path);  ///< `epoch,loss` (1-based)

struct MetricRow {
    std::size_t frame = 0;
    double auc = 0, nss = 0, cc = 0, sim = 0;
};
void save_metrics_csv(std::span<const MetricRow> rows, const fs::path& path);  ///< `frame,auc,nss,cc,sim`

// ---- Netpbm images --------------------------------------------------------------

/// Reads binary PGM (P5) or PPM (P6) with maxval ≤ 255.
ssfcn::RawFrame read_pnm(const fs::path& path);
void write_pnm(const ssfcn::RawFrame& frame, const fs::path& path);

/// Values in [0,1] → PGM with round(v·255).
ssfcn::RawFrame quantize(const Matrix& m);

/// Consecutive `frame_%06d.pgm` (or `.ppm`) from index 0 until the first gap.
std::vector<ssfcn::RawFrame> load_frames_dir(const fs::path& dir);
std::string frame_name(std::size_t index, bool color = false);

// ---- Raw f64 sidecars -------------------------------------------------------------

void write_f64(const Matrix& m, const fs::path& path);
Matrix read_f64(const fs::path& path, std::size_t rows, std::size_t cols);

// ---- Map directories ----------------------------------------------------------------
//
// A map directory holds `maps.csv` (header `frame,t_ms`), and per listed
// frame index i: `map_%06d.pgm` (round(v·255)) and the lossless
// `map_%06d.f64` sidecar. Optional `fix_%06d.pgm` files hold fixations
// (nonzero = fixation). Readers prefer the sidecar when present.

std::string map_name(std::size_t index);  ///< "map_%06d" (no extension)
std::string fix_name(std::size_t index);  ///< "fix_%06d.pgm"

struct MapEntry {
    std::size_t frame = 0;
    saliency::SaliencyMap map;
};

void write_map(const fs::path& dir, std::size_t index, const Matrix& values);
void write_fixations(const fs::path& dir, std::size_t index, const saliency::FixationMap& fix);
void write_manifest(const fs::path& dir, const std::vector<std::pair<std::size_t, std::int64_t>>& entries);

/// Loads every map listed in the manifest; timestamps must strictly increase.
std::vector<MapEntry> load_maps_dir(const fs::path& dir);
saliency::FixationMap load_fixations(const fs::path& dir, std::size_t index);

}  // namespace dap::harness
