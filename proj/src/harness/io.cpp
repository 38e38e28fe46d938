#include "dap/harness/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dap/binio.hpp"
#include "dap/error.hpp"

namespace dap::harness {

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!os) throw IngestError("cannot open " + path.string() + " for writing");
    return os;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return lines;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

// Shortest round-trip representation.
std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed6(double v) {
    if (v == 0.0) v = 0.0;  // collapse -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Two comma-separated fields, with `where` naming file:line for errors.
std::pair<std::string_view, std::string_view> two_fields(std::string_view line, const std::string& where) {
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
        throw IngestError(where + ": expected exactly two comma-separated fields");
    return {line.substr(0, comma), line.substr(comma + 1)};
}

}  // namespace

// ---- PPG CSV --------------------------------------------------------------------

dsp::PpgSeries parse_ppg_csv(const std::string& text, const std::string& source) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "t_ms,value")
        throw IngestError(source + ":1: header must be 't_ms,value'");
    std::vector<double> times, values;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(i + 1);
        const auto [ts, vs] = two_fields(line, where);
        double t = 0, v = 0;
        if (!parse_number(ts, t) || !std::isfinite(t)) throw IngestError(where + ": non-numeric t_ms");
        if (!parse_number(vs, v) || !std::isfinite(v)) throw IngestError(where + ": non-numeric value");
        if (times.size() >= 2) {
            const double step = times[1] - times[0];
            const double expect = times.back() + step;
            if (std::abs(t - expect) > 1e-9 * std::max(1.0, std::abs(t)))
                throw IngestError(where + ": timestamp " + fmt(t) + " breaks the uniform step of " + fmt(step) + " ms");
        } else if (times.size() == 1 && !(t > times[0])) {
            throw IngestError(where + ": timestamps must increase");
        }
        times.push_back(t);
        values.push_back(v);
    }
    if (times.size() < 2) throw IngestError(source + ": need at least two samples to infer the sample rate");
    dsp::PpgSeries s;
    s.sample_rate_hz = 1000.0 / (times[1] - times[0]);
    s.start_time_ms = static_cast<std::int64_t>(std::llround(times[0]));
    s.samples = std::move(values);
    return s;
}

dsp::PpgSeries load_ppg_csv(const fs::path& path) { return parse_ppg_csv(read_text(path), path.string()); }

void save_ppg_csv(const dsp::PpgSeries& series, const fs::path& path) {
    series.validate();
    auto os = open_out(path);
    os << "t_ms,value\n";
    const double step = 1000.0 / series.sample_rate_hz;
    for (std::size_t i = 0; i < series.samples.size(); ++i)
        os << fmt(static_cast<double>(series.start_time_ms) + static_cast<double>(i) * step) << ','
           << fmt(series.samples[i]) << '\n';
    if (!os) throw IngestError("failed writing " + path.string());
}

// ---- CSV writers ------------------------------------------------------------------

void save_taps_csv(std::span<const double> taps, const fs::path& path) {
    auto os = open_out(path);
    os << "idx,tap\n";
    for (std::size_t i = 0; i < taps.size(); ++i) os << i << ',' << fmt(taps[i]) << '\n';
}

void save_loss_csv(std::span<const double> loss_history, const fs::path& path) {
    auto os = open_out(path);
    os << "epoch,loss\n";
    for (std::size_t i = 0; i < loss_history.size(); ++i) os << i + 1 << ',' << fmt(loss_history[i]) << '\n';
}

void save_metrics_csv(std::span<const MetricRow> rows, const fs::path& path) {
    auto os = open_out(path);
    os << "frame,auc,nss,cc,sim\n";
    for (const auto& r : rows)
        os << r.frame << ',' << fixed6(r.auc) << ',' << fixed6(r.nss) << ',' << fixed6(r.cc) << ',' << fixed6(r.sim)
           << '\n';
}

// ---- Netpbm -------------------------------------------------------------------------

ssfcn::RawFrame read_pnm(const fs::path& path) {
    const std::string data = read_text(path);
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* what) {
        skip_ws();
        std::size_t v = 0;
        const auto res = std::from_chars(data.data() + pos, data.data() + data.size(), v);
        if (res.ec != std::errc{}) throw IngestError(path.string() + ": bad " + what + " in header");
        pos = static_cast<std::size_t>(res.ptr - data.data());
        return v;
    };
    if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '6'))
        throw IngestError(path.string() + ": not a binary PGM (P5) or PPM (P6) file");
    pos = 2;
    ssfcn::RawFrame f;
    f.channels = data[1] == '5' ? 1 : 3;
    f.width = read_uint("width");
    f.height = read_uint("height");
    const std::size_t maxval = read_uint("maxval");
    if (f.width == 0 || f.height == 0) throw IngestError(path.string() + ": empty image");
    if (maxval == 0 || maxval > 255) throw IngestError(path.string() + ": only 8-bit images are supported");
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
        throw IngestError(path.string() + ": malformed header");
    ++pos;
    const std::size_t n = f.width * f.height * f.channels;
    if (data.size() - pos != n) throw IngestError(path.string() + ": pixel data size does not match header");
    f.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::uint8_t>(data[pos + i]);
        f.pixels[i] = maxval == 255 ? v : static_cast<std::uint8_t>(std::lround(255.0 * std::min<std::size_t>(v, maxval) / maxval));
    }
    return f;
}

void write_pnm(const ssfcn::RawFrame& frame, const fs::path& path) {
    if (frame.channels != 1 && frame.channels != 3) throw InvalidArgument("write_pnm: channels must be 1 or 3");
    if (frame.pixels.size() != frame.width * frame.height * frame.channels)
        throw InvalidArgument("write_pnm: pixel buffer size mismatch");
    auto os = open_out(path, true);
    os << (frame.channels == 1 ? "P5" : "P6") << '\n' << frame.width << ' ' << frame.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(frame.pixels.data()), static_cast<std::streamsize>(frame.pixels.size()));
    if (!os) throw IngestError("failed writing " + path.string());
}

ssfcn::RawFrame quantize(const Matrix& m) {
    ssfcn::RawFrame f{m.rows, m.cols, 1, std::vector<std::uint8_t>(m.data.size())};
    for (std::size_t i = 0; i < m.data.size(); ++i)
        f.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(m.data[i], 0.0, 1.0) * 255.0));
    return f;
}

std::string frame_name(std::size_t index, bool color) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.%s", index, color ? "ppm" : "pgm");
    return buf;
}

std::vector<ssfcn::RawFrame> load_frames_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IngestError("frames directory not found: " + dir.string());
    std::vector<ssfcn::RawFrame> frames;
    for (std::size_t i = 0;; ++i) {
        const auto gray = dir / frame_name(i, false), color = dir / frame_name(i, true);
        if (fs::exists(gray))
            frames.push_back(read_pnm(gray));
        else if (fs::exists(color))
            frames.push_back(read_pnm(color));
        else
            break;
    }
    if (frames.empty()) throw IngestError("no frame_000000.pgm/.ppm in " + dir.string());
    return frames;
}

// ---- f64 sidecars -------------------------------------------------------------------

void write_f64(const Matrix& m, const fs::path& path) {
    auto os = open_out(path, true);
    binio::put_f64s(os, m.data);
    if (!os) throw IngestError("failed writing " + path.string());
}

Matrix read_f64(const fs::path& path, std::size_t rows, std::size_t cols) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("cannot open " + path.string());
    Matrix m(rows, cols);
    try {
        binio::get_f64s(is, m.data);
    } catch (const IngestError&) {
        throw IngestError(path.string() + ": sidecar shorter than " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw IngestError(path.string() + ": sidecar longer than " + std::to_string(rows) + "x" + std::to_string(cols));
    return m;
}

// ---- Map directories ------------------------------------------------------------------

std::string map_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "map_%06zu", index);
    return buf;
}

std::string fix_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fix_%06zu.pgm", index);
    return buf;
}

void write_map(const fs::path& dir, std::size_t index, const Matrix& values) {
    write_pnm(quantize(values), dir / (map_name(index) + ".pgm"));
    write_f64(values, dir / (map_name(index) + ".f64"));
}

void write_fixations(const fs::path& dir, std::size_t index, const saliency::FixationMap& fix) {
    ssfcn::RawFrame f{fix.fixations.rows, fix.fixations.cols, 1, std::vector<std::uint8_t>(fix.fixations.data.size())};
    for (std::size_t i = 0; i < f.pixels.size(); ++i) f.pixels[i] = fix.fixations.data[i] != 0.0 ? 255 : 0;
    write_pnm(f, dir / fix_name(index));
}

void write_manifest(const fs::path& dir, const std::vector<std::pair<std::size_t, std::int64_t>>& entries) {
    auto os = open_out(dir / "maps.csv");
    os << "frame,t_ms\n";
    for (const auto& [frame, t] : entries) os << frame << ',' << t << '\n';
}

std::vector<MapEntry> load_maps_dir(const fs::path& dir) {
    const auto manifest = dir / "maps.csv";
    const std::string text = read_text(manifest);
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "frame,t_ms")
        throw IngestError(manifest.string() + ":1: header must be 'frame,t_ms'");
    std::vector<MapEntry> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const std::string where = manifest.string() + ":" + std::to_string(i + 1);
        const auto [fs_, ts] = two_fields(line, where);
        std::size_t frame = 0;
        std::int64_t t = 0;
        if (!parse_number(fs_, frame)) throw IngestError(where + ": bad frame index");
        if (!parse_number(ts, t)) throw IngestError(where + ": bad t_ms");
        if (!out.empty() && t <= out.back().map.frame_ms) throw IngestError(where + ": t_ms must strictly increase");
        const auto pgm = read_pnm(dir / (map_name(frame) + ".pgm"));
        if (pgm.channels != 1) throw IngestError(where + ": map must be a grayscale PGM");
        Matrix values(pgm.height, pgm.width);
        const auto sidecar = dir / (map_name(frame) + ".f64");
        if (fs::exists(sidecar)) {
            values = read_f64(sidecar, pgm.height, pgm.width);
        } else {
            for (std::size_t k = 0; k < values.data.size(); ++k) values.data[k] = pgm.pixels[k] / 255.0;
        }
        saliency::SaliencyMap map{std::move(values), t};
        try {
            map.validate();
        } catch (const Error& e) {
            throw IngestError(where + ": " + e.what());
        }
        if (!out.empty() && (map.values.rows != out.front().map.values.rows || map.values.cols != out.front().map.values.cols))
            throw IngestError(where + ": map size differs from the first map");
        out.push_back({frame, std::move(map)});
    }
    if (out.empty()) throw IngestError(manifest.string() + ": no maps listed");
    return out;
}

saliency::FixationMap load_fixations(const fs::path& dir, std::size_t index) {
    const auto f = read_pnm(dir / fix_name(index));
    if (f.channels != 1) throw IngestError((dir / fix_name(index)).string() + ": fixation map must be grayscale");
    saliency::FixationMap fix{Matrix(f.height, f.width)};
    for (std::size_t i = 0; i < f.pixels.size(); ++i) fix.fixations.data[i] = f.pixels[i] != 0 ? 1.0 : 0.0;
    return fix;
}

}  // namespace dap::harness
