#include <cmath>
#include <cstdio>

#include "dap/error.hpp"
#include "dap/fusion.hpp"

namespace dap::fusion {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v + 0.0);  // + 0.0 folds -0.0 into 0.0
    return buf;
}

}  // namespace

void FusionConfig::validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("fusion.theta must be in (0, 1)");
    if (!(attention_high_min > 0.0 && attention_high_min <= 1.0))
        throw ConfigError("fusion.attention_high_min must be in (0, 1]");
    if (debounce_windows < 1) throw ConfigError("fusion.debounce_windows must be >= 1");
}

const char* to_string(AttentionClass c) { return c == AttentionClass::high ? "high" : "medium_low"; }
const char* to_string(SceneClass c) { return c == SceneClass::dynamic_scene ? "dynamic" : "static"; }

AttentionClass classify_attention(const tcn::AttentionScore& score, const FusionConfig& cfg) {
    if (!(score.value >= 0.0 && score.value <= 1.0))
        throw InvalidArgument("attention score outside [0,1]: " + std::to_string(score.value));
    return score.value >= cfg.attention_high_min ? AttentionClass::high : AttentionClass::medium_low;
}

SceneClass classify_scene(const saliency::SceneDynamics& dyn, const FusionConfig& cfg) {
    if (!(dyn.gradient >= 0.0 && dyn.gradient <= 1.0))
        throw InvalidArgument("scene gradient outside [0,1]: " + std::to_string(dyn.gradient));
    return dyn.gradient > cfg.theta ? SceneClass::dynamic_scene : SceneClass::static_scene;
}

FusionDecision decide(const tcn::AttentionScore& score, const saliency::SceneDynamics& dyn, const FusionConfig& cfg) {
    FusionDecision d;
    d.window_start_ms = score.window_start_ms;
    d.score = score.value;
    d.gradient = dyn.gradient;
    d.attention_class = classify_attention(score, cfg);
    d.scene_class = classify_scene(dyn, cfg);
    d.alert = d.scene_class == SceneClass::dynamic_scene && d.attention_class == AttentionClass::medium_low;
    return d;
}

StreamResult stream_decide(std::span<const WindowPair> pairs, const FusionConfig& cfg) {
    cfg.validate();
    StreamResult out;
    out.decisions.reserve(pairs.size());
    int run = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (p.score.window_start_ms != p.dynamics.window_start_ms)
            throw AlignmentError("pair " + std::to_string(i) + ": score at " + std::to_string(p.score.window_start_ms) +
                                 " ms, scene window at " + std::to_string(p.dynamics.window_start_ms) + " ms");
        if (i > 0 && p.score.window_start_ms <= pairs[i - 1].score.window_start_ms)
            throw AlignmentError("pair " + std::to_string(i) + ": timestamps not strictly increasing");
        const auto d = decide(p.score, p.dynamics, cfg);
        run = d.alert ? run + 1 : 0;
        if (d.alert && run >= cfg.debounce_windows)
            out.events.push_back(AlertEvent{d.window_start_ms, d.score, d.gradient, kAlertReason});
        out.decisions.push_back(d);
    }
    return out;
}

std::string to_json_line(const FusionDecision& d) {
    std::string s = "{\"t_ms\":" + std::to_string(d.window_start_ms);
    s += ", \"score\":" + fixed6(d.score);
    s += ", \"gradient\":" + fixed6(d.gradient);
    s += ", \"attention\":\"" + std::string(to_string(d.attention_class)) + "\"";
    s += ", \"scene\":\"" + std::string(to_string(d.scene_class)) + "\"";
    s += ", \"alert\":" + std::string(d.alert ? "true" : "false") + "}";
    return s;
}

void write_alert_log(std::ostream& os, std::span<const FusionDecision> decisions) {
    for (const auto& d : decisions) os << to_json_line(d) << '\n';
}

CalibrationResult calibrate(std::span<const LabeledWindow> windows, const FusionConfig& base) {
    if (windows.empty()) throw InvalidDataset("calibrate: no labelled windows");
    base.validate();
    CalibrationResult best{base, -1.0};
    double best_dist = 0.0;
    for (int ti = 5; ti <= 95; ++ti) {
        for (int ai = 5; ai <= 100; ++ai) {
            FusionConfig cfg = base;
            cfg.theta = ti / 100.0;
            cfg.attention_high_min = ai / 100.0;
            std::size_t agree = 0;
            for (const auto& w : windows) {
                const bool alert = w.gradient > cfg.theta && w.score < cfg.attention_high_min;
                agree += alert == w.expected_alert ? 1 : 0;
            }
            const double frac = static_cast<double>(agree) / static_cast<double>(windows.size());
            const double dist = std::hypot(cfg.theta - 0.45, cfg.attention_high_min - 0.61);
            if (frac > best.agreement || (frac == best.agreement && dist < best_dist)) {
                best = {cfg, frac};
                best_dist = dist;
            }
        }
    }
    return best;
}

}  // namespace dap::fusion
