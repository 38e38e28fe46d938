#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dap/saliency_eval.hpp"
#include "dap/tcn.hpp"

namespace dap::fusion {

struct FusionConfig {
    double theta = 0.45;               ///< scene is dynamic when gradient > theta
    double attention_high_min = 0.61;  ///< attention is high when score >= this
    int debounce_windows = 1;          ///< consecutive alert windows before an event

    void validate() const;
};

enum class AttentionClass { medium_low, high };
enum class SceneClass { static_scene, dynamic_scene };

const char* to_string(AttentionClass c);
const char* to_string(SceneClass c);

struct FusionDecision {
    std::int64_t window_start_ms = 0;
    double score = 0.0;
    double gradient = 0.0;
    AttentionClass attention_class = AttentionClass::high;
    SceneClass scene_class = SceneClass::static_scene;
    bool alert = false;  ///< dynamic scene and medium-low attention
};

inline constexpr const char* kAlertReason = "attention below scenario requirement";

struct AlertEvent {
    std::int64_t window_start_ms = 0;
    double score = 0.0;
    double gradient = 0.0;
    std::string reason = kAlertReason;
};

/// Scores in [0, 0.6] are medium-low and scores >= attention_high_min are
/// high; with the default 0.61 the (0.6, 0.61) gap falls to medium-low.
AttentionClass classify_attention(const tcn::AttentionScore& score, const FusionConfig& cfg);

/// Strictly greater than theta is dynamic; equality is static.
SceneClass classify_scene(const saliency::SceneDynamics& dyn, const FusionConfig& cfg);

FusionDecision decide(const tcn::AttentionScore& score, const saliency::SceneDynamics& dyn, const FusionConfig& cfg);

struct WindowPair {
    tcn::AttentionScore score;
    saliency::SceneDynamics dynamics;
};

struct StreamResult {
    std::vector<FusionDecision> decisions;
    std::vector<AlertEvent> events;
};

/// One decision per pair; an event fires for every alert decision that
/// completes a run of at least `debounce_windows` consecutive alerts.
/// Pairs must carry equal timestamps and strictly increase in time.
StreamResult stream_decide(std::span<const WindowPair> pairs, const FusionConfig& cfg);

/// One JSON object per decision, fixed key order, six-decimal floats.
std::string to_json_line(const FusionDecision& d);
void write_alert_log(std::ostream& os, std::span<const FusionDecision> decisions);

/// A replayed window with the alert verdict it should have produced.
struct LabeledWindow {
    double score = 0.0;
    double gradient = 0.0;
    bool expected_alert = false;
};

struct CalibrationResult {
    FusionConfig config;
    double agreement = 0.0;  ///< fraction of windows whose alert matches the label
};

/// Grid search over theta and attention_high_min (0.05..0.95 and
/// 0.05..1.00, step 0.01). Ties go to the point closest to the defaults.
CalibrationResult calibrate(std::span<const LabeledWindow> windows, const FusionConfig& base = {});

}  // namespace dap::fusion
