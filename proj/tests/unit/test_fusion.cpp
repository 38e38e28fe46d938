#include <doctest.h>

#include <sstream>

#include "dap/error.hpp"
#include "dap/fusion.hpp"

using namespace dap;
using namespace dap::fusion;

namespace {

tcn::AttentionScore score(double v, std::int64_t t = 0) { return {v, t}; }
saliency::SceneDynamics dyn(double g, std::int64_t t = 0) { return {g, t}; }

}  // namespace

TEST_CASE("classify_attention boundaries") {
    const FusionConfig cfg;
    CHECK(classify_attention(score(0.30), cfg) == AttentionClass::medium_low);
    CHECK(classify_attention(score(0.61), cfg) == AttentionClass::high);
    CHECK(classify_attention(score(0.60), cfg) == AttentionClass::medium_low);
    CHECK(classify_attention(score(0.605), cfg) == AttentionClass::medium_low);
    CHECK(classify_attention(score(0.0), cfg) == AttentionClass::medium_low);
    CHECK(classify_attention(score(1.0), cfg) == AttentionClass::high);
    CHECK_THROWS_AS(classify_attention(score(1.01), cfg), InvalidArgument);
    CHECK_THROWS_AS(classify_attention(score(-0.1), cfg), InvalidArgument);
}

TEST_CASE("classify_scene boundaries") {
    const FusionConfig cfg;
    CHECK(classify_scene(dyn(0.60), cfg) == SceneClass::dynamic_scene);
    CHECK(classify_scene(dyn(0.20), cfg) == SceneClass::static_scene);
    CHECK(classify_scene(dyn(0.45), cfg) == SceneClass::static_scene);
    CHECK(classify_scene(dyn(0.4500001), cfg) == SceneClass::dynamic_scene);
}

TEST_CASE("decide rule table") {
    const FusionConfig cfg;
    CHECK(decide(score(0.30), dyn(0.60), cfg).alert);
    CHECK_FALSE(decide(score(0.30), dyn(0.20), cfg).alert);
    CHECK_FALSE(decide(score(0.90), dyn(0.60), cfg).alert);
    CHECK_FALSE(decide(score(0.90), dyn(0.20), cfg).alert);
}

TEST_CASE("alert monotonicity") {
    const FusionConfig cfg;
    for (int gi = 0; gi <= 100; ++gi) {
        bool seen_non_alert = false;
        for (int si = 0; si <= 100; ++si) {
            const bool a = decide(score(si / 100.0), dyn(gi / 100.0), cfg).alert;
            if (seen_non_alert) CHECK_FALSE(a);
            seen_non_alert = seen_non_alert || !a;
        }
    }
    for (int si = 0; si <= 100; ++si) {
        bool seen_non_alert = false;
        for (int gi = 100; gi >= 0; --gi) {
            const bool a = decide(score(si / 100.0), dyn(gi / 100.0), cfg).alert;
            if (seen_non_alert) CHECK_FALSE(a);
            seen_non_alert = seen_non_alert || !a;
        }
    }
}

TEST_CASE("stream_decide debounce") {
    auto make = [](std::initializer_list<bool> alerts) {
        std::vector<WindowPair> pairs;
        std::int64_t t = 0;
        for (bool a : alerts) {
            pairs.push_back({score(a ? 0.2 : 0.9, t), dyn(0.8, t)});
            t += 5000;
        }
        return pairs;
    };
    FusionConfig cfg;
    const auto two = make({true, true});
    CHECK(stream_decide(two, cfg).events.size() == 2);

    cfg.debounce_windows = 2;
    const auto seq = make({true, false, true, true, true});
    const auto res = stream_decide(seq, cfg);
    REQUIRE(res.decisions.size() == 5);
    REQUIRE(res.events.size() == 2);
    CHECK(res.events[0].window_start_ms == 15000);
    CHECK(res.events[1].window_start_ms == 20000);
    CHECK(res.events[0].reason == "attention below scenario requirement");

    CHECK(stream_decide(std::vector<WindowPair>{}, cfg).decisions.empty());

    std::vector<WindowPair> misaligned{{score(0.2, 0), dyn(0.8, 10)}};
    CHECK_THROWS_AS(stream_decide(misaligned, cfg), AlignmentError);
    std::vector<WindowPair> backwards{{score(0.2, 10), dyn(0.8, 10)}, {score(0.2, 10), dyn(0.8, 10)}};
    CHECK_THROWS_AS(stream_decide(backwards, cfg), AlignmentError);
}

TEST_CASE("json line format") {
    FusionDecision d;
    d.window_start_ms = 15000;
    d.score = 0.3;
    d.gradient = 0.6;
    d.attention_class = AttentionClass::medium_low;
    d.scene_class = SceneClass::dynamic_scene;
    d.alert = true;
    CHECK(to_json_line(d) ==
          R"({"t_ms":15000, "score":0.300000, "gradient":0.600000, "attention":"medium_low", "scene":"dynamic", "alert":true})");
    std::ostringstream os;
    write_alert_log(os, std::vector<FusionDecision>{d, d});
    CHECK(os.str().size() == 2 * (to_json_line(d).size() + 1));
}

TEST_CASE("calibrate recovers the generating thresholds") {
    std::vector<LabeledWindow> data;
    for (int s = 0; s <= 20; ++s)
        for (int g = 0; g <= 20; ++g) {
            const double sv = s / 20.0 + 0.013, gv = g / 20.0 + 0.007;
            data.push_back({std::min(sv, 1.0), std::min(gv, 1.0), gv > 0.30 && sv < 0.70});
        }
    const auto res = calibrate(data);
    CHECK(res.agreement == 1.0);
    for (const auto& w : data) {
        const bool alert = w.gradient > res.config.theta && w.score < res.config.attention_high_min;
        CHECK(alert == w.expected_alert);
    }
    CHECK_THROWS_AS(calibrate(std::vector<LabeledWindow>{}), InvalidDataset);
}
