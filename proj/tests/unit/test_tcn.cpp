#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dap/error.hpp"
#include "dap/tcn.hpp"

using namespace dap;
using namespace dap::tcn;
using dsp::HyperPatternWindow;
using dsp::Label;

namespace {

HyperPatternWindow random_window(Rng& rng, std::size_t channels, std::size_t len,
                                 std::optional<Label> label = std::nullopt) {
    HyperPatternWindow w;
    w.channels = Matrix(channels, len);
    for (auto& v : w.channels.data) v = rng.normal();
    w.label = label;
    return w;
}

// Random values in every tensor, including biases and normalisation
// parameters, so no gradient path is trivially zero.
void randomize(TcnParams& p, Rng& rng, double scale = 0.5) {
    for (auto* t : p.tensors())
        for (auto& v : t->v) v = rng.uniform(-scale, scale);
    for (auto& b : p.blocks) {
        for (auto& v : b.norm1_scale.v) v = rng.uniform(0.5, 1.5);
        for (auto& v : b.norm2_scale.v) v = rng.uniform(0.5, 1.5);
    }
}

TcnConfig small_config(std::uint64_t seed) {
    TcnConfig c;
    c.num_blocks = 2;
    c.channels_per_block = 4;
    c.input_channels = 3;
    c.dropout_rate = 0.25;
    c.seed = seed;
    return c;
}

std::vector<Matrix> conv_activations(const ForwardCache& cache) {
    std::vector<Matrix> out;
    for (const auto& b : cache.blocks) {
        out.push_back(b.conv1);
        out.push_back(b.conv2);
        out.push_back(b.output);
    }
    return out;
}

}  // namespace

TEST_CASE("receptive field closed form") {
    TcnConfig c;
    CHECK(receptive_field(c) == 361);
    c.num_blocks = 1;
    CHECK(receptive_field(c) == 9);
    c.kernel_size = 2;
    CHECK(receptive_field(c) == 5);
    c = TcnConfig{};
    c.dilation_schedule = DilationSchedule::doubling;
    c.num_blocks = 3;
    CHECK(receptive_field(c) == 1 + 4 * (2 + 4 + 8));
}

TEST_CASE("receptive field matches perturbation oracle") {
    struct Case {
        int blocks, kernel;
        DilationSchedule sched;
    };
    for (const auto& cs : {Case{12, 3, DilationSchedule::increment}, Case{1, 3, DilationSchedule::increment},
                           Case{1, 2, DilationSchedule::increment}, Case{3, 3, DilationSchedule::doubling}}) {
        TcnConfig c;
        c.num_blocks = cs.blocks;
        c.kernel_size = cs.kernel;
        c.dilation_schedule = cs.sched;
        c.channels_per_block = 8;
        c.input_channels = 2;
        c.strict_causal = false;
        c.seed = 5;
        auto p = init_params(c);
        Rng rng(17);
        randomize(p, rng);
        const std::size_t rf = receptive_field(c);
        const std::size_t len = rf + 20;
        const auto base = random_window(rng, 2, len);
        const auto ref = forward(p, base, Mode::eval).cache.blocks.back().output;

        auto changed_at_last = [&](std::size_t dist, bool strict) {
            auto cfg = p;
            cfg.config.strict_causal = strict;
            auto w = base;
            const std::size_t t = len - 1 - dist;
            for (std::size_t r = 0; r < 2; ++r) w.channels(r, t) += 3.0;
            const auto out0 = forward(cfg, base, Mode::eval).cache.blocks.back().output;
            const auto out = forward(cfg, w, Mode::eval).cache.blocks.back().output;
            for (std::size_t r = 0; r < out.rows; ++r)
                if (out(r, len - 1) != out0(r, len - 1)) return true;
            return false;
        };
        (void)ref;
        CHECK(changed_at_last(rf - 1, false));
        CHECK_FALSE(changed_at_last(rf, false));
        // Strict variant: inputs t-rf .. t-1 matter, input t does not.
        CHECK(changed_at_last(rf, true));
        CHECK_FALSE(changed_at_last(rf + 1, true));
        CHECK_FALSE(changed_at_last(0, true));
        CHECK(changed_at_last(0, false));
    }
}

TEST_CASE("init_params determinism and shapes") {
    TcnConfig c;
    c.seed = 1;
    const auto a = init_params(c), b = init_params(c);
    CHECK(a == b);
    c.seed = 2;
    CHECK_FALSE(a == init_params(c));
    CHECK(a.head_w.shape == std::vector<std::size_t>{2, 16});
    CHECK(a.blocks.size() == 12);
    CHECK(a.blocks[0].proj_w.has_value());
    CHECK_FALSE(a.blocks[1].proj_w.has_value());
    const double limit = std::sqrt(6.0 / (22.0 * 3 + 16.0 * 3));
    for (double v : a.blocks[0].conv1_w.v) CHECK(std::abs(v) <= limit);
    for (double v : a.blocks[0].conv1_b.v) CHECK(v == 0.0);
    for (double v : a.blocks[0].norm1_scale.v) CHECK(v == 1.0);
}

TEST_CASE("forward basic contracts") {
    TcnConfig c;
    c.seed = 3;
    Rng rng(9);
    const auto w = random_window(rng, 22, 400);

    SUBCASE("zero parameters give 0.5") {
        auto p = init_params(c).zeros_like();
        CHECK(forward(p, w, Mode::eval).score.value == 0.5);
        CHECK(predict_score(p, w).value == 0.5);
    }
    SUBCASE("eval is deterministic and dropout-free") {
        const auto p = init_params(c);
        const auto a = forward(p, w, Mode::eval);
        const auto b = forward(p, w, Mode::eval);
        CHECK(a.score.value == b.score.value);
        for (const auto& blk : a.cache.blocks)
            for (double m : blk.mask) CHECK(m == 1.0);
        CHECK(std::abs(a.cache.probs[0] + a.cache.probs[1] - 1.0) < 1e-12);
    }
    SUBCASE("train mode applies a seeded per-channel mask") {
        const auto p = init_params(c);
        const auto a = forward(p, w, Mode::train, 42);
        const auto b = forward(p, w, Mode::train, 42);
        CHECK(a.score.value == b.score.value);
        bool dropped = false;
        for (const auto& blk : a.cache.blocks)
            for (double m : blk.mask) {
                CHECK((m == 0.0 || std::abs(m - 1.0 / 0.9) < 1e-15));
                dropped = dropped || m == 0.0;
            }
        CHECK(dropped);
    }
    SUBCASE("channel mismatch") {
        const auto p = init_params(c);
        CHECK_THROWS_AS(forward(p, random_window(rng, 21, 50), Mode::eval), ShapeError);
    }
    SUBCASE("score stays in [0,1] under fuzzing") {
        TcnConfig fc = small_config(4);
        for (int trial = 0; trial < 50; ++trial) {
            auto p = init_params(fc);
            randomize(p, rng, 5.0);
            const double s = predict_score(p, random_window(rng, 3, 1 + rng.below(60))).value;
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
    }
}

TEST_CASE("residual block passes projected input when convolutions are zero") {
    TcnConfig c = small_config(8);
    auto p = init_params(c);
    Rng rng(2);
    randomize(p, rng);
    for (auto& b : p.blocks) {
        for (auto* t : {&b.conv1_w, &b.conv1_b, &b.conv2_w, &b.conv2_b, &b.norm1_shift, &b.norm2_shift})
            std::fill(t->v.begin(), t->v.end(), 0.0);
    }
    const auto w = random_window(rng, 3, 40);
    const auto fr = forward(p, w, Mode::train, 7);
    const auto& b0 = fr.cache.blocks[0];
    for (std::size_t o = 0; o < 4; ++o)
        for (std::size_t t = 0; t < 40; ++t) {
            double expect = 0.0;
            for (std::size_t i = 0; i < 3; ++i) expect += p.blocks[0].proj_w->v[o * 3 + i] * b0.input(i, t);
            CHECK(b0.output(o, t) == doctest::Approx(expect).epsilon(1e-14));
        }
    CHECK(fr.cache.blocks[1].output == fr.cache.blocks[1].input);
}

TEST_CASE("causality: suffix replacement never changes earlier activations") {
    Rng rng(1234);
    for (int trial = 0; trial < 30; ++trial) {
        TcnConfig c = small_config(rng.next_u64());
        c.num_blocks = 1 + static_cast<int>(rng.below(3));
        c.strict_causal = rng.bernoulli(0.5);
        auto p = init_params(c);
        randomize(p, rng);
        const std::size_t len = 8 + rng.below(60);
        const auto w = random_window(rng, 3, len);
        const std::size_t t = rng.below(len);
        auto w2 = w;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t k = t; k < len; ++k) w2.channels(r, k) = rng.normal();
        const auto a = conv_activations(forward(p, w, Mode::eval).cache);
        const auto b = conv_activations(forward(p, w2, Mode::eval).cache);
        const std::size_t limit = c.strict_causal ? std::min(len, t + 1) : t;
        for (std::size_t m = 0; m < a.size(); ++m)
            for (std::size_t r = 0; r < a[m].rows; ++r)
                for (std::size_t k = 0; k < limit; ++k) CHECK(a[m](r, k) == b[m](r, k));
    }
}

TEST_CASE("analytic gradients match central differences") {
    Rng rng(99);
    for (Mode mode : {Mode::eval, Mode::train}) {
        TcnConfig c = small_config(21);
        auto p = init_params(c);
        randomize(p, rng);
        const auto w = random_window(rng, 3, 32, Label::wakeful);
        const std::uint64_t dseed = 5;
        const auto lg = loss_and_grad(p, w, mode, dseed);

        auto loss_at = [&](const TcnParams& q) { return backward(q, forward(q, w, mode, dseed).cache, Label::wakeful).loss; };
        auto params = p.tensors();
        const auto grads = lg.grad.tensors();
        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t ti = 0; ti < params.size(); ++ti) {
            for (std::size_t k = 0; k < params[ti]->v.size(); ++k) {
                const double orig = params[ti]->v[k];
                params[ti]->v[k] = orig + h;
                const double lp = loss_at(p);
                params[ti]->v[k] = orig - h;
                const double lm = loss_at(p);
                params[ti]->v[k] = orig;
                const double numeric = (lp - lm) / (2.0 * h);
                const double analytic = grads[ti]->v[k];
                const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
                worst = std::max(worst, rel);
            }
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("training") {
    Rng rng(5);
    SUBCASE("memorises a single sample") {
        TcnConfig c = small_config(1);
        c.dropout_rate = 0.0;
        auto p = init_params(c);
        std::vector<HyperPatternWindow> data{random_window(rng, 3, 40, Label::drowsy)};
        const auto res = train(p, data, {.epochs = 200, .learning_rate = 0.1, .batch_size = 1, .seed = 3});
        REQUIRE(res.loss_history.size() == 200);
        CHECK(res.loss_history.back() < 0.01);
        CHECK(predict_score(res.params, data[0]).value < 0.05);
    }
    SUBCASE("chance-level loss at the first epoch") {
        TcnConfig c;
        c.seed = 12;
        std::vector<HyperPatternWindow> data;
        for (int i = 0; i < 40; ++i) data.push_back(random_window(rng, 22, 64, i % 2 ? Label::wakeful : Label::drowsy));
        const auto res = train(init_params(c), data, {.epochs = 1, .learning_rate = 1e-3, .batch_size = 8, .seed = 4});
        CHECK(std::abs(res.loss_history[0] - std::log(2.0)) < 0.05);
    }
    SUBCASE("deterministic loss history") {
        TcnConfig c = small_config(6);
        std::vector<HyperPatternWindow> data;
        for (int i = 0; i < 12; ++i) data.push_back(random_window(rng, 3, 30, i % 3 ? Label::wakeful : Label::drowsy));
        const auto a = train(init_params(c), data, {.epochs = 4, .learning_rate = 0.05, .batch_size = 5, .seed = 77});
        const auto b = train(init_params(c), data, {.epochs = 4, .learning_rate = 0.05, .batch_size = 5, .seed = 77});
        CHECK(a.loss_history == b.loss_history);
        CHECK(a.params == b.params);
    }
    SUBCASE("wakeful-only training saturates") {
        TcnConfig c = small_config(2);
        std::vector<HyperPatternWindow> data;
        for (int i = 0; i < 6; ++i) data.push_back(random_window(rng, 3, 30, Label::wakeful));
        const auto res = train(init_params(c), data, {.epochs = 60, .learning_rate = 0.1, .batch_size = 3, .seed = 1});
        CHECK(predict_score(res.params, random_window(rng, 3, 30)).value > 0.9);
    }
    SUBCASE("invalid datasets") {
        const auto p = init_params(small_config(1));
        CHECK_THROWS_AS(train(p, {}, {}), InvalidDataset);
        CHECK_THROWS_AS(train(p, {random_window(rng, 3, 10)}, {}), InvalidDataset);
    }
}

TEST_CASE("checkpoint round trip") {
    TcnConfig c = small_config(31);
    c.dilation_schedule = DilationSchedule::doubling;
    c.strict_causal = false;
    const auto p = init_params(c);
    const auto path = std::filesystem::temp_directory_path() / "dap_tcn_ckpt.bin";
    save_checkpoint(p, path);
    const auto q = load_checkpoint(path);
    CHECK(p == q);
    std::ifstream is(path, std::ios::binary);
    char magic[4];
    is.read(magic, 4);
    CHECK(std::string(magic, 4) == "TCN1");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), IngestError);
}
