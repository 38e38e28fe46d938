#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dap/error.hpp"
#include "dap/rng.hpp"
#include "dap/saliency_eval.hpp"
#include "saliency_oracles.hpp"

using namespace dap;
using namespace dap::saliency;

namespace {

Matrix random_map(Rng& rng, std::size_t h, std::size_t w) {
    Matrix m(h, w);
    for (auto& v : m.data) v = rng.uniform();
    return m;
}

FixationMap random_fix(Rng& rng, std::size_t h, std::size_t w, std::size_t k) {
    FixationMap f{Matrix(h, w)};
    std::size_t placed = 0;
    while (placed < k) {
        auto& v = f.fixations.data[rng.below(h * w)];
        if (v == 0.0) {
            v = 1.0;
            ++placed;
        }
    }
    return f;
}

std::vector<int> as_ints(const FixationMap& f) {
    std::vector<int> out;
    for (double v : f.fixations.data) out.push_back(v != 0.0);
    return out;
}

Matrix permute(const Matrix& m, const std::vector<std::size_t>& perm) {
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < perm.size(); ++i) out.data[i] = m.data[perm[i]];
    return out;
}

}  // namespace

TEST_CASE("auc identities") {
    Rng rng(1);
    const auto fix = random_fix(rng, 8, 8, 5);
    CHECK(metric_auc(fix.fixations, fix) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(metric_auc(Matrix(8, 8, 0.3), fix) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(metric_auc(Matrix(8, 8, 0.3), FixationMap{Matrix(8, 8)}), UndefinedMetric);
    CHECK_THROWS_AS(metric_auc(Matrix(8, 7, 0.3), fix), ShapeError);
}

TEST_CASE("nss identities") {
    Matrix pred(2, 2);
    pred(0, 0) = 1.0;
    FixationMap fix{Matrix(2, 2)};
    fix.fixations(0, 0) = 1.0;
    CHECK(std::abs(metric_nss(pred, fix) - std::sqrt(3.0)) < 1e-12);
    CHECK(std::abs(oracle::nss(pred.data, as_ints(fix)) - std::sqrt(3.0)) < 1e-12);

    Rng rng(4);
    const auto p = random_map(rng, 8, 8);
    CHECK(std::abs(metric_nss(p, FixationMap{Matrix(8, 8, 1.0)})) < 1e-12);

    const auto f = random_fix(rng, 8, 8, 6);
    const double v = metric_nss(f.fixations, f);
    CHECK(v > 0.0);
    CHECK(std::abs(v - oracle::nss(f.fixations.data, as_ints(f))) < 1e-12);

    CHECK_THROWS_AS(metric_nss(Matrix(8, 8, 0.5), f), UndefinedMetric);
    CHECK_THROWS_AS(metric_nss(p, FixationMap{Matrix(8, 8)}), UndefinedMetric);
}

TEST_CASE("cc and sim identities") {
    Rng rng(5);
    const auto a = random_map(rng, 8, 8);
    Matrix inv(8, 8);
    for (std::size_t i = 0; i < a.size(); ++i) inv.data[i] = 1.0 - a.data[i];
    CHECK(std::abs(metric_cc(a, a) - 1.0) < 1e-12);
    CHECK(std::abs(metric_cc(a, inv) + 1.0) < 1e-12);
    CHECK_THROWS_AS(metric_cc(a, Matrix(8, 8, 0.2)), UndefinedMetric);

    CHECK(std::abs(metric_sim(a, a) - 1.0) < 1e-12);
    Matrix left(8, 8), right(8, 8);
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            left(r, c) = rng.uniform(0.1, 1.0);
            right(r, c + 4) = rng.uniform(0.1, 1.0);
        }
    CHECK(metric_sim(left, right) == 0.0);
    CHECK_THROWS_AS(metric_sim(a, Matrix(8, 8)), UndefinedMetric);
}

TEST_CASE("metrics match brute-force oracles on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_map(rng, 8, 8);
        const auto t = random_map(rng, 8, 8);
        const auto f = random_fix(rng, 8, 8, 1 + rng.below(10));
        CHECK(std::abs(metric_auc(p, f) - oracle::auc_judd(p.data, as_ints(f))) < 1e-9);
        CHECK(std::abs(metric_nss(p, f) - oracle::nss(p.data, as_ints(f))) < 1e-9);
        CHECK(std::abs(metric_cc(p, t) - oracle::cc(p.data, t.data)) < 1e-12);
        CHECK(std::abs(metric_sim(p, t) - oracle::sim(p.data, t.data)) < 1e-12);
    }
}

TEST_CASE("auc handles tied predictions") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix p(8, 8);
        for (auto& v : p.data) v = static_cast<double>(rng.below(4)) / 3.0;  // heavy ties
        const auto f = random_fix(rng, 8, 8, 1 + rng.below(12));
        CHECK(std::abs(metric_auc(p, f) - oracle::auc_judd(p.data, as_ints(f))) < 1e-12);
    }
}

TEST_CASE("metric invariances") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_map(rng, 8, 8);
        const auto t = random_map(rng, 8, 8);
        const auto f = random_fix(rng, 8, 8, 4);
        std::vector<std::size_t> perm(64);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = 63; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        const auto pp = permute(p, perm), tp = permute(t, perm);
        const FixationMap fp{permute(f.fixations, perm)};
        CHECK(std::abs(metric_auc(pp, fp) - metric_auc(p, f)) < 1e-12);
        CHECK(std::abs(metric_nss(pp, fp) - metric_nss(p, f)) < 1e-9);
        CHECK(std::abs(metric_cc(pp, tp) - metric_cc(p, t)) < 1e-12);
        CHECK(std::abs(metric_sim(pp, tp) - metric_sim(p, t)) < 1e-12);

        CHECK(std::abs(metric_cc(p, t) - metric_cc(t, p)) < 1e-12);

        const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-5.0, 5.0);
        Matrix affine = p;
        for (auto& v : affine.data) v = a * v + b;
        CHECK(std::abs(metric_cc(affine, t) - metric_cc(p, t)) < 1e-9);
        CHECK(std::abs(metric_nss(affine, f) - metric_nss(p, f)) < 1e-9);

        const double s = metric_sim(p, t), auc = metric_auc(p, f);
        CHECK((s >= 0.0 && s <= 1.0));
        CHECK((auc >= 0.0 && auc <= 1.0));
    }
}

TEST_CASE("scene_dynamics") {
    Rng rng(12);
    const auto m = random_map(rng, 8, 8);
    std::vector<SaliencyMap> same{{m, 0}, {m, 100}, {m, 200}};
    CHECK(scene_dynamics(same).gradient == 0.0);
    CHECK(scene_dynamics(same).window_start_ms == 0);

    std::vector<SaliencyMap> flip;
    for (int k = 0; k < 5; ++k) flip.push_back({Matrix(8, 8, k % 2 ? 1.0 : 0.0), k * 100});
    CHECK(scene_dynamics(flip).gradient == 1.0);

    // Blob translating one pixel per frame.
    std::vector<SaliencyMap> blob;
    std::vector<std::vector<double>> raw;
    for (int k = 0; k < 6; ++k) {
        Matrix b(64, 64);
        for (std::size_t r = 0; r < 64; ++r)
            for (std::size_t c = 0; c < 64; ++c) {
                const double dr = static_cast<double>(r) - 32.0, dc = static_cast<double>(c) - 20.0 - k;
                b(r, c) = std::exp(-(dr * dr + dc * dc) / (2.0 * 16.0));
            }
        raw.push_back(b.data);
        blob.push_back({b, k * 33});
    }
    const double g = scene_dynamics(blob).gradient;
    CHECK(g > 0.0);
    CHECK(g < 0.1);
    CHECK(std::abs(g - oracle::temporal_change(raw)) < 1e-12);

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SaliencyMap> seq;
        std::vector<std::vector<double>> seq_raw;
        const std::size_t len = 2 + rng.below(5);
        for (std::size_t k = 0; k < len; ++k) {
            seq.push_back({random_map(rng, 8, 8), static_cast<std::int64_t>(k)});
            seq_raw.push_back(seq.back().values.data);
        }
        const double v = scene_dynamics(seq).gradient;
        CHECK(std::abs(v - oracle::temporal_change(seq_raw)) < 1e-12);
        std::vector<SaliencyMap> rev(seq.rbegin(), seq.rend());
        CHECK(std::abs(scene_dynamics(rev).gradient - v) < 1e-12);
        CHECK((v >= 0.0 && v <= 1.0));
    }

    CHECK_THROWS_AS(scene_dynamics(std::vector<SaliencyMap>{{m, 0}}), InvalidArgument);
    CHECK_THROWS_AS(scene_dynamics(std::vector<SaliencyMap>{{m, 0}, {Matrix(4, 4), 1}}), ShapeError);
}
