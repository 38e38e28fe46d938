#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dap/error.hpp"
#include "dap/saliency_eval.hpp"

namespace dap::saliency {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    if (a.size() == 0) throw ShapeError(std::string(what) + ": empty map");
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // population
};

Moments moments(const Matrix& m) {
    Moments r;
    const double n = static_cast<double>(m.size());
    for (double v : m.data) r.mean += v;
    r.mean /= n;
    for (double v : m.data) r.var += (v - r.mean) * (v - r.mean);
    r.var /= n;
    // A constant map has zero variance by definition; rounding in the mean
    // must not turn it into a tiny positive value.
    if (std::all_of(m.data.begin(), m.data.end(), [&](double v) { return v == m.data.front(); })) r.var = 0.0;
    return r;
}

}  // namespace

void SaliencyMap::validate() const {
    for (double v : values.data)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw InvalidArgument("saliency map value outside [0,1]");
}

std::size_t FixationMap::count() const {
    return static_cast<std::size_t>(std::count_if(fixations.data.begin(), fixations.data.end(),
                                                  [](double v) { return v != 0.0; }));
}

double metric_auc(const Matrix& pred, const FixationMap& fix) {
    require_same_shape(pred, fix.fixations, "auc");
    const std::size_t n = pred.size();
    const std::size_t n_fix = fix.count();
    if (n_fix == 0) throw UndefinedMetric("auc: fixation map is empty");
    if (n_fix == n) throw UndefinedMetric("auc: every pixel is a fixation");

    std::vector<double> thresholds;
    for (std::size_t i = 0; i < n; ++i)
        if (fix.fixations.data[i] != 0.0) thresholds.push_back(pred.data[i]);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    // Pixels sorted by descending prediction; sweep once over all thresholds.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pred.data[a] > pred.data[b]; });

    const double pos = static_cast<double>(n_fix);
    const double neg = static_cast<double>(n - n_fix);
    std::size_t tp = 0, fp = 0, k = 0;
    double area = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
    for (double thr : thresholds) {
        while (k < n && pred.data[order[k]] >= thr) {
            if (fix.fixations.data[order[k]] != 0.0)
                ++tp;
            else
                ++fp;
            ++k;
        }
        const double tpr = static_cast<double>(tp) / pos;
        const double fpr = static_cast<double>(fp) / neg;
        area += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    area += 0.5 * (1.0 - prev_fpr) * (1.0 + prev_tpr);
    return area;
}

double metric_nss(const Matrix& pred, const FixationMap& fix) {
    require_same_shape(pred, fix.fixations, "nss");
    const std::size_t n_fix = fix.count();
    if (n_fix == 0) throw UndefinedMetric("nss: fixation map is empty");
    const auto m = moments(pred);
    if (!(m.var > 0.0)) throw UndefinedMetric("nss: prediction has zero variance");
    const double sd = std::sqrt(m.var);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (fix.fixations.data[i] != 0.0) acc += (pred.data[i] - m.mean) / sd;
    return acc / static_cast<double>(n_fix);
}

double metric_cc(const Matrix& pred, const Matrix& truth) {
    require_same_shape(pred, truth, "cc");
    const auto mp = moments(pred), mt = moments(truth);
    if (!(mp.var > 0.0)) throw UndefinedMetric("cc: prediction has zero variance");
    if (!(mt.var > 0.0)) throw UndefinedMetric("cc: ground truth has zero variance");
    double cov = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) cov += (pred.data[i] - mp.mean) * (truth.data[i] - mt.mean);
    cov /= static_cast<double>(pred.size());
    return std::clamp(cov / std::sqrt(mp.var * mt.var), -1.0, 1.0);
}

double metric_sim(const Matrix& pred, const Matrix& truth) {
    require_same_shape(pred, truth, "sim");
    double sp = 0.0, st = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred.data[i] < 0.0 || truth.data[i] < 0.0) throw UndefinedMetric("sim: negative map value");
        sp += pred.data[i];
        st += truth.data[i];
    }
    if (!(sp > 0.0)) throw UndefinedMetric("sim: prediction has zero mass");
    if (!(st > 0.0)) throw UndefinedMetric("sim: ground truth has zero mass");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::min(pred.data[i] / sp, truth.data[i] / st);
    return std::clamp(acc, 0.0, 1.0);
}

SceneDynamics scene_dynamics(std::span<const SaliencyMap> maps) {
    if (maps.size() < 2) throw InvalidArgument("scene_dynamics: need at least two maps");
    for (const auto& m : maps) {
        require_same_shape(maps.front().values, m.values, "scene_dynamics");
        m.validate();
    }
    double total = 0.0;
    for (std::size_t k = 1; k < maps.size(); ++k) {
        const auto& a = maps[k - 1].values.data;
        const auto& b = maps[k].values.data;
        double diff = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(b[i] - a[i]);
        total += diff / static_cast<double>(a.size());
    }
    return SceneDynamics{std::clamp(total / static_cast<double>(maps.size() - 1), 0.0, 1.0), maps.front().frame_ms};
}

}  // namespace dap::saliency
