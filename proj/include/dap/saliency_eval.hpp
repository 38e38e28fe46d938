#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dap/matrix.hpp"

namespace dap::saliency {

/// Predicted (or ground-truth density) map with values in [0,1].
struct SaliencyMap {
    Matrix values;
    std::int64_t frame_ms = 0;

    /// Throws InvalidArgument unless every value is finite and in [0,1].
    void validate() const;
};

/// Binary human-fixation map: nonzero entries are fixations.
struct FixationMap {
    Matrix fixations;

    std::size_t count() const;
};

struct SceneDynamics {
    double gradient = 0.0;  ///< in [0,1]
    std::int64_t window_start_ms = 0;
};

// Metric functions take the raw prediction matrix so they can be applied
// to rescaled maps; shapes must match or ShapeError is thrown. Degenerate
// inputs (no fixations, zero variance, zero mass) raise UndefinedMetric.

/// AUC-Judd: one ROC point per distinct predicted value found at a fixation
/// (pixels >= threshold count as detections), trapezoidal area.
double metric_auc(const Matrix& pred, const FixationMap& fix);

/// Mean of the z-scored prediction (population std) at fixations.
double metric_nss(const Matrix& pred, const FixationMap& fix);

/// Pearson correlation over all pixels.
double metric_cc(const Matrix& pred, const Matrix& truth);

/// Histogram intersection of the two maps after normalising each to sum 1.
double metric_sim(const Matrix& pred, const Matrix& truth);

/// Mean over consecutive pairs of the mean absolute pixel difference.
/// Requires at least two maps of identical shape; timestamped by the first.
SceneDynamics scene_dynamics(std::span<const SaliencyMap> maps);

}  // namespace dap::saliency
