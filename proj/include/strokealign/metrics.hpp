#pragma once

#include <optional>
#include <span>
#include <string>

#include "strokealign/dtw.hpp"
#include "strokealign/render.hpp"
#include "strokealign/stroke.hpp"

namespace strokealign {

struct EvalReport {
    double avg_dtw_l1 = 0.0;
    double avg_dtw_l2 = 0.0;
    double nn_gt_to_pred = 0.0;
    double nn_pred_to_gt = 0.0;
    std::optional<double> ink_nn;
    std::size_t pred_points = 0;
    std::size_t gt_points = 0;
};

/// Average per-pair DTW distance after scaling both sequences by the
/// ground truth's unit-height normalization and resampling the prediction
/// to the ground truth's point count.
double avg_dtw_distance(const StrokeSequence& pred, const StrokeSequence& gt,
                        PointMetric metric);

/// Mean over `from` of the distance to the nearest point in `to`.
/// Inputs are expected pre-normalized when comparability matters.
/// Grid-accelerated; exact (the quadratic scan is the test oracle).
double nn_distance(std::span<const Point> from, std::span<const Point> to, PointMetric metric);

/// Mean L2 distance from each predicted point (mapped through the raster
/// transform) to the nearest ink pixel center (intensity < threshold),
/// divided by the ink bounding-box height in pixels.
double ink_nn_distance(const StrokeSequence& pred, const RasterImage& img,
                       const RasterTransform& tf, double threshold = 127.5);

/// Full report: both DTW metrics plus directed NN distances (L2) on the
/// normalized pair, and the ink metric when an image is supplied.
EvalReport evaluate(const StrokeSequence& pred, const StrokeSequence& gt,
                    const RasterImage* img = nullptr, const RasterTransform* tf = nullptr);

std::string eval_csv_header();
std::string to_csv(const EvalReport& report);
std::string pretty_table(const EvalReport& report);

}  // namespace strokealign
