#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "strokealign/dtw.hpp"
#include "strokealign/stroke.hpp"

namespace strokealign {

/// Per-prediction-index token labels derived from an alignment, plus the
/// positive-class weights used by the cross-entropy terms.
struct TokenLabels {
    std::vector<std::uint8_t> sos;
    std::vector<std::uint8_t> eos;
    double sos_pos_weight = 1.0;
    double eos_pos_weight = 1.0;
};

/// Appends k duplicates of the final point to the last stroke and flags the
/// original final point plus the duplicates as end-of-sequence.
StrokeSequence eos_pad(const StrokeSequence& gt, std::size_t k = 20);

/// For each ground-truth stroke start, the first prediction index aligned
/// to it gets a true label; everything else is false.
std::vector<std::uint8_t> sos_labels_from_alignment(const AlignmentPath& path,
                                                    const StrokeSequence& gt);

/// sos labels per the first-match rule; eos labels true for every
/// prediction aligned to any eos-flagged ground-truth point (monotonicity
/// makes them a suffix). sos_pos_weight <= 0 selects the inverse-frequency
/// default (N - positives) / positives.
TokenLabels token_labels_from_alignment(const AlignmentPath& path, const StrokeSequence& gt,
                                        double sos_pos_weight = -1.0,
                                        double eos_pos_weight = 1.0);

/// Mean over indices of binary cross-entropy on sigmoid(logit), positive
/// examples weighted by pos_weight. Stable for |logit| well beyond 100.
double weighted_token_loss(std::span<const double> logits,
                           std::span<const std::uint8_t> labels, double pos_weight);

/// d(weighted_token_loss)/d(logit), elementwise.
std::vector<double> weighted_token_loss_grad(std::span<const double> logits,
                                             std::span<const std::uint8_t> labels,
                                             double pos_weight);

enum class AlignmentMode {
    Dtw,    // alignment from banded DTW against the eos-padded ground truth
    Index,  // position-wise pairing against ground truth resampled to |P|
};

struct CompositeConfig {
    PointMetric metric = PointMetric::L1;
    int band_radius = -1;
    double w_coord = 1.0;
    double w_sos = 1.0;
    double w_eos = 1.0;
    std::size_t eos_pad_k = 20;
    double sos_pos_weight = -1.0;  // <= 0: inverse-frequency default
    double eos_pos_weight = 1.0;
    AlignmentMode alignment = AlignmentMode::Dtw;
};

struct LossBreakdown {
    double coord = 0.0;
    double sos = 0.0;
    double eos = 0.0;
    double total = 0.0;
    double w_coord = 1.0, w_sos = 1.0, w_eos = 1.0;
};

struct CompositeResult {
    LossBreakdown breakdown;
    AlignmentPath path;             // alignment actually used
    TokenLabels labels;
    std::vector<Point> gt_points;   // the (padded or resampled) target points
    Point origin_grad;              // full sum of absolute-point gradients
    std::vector<Point> delta_grads; // suffix sums, one per delta
    std::vector<double> sos_logit_grads;
    std::vector<double> eos_logit_grads;
};

/// Coordinate DTW term on the cumulative sum of the relative predictions,
/// plus class-weighted SOS and EOS cross-entropies on labels derived from
/// the same alignment. Gradients treat the alignment as fixed; coordinate
/// gradients are chained through the cumulative sum.
CompositeResult composite_loss(const RelativeSequence& pred_rel,
                               std::span<const double> sos_logits,
                               std::span<const double> eos_logits, const StrokeSequence& gt,
                               const CompositeConfig& cfg);

/// The same loss terms evaluated against a frozen alignment and labels.
/// This is the function the gradients are gradients of.
LossBreakdown composite_loss_given(const RelativeSequence& pred_rel,
                                   std::span<const double> sos_logits,
                                   std::span<const double> eos_logits,
                                   std::span<const Point> gt_points, const AlignmentPath& path,
                                   const TokenLabels& labels, const CompositeConfig& cfg);

}  // namespace strokealign
