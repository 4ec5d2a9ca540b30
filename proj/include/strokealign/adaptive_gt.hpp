#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strokealign/dtw.hpp"
#include "strokealign/rng.hpp"
#include "strokealign/stroke.hpp"

namespace strokealign {

enum class AggregationMode { Total, Average };

/// Per ground-truth stroke aggregated alignment loss. Under Total the
/// entries sum to the full DTW loss.
struct StrokeLossVector {
    std::vector<double> losses;
    AggregationMode mode = AggregationMode::Average;
};

/// One of the three ground-truth alterations: reversing a stroke's point
/// order, or swapping it with an adjacent stroke.
struct GtTransform {
    enum class Kind { Reverse, SwapWithNext, SwapWithPrev };
    Kind kind = Kind::Reverse;
    std::size_t stroke = 0;
};

std::string to_string(const GtTransform& t);

/// Per-instance adaptation state: the ground truth as adapted so far (kept
/// across epochs), a change counter, and the instance's own random stream.
struct AdaptState {
    StrokeSequence seq;
    std::size_t change_count = 0;
    Rng rng;

    AdaptState() = default;
    AdaptState(StrokeSequence gt, std::uint64_t seed) : seq(std::move(gt)), rng(seed) {}
};

/// Local cost of every path pair, in path order.
std::vector<double> path_pair_costs(std::span<const Point> pred, std::span<const Point> gt,
                                    const AlignmentPath& path, PointMetric metric);

/// Attributes each path pair's cost to the ground-truth stroke owning its j
/// index. Average mode divides by the number of pairs touching the stroke.
StrokeLossVector per_stroke_loss(const AlignmentPath& path, std::span<const double> pair_costs,
                                 const StrokeSequence& gt, AggregationMode mode);

/// Samples a stroke index with probability softmax(loss / temperature).
std::size_t sample_candidate(const StrokeLossVector& losses, double temperature, Rng& rng);

/// The applicable transforms for stroke k: Reverse always, the swaps only
/// where the neighbor exists.
std::vector<GtTransform> propose_transforms(const StrokeSequence& gt, std::size_t k);

/// Applies the transform, preserving every point coordinate as a multiset.
/// A reversal moves the sos flag to the stroke's new first point; the eos
/// suffix length is preserved.
StrokeSequence apply_transform(const StrokeSequence& gt, const GtTransform& t);

struct AdaptConfig {
    PointMetric metric = PointMetric::L1;
    int band_radius = -1;
    double temperature = 1.0;
    AggregationMode mode = AggregationMode::Average;
};

struct AdaptOutcome {
    bool changed = false;
    double loss = 0.0;  // loss of the committed configuration
    std::optional<GtTransform> applied;
};

/// One adaptation step: scores strokes by their share of the current DTW
/// loss, samples one, evaluates its applicable transforms through windowed
/// recomputation, and commits the best strictly-improving one to the state.
AdaptOutcome adapt_step(const StrokeSequence& pred, AdaptState& state, const AdaptConfig& cfg);

}  // namespace strokealign
