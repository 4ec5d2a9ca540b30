#include "strokealign/adaptive_gt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strokealign {

std::string to_string(const GtTransform& t) {
    switch (t.kind) {
        case GtTransform::Kind::Reverse: return "reverse:" + std::to_string(t.stroke);
        case GtTransform::Kind::SwapWithNext: return "swap_next:" + std::to_string(t.stroke);
        case GtTransform::Kind::SwapWithPrev: return "swap_prev:" + std::to_string(t.stroke);
    }
    return "?";
}

std::vector<double> path_pair_costs(std::span<const Point> pred, std::span<const Point> gt,
                                    const AlignmentPath& path, PointMetric metric) {
    std::vector<double> costs;
    costs.reserve(path.pairs.size());
    for (auto [i, j] : path.pairs)
        costs.push_back(point_cost(pred[static_cast<std::size_t>(i)],
                                   gt[static_cast<std::size_t>(j)], metric));
    return costs;
}

StrokeLossVector per_stroke_loss(const AlignmentPath& path, std::span<const double> pair_costs,
                                 const StrokeSequence& gt, AggregationMode mode) {
    if (path.pairs.size() != pair_costs.size())
        throw std::invalid_argument("per_stroke_loss: path and cost lengths differ");
    std::vector<std::size_t> owner = stroke_of_point(gt);
    StrokeLossVector out;
    out.mode = mode;
    out.losses.assign(gt.strokes.size(), 0.0);
    std::vector<std::size_t> touches(gt.strokes.size(), 0);
    for (std::size_t k = 0; k < path.pairs.size(); ++k) {
        std::size_t stroke = owner[static_cast<std::size_t>(path.pairs[k].second)];
        out.losses[stroke] += pair_costs[k];
        touches[stroke] += 1;
    }
    if (mode == AggregationMode::Average) {
        for (std::size_t k = 0; k < out.losses.size(); ++k)
            if (touches[k] > 0) out.losses[k] /= static_cast<double>(touches[k]);
    }
    return out;
}

std::size_t sample_candidate(const StrokeLossVector& losses, double temperature, Rng& rng) {
    if (losses.losses.empty()) throw std::invalid_argument("sample_candidate: no strokes");
    if (!(temperature > 0.0)) throw std::invalid_argument("sample_candidate: temperature <= 0");
    std::size_t n = losses.losses.size();
    double mx = *std::max_element(losses.losses.begin(), losses.losses.end()) / temperature;
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = std::exp(losses.losses[k] / temperature - mx);
        total += w[k];
    }
    double u = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += w[k];
        if (u < acc) return k;
    }
    return n - 1;
}

std::vector<GtTransform> propose_transforms(const StrokeSequence& gt, std::size_t k) {
    if (k >= gt.strokes.size()) throw std::invalid_argument("propose_transforms: stroke out of range");
    std::vector<GtTransform> out;
    out.push_back({GtTransform::Kind::Reverse, k});
    if (k + 1 < gt.strokes.size()) out.push_back({GtTransform::Kind::SwapWithNext, k});
    if (k > 0) out.push_back({GtTransform::Kind::SwapWithPrev, k});
    return out;
}

StrokeSequence apply_transform(const StrokeSequence& gt, const GtTransform& t) {
    if (t.stroke >= gt.strokes.size())
        throw std::invalid_argument("apply_transform: stroke out of range");
    StrokeSequence out = gt;
    switch (t.kind) {
        case GtTransform::Kind::Reverse:
            std::reverse(out.strokes[t.stroke].points.begin(), out.strokes[t.stroke].points.end());
            break;
        case GtTransform::Kind::SwapWithNext:
            if (t.stroke + 1 >= gt.strokes.size())
                throw std::invalid_argument("apply_transform: no next stroke");
            std::swap(out.strokes[t.stroke], out.strokes[t.stroke + 1]);
            break;
        case GtTransform::Kind::SwapWithPrev:
            if (t.stroke == 0) throw std::invalid_argument("apply_transform: no previous stroke");
            std::swap(out.strokes[t.stroke], out.strokes[t.stroke - 1]);
            break;
    }
    return out;
}

AdaptOutcome adapt_step(const StrokeSequence& pred, AdaptState& state, const AdaptConfig& cfg) {
    validate(pred);
    validate(state.seq);

    std::vector<Point> p = flatten(pred);
    std::vector<Point> t = flatten(state.seq);
    CostMatrix cm;
    DtwResult current = dtw_with_matrix(p, t, cfg.metric, cfg.band_radius, cm);

    std::vector<double> costs = path_pair_costs(p, t, current.path, cfg.metric);
    StrokeLossVector losses = per_stroke_loss(current.path, costs, state.seq, cfg.mode);
    std::size_t k = sample_candidate(losses, cfg.temperature, state.rng);

    // Recompute window: from the start of the stroke before the sampled one
    // to the end of the stroke after it, which covers every column any of
    // the candidate transforms can touch.
    std::vector<std::size_t> starts = stroke_starts(state.seq);
    std::size_t n_strokes = state.seq.strokes.size();
    std::size_t lo_stroke = k > 0 ? k - 1 : 0;
    std::size_t hi_stroke = std::min(n_strokes - 1, k + 1);
    int j_lo = static_cast<int>(starts[lo_stroke]);
    int j_hi = static_cast<int>(hi_stroke + 1 < n_strokes ? starts[hi_stroke + 1] - 1
                                                          : t.size() - 1);

    AdaptOutcome best;
    best.loss = current.cost;
    StrokeSequence best_seq;
    for (const GtTransform& tr : propose_transforms(state.seq, k)) {
        StrokeSequence candidate = apply_transform(state.seq, tr);
        std::vector<Point> t2 = flatten(candidate);
        CostMatrix trial = cm;
        DtwResult r = dtw_recompute_window(trial, p, t2, {j_lo, j_hi}, cfg.metric);
        if (r.cost < best.loss) {
            best.loss = r.cost;
            best.changed = true;
            best.applied = tr;
            best_seq = std::move(candidate);
        }
    }
    if (best.changed) {
        state.seq = std::move(best_seq);
        state.change_count += 1;
    }
    return best;
}

}  // namespace strokealign
