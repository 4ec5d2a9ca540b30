#include "strokealign/targets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strokealign {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

StrokeSequence eos_pad(const StrokeSequence& gt, std::size_t k) {
    validate(gt);
    StrokeSequence out = gt;
    Point last = out.strokes.back().points.back();
    out.strokes.back().points.insert(out.strokes.back().points.end(), k, last);
    out.eos_suffix = k + 1;
    return out;
}

std::vector<std::uint8_t> sos_labels_from_alignment(const AlignmentPath& path,
                                                    const StrokeSequence& gt) {
    if (path.pairs.empty()) throw std::invalid_argument("sos_labels: empty path");
    std::size_t n = static_cast<std::size_t>(path.pairs.back().first) + 1;
    std::vector<std::uint8_t> labels(n, 0);
    std::vector<std::size_t> starts = stroke_starts(gt);
    // The path is sorted, so the first pair touching a stroke-start column
    // has the smallest prediction index for it.
    std::size_t next = 0;
    for (auto [i, j] : path.pairs) {
        while (next < starts.size() && static_cast<std::size_t>(j) > starts[next]) ++next;
        if (next < starts.size() && static_cast<std::size_t>(j) == starts[next]) {
            labels[static_cast<std::size_t>(i)] = 1;
            ++next;
        }
    }
    return labels;
}

TokenLabels token_labels_from_alignment(const AlignmentPath& path, const StrokeSequence& gt,
                                        double sos_pos_weight, double eos_pos_weight) {
    TokenLabels out;
    out.sos = sos_labels_from_alignment(path, gt);
    std::size_t n = out.sos.size();
    out.eos.assign(n, 0);
    std::size_t gt_n = gt.point_count();
    for (auto [i, j] : path.pairs) {
        if (static_cast<std::size_t>(j) + gt.eos_suffix >= gt_n)
            out.eos[static_cast<std::size_t>(i)] = 1;
    }
    if (sos_pos_weight > 0.0) {
        out.sos_pos_weight = sos_pos_weight;
    } else {
        auto positives = static_cast<double>(std::count(out.sos.begin(), out.sos.end(), 1));
        out.sos_pos_weight = positives > 0.0 ? (static_cast<double>(n) - positives) / positives
                                             : 1.0;
    }
    out.eos_pos_weight = eos_pos_weight;
    return out;
}

double weighted_token_loss(std::span<const double> logits,
                           std::span<const std::uint8_t> labels, double pos_weight) {
    if (logits.size() != labels.size())
        throw std::invalid_argument("weighted_token_loss: length mismatch");
    if (logits.empty()) throw std::invalid_argument("weighted_token_loss: empty input");
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k)
        total += labels[k] ? pos_weight * softplus(-logits[k]) : softplus(logits[k]);
    return total / static_cast<double>(logits.size());
}

std::vector<double> weighted_token_loss_grad(std::span<const double> logits,
                                             std::span<const std::uint8_t> labels,
                                             double pos_weight) {
    if (logits.size() != labels.size())
        throw std::invalid_argument("weighted_token_loss: length mismatch");
    std::vector<double> grad(logits.size());
    auto n = static_cast<double>(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        double s = sigmoid(logits[k]);
        grad[k] = (labels[k] ? pos_weight * (s - 1.0) : s) / n;
    }
    return grad;
}

LossBreakdown composite_loss_given(const RelativeSequence& pred_rel,
                                   std::span<const double> sos_logits,
                                   std::span<const double> eos_logits,
                                   std::span<const Point> gt_points, const AlignmentPath& path,
                                   const TokenLabels& labels, const CompositeConfig& cfg) {
    std::vector<Point> abs = flatten(to_absolute(pred_rel));
    double coord = 0.0;
    for (auto [i, j] : path.pairs)
        coord += point_cost(abs[static_cast<std::size_t>(i)],
                            gt_points[static_cast<std::size_t>(j)], cfg.metric);
    LossBreakdown b;
    b.coord = coord;
    b.sos = weighted_token_loss(sos_logits, labels.sos, labels.sos_pos_weight);
    b.eos = weighted_token_loss(eos_logits, labels.eos, labels.eos_pos_weight);
    b.w_coord = cfg.w_coord;
    b.w_sos = cfg.w_sos;
    b.w_eos = cfg.w_eos;
    b.total = cfg.w_coord * b.coord + cfg.w_sos * b.sos + cfg.w_eos * b.eos;
    return b;
}

CompositeResult composite_loss(const RelativeSequence& pred_rel,
                               std::span<const double> sos_logits,
                               std::span<const double> eos_logits, const StrokeSequence& gt,
                               const CompositeConfig& cfg) {
    std::size_t n = pred_rel.point_count();
    if (sos_logits.size() != n || eos_logits.size() != n)
        throw std::invalid_argument("composite_loss: logit length mismatch");

    StrokeSequence pred_abs = to_absolute(pred_rel);
    std::vector<Point> p = flatten(pred_abs);

    CompositeResult res;
    StrokeSequence target;
    if (cfg.alignment == AlignmentMode::Dtw) {
        target = eos_pad(gt, cfg.eos_pad_k);
        res.gt_points = flatten(target);
        DtwResult d = dtw(p, res.gt_points, cfg.metric, cfg.band_radius);
        res.path = std::move(d.path);
    } else {
        target = resample_equidistant(gt, n);
        res.gt_points = flatten(target);
        res.path.pairs.reserve(n);
        for (std::size_t k = 0; k < n; ++k)
            res.path.pairs.emplace_back(static_cast<std::int32_t>(k),
                                        static_cast<std::int32_t>(k));
    }

    res.labels = token_labels_from_alignment(res.path, target, cfg.sos_pos_weight,
                                             cfg.eos_pos_weight);
    res.breakdown =
        composite_loss_given(pred_rel, sos_logits, eos_logits, res.gt_points, res.path,
                             res.labels, cfg);

    // Coordinate gradients per absolute point, then chained through the
    // cumulative sum: delta k collects everything downstream of it.
    std::vector<Point> g = dtw_grad(p, res.gt_points, res.path, cfg.metric);
    res.delta_grads.assign(pred_rel.deltas.size(), Point{0.0, 0.0});
    Point suffix{0.0, 0.0};
    for (std::size_t k = p.size(); k-- > 1;) {
        suffix = suffix + g[k];
        res.delta_grads[k - 1] = {cfg.w_coord * suffix.x, cfg.w_coord * suffix.y};
    }
    suffix = suffix + g[0];
    res.origin_grad = {cfg.w_coord * suffix.x, cfg.w_coord * suffix.y};

    res.sos_logit_grads = weighted_token_loss_grad(sos_logits, res.labels.sos,
                                                   res.labels.sos_pos_weight);
    for (auto& v : res.sos_logit_grads) v *= cfg.w_sos;
    res.eos_logit_grads = weighted_token_loss_grad(eos_logits, res.labels.eos,
                                                   res.labels.eos_pos_weight);
    for (auto& v : res.eos_logit_grads) v *= cfg.w_eos;
    return res;
}

}  // namespace strokealign
