#include "strokealign/stroke.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strokealign {

void validate(const StrokeSequence& seq) {
    if (seq.strokes.empty()) throw std::invalid_argument("stroke sequence is empty");
    std::size_t n = 0;
    for (const auto& s : seq.strokes) {
        if (s.points.empty()) throw std::invalid_argument("stroke has no points");
        for (const auto& p : s.points) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw std::invalid_argument("non-finite stroke coordinate");
        }
        n += s.points.size();
    }
    if (seq.eos_suffix > n) throw std::invalid_argument("eos suffix longer than sequence");
}

std::vector<Point> flatten(const StrokeSequence& seq) {
    std::vector<Point> out;
    out.reserve(seq.point_count());
    for (const auto& s : seq.strokes) out.insert(out.end(), s.points.begin(), s.points.end());
    return out;
}

std::vector<std::size_t> stroke_starts(const StrokeSequence& seq) {
    std::vector<std::size_t> starts;
    starts.reserve(seq.strokes.size());
    std::size_t at = 0;
    for (const auto& s : seq.strokes) {
        starts.push_back(at);
        at += s.points.size();
    }
    return starts;
}

std::vector<std::size_t> stroke_of_point(const StrokeSequence& seq) {
    std::vector<std::size_t> owner;
    owner.reserve(seq.point_count());
    for (std::size_t k = 0; k < seq.strokes.size(); ++k)
        owner.insert(owner.end(), seq.strokes[k].points.size(), k);
    return owner;
}

bool sos_flag(const StrokeSequence& seq, std::size_t flat_index) {
    std::size_t at = 0;
    for (const auto& s : seq.strokes) {
        if (flat_index == at) return true;
        if (flat_index < at + s.points.size()) return false;
        at += s.points.size();
    }
    return false;
}

bool eos_flag(const StrokeSequence& seq, std::size_t flat_index) {
    std::size_t n = seq.point_count();
    return flat_index < n && flat_index + seq.eos_suffix >= n;
}

RelativeSequence to_relative(const StrokeSequence& seq) {
    validate(seq);
    std::vector<Point> abs = flatten(seq);
    RelativeSequence rel;
    rel.origin = abs.front();
    rel.deltas.reserve(abs.size() - 1);
    for (std::size_t k = 1; k < abs.size(); ++k) rel.deltas.push_back(abs[k] - abs[k - 1]);
    rel.sos_starts = stroke_starts(seq);
    rel.eos_suffix = seq.eos_suffix;
    return rel;
}

StrokeSequence to_absolute(const RelativeSequence& rel) {
    std::vector<Point> abs(rel.deltas.size() + 1);
    abs[0] = rel.origin;
    for (std::size_t k = 0; k < rel.deltas.size(); ++k) abs[k + 1] = abs[k] + rel.deltas[k];

    StrokeSequence seq;
    seq.eos_suffix = rel.eos_suffix;
    std::vector<std::size_t> starts = rel.sos_starts;
    if (starts.empty() || starts.front() != 0) starts.insert(starts.begin(), 0);
    for (std::size_t k = 0; k < starts.size(); ++k) {
        std::size_t lo = starts[k];
        std::size_t hi = (k + 1 < starts.size()) ? starts[k + 1] : abs.size();
        if (lo >= hi) throw std::invalid_argument("sos flags out of order");
        seq.strokes.push_back({std::vector<Point>(abs.begin() + lo, abs.begin() + hi)});
    }
    return seq;
}

namespace {

double segment_length(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

double stroke_length(const Stroke& s) {
    double len = 0.0;
    for (std::size_t k = 1; k < s.points.size(); ++k)
        len += segment_length(s.points[k - 1], s.points[k]);
    return len;
}

/// Samples `budget` points at uniform arc-length spacing along the
/// polyline, keeping both endpoints exactly. budget >= 2.
Stroke resample_stroke(const Stroke& s, std::size_t budget) {
    Stroke out;
    out.points.reserve(budget);
    double total = stroke_length(s);
    if (total <= 0.0) {
        out.points.assign(budget, s.points.front());
        return out;
    }

    out.points.push_back(s.points.front());
    std::size_t seg = 1;              // index of current segment endpoint
    double seg_start_arc = 0.0;       // arc length at segment start
    double seg_len = segment_length(s.points[0], s.points[1]);
    for (std::size_t k = 1; k + 1 < budget; ++k) {
        double target = total * static_cast<double>(k) / static_cast<double>(budget - 1);
        while (seg_start_arc + seg_len < target && seg + 1 < s.points.size()) {
            seg_start_arc += seg_len;
            ++seg;
            seg_len = segment_length(s.points[seg - 1], s.points[seg]);
        }
        double t = seg_len > 0.0 ? (target - seg_start_arc) / seg_len : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        Point a = s.points[seg - 1], b = s.points[seg];
        out.points.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
    out.points.push_back(s.points.back());
    return out;
}

}  // namespace

StrokeSequence resample_equidistant(const StrokeSequence& seq, std::size_t total_points) {
    validate(seq);
    std::size_t n_strokes = seq.strokes.size();
    if (total_points < 2 * n_strokes)
        throw std::invalid_argument("resample budget below 2 points per stroke");

    // Two points per stroke are guaranteed; the remainder is apportioned to
    // strokes by arc length with the largest-remainder rule.
    std::vector<double> lens(n_strokes);
    double len_sum = 0.0;
    for (std::size_t k = 0; k < n_strokes; ++k) {
        lens[k] = stroke_length(seq.strokes[k]);
        len_sum += lens[k];
    }
    std::size_t extra = total_points - 2 * n_strokes;
    std::vector<std::size_t> budget(n_strokes, 2);
    if (extra > 0) {
        std::vector<double> ideal(n_strokes);
        for (std::size_t k = 0; k < n_strokes; ++k)
            ideal[k] = len_sum > 0.0 ? static_cast<double>(extra) * lens[k] / len_sum
                                     : static_cast<double>(extra) / static_cast<double>(n_strokes);
        std::size_t assigned = 0;
        std::vector<std::pair<double, std::size_t>> rem(n_strokes);
        for (std::size_t k = 0; k < n_strokes; ++k) {
            auto fl = static_cast<std::size_t>(std::floor(ideal[k]));
            budget[k] += fl;
            assigned += fl;
            rem[k] = {ideal[k] - std::floor(ideal[k]), k};
        }
        std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
            return a.first > b.first;  // ties resolved by index via stable sort
        });
        for (std::size_t k = 0; assigned < extra; ++k, ++assigned) budget[rem[k].second] += 1;
    }

    StrokeSequence out;
    out.strokes.reserve(n_strokes);
    for (std::size_t k = 0; k < n_strokes; ++k)
        out.strokes.push_back(resample_stroke(seq.strokes[k], budget[k]));
    if (seq.eos_suffix > 0) out.eos_suffix = 1;
    return out;
}

std::pair<StrokeSequence, double> normalize_height(const StrokeSequence& seq) {
    validate(seq);
    double xmin = seq.strokes[0].points[0].x, ymin = seq.strokes[0].points[0].y, ymax = ymin;
    for (const auto& s : seq.strokes)
        for (const auto& p : s.points) {
            xmin = std::min(xmin, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    double scale = ymax > ymin ? 1.0 / (ymax - ymin) : 1.0;
    StrokeSequence out = seq;
    for (auto& s : out.strokes)
        for (auto& p : s.points) {
            p.x = (p.x - xmin) * scale;
            p.y = (p.y - ymin) * scale;
        }
    return {out, scale};
}

}  // namespace strokealign
