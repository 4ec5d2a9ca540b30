#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace strokealign {

/// Image-convention 2-D point: x grows rightward, y grows downward,
/// origin at the top left.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }

/// One pen-down trace: an ordered polyline with at least one point.
struct Stroke {
    std::vector<Point> points;
};

/// Ordered strokes with implicit per-point flags: sos is true exactly at
/// stroke heads, eos is true for the last `eos_suffix` flattened points.
/// Keeping the flags structural makes the invariants unbreakable.
struct StrokeSequence {
    std::vector<Stroke> strokes;
    std::size_t eos_suffix = 0;

    std::size_t point_count() const {
        std::size_t n = 0;
        for (const auto& s : strokes) n += s.points.size();
        return n;
    }
};

/// Throws std::invalid_argument when the sequence breaks an invariant
/// (no strokes, an empty stroke, a non-finite coordinate, or an eos
/// suffix longer than the sequence).
void validate(const StrokeSequence& seq);

/// Flattened copies of the points in drawing order.
std::vector<Point> flatten(const StrokeSequence& seq);

/// Flat index of each stroke's first point.
std::vector<std::size_t> stroke_starts(const StrokeSequence& seq);

/// Stroke index owning each flat point index.
std::vector<std::size_t> stroke_of_point(const StrokeSequence& seq);

bool sos_flag(const StrokeSequence& seq, std::size_t flat_index);
bool eos_flag(const StrokeSequence& seq, std::size_t flat_index);

/// Per-step displacements whose cumulative sum from `origin` reproduces an
/// absolute sequence. Pen-up gaps are ordinary deltas; `sos_starts` holds
/// the flat indices where strokes begin (always including 0) and
/// `eos_suffix` mirrors StrokeSequence.
struct RelativeSequence {
    Point origin;
    std::vector<Point> deltas;
    std::vector<std::size_t> sos_starts{0};
    std::size_t eos_suffix = 0;

    std::size_t point_count() const { return deltas.size() + 1; }
};

RelativeSequence to_relative(const StrokeSequence& seq);
StrokeSequence to_absolute(const RelativeSequence& rel);

/// Redistributes `total_points` across strokes proportionally to arc length
/// (largest remainder, minimum 2 per stroke) and places points at uniform
/// arc-length intervals along each stroke's polyline. Stroke endpoints are
/// kept exactly. Requires total_points >= 2 * stroke count.
StrokeSequence resample_equidistant(const StrokeSequence& seq, std::size_t total_points);

/// Translates the sequence to the origin and scales it so the vertical
/// extent becomes 1. Returns the applied scale factor (1 when the input
/// has zero vertical extent, in which case only the translation applies).
std::pair<StrokeSequence, double> normalize_height(const StrokeSequence& seq);

}  // namespace strokealign
