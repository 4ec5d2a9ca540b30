#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "strokealign/stroke.hpp"

namespace strokealign {

enum class PointMetric { L1, L2 };

/// Pairwise point distance: L1 = |dx| + |dy|, L2 = sqrt(dx^2 + dy^2).
double point_cost(Point p, Point t, PointMetric metric);

/// Default half-width of the warping window: wide enough for the length
/// mismatch plus 10% of the longer sequence.
int default_band_radius(std::size_t n, std::size_t m);

/// Monotone, continuous index mapping from prediction indices i to ground
/// truth indices j: starts at (0,0), ends at (n-1,m-1), steps are (+1,0),
/// (0,+1) or (+1,+1).
struct AlignmentPath {
    std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
};

/// Banded cumulative-cost storage, column-major over ground-truth indices.
/// A cell (i,j) is inside the band when |i*(m-1) - j*(n-1)| <= r*max(n-1,m-1),
/// a Sakoe-Chiba band around the rescaled diagonal that always contains both
/// corners and is symmetric under swapping the two sequences. Cells outside
/// the band read as +infinity. Column j depends only on column j-1, which is
/// what makes suffix recomputation possible.
class CostMatrix {
public:
    static CostMatrix build(std::span<const Point> pred, std::span<const Point> gt,
                            PointMetric metric, int band_radius);

    int rows() const { return n_; }
    int cols() const { return m_; }
    int band_radius() const { return radius_; }
    int col_lo(int j) const { return lo_[static_cast<std::size_t>(j)]; }
    int col_hi(int j) const;

    /// Cumulative cost at (i,j); +infinity outside the band or when the
    /// cell is unreachable.
    double at(int i, int j) const;

    double terminal_cost() const;
    const std::vector<Point>& gt() const { return gt_; }

    /// Recomputes cumulative columns j_lo..m-1 against `new_gt` and adopts
    /// it. Column order and arithmetic match build() exactly, so results
    /// are bit-identical to a fresh build.
    void recompute_from(std::span<const Point> pred, std::span<const Point> new_gt,
                        int j_lo, PointMetric metric);

private:
    int n_ = 0, m_ = 0, radius_ = 0;
    std::vector<Point> gt_;
    std::vector<int> lo_;            // first in-band row per column
    std::vector<std::size_t> off_;   // value offset per column, plus end sentinel
    std::vector<double> cum_;

    void compute_columns(std::span<const Point> pred, int j_from, PointMetric metric);
};

struct DtwResult {
    double cost = 0.0;
    AlignmentPath path;
};

/// Minimal total point cost over monotone continuous paths within the band,
/// using rolling two-column storage (no full matrix is kept).
/// band_radius < 0 selects default_band_radius. Throws on empty input or
/// when the band admits no valid path.
double dtw_cost(std::span<const Point> pred, std::span<const Point> gt, PointMetric metric,
                int band_radius = -1);

/// As dtw_cost but also returns the optimal path. Ties in the backward
/// induction prefer the diagonal step, then the step decreasing j, then the
/// step decreasing i.
DtwResult dtw(std::span<const Point> pred, std::span<const Point> gt, PointMetric metric,
              int band_radius = -1);

/// dtw plus the banded matrix, for callers that will recompute windows.
DtwResult dtw_with_matrix(std::span<const Point> pred, std::span<const Point> gt,
                          PointMetric metric, int band_radius, CostMatrix& out_matrix);

/// DTW over the flattened points of two stroke sequences.
DtwResult dtw_loss(const StrokeSequence& pred, const StrokeSequence& gt, PointMetric metric,
                   int band_radius = -1);

/// Gradient of the path-fixed loss sum c(p_i, t_j) with respect to each
/// prediction point. L1 contributes the per-axis sign, L2 the unit vector
/// (p-t)/|p-t|; kinks and coincident points contribute zero.
std::vector<Point> dtw_grad(std::span<const Point> pred, std::span<const Point> gt,
                            const AlignmentPath& path, PointMetric metric);

/// Incremental DTW after a ground-truth edit confined to columns
/// [changed.first, changed.second]: columns before the range are reused,
/// columns from the range start on are recomputed. The matrix is updated in
/// place and the result is bit-identical to a full dtw on (pred, new_gt).
DtwResult dtw_recompute_window(CostMatrix& cm, std::span<const Point> pred,
                               std::span<const Point> new_gt,
                               std::pair<int, int> changed_gt_range, PointMetric metric);

}  // namespace strokealign
