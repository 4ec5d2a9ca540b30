#include "strokealign/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace strokealign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t div_floor(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

std::int64_t div_ceil(std::int64_t a, std::int64_t b) { return -div_floor(-a, b); }

/// In-band row range for ground-truth column j; see CostMatrix docs.
std::pair<int, int> band_rows(int n, int m, int radius, int j) {
    if (m <= 1) return {0, n - 1};
    std::int64_t big = static_cast<std::int64_t>(radius) * std::max(n - 1, m - 1);
    std::int64_t center = static_cast<std::int64_t>(j) * (n - 1);
    int lo = static_cast<int>(std::max<std::int64_t>(0, div_ceil(center - big, m - 1)));
    int hi = static_cast<int>(std::min<std::int64_t>(n - 1, div_floor(center + big, m - 1)));
    return {lo, hi};
}

void check_nonempty(std::span<const Point> pred, std::span<const Point> gt) {
    if (pred.empty() || gt.empty()) throw std::invalid_argument("dtw: empty sequence");
}

}  // namespace

double point_cost(Point p, Point t, PointMetric metric) {
    double dx = p.x - t.x, dy = p.y - t.y;
    if (metric == PointMetric::L1) return std::fabs(dx) + std::fabs(dy);
    return std::sqrt(dx * dx + dy * dy);
}

int default_band_radius(std::size_t n, std::size_t m) {
    auto nl = static_cast<std::int64_t>(n), ml = static_cast<std::int64_t>(m);
    std::int64_t mismatch = std::llabs(nl - ml);
    std::int64_t tenth = div_ceil(std::max(nl, ml), 10);
    return static_cast<int>(std::max(mismatch, tenth));
}

CostMatrix CostMatrix::build(std::span<const Point> pred, std::span<const Point> gt,
                             PointMetric metric, int band_radius) {
    check_nonempty(pred, gt);
    if (band_radius < 0) band_radius = default_band_radius(pred.size(), gt.size());

    CostMatrix cm;
    cm.n_ = static_cast<int>(pred.size());
    cm.m_ = static_cast<int>(gt.size());
    cm.radius_ = band_radius;
    cm.gt_.assign(gt.begin(), gt.end());
    cm.lo_.resize(cm.m_);
    cm.off_.resize(cm.m_ + 1);
    std::size_t total = 0;
    for (int j = 0; j < cm.m_; ++j) {
        auto [lo, hi] = band_rows(cm.n_, cm.m_, band_radius, j);
        cm.lo_[j] = lo;
        cm.off_[j] = total;
        total += static_cast<std::size_t>(hi - lo + 1);
    }
    cm.off_[cm.m_] = total;
    cm.cum_.resize(total);
    cm.compute_columns(pred, 0, metric);
    return cm;
}

int CostMatrix::col_hi(int j) const {
    auto ju = static_cast<std::size_t>(j);
    return lo_[ju] + static_cast<int>(off_[ju + 1] - off_[ju]) - 1;
}

double CostMatrix::at(int i, int j) const {
    if (j < 0 || j >= m_) return kInf;
    auto ju = static_cast<std::size_t>(j);
    int lo = lo_[ju];
    int span = static_cast<int>(off_[ju + 1] - off_[ju]);
    if (i < lo || i >= lo + span) return kInf;
    return cum_[off_[ju] + static_cast<std::size_t>(i - lo)];
}

double CostMatrix::terminal_cost() const { return at(n_ - 1, m_ - 1); }

void CostMatrix::compute_columns(std::span<const Point> pred, int j_from, PointMetric metric) {
    for (int j = std::max(0, j_from); j < m_; ++j) {
        auto ju = static_cast<std::size_t>(j);
        int lo = lo_[ju];
        int hi = col_hi(j);
        double* cur = cum_.data() + off_[ju];
        const double* prev = j > 0 ? cum_.data() + off_[ju - 1] : nullptr;
        int plo = j > 0 ? lo_[ju - 1] : 0;
        int phi = j > 0 ? col_hi(j - 1) : -1;
        const Point t = gt_[ju];
        for (int i = lo; i <= hi; ++i) {
            double local = point_cost(pred[static_cast<std::size_t>(i)], t, metric);
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = kInf;
                if (j > 0) {
                    if (i - 1 >= plo && i - 1 <= phi) best = prev[i - 1 - plo];  // diagonal
                    if (i >= plo && i <= phi) best = std::min(best, prev[i - plo]);
                }
                if (i > lo) best = std::min(best, cur[i - 1 - lo]);
            }
            cur[i - lo] = std::isinf(best) ? kInf : local + best;
        }
    }
}

void CostMatrix::recompute_from(std::span<const Point> pred, std::span<const Point> new_gt,
                                int j_lo, PointMetric metric) {
    gt_.assign(new_gt.begin(), new_gt.end());
    compute_columns(pred, j_lo, metric);
}

namespace {

DtwResult backtrack(const CostMatrix& cm) {
    if (std::isinf(cm.terminal_cost()))
        throw std::invalid_argument("dtw: band too narrow for any valid path");

    DtwResult res;
    res.cost = cm.terminal_cost();
    int i = cm.rows() - 1, j = cm.cols() - 1;
    res.path.pairs.emplace_back(i, j);
    while (i != 0 || j != 0) {
        double diag = (i > 0 && j > 0) ? cm.at(i - 1, j - 1) : kInf;
        double decj = j > 0 ? cm.at(i, j - 1) : kInf;
        double deci = i > 0 ? cm.at(i - 1, j) : kInf;
        double best = std::min({diag, decj, deci});
        if (diag == best) {
            --i;
            --j;
        } else if (decj == best) {
            --j;
        } else {
            --i;
        }
        res.path.pairs.emplace_back(i, j);
    }
    std::reverse(res.path.pairs.begin(), res.path.pairs.end());
    return res;
}

}  // namespace

double dtw_cost(std::span<const Point> pred, std::span<const Point> gt, PointMetric metric,
                int band_radius) {
    check_nonempty(pred, gt);
    if (band_radius < 0) band_radius = default_band_radius(pred.size(), gt.size());
    int n = static_cast<int>(pred.size()), m = static_cast<int>(gt.size());

    // Rolling two-column storage; memory stays proportional to the band.
    std::vector<double> prev, cur;
    int plo = 0, phi = -1;
    for (int j = 0; j < m; ++j) {
        auto [lo, hi] = band_rows(n, m, band_radius, j);
        cur.assign(static_cast<std::size_t>(hi - lo + 1), kInf);
        const Point t = gt[static_cast<std::size_t>(j)];
        for (int i = lo; i <= hi; ++i) {
            double local = point_cost(pred[static_cast<std::size_t>(i)], t, metric);
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = kInf;
                if (j > 0) {
                    if (i - 1 >= plo && i - 1 <= phi) best = prev[static_cast<std::size_t>(i - 1 - plo)];
                    if (i >= plo && i <= phi) best = std::min(best, prev[static_cast<std::size_t>(i - plo)]);
                }
                if (i > lo) best = std::min(best, cur[static_cast<std::size_t>(i - 1 - lo)]);
            }
            cur[static_cast<std::size_t>(i - lo)] = std::isinf(best) ? kInf : local + best;
        }
        prev.swap(cur);
        plo = lo;
        phi = hi;
    }
    double total = prev[static_cast<std::size_t>(n - 1 - plo)];
    if (std::isinf(total)) throw std::invalid_argument("dtw: band too narrow for any valid path");
    return total;
}

DtwResult dtw(std::span<const Point> pred, std::span<const Point> gt, PointMetric metric,
              int band_radius) {
    CostMatrix cm = CostMatrix::build(pred, gt, metric, band_radius);
    return backtrack(cm);
}

DtwResult dtw_with_matrix(std::span<const Point> pred, std::span<const Point> gt,
                          PointMetric metric, int band_radius, CostMatrix& out_matrix) {
    out_matrix = CostMatrix::build(pred, gt, metric, band_radius);
    return backtrack(out_matrix);
}

DtwResult dtw_loss(const StrokeSequence& pred, const StrokeSequence& gt, PointMetric metric,
                   int band_radius) {
    validate(pred);
    validate(gt);
    std::vector<Point> p = flatten(pred), t = flatten(gt);
    return dtw(p, t, metric, band_radius);
}

std::vector<Point> dtw_grad(std::span<const Point> pred, std::span<const Point> gt,
                            const AlignmentPath& path, PointMetric metric) {
    std::vector<Point> grad(pred.size(), Point{0.0, 0.0});
    for (auto [i, j] : path.pairs) {
        if (i < 0 || static_cast<std::size_t>(i) >= pred.size() || j < 0 ||
            static_cast<std::size_t>(j) >= gt.size())
            throw std::invalid_argument("dtw_grad: path index out of range");
        Point d = pred[static_cast<std::size_t>(i)] - gt[static_cast<std::size_t>(j)];
        auto& g = grad[static_cast<std::size_t>(i)];
        if (metric == PointMetric::L1) {
            g.x += (d.x > 0.0) - (d.x < 0.0);
            g.y += (d.y > 0.0) - (d.y < 0.0);
        } else {
            double norm = std::sqrt(d.x * d.x + d.y * d.y);
            if (norm > 0.0) {
                g.x += d.x / norm;
                g.y += d.y / norm;
            }
        }
    }
    return grad;
}

DtwResult dtw_recompute_window(CostMatrix& cm, std::span<const Point> pred,
                               std::span<const Point> new_gt,
                               std::pair<int, int> changed_gt_range, PointMetric metric) {
    auto [j_lo, j_hi] = changed_gt_range;
    if (static_cast<int>(pred.size()) != cm.rows() ||
        static_cast<int>(new_gt.size()) != cm.cols())
        throw std::invalid_argument("dtw_recompute_window: size mismatch");
    if (j_lo < 0 || j_hi < j_lo || j_hi >= cm.cols())
        throw std::invalid_argument("dtw_recompute_window: inconsistent changed range");
    const auto& old_gt = cm.gt();
    for (int j = 0; j < cm.cols(); ++j) {
        if (j >= j_lo && j <= j_hi) continue;
        auto ju = static_cast<std::size_t>(j);
        if (new_gt[ju].x != old_gt[ju].x || new_gt[ju].y != old_gt[ju].y)
            throw std::invalid_argument(
                "dtw_recompute_window: ground truth changed outside declared range");
    }
    cm.recompute_from(pred, new_gt, j_lo, metric);
    return backtrack(cm);
}

}  // namespace strokealign
