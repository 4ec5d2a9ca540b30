#include "strokealign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace strokealign {

namespace {

struct NormParams {
    double xmin = 0.0, ymin = 0.0, scale = 1.0;
};

NormParams norm_params(const StrokeSequence& seq) {
    double xmin = std::numeric_limits<double>::infinity();
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : seq.strokes)
        for (const auto& p : s.points) {
            xmin = std::min(xmin, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    return {xmin, ymin, ymax > ymin ? 1.0 / (ymax - ymin) : 1.0};
}

StrokeSequence apply_norm(const StrokeSequence& seq, const NormParams& np) {
    StrokeSequence out = seq;
    for (auto& s : out.strokes)
        for (auto& p : s.points) {
            p.x = (p.x - np.xmin) * np.scale;
            p.y = (p.y - np.ymin) * np.scale;
        }
    return out;
}

/// Uniform grid over `points` answering exact nearest-neighbor queries.
class GridNn {
public:
    GridNn(std::span<const Point> points, PointMetric metric)
        : points_(points), metric_(metric) {
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = xmin, ymax = -xmin;
        for (const auto& p : points) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        x0_ = xmin;
        y0_ = ymin;
        double extent = std::max(xmax - xmin, ymax - ymin);
        double divisions = std::max(1.0, std::floor(std::sqrt(static_cast<double>(points.size()))));
        cell_ = std::max(extent / divisions, 1e-12);
        nx_ = cell_index(xmax, x0_) + 1;
        ny_ = cell_index(ymax, y0_) + 1;
        for (std::size_t k = 0; k < points.size(); ++k)
            cells_[key(cell_index(points[k].x, x0_), cell_index(points[k].y, y0_))].push_back(k);
    }

    double nearest_cost(Point q) const {
        int qx = std::clamp(cell_index(q.x, x0_), 0, nx_ - 1);
        int qy = std::clamp(cell_index(q.y, y0_), 0, ny_ - 1);
        double best = std::numeric_limits<double>::infinity();
        int max_ring = std::max({nx_, ny_, qx + 1, qy + 1, nx_ - qx, ny_ - qy});
        for (int ring = 0; ring <= max_ring; ++ring) {
            // Everything in ring k+1 or beyond is at least k*cell away.
            if (best <= static_cast<double>(std::max(0, ring - 1)) * cell_) break;
            scan_ring(qx, qy, ring, q, best);
        }
        return best;
    }

private:
    int cell_index(double v, double origin) const {
        return static_cast<int>(std::floor((v - origin) / cell_));
    }
    static std::int64_t key(int cx, int cy) {
        return (static_cast<std::int64_t>(cx) << 32) ^ static_cast<std::uint32_t>(cy);
    }

    void scan_cell(int cx, int cy, Point q, double& best) const {
        auto it = cells_.find(key(cx, cy));
        if (it == cells_.end()) return;
        for (std::size_t idx : it->second)
            best = std::min(best, point_cost(q, points_[idx], metric_));
    }

    void scan_ring(int qx, int qy, int ring, Point q, double& best) const {
        if (ring == 0) {
            scan_cell(qx, qy, q, best);
            return;
        }
        for (int cx = qx - ring; cx <= qx + ring; ++cx) {
            scan_cell(cx, qy - ring, q, best);
            scan_cell(cx, qy + ring, q, best);
        }
        for (int cy = qy - ring + 1; cy <= qy + ring - 1; ++cy) {
            scan_cell(qx - ring, cy, q, best);
            scan_cell(qx + ring, cy, q, best);
        }
    }

    std::span<const Point> points_;
    PointMetric metric_;
    double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

double avg_dtw_distance(const StrokeSequence& pred, const StrokeSequence& gt,
                        PointMetric metric) {
    validate(pred);
    validate(gt);
    NormParams np = norm_params(gt);
    StrokeSequence gt_n = apply_norm(gt, np);
    StrokeSequence pred_n = apply_norm(pred, np);
    StrokeSequence pred_r = resample_equidistant(pred_n, gt.point_count());
    DtwResult d = dtw_loss(pred_r, gt_n, metric, -1);
    return d.cost / static_cast<double>(d.path.pairs.size());
}

double nn_distance(std::span<const Point> from, std::span<const Point> to, PointMetric metric) {
    if (from.empty() || to.empty()) throw std::invalid_argument("nn_distance: empty point set");
    GridNn grid(to, metric);
    double total = 0.0;
    for (const auto& q : from) total += grid.nearest_cost(q);
    return total / static_cast<double>(from.size());
}

double ink_nn_distance(const StrokeSequence& pred, const RasterImage& img,
                       const RasterTransform& tf, double threshold) {
    validate(pred);
    std::vector<Point> ink;
    int rmin = img.height, rmax = -1;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            if (static_cast<double>(img.at(r, c)) < threshold) {
                ink.push_back({c + 0.5, r + 0.5});
                rmin = std::min(rmin, r);
                rmax = std::max(rmax, r);
            }
    if (ink.empty()) throw std::runtime_error("ink_nn_distance: no ink pixels");
    double box_height = static_cast<double>(rmax - rmin + 1);

    std::vector<Point> mapped;
    for (const auto& p : flatten(pred)) mapped.push_back(tf.apply(p));
    return nn_distance(mapped, ink, PointMetric::L2) / box_height;
}

EvalReport evaluate(const StrokeSequence& pred, const StrokeSequence& gt,
                    const RasterImage* img, const RasterTransform* tf) {
    EvalReport report;
    report.pred_points = pred.point_count();
    report.gt_points = gt.point_count();
    report.avg_dtw_l1 = avg_dtw_distance(pred, gt, PointMetric::L1);
    report.avg_dtw_l2 = avg_dtw_distance(pred, gt, PointMetric::L2);

    NormParams np = norm_params(gt);
    std::vector<Point> pred_n = flatten(apply_norm(pred, np));
    std::vector<Point> gt_n = flatten(apply_norm(gt, np));
    report.nn_gt_to_pred = nn_distance(gt_n, pred_n, PointMetric::L2);
    report.nn_pred_to_gt = nn_distance(pred_n, gt_n, PointMetric::L2);

    if (img != nullptr && tf != nullptr) report.ink_nn = ink_nn_distance(pred, *img, *tf);
    return report;
}

std::string eval_csv_header() {
    return "avg_dtw_l1,avg_dtw_l2,nn_gt_to_pred,nn_pred_to_gt,ink_nn,pred_points,gt_points";
}

std::string to_csv(const EvalReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << r.avg_dtw_l1 << ',' << r.avg_dtw_l2 << ',' << r.nn_gt_to_pred << ','
       << r.nn_pred_to_gt << ',';
    if (r.ink_nn) os << *r.ink_nn;
    os << ',' << r.pred_points << ',' << r.gt_points;
    return os.str();
}

std::string pretty_table(const EvalReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << "metric                 value\n";
    os << "avg dtw (L1)           " << r.avg_dtw_l1 << '\n';
    os << "avg dtw (L2)           " << r.avg_dtw_l2 << '\n';
    os << "nn gt->pred (L2)       " << r.nn_gt_to_pred << '\n';
    os << "nn pred->gt (L2)       " << r.nn_pred_to_gt << '\n';
    if (r.ink_nn) os << "ink nn (normalized)    " << *r.ink_nn << '\n';
    os << "pred/gt points         " << r.pred_points << "/" << r.gt_points << '\n';
    return os.str();
}

}  // namespace strokealign
