#include <doctest.h>

#include <cmath>

#include "strokealign/render.hpp"
#include "strokealign/targets.hpp"
#include "test_helpers.hpp"

using namespace strokealign;
using namespace strokealign::testing;

namespace {

StrokeSequence one_stroke(std::vector<Point> pts) {
    StrokeSequence s;
    s.strokes.push_back({std::move(pts)});
    return s;
}

}  // namespace

TEST_CASE("eos_pad duplicates the final point and flags the suffix") {
    StrokeSequence gt = one_stroke({{0, 0}, {1, 0}, {2, 0}});
    StrokeSequence padded = eos_pad(gt, 20);
    CHECK(padded.point_count() == 23);
    CHECK(padded.eos_suffix == 21);
    for (std::size_t k = 0; k < 23; ++k) CHECK(eos_flag(padded, k) == (k >= 2));

    StrokeSequence bare = eos_pad(gt, 0);
    CHECK(bare.point_count() == 3);
    CHECK(bare.eos_suffix == 1);

    // duplicates are zero-length segments, so the rendering is unchanged
    RasterResult a = rasterize(gt, 60, 2.0);
    RasterResult b = rasterize(padded, 60, 2.0);
    CHECK(a.image.pixels == b.image.pixels);
}

TEST_CASE("sos labels: first-match rule") {
    StrokeSequence gt;
    gt.strokes.push_back({std::vector<Point>(5, Point{0, 0})});
    gt.strokes.push_back({std::vector<Point>(3, Point{1, 1})});

    AlignmentPath diagonal;
    for (std::int32_t k = 0; k < 8; ++k) diagonal.pairs.push_back({k, k});
    auto labels = sos_labels_from_alignment(diagonal, gt);
    REQUIRE(labels.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) CHECK(labels[k] == (k == 0 || k == 5 ? 1 : 0));
}

TEST_CASE("sos labels: multiple predictions on one stroke start") {
    StrokeSequence gt;
    gt.strokes.push_back({std::vector<Point>(4, Point{0, 0})});
    gt.strokes.push_back({std::vector<Point>(2, Point{1, 1})});
    // pairs (3,4),(4,4),(5,4) all touch the stroke start at j=4
    AlignmentPath path;
    path.pairs = {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {3, 4}, {4, 4}, {5, 4}, {5, 5}};
    auto labels = sos_labels_from_alignment(path, gt);
    REQUIRE(labels.size() == 6);
    CHECK(labels[3] == 1);
    CHECK(labels[4] == 0);
    CHECK(labels[5] == 0);
}

TEST_CASE("exactly one sos label per ground-truth stroke") {
    Rng rng(55);
    for (int rep = 0; rep < 30; ++rep) {
        StrokeSequence gt = random_sequence(rng, 4, 5, 3.0);
        std::size_t m = gt.point_count();
        auto pred = random_points(rng, m + rng.below(m + 3), 3.0);  // denser predictions
        DtwResult r = dtw(pred, flatten(gt), PointMetric::L2, -1);
        auto labels = sos_labels_from_alignment(r.path, gt);
        CHECK(std::count(labels.begin(), labels.end(), 1) ==
              static_cast<long>(gt.strokes.size()));
    }
}

TEST_CASE("eos labels form a suffix with count k+1 on aligned duplicates") {
    Rng rng(56);
    StrokeSequence gt = one_stroke({{0, 0}, {1, 0}, {2, 0}, {3, 1}});
    const std::size_t k = 6;
    StrokeSequence padded = eos_pad(gt, k);
    std::vector<Point> pred = flatten(padded);  // perfect prediction
    DtwResult r = dtw(pred, flatten(padded), PointMetric::L2, -1);
    TokenLabels labels = token_labels_from_alignment(r.path, padded);
    auto first_true = std::find(labels.eos.begin(), labels.eos.end(), 1);
    CHECK(std::count(labels.eos.begin(), labels.eos.end(), 1) == static_cast<long>(k + 1));
    for (auto it = first_true; it != labels.eos.end(); ++it) CHECK(*it == 1);
}

TEST_CASE("weighted_token_loss values") {
    std::vector<double> confident{50.0};
    std::vector<std::uint8_t> yes{1};
    CHECK(weighted_token_loss(confident, yes, 1.0) < 1e-20);

    std::vector<double> zero{0.0};
    std::vector<std::uint8_t> no{0};
    CHECK(weighted_token_loss(zero, yes, 1.0) == doctest::Approx(std::log(2.0)));
    CHECK(weighted_token_loss(zero, no, 1.0) == doctest::Approx(std::log(2.0)));

    // numerically stable far beyond |logit| = 100
    std::vector<double> huge{300.0};
    CHECK(std::isfinite(weighted_token_loss(huge, no, 1.0)));
    CHECK(weighted_token_loss(huge, no, 1.0) == doctest::Approx(300.0));

    CHECK_THROWS_AS(weighted_token_loss(confident, std::vector<std::uint8_t>{1, 0}, 1.0),
                    std::invalid_argument);
}

TEST_CASE("weighted_token_loss gradient matches finite differences") {
    Rng rng(57);
    for (int rep = 0; rep < 25; ++rep) {
        std::size_t n = 1 + rng.below(8);
        std::vector<double> logits(n);
        std::vector<std::uint8_t> labels(n);
        for (std::size_t k = 0; k < n; ++k) {
            logits[k] = 6.0 * (rng.uniform() - 0.5);
            labels[k] = rng.uniform() < 0.3 ? 1 : 0;
        }
        double w = 0.5 + 4.0 * rng.uniform();
        auto grad = weighted_token_loss_grad(logits, labels, w);
        for (std::size_t k = 0; k < n; ++k) {
            auto f = [&](double v) {
                auto lg = logits;
                lg[k] = v;
                return weighted_token_loss(lg, labels, w);
            };
            CHECK(close_rel(grad[k], central_diff(f, logits[k]), 1e-6));
        }
    }
}

TEST_CASE("composite_loss vanishes on a perfect prediction") {
    StrokeSequence gt;
    gt.strokes.push_back({{{0, 0}, {1, 0}, {2, 1}}});
    gt.strokes.push_back({{{3, 1}, {4, 0}}});

    CompositeConfig cfg;
    cfg.eos_pad_k = 3;
    StrokeSequence padded = eos_pad(gt, cfg.eos_pad_k);
    RelativeSequence rel = to_relative(padded);
    std::size_t n = rel.point_count();

    // saturated logits at the label positions
    DtwResult r = dtw(flatten(padded), flatten(padded), cfg.metric, -1);
    TokenLabels labels = token_labels_from_alignment(r.path, padded);
    std::vector<double> sos(n), eos(n);
    for (std::size_t k = 0; k < n; ++k) {
        sos[k] = labels.sos[k] ? 60.0 : -60.0;
        eos[k] = labels.eos[k] ? 60.0 : -60.0;
    }

    CompositeResult res = composite_loss(rel, sos, eos, gt, cfg);
    CHECK(res.breakdown.coord == doctest::Approx(0.0));
    CHECK(res.breakdown.total < 1e-20);
}

TEST_CASE("composite_loss suffix-sum chain rule and finite differences") {
    Rng rng(58);
    for (int rep = 0; rep < 20; ++rep) {
        StrokeSequence gt = random_sequence(rng, 2, 5, 4.0);
        std::size_t n = 4 + rng.below(5);
        RelativeSequence rel;
        rel.origin = {4.0 * rng.uniform(), 4.0 * rng.uniform()};
        for (std::size_t k = 0; k + 1 < n; ++k)
            rel.deltas.push_back({rng.uniform() - 0.5, rng.uniform() - 0.5});
        std::vector<double> sos(n), eos(n);
        for (std::size_t k = 0; k < n; ++k) {
            sos[k] = 4.0 * (rng.uniform() - 0.5);
            eos[k] = 4.0 * (rng.uniform() - 0.5);
        }

        CompositeConfig cfg;
        cfg.metric = PointMetric::L2;  // smooth away from coincident points
        cfg.eos_pad_k = 2;
        CompositeResult res = composite_loss(rel, sos, eos, gt, cfg);

        auto frozen = [&](const RelativeSequence& r2, const std::vector<double>& s2,
                          const std::vector<double>& e2) {
            return composite_loss_given(r2, s2, e2, res.gt_points, res.path, res.labels, cfg)
                .total;
        };

        // deltas through the cumulative sum
        for (std::size_t k = 0; k < rel.deltas.size(); ++k) {
            for (int axis = 0; axis < 2; ++axis) {
                auto f = [&](double v) {
                    auto r2 = rel;
                    (axis == 0 ? r2.deltas[k].x : r2.deltas[k].y) = v;
                    return frozen(r2, sos, eos);
                };
                double x0 = axis == 0 ? rel.deltas[k].x : rel.deltas[k].y;
                double an = axis == 0 ? res.delta_grads[k].x : res.delta_grads[k].y;
                CHECK(close_rel(an, central_diff(f, x0), 1e-5));
            }
        }
        // origin receives the full sum
        auto fo = [&](double v) {
            auto r2 = rel;
            r2.origin.x = v;
            return frozen(r2, sos, eos);
        };
        CHECK(close_rel(res.origin_grad.x, central_diff(fo, rel.origin.x), 1e-5));

        // logits
        for (std::size_t k = 0; k < n; ++k) {
            auto fs = [&](double v) {
                auto s2 = sos;
                s2[k] = v;
                return frozen(rel, s2, eos);
            };
            CHECK(close_rel(res.sos_logit_grads[k], central_diff(fs, sos[k]), 1e-5));
        }
    }
}

TEST_CASE("suffix-sum structure on a three-point sequence") {
    // absolute-point gradients (g1, g2, g3) yield delta gradients
    // (g2+g3, g3): verified through a pure-coordinate composite call
    RelativeSequence rel;
    rel.origin = {0.0, 0.0};
    rel.deltas = {{1.0, 0.25}, {1.0, -0.5}};
    StrokeSequence gt;
    gt.strokes.push_back({{{0.3, 0.1}, {1.2, 0.4}, {2.4, -0.2}}});

    CompositeConfig cfg;
    cfg.metric = PointMetric::L2;
    cfg.w_sos = 0.0;
    cfg.w_eos = 0.0;
    cfg.eos_pad_k = 0;
    std::vector<double> logits(3, 0.0);
    CompositeResult res = composite_loss(rel, logits, logits, gt, cfg);

    std::vector<Point> p = flatten(to_absolute(rel));
    std::vector<Point> g = dtw_grad(p, res.gt_points, res.path, cfg.metric);
    CHECK(res.delta_grads[0].x == doctest::Approx(g[1].x + g[2].x));
    CHECK(res.delta_grads[1].x == doctest::Approx(g[2].x));
    CHECK(res.origin_grad.x == doctest::Approx(g[0].x + g[1].x + g[2].x));
}

TEST_CASE("doubling the positive weight doubles the positive contribution") {
    std::vector<double> logits{1.0, -2.0, 0.5};
    std::vector<std::uint8_t> labels{1, 0, 1};
    // loss(w) is affine in w with slope = mean positive-example bce, so the
    // positive contribution loss(w) - loss(0) must scale exactly with w
    double l0 = weighted_token_loss(logits, labels, 0.0);
    double l1 = weighted_token_loss(logits, labels, 1.0);
    double l2 = weighted_token_loss(logits, labels, 2.0);
    CHECK(l2 - l0 == doctest::Approx(2.0 * (l1 - l0)).epsilon(1e-15));
    CHECK(l1 >= 0.0);
}
