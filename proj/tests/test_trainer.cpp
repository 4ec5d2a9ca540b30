#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "strokealign/metrics.hpp"
#include "strokealign/trainer.hpp"
#include "test_helpers.hpp"

using namespace strokealign;
using namespace strokealign::testing;

namespace {

RasterImage render_synth(SynthKind kind, std::uint64_t seed, RasterTransform* tf = nullptr) {
    StrokeSequence seq = synth_generate({kind, seed, 40, 0.0});
    RasterResult r = rasterize(seq, 60, 2.0);
    if (tf != nullptr) *tf = r.transform;
    return r.image;
}

}  // namespace

TEST_CASE("forward output shapes and determinism") {
    ReferenceModel model = ReferenceModel::init(4, 16, 4, 3);
    RasterImage img = render_synth(SynthKind::Zigzag, 5);
    ModelOutput out = forward(model, img);
    std::size_t steps = static_cast<std::size_t>((img.width + 3) / 4);
    CHECK(out.sos_logits.size() == steps);
    CHECK(out.eos_logits.size() == steps);
    CHECK(out.rel.deltas.size() == steps - 1);
    CHECK(out.rel.origin.x == 0.0);
    CHECK(out.rel.origin.y == 30.0);

    ModelOutput again = forward(model, img);
    CHECK(out.sos_logits == again.sos_logits);
    CHECK(flatten(to_absolute(out.rel)).size() == steps);

    RasterImage wrong;
    wrong.height = 30;
    wrong.width = 10;
    wrong.pixels.assign(300, 255);
    CHECK_THROWS_AS(forward(model, wrong), std::invalid_argument);
}

TEST_CASE("zero output map produces zero deltas and logits") {
    ReferenceModel model = ReferenceModel::init(4, 16, 4, 3);
    model.w2.setZero();
    model.b2.setZero();
    RasterImage img = render_synth(SynthKind::Arc, 6);
    ModelOutput out = forward(model, img);
    for (const auto& d : out.rel.deltas) {
        CHECK(d.x == 0.0);
        CHECK(d.y == 0.0);
    }
    for (double v : out.sos_logits) CHECK(v == 0.0);
    for (double v : out.eos_logits) CHECK(v == 0.0);
}

TEST_CASE("backward matches parameter-space finite differences") {
    // small model on a 60x40 image so the finite-difference sweep stays fast
    ReferenceModel model = ReferenceModel::init(2, 8, 6, 11);
    StrokeSequence gt = synth_generate({SynthKind::Line, 4, 12, 0.0});
    RasterResult raster = rasterize(gt, 60, 2.0);
    RasterImage img = raster.image;
    img.width = std::min(img.width, 40);
    img.pixels.resize(static_cast<std::size_t>(img.height) * img.width);

    StrokeSequence gt_px = gt;
    for (auto& s : gt_px.strokes)
        for (auto& p : s.points) p = raster.transform.apply(p);

    CompositeConfig ccfg;
    ccfg.metric = PointMetric::L2;
    ccfg.eos_pad_k = 2;

    ModelOutput out = forward(model, img);
    CompositeResult loss = composite_loss(out.rel, out.sos_logits, out.eos_logits, gt_px, ccfg);
    ParamGrads grads = ParamGrads::zeros_like(model);
    backward(model, out, loss.delta_grads, loss.sos_logit_grads, loss.eos_logit_grads, grads);

    auto loss_with_model = [&](const ReferenceModel& m) {
        ModelOutput o = forward(m, img);
        return composite_loss_given(o.rel, o.sos_logits, o.eos_logits, loss.gt_points,
                                    loss.path, loss.labels, ccfg)
            .total;
    };

    Rng rng(99);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        int block = static_cast<int>(rng.below(4));
        auto probe = [&](auto&& get_ref, double analytic) {
            auto f = [&](double v) {
                ReferenceModel m = model;
                get_ref(m) = v;
                return loss_with_model(m);
            };
            ReferenceModel probe_model = model;
            double x0 = get_ref(probe_model);
            double fd = central_diff(f, x0);
            if (std::fabs(fd) > 1e-7 || std::fabs(analytic) > 1e-7) {
                CHECK(close_rel(analytic, fd, 1e-4));
                ++checked;
            }
        };
        if (block == 0) {
            Eigen::Index r = static_cast<Eigen::Index>(rng.below(model.w1.rows()));
            Eigen::Index c = static_cast<Eigen::Index>(rng.below(model.w1.cols()));
            probe([r, c](ReferenceModel& m) -> double& { return m.w1(r, c); }, grads.w1(r, c));
        } else if (block == 1) {
            Eigen::Index r = static_cast<Eigen::Index>(rng.below(model.b1.size()));
            probe([r](ReferenceModel& m) -> double& { return m.b1(r); }, grads.b1(r));
        } else if (block == 2) {
            Eigen::Index r = static_cast<Eigen::Index>(rng.below(model.w2.rows()));
            Eigen::Index c = static_cast<Eigen::Index>(rng.below(model.w2.cols()));
            probe([r, c](ReferenceModel& m) -> double& { return m.w2(r, c); }, grads.w2(r, c));
        } else {
            Eigen::Index r = static_cast<Eigen::Index>(rng.below(model.b2.size()));
            probe([r](ReferenceModel& m) -> double& { return m.b2(r); }, grads.b2(r));
        }
    }
    CHECK(checked > 10);
}

TEST_CASE("zero loss gradients produce zero parameter gradients") {
    ReferenceModel model = ReferenceModel::init(2, 8, 4, 12);
    RasterImage img = render_synth(SynthKind::Line, 9);
    ModelOutput out = forward(model, img);
    std::vector<Point> zero_deltas(out.rel.deltas.size(), Point{0, 0});
    std::vector<double> zeros(out.sos_logits.size(), 0.0);
    ParamGrads grads = ParamGrads::zeros_like(model);
    backward(model, out, zero_deltas, zeros, zeros, grads);
    CHECK(grads.w1.cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads.w2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("window positions outside the image get zero input gradient") {
    // width 4 with stride 4 gives a single step at column 0; its window
    // columns left of the image never contribute features
    ReferenceModel model = ReferenceModel::init(2, 6, 4, 13);
    RasterImage img;
    img.height = 60;
    img.width = 4;
    img.pixels.assign(240, 0);  // all ink, so in-image features are nonzero
    ModelOutput out = forward(model, img);
    REQUIRE(out.sos_logits.size() == 1);
    std::vector<Point> deltas;  // no deltas for a single step
    std::vector<double> gsos{0.7}, geos{-0.3};
    ParamGrads grads = ParamGrads::zeros_like(model);
    backward(model, out, deltas, gsos, geos, grads);
    // window slots 0,1 cover columns -2,-1 : untouched
    CHECK(grads.w1.block(0, 0, model.hidden, 2 * 60).cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads.w1.block(0, 2 * 60, model.hidden, 3 * 60).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("learning rate schedule steps at exact instance counts") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0001;
    CHECK(lr_at(cfg, 0) == doctest::Approx(0.0001));
    CHECK(lr_at(cfg, 179999) == doctest::Approx(0.0001));
    CHECK(lr_at(cfg, 180000) == doctest::Approx(0.96 * 0.0001));
    CHECK(lr_at(cfg, 360000) == doctest::Approx(0.96 * 0.96 * 0.0001));
}

TEST_CASE("overfit one zigzag: loss drops below 10% of its start") {
    DatasetRecord rec;
    rec.id = "zig";
    rec.seq = synth_generate({SynthKind::Zigzag, 21, 30, 0.0});

    TrainConfig cfg;
    cfg.epochs = 500;  // one instance per epoch = one step each
    cfg.pretrain_epochs = 1000;
    cfg.batch_size = 1;
    cfg.learning_rate = 0.003;
    cfg.window_radius = 4;
    cfg.hidden = 32;
    cfg.seed = 5;
    cfg.eos_pad_k = 4;
    TrainResult result = train(std::vector<DatasetRecord>{rec}, cfg);
    REQUIRE(result.history.size() == 500);
    double initial = result.history.front().mean_loss;
    double final_loss = result.history.back().mean_loss;
    CHECK(final_loss < 0.1 * initial);

    // 100-step moving average decreases over the first 1000 steps
    double early = 0.0, late = 0.0;
    for (int k = 0; k < 100; ++k) early += result.history[static_cast<std::size_t>(k)].mean_loss;
    for (int k = 400; k < 500; ++k) late += result.history[static_cast<std::size_t>(k)].mean_loss;
    CHECK(late < early);
}

TEST_CASE("training is deterministic under a fixed seed") {
    std::vector<DatasetRecord> data;
    for (int k = 0; k < 3; ++k)
        data.push_back({"s" + std::to_string(k),
                        synth_generate({SynthKind::Arc, static_cast<std::uint64_t>(k), 24, 0.2}),
                        std::nullopt});
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.pretrain_epochs = 2;
    cfg.batch_size = 2;
    cfg.hidden = 12;
    cfg.window_radius = 3;
    cfg.seed = 77;
    TrainResult a = train(data, cfg);
    TrainResult b = train(data, cfg);
    CHECK(a.model.w1 == b.model.w1);
    CHECK(a.model.b2 == b.model.b2);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t k = 0; k < a.history.size(); ++k)
        CHECK(a.history[k].mean_loss == b.history[k].mean_loss);
}

TEST_CASE("checkpoint round trip") {
    ReferenceModel model = ReferenceModel::init(3, 10, 4, 31);
    auto path = std::filesystem::temp_directory_path() / "strokealign_model.bin";
    save_checkpoint(path.string(), model);
    ReferenceModel back = load_checkpoint(path.string());
    CHECK(back.window_radius == model.window_radius);
    CHECK(back.hidden == model.hidden);
    CHECK(back.stride == model.stride);
    CHECK(back.w1 == model.w1);
    CHECK(back.b1 == model.b1);
    CHECK(back.w2 == model.w2);
    CHECK(back.b2 == model.b2);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.bin"), std::runtime_error);
}
