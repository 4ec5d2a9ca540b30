#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "strokealign/dataio.hpp"
#include "strokealign/render.hpp"
#include "strokealign/targets.hpp"

namespace strokealign {

/// Per-column two-layer predictor: for every `stride` pixels of width it
/// maps a window of image columns through tanh(W1 x + b1) to four outputs
/// (dx, dy, sos logit, eos logit). Small on purpose; it exists to drive
/// every loss component and gradient path end to end.
struct ReferenceModel {
    int window_radius = 6;
    int hidden = 64;
    int stride = 4;
    int input_height = 60;
    Eigen::MatrixXd w1;  // hidden x input_dim
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;  // 4 x hidden
    Eigen::VectorXd b2;

    int input_dim() const { return input_height * (2 * window_radius + 1); }

    static ReferenceModel init(int window_radius, int hidden, int stride, std::uint64_t seed,
                               int input_height = 60);
};

/// Forward pass output plus the cached activations backward() needs.
/// The relative sequence is anchored at the image's left-center pixel; the
/// first step contributes only its logits (its delta slot is unused), so
/// there is one prediction point per column stride.
struct ModelOutput {
    RelativeSequence rel;
    std::vector<double> sos_logits;
    std::vector<double> eos_logits;
    Eigen::MatrixXd features;     // steps x input_dim
    Eigen::MatrixXd activations;  // steps x hidden
};

ModelOutput forward(const ReferenceModel& model, const RasterImage& img);

struct ParamGrads {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;

    static ParamGrads zeros_like(const ReferenceModel& model);
    void add_scaled(const ParamGrads& other, double factor);
};

/// Exact gradients of the composite loss (alignment fixed) with respect to
/// all parameters, accumulated into `acc`. delta_grads has one entry per
/// step past the first; sos/eos grads one per step.
void backward(const ReferenceModel& model, const ModelOutput& out,
              std::span<const Point> delta_grads, std::span<const double> sos_grads,
              std::span<const double> eos_grads, ParamGrads& acc);

struct TrainConfig {
    double learning_rate = 0.0001;
    int batch_size = 32;
    double decay_factor = 0.96;
    long decay_every_instances = 180000;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    PointMetric metric = PointMetric::L1;
    int band_radius = -1;
    int epochs = 10;
    int pretrain_epochs = 5;  // epochs before adaptive ground truth kicks in
    std::uint64_t seed = 0;
    int render_height = 60;
    double stroke_width = 2.0;
    int density = 4;  // resampled ground-truth points per horizontal pixel
    int window_radius = 6;
    int hidden = 64;
    int stride = 4;
    double temperature = 1.0;
    std::size_t eos_pad_k = 20;
    AlignmentMode alignment = AlignmentMode::Dtw;
    double w_coord = 1.0, w_sos = 1.0, w_eos = 1.0;
    int eval_every = 1;  // epochs between held-out metric evaluations
};

/// Stepwise schedule: learning_rate * decay_factor^floor(seen / every).
double lr_at(const TrainConfig& cfg, long instances_seen);

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double change_fraction = 0.0;
    double avg_dtw_l1 = 0.0;
    double nn_pred_to_gt = 0.0;
};

struct TrainResult {
    ReferenceModel model;
    std::vector<EpochStats> history;
};

/// Renders each record once, trains with Adam for cfg.epochs (original
/// ground truths for the first pretrain_epochs, one adaptive step per
/// instance per epoch afterwards). Deterministic for a fixed seed.
TrainResult train(std::span<const DatasetRecord> dataset, const TrainConfig& cfg);

/// Model prediction mapped back into the record's coordinate frame, as a
/// single-stroke sequence.
StrokeSequence predict_strokes(const ReferenceModel& model, const RasterImage& img,
                               const RasterTransform& tf);

void save_checkpoint(const std::string& path, const ReferenceModel& model);
ReferenceModel load_checkpoint(const std::string& path);

void write_history_csv(const std::string& path, std::span<const EpochStats> history);

}  // namespace strokealign
