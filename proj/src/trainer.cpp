#include "strokealign/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "strokealign/adaptive_gt.hpp"
#include "strokealign/metrics.hpp"
#include "strokealign/rng.hpp"

namespace strokealign {

ReferenceModel ReferenceModel::init(int window_radius, int hidden, int stride,
                                    std::uint64_t seed, int input_height) {
    if (window_radius < 0 || hidden < 1 || stride < 1 || input_height < 1)
        throw std::invalid_argument("ReferenceModel: bad dimensions");
    ReferenceModel m;
    m.window_radius = window_radius;
    m.hidden = hidden;
    m.stride = stride;
    m.input_height = input_height;
    Rng rng(seed);
    auto fill = [&rng](Eigen::MatrixXd& mat, double bound) {
        for (Eigen::Index c = 0; c < mat.cols(); ++c)
            for (Eigen::Index r = 0; r < mat.rows(); ++r)
                mat(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    };
    m.w1.resize(hidden, m.input_dim());
    fill(m.w1, 1.0 / std::sqrt(static_cast<double>(m.input_dim())));
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.w2.resize(4, hidden);
    fill(m.w2, 1.0 / std::sqrt(static_cast<double>(hidden)));
    m.b2 = Eigen::VectorXd::Zero(4);
    return m;
}

ModelOutput forward(const ReferenceModel& model, const RasterImage& img) {
    if (img.height != model.input_height)
        throw std::invalid_argument("forward: image height does not match the model");
    int steps = (img.width + model.stride - 1) / model.stride;
    int win = 2 * model.window_radius + 1;

    ModelOutput out;
    out.features = Eigen::MatrixXd::Zero(steps, model.input_dim());
    for (int o = 0; o < steps; ++o) {
        int center = o * model.stride;
        for (int k = 0; k < win; ++k) {
            int col = center + k - model.window_radius;
            if (col < 0 || col >= img.width) continue;  // background = 0 feature
            for (int r = 0; r < img.height; ++r)
                out.features(o, k * img.height + r) =
                    (255.0 - static_cast<double>(img.at(r, col))) / 255.0;
        }
    }

    out.activations =
        ((out.features * model.w1.transpose()).rowwise() + model.b1.transpose())
            .array()
            .tanh()
            .matrix();
    Eigen::MatrixXd pre = (out.activations * model.w2.transpose()).rowwise() +
                          model.b2.transpose();

    out.rel.origin = {0.0, 0.5 * img.height};
    out.rel.deltas.reserve(static_cast<std::size_t>(steps) - 1);
    out.sos_logits.resize(static_cast<std::size_t>(steps));
    out.eos_logits.resize(static_cast<std::size_t>(steps));
    for (int o = 0; o < steps; ++o) {
        if (o > 0) out.rel.deltas.push_back({pre(o, 0), pre(o, 1)});
        out.sos_logits[static_cast<std::size_t>(o)] = pre(o, 2);
        out.eos_logits[static_cast<std::size_t>(o)] = pre(o, 3);
    }
    return out;
}

ParamGrads ParamGrads::zeros_like(const ReferenceModel& model) {
    ParamGrads g;
    g.w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
    g.b1 = Eigen::VectorXd::Zero(model.b1.size());
    g.w2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
    g.b2 = Eigen::VectorXd::Zero(model.b2.size());
    return g;
}

void ParamGrads::add_scaled(const ParamGrads& other, double factor) {
    w1 += factor * other.w1;
    b1 += factor * other.b1;
    w2 += factor * other.w2;
    b2 += factor * other.b2;
}

void backward(const ReferenceModel& model, const ModelOutput& out,
              std::span<const Point> delta_grads, std::span<const double> sos_grads,
              std::span<const double> eos_grads, ParamGrads& acc) {
    auto steps = static_cast<Eigen::Index>(out.sos_logits.size());
    if (static_cast<Eigen::Index>(delta_grads.size()) != steps - 1 ||
        static_cast<Eigen::Index>(sos_grads.size()) != steps ||
        static_cast<Eigen::Index>(eos_grads.size()) != steps)
        throw std::invalid_argument("backward: gradient length mismatch");

    Eigen::MatrixXd dout = Eigen::MatrixXd::Zero(steps, 4);
    for (Eigen::Index o = 0; o < steps; ++o) {
        if (o > 0) {
            dout(o, 0) = delta_grads[static_cast<std::size_t>(o - 1)].x;
            dout(o, 1) = delta_grads[static_cast<std::size_t>(o - 1)].y;
        }
        dout(o, 2) = sos_grads[static_cast<std::size_t>(o)];
        dout(o, 3) = eos_grads[static_cast<std::size_t>(o)];
    }

    acc.w2 += dout.transpose() * out.activations;
    acc.b2 += dout.colwise().sum().transpose();
    Eigen::MatrixXd dh = dout * model.w2;
    Eigen::MatrixXd dpre =
        (dh.array() * (1.0 - out.activations.array().square())).matrix();
    acc.w1 += dpre.transpose() * out.features;
    acc.b1 += dpre.colwise().sum().transpose();
}

double lr_at(const TrainConfig& cfg, long instances_seen) {
    long steps = cfg.decay_every_instances > 0 ? instances_seen / cfg.decay_every_instances : 0;
    return cfg.learning_rate * std::pow(cfg.decay_factor, static_cast<double>(steps));
}

namespace {

struct AdamState {
    ParamGrads m, v;
    long t = 0;
};

void adam_update_block(Eigen::Ref<Eigen::MatrixXd> param, Eigen::Ref<Eigen::MatrixXd> m,
                       Eigen::Ref<Eigen::MatrixXd> v, const Eigen::MatrixXd& g,
                       const TrainConfig& cfg, double lr, double bc1, double bc2) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = (cfg.adam_beta2 * v.array() + (1.0 - cfg.adam_beta2) * g.array().square()).matrix();
    param.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
}

void adam_step(ReferenceModel& model, AdamState& st, const ParamGrads& g,
               const TrainConfig& cfg, double lr) {
    st.t += 1;
    double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(st.t));
    double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(st.t));
    adam_update_block(model.w1, st.m.w1, st.v.w1, g.w1, cfg, lr, bc1, bc2);
    adam_update_block(model.b1, st.m.b1, st.v.b1, g.b1, cfg, lr, bc1, bc2);
    adam_update_block(model.w2, st.m.w2, st.v.w2, g.w2, cfg, lr, bc1, bc2);
    adam_update_block(model.b2, st.m.b2, st.v.b2, g.b2, cfg, lr, bc1, bc2);
}

struct PreparedInstance {
    RasterImage image;
    RasterTransform transform;
    StrokeSequence gt_pixels;  // resampled ground truth in pixel coordinates
};

PreparedInstance prepare(const DatasetRecord& rec, const TrainConfig& cfg) {
    PreparedInstance inst;
    RasterResult raster = rasterize(rec.seq, cfg.render_height, cfg.stroke_width);
    inst.image = std::move(raster.image);
    inst.transform = raster.transform;

    std::size_t min_points = 2 * rec.seq.strokes.size();
    auto budget = static_cast<std::size_t>(
        std::lround(static_cast<double>(inst.image.width) / cfg.density));
    StrokeSequence resampled = resample_equidistant(rec.seq, std::max(min_points, budget));
    inst.gt_pixels = resampled;
    for (auto& s : inst.gt_pixels.strokes)
        for (auto& p : s.points) p = inst.transform.apply(p);
    return inst;
}

StrokeSequence single_stroke(std::vector<Point> points) {
    StrokeSequence seq;
    seq.strokes.push_back({std::move(points)});
    return seq;
}

}  // namespace

StrokeSequence predict_strokes(const ReferenceModel& model, const RasterImage& img,
                               const RasterTransform& tf) {
    ModelOutput out = forward(model, img);
    std::vector<Point> abs = flatten(to_absolute(out.rel));
    for (auto& p : abs) p = tf.invert(p);
    return single_stroke(std::move(abs));
}

TrainResult train(std::span<const DatasetRecord> dataset, const TrainConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("train: bad config");

    std::vector<PreparedInstance> instances;
    instances.reserve(dataset.size());
    std::vector<AdaptState> adapt;
    adapt.reserve(dataset.size());
    for (std::size_t k = 0; k < dataset.size(); ++k) {
        instances.push_back(prepare(dataset[k], cfg));
        adapt.emplace_back(instances.back().gt_pixels, Rng::derive(cfg.seed, k + 1));
    }

    TrainResult result;
    result.model = ReferenceModel::init(cfg.window_radius, cfg.hidden, cfg.stride, cfg.seed,
                                        cfg.render_height);
    AdamState adam{ParamGrads::zeros_like(result.model), ParamGrads::zeros_like(result.model)};

    CompositeConfig ccfg;
    ccfg.metric = cfg.metric;
    ccfg.band_radius = cfg.band_radius;
    ccfg.eos_pad_k = cfg.eos_pad_k;
    ccfg.alignment = cfg.alignment;
    ccfg.w_coord = cfg.w_coord;
    ccfg.w_sos = cfg.w_sos;
    ccfg.w_eos = cfg.w_eos;

    AdaptConfig acfg;
    acfg.metric = cfg.metric;
    acfg.band_radius = cfg.band_radius;
    acfg.temperature = cfg.temperature;

    Rng shuffle_rng(Rng::derive(cfg.seed, 0));
    std::vector<std::size_t> order(instances.size());
    std::iota(order.begin(), order.end(), 0);

    long instances_seen = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[shuffle_rng.below(k)]);

        double loss_sum = 0.0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            std::size_t batch_end = std::min(order.size(), at + cfg.batch_size);
            ParamGrads grads = ParamGrads::zeros_like(result.model);
            for (std::size_t b = at; b < batch_end; ++b) {
                const PreparedInstance& inst = instances[order[b]];
                ModelOutput out = forward(result.model, inst.image);
                CompositeResult loss = composite_loss(out.rel, out.sos_logits, out.eos_logits,
                                                      adapt[order[b]].seq, ccfg);
                backward(result.model, out, loss.delta_grads, loss.sos_logit_grads,
                         loss.eos_logit_grads, grads);
                loss_sum += loss.breakdown.total;
            }
            double inv = 1.0 / static_cast<double>(batch_end - at);
            grads.w1 *= inv;
            grads.b1 *= inv;
            grads.w2 *= inv;
            grads.b2 *= inv;
            adam_step(result.model, adam, grads, cfg, lr_at(cfg, instances_seen));
            instances_seen += static_cast<long>(batch_end - at);
        }

        std::size_t changes = 0;
        if (epoch >= cfg.pretrain_epochs) {
            for (std::size_t k = 0; k < instances.size(); ++k) {
                ModelOutput out = forward(result.model, instances[k].image);
                StrokeSequence pred = single_stroke(flatten(to_absolute(out.rel)));
                AdaptOutcome outcome = adapt_step(pred, adapt[k], acfg);
                changes += outcome.changed ? 1 : 0;
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = loss_sum / static_cast<double>(instances.size());
        stats.change_fraction =
            static_cast<double>(changes) / static_cast<double>(instances.size());
        int every = std::max(1, cfg.eval_every);
        if (epoch % every == every - 1 || epoch + 1 == cfg.epochs) {
            double dtw_sum = 0.0, nn_sum = 0.0;
            for (std::size_t k = 0; k < instances.size(); ++k) {
                StrokeSequence pred =
                    predict_strokes(result.model, instances[k].image, instances[k].transform);
                EvalReport rep = evaluate(pred, dataset[k].seq);
                dtw_sum += rep.avg_dtw_l1;
                nn_sum += rep.nn_pred_to_gt;
            }
            stats.avg_dtw_l1 = dtw_sum / static_cast<double>(instances.size());
            stats.nn_pred_to_gt = nn_sum / static_cast<double>(instances.size());
        } else if (!result.history.empty()) {
            stats.avg_dtw_l1 = result.history.back().avg_dtw_l1;
            stats.nn_pred_to_gt = result.history.back().nn_pred_to_gt;
        }
        result.history.push_back(stats);
    }
    return result;
}

void save_checkpoint(const std::string& path, const ReferenceModel& model) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const char magic[8] = {'S', 'A', 'M', 'O', 'D', 'E', 'L', '1'};
    f.write(magic, 8);
    auto write_i32 = [&f](std::int32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    write_i32(1);  // version
    write_i32(model.window_radius);
    write_i32(model.hidden);
    write_i32(model.stride);
    write_i32(model.input_height);
    auto write_mat = [&f](const auto& m) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                double v = m(r, c);
                f.write(reinterpret_cast<const char*>(&v), 8);
            }
    };
    write_mat(model.w1);
    write_mat(model.b1);
    write_mat(model.w2);
    write_mat(model.b2);
    if (!f) throw std::runtime_error("write failed: " + path);
}

ReferenceModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, "SAMODEL1", 8) != 0)
        throw std::runtime_error("not a model checkpoint: " + path);
    auto read_i32 = [&f, &path]() {
        std::int32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        if (!f) throw std::runtime_error("truncated checkpoint: " + path);
        return v;
    };
    std::int32_t version = read_i32();
    if (version != 1) throw std::runtime_error("unsupported checkpoint version: " + path);
    std::int32_t window_radius = read_i32();
    std::int32_t hidden = read_i32();
    std::int32_t stride = read_i32();
    std::int32_t input_height = read_i32();
    ReferenceModel m = ReferenceModel::init(window_radius, hidden, stride, 0, input_height);
    auto read_mat = [&f, &path](auto& mat) {
        for (Eigen::Index c = 0; c < mat.cols(); ++c)
            for (Eigen::Index r = 0; r < mat.rows(); ++r) {
                double v = 0.0;
                f.read(reinterpret_cast<char*>(&v), 8);
                if (!f) throw std::runtime_error("truncated checkpoint: " + path);
                mat(r, c) = v;
            }
    };
    read_mat(m.w1);
    read_mat(m.b1);
    read_mat(m.w2);
    read_mat(m.b2);
    return m;
}

void write_history_csv(const std::string& path, std::span<const EpochStats> history) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "epoch,mean_loss,change_fraction,avg_dtw_l1,nn_pred_to_gt\n";
    std::ostringstream os;
    os.precision(10);
    for (const auto& row : history) {
        os.str("");
        os << row.epoch << ',' << row.mean_loss << ',' << row.change_fraction << ','
           << row.avg_dtw_l1 << ',' << row.nn_pred_to_gt << '\n';
        f << os.str();
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace strokealign
