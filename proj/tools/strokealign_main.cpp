#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "strokealign/adaptive_gt.hpp"
#include "strokealign/dataio.hpp"
#include "strokealign/dtw.hpp"
#include "strokealign/metrics.hpp"
#include "strokealign/render.hpp"
#include "strokealign/rng.hpp"
#include "strokealign/stroke.hpp"
#include "strokealign/targets.hpp"
#include "strokealign/trainer.hpp"

namespace fs = std::filesystem;
using namespace strokealign;

namespace {

PointMetric metric_from_string(const std::string& name) {
    if (name == "l1") return PointMetric::L1;
    if (name == "l2") return PointMetric::L2;
    throw CLI::ValidationError("--metric", "expected l1 or l2");
}

std::vector<DatasetRecord> load_sorted(const std::string& path) {
    std::vector<DatasetRecord> recs = read_records(path);
    std::sort(recs.begin(), recs.end(),
              [](const DatasetRecord& a, const DatasetRecord& b) { return a.id < b.id; });
    return recs;
}

std::map<std::string, std::string> read_kv_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

DegradeConfig degrade_from_config(const std::string& path) {
    DegradeConfig cfg;
    for (const auto& [key, value] : read_kv_config(path)) {
        if (key == "noise_sigma") cfg.noise_sigma = std::stod(value);
        else if (key == "blur_sigma") cfg.blur_sigma = std::stod(value);
        else if (key == "contrast_gamma") cfg.contrast_gamma = std::stod(value);
        else if (key == "warp_amplitude") cfg.warp_amplitude = std::stod(value);
        else if (key == "warp_cell") cfg.warp_cell = std::stoi(value);
        else if (key == "stroke_width_jitter") cfg.stroke_width_jitter = std::stod(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else throw std::runtime_error("unknown degrade key: " + key);
    }
    return cfg;
}

void write_transform_sidecar(const std::string& path, const RasterTransform& tf) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::ostringstream os;
    os.precision(17);
    os << "scale=" << tf.scale << "\nox=" << tf.ox << "\noy=" << tf.oy << "\n";
    f << os.str();
}

RasterTransform read_transform_sidecar(const std::string& path) {
    RasterTransform tf;
    for (const auto& [key, value] : read_kv_config(path)) {
        if (key == "scale") tf.scale = std::stod(value);
        else if (key == "ox") tf.ox = std::stod(value);
        else if (key == "oy") tf.oy = std::stod(value);
        else throw std::runtime_error("unknown transform key: " + key);
    }
    return tf;
}

const DatasetRecord& record_by_id(const std::vector<DatasetRecord>& recs,
                                  const std::string& id) {
    for (const auto& r : recs)
        if (r.id == id) return r;
    throw std::runtime_error("record id not found: " + id);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stroke trajectory toolkit: alignment, adaptation, rendering, training"};
    app.require_subcommand(1);

    std::string metric_name = "l1";
    int band_radius = -1;
    std::uint64_t seed = 0;
    app.add_option("--metric", metric_name, "point metric: l1 or l2")->capture_default_str();
    app.add_option("--band-radius", band_radius,
                   "DTW window half-width; negative selects the default")
        ->capture_default_str();
    app.add_option("--seed", seed, "random seed")->capture_default_str();

    // resample
    auto* cmd_resample = app.add_subcommand("resample", "resample records to arc-length-equidistant points");
    std::string in_path, out_path;
    int density = 4, height = 60;
    cmd_resample->add_option("--input", in_path, "input records")->required();
    cmd_resample->add_option("--output", out_path, "output records")->required();
    cmd_resample->add_option("--density", density, "horizontal pixels per resampled point")
        ->capture_default_str();
    cmd_resample->add_option("--height", height, "render height used to size the budget")
        ->capture_default_str();

    // render
    auto* cmd_render = app.add_subcommand("render", "rasterize records to PGM images with transform sidecars");
    std::string render_out_dir, degrade_config;
    double stroke_width = 2.0;
    cmd_render->add_option("--input", in_path, "input records")->required();
    cmd_render->add_option("--output-dir", render_out_dir, "output directory")->required();
    cmd_render->add_option("--height", height, "image height in pixels")->capture_default_str();
    cmd_render->add_option("--stroke-width", stroke_width, "stroke width in pixels")
        ->capture_default_str();
    cmd_render->add_option("--degrade", degrade_config, "key=value degradation config file");

    // align
    auto* cmd_align = app.add_subcommand("align", "DTW-align prediction records against ground truth records");
    std::string pred_path, gt_path;
    cmd_align->add_option("--pred", pred_path, "prediction records")->required();
    cmd_align->add_option("--gt", gt_path, "ground truth records")->required();
    cmd_align->add_option("--output", out_path, "per-id cost and path dump")->required();

    // adapt-gt
    auto* cmd_adapt = app.add_subcommand("adapt-gt", "adapt ground truth stroke order and direction toward predictions");
    std::string changes_path;
    int adapt_epochs = 10;
    double temperature = 1.0;
    cmd_adapt->add_option("--pred", pred_path, "prediction records")->required();
    cmd_adapt->add_option("--gt", gt_path, "ground truth records")->required();
    cmd_adapt->add_option("--output", out_path, "adapted records")->required();
    cmd_adapt->add_option("--change-log", changes_path, "change log CSV")->required();
    cmd_adapt->add_option("--epochs", adapt_epochs, "adaptation epochs")->capture_default_str();
    cmd_adapt->add_option("--temperature", temperature, "softmax temperature")
        ->capture_default_str();

    // train
    auto* cmd_train = app.add_subcommand("train", "train the reference predictor");
    std::string checkpoint_path, history_path;
    int epochs = 10, pretrain_epochs = 5;
    double learning_rate = 0.0001;
    int batch_size = 32;
    cmd_train->add_option("--input", in_path, "training records")->required();
    cmd_train->add_option("--checkpoint", checkpoint_path, "output checkpoint")->required();
    cmd_train->add_option("--history", history_path, "output history CSV")->required();
    cmd_train->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    cmd_train->add_option("--pretrain-epochs", pretrain_epochs,
                          "epochs before adaptive ground truth")
        ->capture_default_str();
    cmd_train->add_option("--learning-rate", learning_rate, "Adam learning rate")
        ->capture_default_str();
    cmd_train->add_option("--batch-size", batch_size, "batch size")->capture_default_str();
    cmd_train->add_option("--temperature", temperature, "adaptation softmax temperature")
        ->capture_default_str();

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "evaluate predictions against ground truth");
    std::string images_dir;
    bool pretty = false;
    cmd_eval->add_option("--pred", pred_path, "prediction records")->required();
    cmd_eval->add_option("--gt", gt_path, "ground truth records")->required();
    cmd_eval->add_option("--output", out_path, "output CSV (default stdout)");
    cmd_eval->add_option("--images", images_dir,
                         "directory of <id>.pgm + <id>.transform.txt for the ink metric");
    cmd_eval->add_flag("--pretty", pretty, "print a table per record instead of CSV");

    // overlay
    auto* cmd_overlay = app.add_subcommand("overlay", "draw stroke records over an image");
    std::string image_path, transform_path, record_id;
    cmd_overlay->add_option("--image", image_path, "input PGM image")->required();
    cmd_overlay->add_option("--strokes", in_path, "stroke records")->required();
    cmd_overlay->add_option("--id", record_id, "record id to overlay")->required();
    cmd_overlay->add_option("--transform", transform_path,
                            "transform sidecar (defaults to identity)");
    cmd_overlay->add_option("--output", out_path, "output PPM image")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        PointMetric metric = metric_from_string(metric_name);

        if (*cmd_resample) {
            std::vector<DatasetRecord> recs = load_sorted(in_path);
            for (auto& rec : recs) {
                // Budget matches the rendered content width at this height.
                RasterResult raster = rasterize(rec.seq, height, 2.0);
                auto budget = static_cast<std::size_t>(
                    std::lround(static_cast<double>(raster.image.width) / density));
                rec.seq = resample_equidistant(
                    rec.seq, std::max(budget, 2 * rec.seq.strokes.size()));
            }
            write_records(out_path, recs);
        } else if (*cmd_render) {
            std::vector<DatasetRecord> recs = load_sorted(in_path);
            fs::create_directories(render_out_dir);
            bool degrade_enabled = !degrade_config.empty();
            DegradeConfig base = degrade_enabled ? degrade_from_config(degrade_config)
                                                 : DegradeConfig{};
            for (std::size_t k = 0; k < recs.size(); ++k) {
                double width = stroke_width;
                DegradeConfig cfg = base;
                if (degrade_enabled) {
                    cfg.seed = Rng::derive(seed != 0 ? seed : base.seed, k + 1);
                    if (base.stroke_width_jitter > 0.0) {
                        Rng wrng(Rng::derive(cfg.seed, 7));
                        width = std::max(0.5,
                                         width + base.stroke_width_jitter * wrng.normal());
                    }
                }
                RasterResult raster = rasterize(recs[k].seq, height, width);
                RasterImage img = degrade_enabled ? degrade(raster.image, cfg)
                                                  : std::move(raster.image);
                fs::path base_path = fs::path(render_out_dir) / recs[k].id;
                write_pgm(base_path.string() + ".pgm", img);
                write_transform_sidecar(base_path.string() + ".transform.txt",
                                        raster.transform);
            }
        } else if (*cmd_align) {
            std::vector<DatasetRecord> preds = load_sorted(pred_path);
            std::vector<DatasetRecord> gts = load_sorted(gt_path);
            std::ofstream f(out_path, std::ios::binary);
            if (!f) throw std::runtime_error("cannot open for writing: " + out_path);
            for (const auto& pred : preds) {
                const DatasetRecord& gt = record_by_id(gts, pred.id);
                DtwResult d = dtw_loss(pred.seq, gt.seq, metric, band_radius);
                f << pred.id << '\t' << format_double(d.cost) << '\t';
                for (std::size_t k = 0; k < d.path.pairs.size(); ++k) {
                    if (k > 0) f << ';';
                    f << d.path.pairs[k].first << ',' << d.path.pairs[k].second;
                }
                f << '\n';
            }
        } else if (*cmd_adapt) {
            std::vector<DatasetRecord> preds = load_sorted(pred_path);
            std::vector<DatasetRecord> gts = load_sorted(gt_path);
            AdaptConfig acfg;
            acfg.metric = metric;
            acfg.band_radius = band_radius;
            acfg.temperature = temperature;
            std::ofstream log(changes_path, std::ios::binary);
            if (!log) throw std::runtime_error("cannot open for writing: " + changes_path);
            log << "epoch,id,transform\n";
            std::vector<AdaptState> states;
            states.reserve(gts.size());
            for (std::size_t k = 0; k < gts.size(); ++k)
                states.emplace_back(gts[k].seq, Rng::derive(seed, k + 1));
            for (int epoch = 0; epoch < adapt_epochs; ++epoch) {
                for (std::size_t k = 0; k < gts.size(); ++k) {
                    const DatasetRecord& pred = record_by_id(preds, gts[k].id);
                    AdaptOutcome outcome = adapt_step(pred.seq, states[k], acfg);
                    log << epoch << ',' << gts[k].id << ','
                        << (outcome.applied ? to_string(*outcome.applied) : "none") << '\n';
                }
            }
            for (std::size_t k = 0; k < gts.size(); ++k) gts[k].seq = states[k].seq;
            write_records(out_path, gts);
        } else if (*cmd_train) {
            std::vector<DatasetRecord> recs = load_sorted(in_path);
            TrainConfig cfg;
            cfg.metric = metric;
            cfg.band_radius = band_radius;
            cfg.seed = seed;
            cfg.epochs = epochs;
            cfg.pretrain_epochs = pretrain_epochs;
            cfg.learning_rate = learning_rate;
            cfg.batch_size = batch_size;
            cfg.temperature = temperature;
            TrainResult result = train(recs, cfg);
            save_checkpoint(checkpoint_path, result.model);
            write_history_csv(history_path, result.history);
        } else if (*cmd_eval) {
            std::vector<DatasetRecord> preds = load_sorted(pred_path);
            std::vector<DatasetRecord> gts = load_sorted(gt_path);
            std::ostringstream os;
            if (!pretty) os << "id," << eval_csv_header() << '\n';
            for (const auto& pred : preds) {
                const DatasetRecord& gt = record_by_id(gts, pred.id);
                EvalReport report;
                if (!images_dir.empty()) {
                    fs::path base_path = fs::path(images_dir) / pred.id;
                    RasterImage img = read_pgm(base_path.string() + ".pgm");
                    RasterTransform tf =
                        read_transform_sidecar(base_path.string() + ".transform.txt");
                    report = evaluate(pred.seq, gt.seq, &img, &tf);
                } else {
                    report = evaluate(pred.seq, gt.seq);
                }
                if (pretty)
                    os << "== " << pred.id << " ==\n" << pretty_table(report);
                else
                    os << pred.id << ',' << to_csv(report) << '\n';
            }
            if (out_path.empty()) {
                std::cout << os.str();
            } else {
                std::ofstream f(out_path, std::ios::binary);
                if (!f) throw std::runtime_error("cannot open for writing: " + out_path);
                f << os.str();
            }
        } else if (*cmd_overlay) {
            RasterImage img = read_pgm(image_path);
            std::vector<DatasetRecord> recs = load_sorted(in_path);
            const DatasetRecord& rec = record_by_id(recs, record_id);
            RasterTransform tf;
            if (!transform_path.empty()) tf = read_transform_sidecar(transform_path);
            std::vector<std::uint8_t> rgb = overlay_strokes(img, rec.seq, tf);
            write_ppm(out_path, img.height, img.width, rgb);
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
