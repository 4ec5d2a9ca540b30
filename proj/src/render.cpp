#include "strokealign/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "strokealign/rng.hpp"

namespace strokealign {

namespace {

constexpr int kMargin = 4;

double segment_distance(double px, double py, Point a, Point b) {
    double vx = b.x - a.x, vy = b.y - a.y;
    double wx = px - a.x, wy = py - a.y;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
    double dx = wx - t * vx, dy = wy - t * vy;
    return std::sqrt(dx * dx + dy * dy);
}

void draw_segment(std::vector<double>& coverage, int height, int width, Point a, Point b,
                  double stroke_width) {
    double half = 0.5 * stroke_width;
    double reach = half + 1.5;
    int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
    int c1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
    int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
    int r1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            double d = segment_distance(c + 0.5, r + 0.5, a, b);
            double cov = std::clamp(half + 0.5 - d, 0.0, 1.0);
            if (cov > 0.0) {
                auto& cell = coverage[static_cast<std::size_t>(r) * width + c];
                cell = std::max(cell, cov);
            }
        }
    }
}

}  // namespace

RasterResult rasterize(const StrokeSequence& seq, int height, double stroke_width) {
    validate(seq);
    if (height < 2 * kMargin + 1) throw std::invalid_argument("rasterize: height too small");
    if (!(stroke_width > 0.0)) throw std::invalid_argument("rasterize: stroke width must be > 0");

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : seq.strokes)
        for (const auto& p : s.points) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }

    RasterTransform tf;
    double yext = ymax - ymin;
    if (yext > 0.0) {
        tf.scale = static_cast<double>(height - 2 * kMargin) / yext;
        tf.oy = kMargin - tf.scale * ymin;
    } else {
        tf.scale = 1.0;
        tf.oy = 0.5 * height - ymin;
    }
    tf.ox = kMargin - tf.scale * xmin;

    int width = std::max(2 * kMargin + 1,
                         static_cast<int>(std::ceil(tf.scale * (xmax - xmin))) + 2 * kMargin + 1);

    std::vector<double> coverage(static_cast<std::size_t>(height) * width, 0.0);
    for (const auto& s : seq.strokes) {
        if (s.points.size() == 1) {
            Point a = tf.apply(s.points[0]);
            draw_segment(coverage, height, width, a, a, stroke_width);
            continue;
        }
        for (std::size_t k = 1; k < s.points.size(); ++k)
            draw_segment(coverage, height, width, tf.apply(s.points[k - 1]),
                         tf.apply(s.points[k]), stroke_width);
    }

    RasterResult out;
    out.transform = tf;
    out.image.height = height;
    out.image.width = width;
    out.image.pixels.resize(coverage.size());
    for (std::size_t k = 0; k < coverage.size(); ++k)
        out.image.pixels[k] =
            static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - coverage[k])));
    return out;
}

namespace {

std::vector<double> to_float(const RasterImage& img) {
    return std::vector<double>(img.pixels.begin(), img.pixels.end());
}

/// Bilinear sample with 255 (background) outside the image.
double sample_border255(const std::vector<double>& buf, int height, int width, double x,
                        double y) {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    auto get = [&](int r, int c) -> double {
        if (r < 0 || r >= height || c < 0 || c >= width) return 255.0;
        return buf[static_cast<std::size_t>(r) * width + c];
    };
    double top = get(y0, x0) * (1.0 - fx) + get(y0, x0 + 1) * fx;
    double bot = get(y0 + 1, x0) * (1.0 - fx) + get(y0 + 1, x0 + 1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

void apply_warp(std::vector<double>& buf, int height, int width, double amplitude, int cell,
                Rng& rng) {
    int nx = (width - 1) / cell + 2;
    int ny = (height - 1) / cell + 2;
    std::vector<double> off_x(static_cast<std::size_t>(nx) * ny);
    std::vector<double> off_y(static_cast<std::size_t>(nx) * ny);
    for (int gy = 0; gy < ny; ++gy)
        for (int gx = 0; gx < nx; ++gx) {
            double dx = rng.normal(0.0, 0.5 * amplitude);
            double dy = rng.normal(0.0, 0.5 * amplitude);
            double norm = std::sqrt(dx * dx + dy * dy);
            if (norm > amplitude) {
                dx *= amplitude / norm;
                dy *= amplitude / norm;
            }
            off_x[static_cast<std::size_t>(gy) * nx + gx] = dx;
            off_y[static_cast<std::size_t>(gy) * nx + gx] = dy;
        }

    auto node = [&](const std::vector<double>& field, int gy, int gx) {
        return field[static_cast<std::size_t>(gy) * nx + gx];
    };
    std::vector<double> out(buf.size());
    for (int r = 0; r < height; ++r) {
        int gy = r / cell;
        double fy = static_cast<double>(r % cell) / cell;
        for (int c = 0; c < width; ++c) {
            int gx = c / cell;
            double fx = static_cast<double>(c % cell) / cell;
            double ox = (node(off_x, gy, gx) * (1 - fx) + node(off_x, gy, gx + 1) * fx) * (1 - fy) +
                        (node(off_x, gy + 1, gx) * (1 - fx) + node(off_x, gy + 1, gx + 1) * fx) * fy;
            double oy = (node(off_y, gy, gx) * (1 - fx) + node(off_y, gy, gx + 1) * fx) * (1 - fy) +
                        (node(off_y, gy + 1, gx) * (1 - fx) + node(off_y, gy + 1, gx + 1) * fx) * fy;
            out[static_cast<std::size_t>(r) * width + c] =
                sample_border255(buf, height, width, c - ox, r - oy);
        }
    }
    buf.swap(out);
}

void apply_blur(std::vector<double>& buf, int height, int width, double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
        total += kernel[static_cast<std::size_t>(k + radius)];
    }
    for (auto& w : kernel) w /= total;

    std::vector<double> tmp(buf.size());
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                int cc = std::clamp(c + k, 0, width - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       buf[static_cast<std::size_t>(r) * width + cc];
            }
            tmp[static_cast<std::size_t>(r) * width + c] = acc;
        }
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                int rr = std::clamp(r + k, 0, height - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       tmp[static_cast<std::size_t>(rr) * width + c];
            }
            buf[static_cast<std::size_t>(r) * width + c] = acc;
        }
}

}  // namespace

RasterImage degrade(const RasterImage& img, const DegradeConfig& cfg) {
    if (cfg.warp_cell <= 0) throw std::invalid_argument("degrade: warp_cell must be > 0");
    if (!(cfg.contrast_gamma > 0.0)) throw std::invalid_argument("degrade: gamma must be > 0");
    bool warp = cfg.warp_amplitude > 0.0;
    bool blur = cfg.blur_sigma > 0.0;
    bool gamma = cfg.contrast_gamma != 1.0;
    bool noise = cfg.noise_sigma > 0.0;
    if (!warp && !blur && !gamma && !noise) return img;

    Rng rng(cfg.seed);
    std::vector<double> buf = to_float(img);
    if (warp) apply_warp(buf, img.height, img.width, cfg.warp_amplitude, cfg.warp_cell, rng);
    if (blur) apply_blur(buf, img.height, img.width, cfg.blur_sigma);
    if (gamma)
        for (auto& v : buf) v = 255.0 * std::pow(std::clamp(v, 0.0, 255.0) / 255.0,
                                                 cfg.contrast_gamma);
    if (noise)
        for (auto& v : buf) v += rng.normal(0.0, cfg.noise_sigma);

    RasterImage out;
    out.height = img.height;
    out.width = img.width;
    out.pixels.resize(buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k)
        out.pixels[k] = static_cast<std::uint8_t>(std::lround(std::clamp(buf[k], 0.0, 255.0)));
    return out;
}

void write_pgm(const std::string& path, const RasterImage& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

RasterImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw std::runtime_error("not a binary PGM (P5): " + path);
    int width = 0, height = 0, maxval = 0;
    f >> width >> height >> maxval;
    if (!f || width < 1 || height < 1) throw std::runtime_error("bad PGM header: " + path);
    if (maxval != 255) throw std::runtime_error("unsupported PGM maxval: " + path);
    f.get();  // single whitespace after header
    RasterImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * height);
    f.read(reinterpret_cast<char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw std::runtime_error("truncated PGM data: " + path);
    return img;
}

std::vector<std::uint8_t> overlay_strokes(const RasterImage& img, const StrokeSequence& seq,
                                          const RasterTransform& tf) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(img.height) * img.width * 3);
    for (std::size_t k = 0; k < img.pixels.size(); ++k) {
        rgb[3 * k] = rgb[3 * k + 1] = rgb[3 * k + 2] = img.pixels[k];
    }
    std::vector<double> coverage(static_cast<std::size_t>(img.height) * img.width, 0.0);
    for (const auto& s : seq.strokes) {
        if (s.points.size() == 1) {
            Point a = tf.apply(s.points[0]);
            draw_segment(coverage, img.height, img.width, a, a, 1.0);
        }
        for (std::size_t k = 1; k < s.points.size(); ++k)
            draw_segment(coverage, img.height, img.width, tf.apply(s.points[k - 1]),
                         tf.apply(s.points[k]), 1.0);
    }
    for (std::size_t k = 0; k < coverage.size(); ++k) {
        if (coverage[k] <= 0.0) continue;
        double keep = 1.0 - coverage[k];
        rgb[3 * k] = static_cast<std::uint8_t>(std::lround(255.0 * coverage[k] +
                                                           rgb[3 * k] * keep));
        rgb[3 * k + 1] = static_cast<std::uint8_t>(std::lround(rgb[3 * k + 1] * keep));
        rgb[3 * k + 2] = static_cast<std::uint8_t>(std::lround(rgb[3 * k + 2] * keep));
    }
    return rgb;
}

void write_ppm(const std::string& path, int height, int width,
               const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != static_cast<std::size_t>(height) * width * 3)
        throw std::invalid_argument("write_ppm: buffer size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "P6\n" << width << " " << height << "\n255\n";
    f.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace strokealign
