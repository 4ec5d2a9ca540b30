#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strokealign/stroke.hpp"

namespace strokealign {

/// Fixed-height grayscale raster, row-major, 0 = ink, 255 = background.
struct RasterImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int r, int c) const {
        return pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(c)];
    }
    std::uint8_t& at(int r, int c) {
        return pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(c)];
    }
};

/// Uniform scale plus offset mapping stroke coordinates into continuous
/// pixel coordinates (pixel (r,c) covers [c,c+1) x [r,r+1)).
struct RasterTransform {
    double scale = 1.0;
    double ox = 0.0;
    double oy = 0.0;

    Point apply(Point p) const { return {p.x * scale + ox, p.y * scale + oy}; }
    Point invert(Point q) const { return {(q.x - ox) / scale, (q.y - oy) / scale}; }
};

struct RasterResult {
    RasterImage image;
    RasterTransform transform;
};

/// Scales the sequence uniformly so its vertical extent fills the height
/// minus a 4-pixel margin (aspect ratio preserved, content centered
/// vertically) and draws each stroke as anti-aliased segments of the given
/// width. Degenerate inputs render as a dot or a line; this never fails on
/// geometry. The returned transform maps stroke coordinates to pixels.
RasterResult rasterize(const StrokeSequence& seq, int height = 60, double stroke_width = 2.0);

/// Seeded degradations approximating scanned offline data.
struct DegradeConfig {
    double noise_sigma = 0.0;        // additive Gaussian, intensity units
    double blur_sigma = 0.0;         // pixels
    double contrast_gamma = 1.0;
    double warp_amplitude = 0.0;     // pixels
    int warp_cell = 16;              // pixels between displacement nodes
    double stroke_width_jitter = 0.0;  // consumed by the render pipeline
    std::uint64_t seed = 0;
};

/// Applies, in order: smooth displacement warp, Gaussian blur, gamma
/// contrast, additive Gaussian noise clipped to [0,255]. Stages at their
/// identity settings are skipped, so an all-identity config returns the
/// input unchanged. Deterministic for a given seed.
RasterImage degrade(const RasterImage& img, const DegradeConfig& cfg);

void write_pgm(const std::string& path, const RasterImage& img);
RasterImage read_pgm(const std::string& path);

/// RGB copy of the image with the stroke polyline drawn in red, for
/// qualitative inspection. Returned buffer is row-major RGB8.
std::vector<std::uint8_t> overlay_strokes(const RasterImage& img, const StrokeSequence& seq,
                                          const RasterTransform& tf);

void write_ppm(const std::string& path, int height, int width,
               const std::vector<std::uint8_t>& rgb);

}  // namespace strokealign
