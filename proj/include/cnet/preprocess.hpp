#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cnet/contour.hpp"

namespace cnet {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, [0, 255]

    GrayImage() = default;
    GrayImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // row-major, {0, 1}

    BinaryImage() = default;
    BinaryImage(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return bits[static_cast<std::size_t>(y) * width + x];
    }
};

// Closed loop of boundary points at pixel centers; consecutive points are
// 8-connected, the closing edge is implicit.
struct PixelChain {
    std::vector<std::pair<double, double>> points;
};

// Threshold in [0, 255] maximizing the between-class variance of the 256-bin
// intensity histogram; ties resolve to the lowest threshold and a constant
// image returns its own value (so foreground `pixel > t` stays empty).
// The comparison is exact (integer cross-multiplication).
int otsu_threshold(const GrayImage& img);
int otsu_threshold_hist(const std::vector<std::uint64_t>& hist);

// pixel > t -> 1 (invert flips the comparison for dark-foreground data).
BinaryImage binarize(const GrayImage& img, int threshold, bool invert = false);

// Moore-neighbour boundary tracing (Jacob's stopping criterion) over the
// outer borders of all 8-connected foreground components; returns the chain
// with the largest absolute shoelace area, oriented counter-clockwise.
PixelChain extract_largest_contour(const BinaryImage& img);

// n points along the closed polyline, equidistant in arc length, starting
// at the chain's first vertex; emitted as complex x + iy.
Contour resample_equidistant(const PixelChain& chain, int n);

enum class RadialWeight { Intensity, BinaryCount };

// Histogram over `bins` equal radius bands from the intensity centroid out
// to the farthest nonzero pixel, normalized to sum 1. Rotation about the
// centroid moves mass only by discretization error.
std::vector<double> radial_histogram(const GrayImage& img, int bins = 14,
                                     RadialWeight weight = RadialWeight::Intensity);

// Full pipeline: Otsu binarization, largest-contour extraction, equidistant
// resampling to n points. `normalized` additionally centers/rescales.
Contour image_to_contour_raw(const GrayImage& img, int n, bool invert = false);
Contour image_to_contour(const GrayImage& img, int n, bool invert = false);

// 8-bit binary PGM (P5).
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);

// Raw row-major byte dump; dimensions come from a sidecar text file
// (path + ".dims") holding "width height".
GrayImage read_raw_with_sidecar(const std::string& path);

double shoelace_area(const PixelChain& chain);
double chain_length(const PixelChain& chain);

}  // namespace cnet
