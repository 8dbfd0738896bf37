#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cnet/contour.hpp"
#include "cnet/preprocess.hpp"
#include "cnet/rng.hpp"

namespace cnet {

// Closed planar curve from a random trigonometric series:
//   x(t) = sum_k ax_k cos(k t) + bx_k sin(k t),  y likewise,  t in [0, 2pi).
struct FourierCurve {
    std::vector<double> ax, bx, ay, by;

    int modes() const { return static_cast<int>(ax.size()); }
    double x(double t) const;
    double y(double t) const;
    // first/second derivatives of the series
    double dx(double t) const;
    double dy(double t) const;
    double ddx(double t) const;
    double ddy(double t) const;
};

// kappa = |x'y'' - y'x''| / (x'^2 + y'^2)^(3/2), derivatives analytic.
// Throws CuspError when the squared speed drops below 1e-12.
double analytic_curvature(const FourierCurve& curve, double t);

struct DatasetRecord {
    std::string id;
    Contour contour;
    std::optional<int> label;
    std::optional<std::vector<double>> node_targets;
    std::optional<std::vector<double>> features;
};

struct SplitSpec {
    double fraction = 0.10;
    std::uint64_t seed = 0;
};

struct GenOptions {
    int points = 100;          // samples equidistant in arc length
    int grid = 10000;          // dense parameter grid for arc-length inversion
    double max_curvature = 1000.0;  // reject-and-redraw above this
    int min_modes = 2;
    int max_modes = 5;
    bool with_curvature = true;   // attach analytic node targets
    bool label_modes = false;     // attach label = modes - min_modes
    bool normalized = false;      // center/rescale emitted contours
    int max_redraws = 10000;
};

struct GenResult {
    std::vector<DatasetRecord> records;
    std::size_t rejected = 0;
};

// Deterministic given the seed (records use independent derived streams).
GenResult generate_curvature_dataset(int count, std::uint64_t seed,
                                     GenOptions opts = {});

// Curve sampled at `points` positions equidistant in arc length, via a dense
// parameter grid and linear interpolation. Returns the chosen parameters and
// fills `arc_positions` with their cumulative arc lengths when non-null.
std::vector<double> arc_length_parameters(const FourierCurve& curve,
                                          int points, int grid,
                                          std::vector<double>* arc_positions = nullptr);

// One record per line: {"id", "channels": [[[re, im], ...], ...], "label"?,
// "node_targets"?, "features"?}, numbers with 17 significant digits.
void write_jsonl(const std::vector<DatasetRecord>& records,
                 const std::string& path);
std::vector<DatasetRecord> read_jsonl(const std::string& path);

// IDX (big-endian) image/label pair; magics 0x803 and 0x801.
std::pair<std::vector<GrayImage>, std::vector<int>> read_idx(
    const std::string& images_path, const std::string& labels_path);

std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>>
split_train_val(const std::vector<DatasetRecord>& records, SplitSpec spec);

}  // namespace cnet
