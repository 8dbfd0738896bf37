#pragma once

#include "cnet/autodiff.hpp"
#include "cnet/dataset.hpp"

namespace cnet {

enum class TaskKind { Classify, Regress, Autoencode };

struct TrainConfig {
    TaskKind task = TaskKind::Classify;
    double lr = 5e-4;
    int batch_size = 128;
    int epochs = 200;
    std::uint64_t seed = 0;
    double val_fraction = 0.10;
    bool verbose = false;  // per-epoch log lines on stderr

    // Per-task defaults (lr/batch/epochs) used by the CLI.
    static TrainConfig defaults(TaskKind task);
};

struct History {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1;  // 0-based epoch of the restored checkpoint
};

LossSpec loss_for_task(TaskKind task);

// Mini-batch Adam with a deterministic seeded shuffle and 10% validation
// split; the best-validation parameters are restored into the model.
// Throws TrainError (with epoch/batch diagnostics) if the loss goes
// non-finite.
History fit(Model& model, const std::vector<DatasetRecord>& records,
            const TrainConfig& cfg);

enum class MetricKind { Accuracy, TestErrorPct, Mae, Mse, Iou };

double evaluate(const Model& model, const std::vector<DatasetRecord>& records,
                MetricKind metric, int iou_raster = 64);

// Classical per-record curvature estimators over a single-channel contour.
std::vector<double> baseline_finite_difference(const Contour& contour);
std::vector<double> baseline_circle_fit(const Contour& contour);

using BaselineFn = std::vector<double> (*)(const Contour&);
double evaluate_baseline(BaselineFn fn,
                         const std::vector<DatasetRecord>& records,
                         MetricKind metric);

// Even-odd rasterized intersection-over-union of two closed contours on a
// raster x raster grid over the joint bounding box with a 5% margin.
double iou(const Contour& a, const Contour& b, int raster);

}  // namespace cnet
