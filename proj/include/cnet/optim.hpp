#pragma once

#include <variant>
#include <vector>

#include "cnet/model.hpp"

namespace cnet {

// Model output: logits (classifier), per-node real values (regressor) or a
// contour (autoencoder).
struct ModelOutput {
    OutputKind kind = OutputKind::Contour;
    std::vector<double> reals;
    Contour contour;
};

enum class LossKind { CrossEntropy, MseComplex, MaeReal };

struct LossSpec {
    LossKind kind = LossKind::MseComplex;
};

// Class index, per-node real targets, or a target contour.
using LossTarget = std::variant<int, std::vector<double>, Contour>;

double compute_loss(const LossSpec& spec, const ModelOutput& pred,
                    const LossTarget& target);

// d loss / d output. For real outputs the cotangent is in `reals`; for
// contour outputs it is the complex pair (dL/d re, dL/d im) per sample.
ModelOutput loss_backward(const LossSpec& spec, const ModelOutput& pred,
                          const LossTarget& target);

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);

struct AdamState {
    long t = 0;
    std::vector<double> m, v;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t n_params, double lr_)
        : m(n_params, 0.0), v(n_params, 0.0), lr(lr_) {}
};

// Standard bias-corrected Adam update, in place. Throws TrainError on a
// non-finite gradient. Range constraints (e.g. pool alphas) are the model's
// contract and are clamped by the caller afterwards.
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad);

}  // namespace cnet
