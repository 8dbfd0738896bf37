#include "cnet/optim.hpp"

#include <algorithm>
#include <cmath>

#include "cnet/kernels.hpp"

namespace cnet {

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

namespace {

int checked_label(const ModelOutput& pred, const LossTarget& target) {
    const int label = std::get<int>(target);
    if (label < 0 || label >= static_cast<int>(pred.reals.size()))
        throw ShapeError("class label out of range");
    return label;
}

const std::vector<double>& checked_real_target(const ModelOutput& pred,
                                               const LossTarget& target) {
    const auto& t = std::get<std::vector<double>>(target);
    if (t.size() != pred.reals.size())
        throw ShapeError("real target length mismatch");
    return t;
}

const Contour& checked_contour_target(const ModelOutput& pred,
                                      const LossTarget& target) {
    const auto& t = std::get<Contour>(target);
    if (t.k() != pred.contour.k() || t.n() != pred.contour.n())
        throw ShapeError("target contour shape mismatch");
    return t;
}

}  // namespace

double compute_loss(const LossSpec& spec, const ModelOutput& pred,
                    const LossTarget& target) {
    switch (spec.kind) {
        case LossKind::CrossEntropy: {
            const int label = checked_label(pred, target);
            const double mx =
                *std::max_element(pred.reals.begin(), pred.reals.end());
            double sum = 0.0;
            for (double z : pred.reals) sum += std::exp(z - mx);
            return std::log(sum) - (pred.reals[label] - mx);
        }
        case LossKind::MseComplex: {
            const Contour& t = checked_contour_target(pred, target);
            double acc = 0.0;
            for (std::size_t i = 0; i < t.data().size(); ++i)
                acc += std::norm(pred.contour.data()[i] - t.data()[i]);
            return acc / static_cast<double>(t.data().size());
        }
        case LossKind::MaeReal: {
            const auto& t = checked_real_target(pred, target);
            double acc = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i)
                acc += std::abs(pred.reals[i] - t[i]);
            return acc / static_cast<double>(t.size());
        }
    }
    throw Error("unreachable loss kind");
}

ModelOutput loss_backward(const LossSpec& spec, const ModelOutput& pred,
                          const LossTarget& target) {
    ModelOutput cot;
    cot.kind = pred.kind;
    switch (spec.kind) {
        case LossKind::CrossEntropy: {
            const int label = checked_label(pred, target);
            cot.reals = softmax(pred.reals);
            cot.reals[label] -= 1.0;
            break;
        }
        case LossKind::MseComplex: {
            const Contour& t = checked_contour_target(pred, target);
            cot.contour = Contour(t.k(), t.n());
            const double scale = 2.0 / static_cast<double>(t.data().size());
            for (std::size_t i = 0; i < t.data().size(); ++i)
                cot.contour.data()[i] =
                    scale * (pred.contour.data()[i] - t.data()[i]);
            break;
        }
        case LossKind::MaeReal: {
            const auto& t = checked_real_target(pred, target);
            cot.reals.resize(t.size());
            const double scale = 1.0 / static_cast<double>(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double d = pred.reals[i] - t[i];
                cot.reals[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
            }
            break;
        }
    }
    return cot;
}

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad) {
    if (params.size() != grad.size() || params.size() != state.m.size() ||
        params.size() != state.v.size())
        throw ShapeError("adam_step length mismatch");
    if (state.lr < 0.0) throw TrainError("negative learning rate");
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i]))
            throw TrainError("non-finite gradient at parameter " +
                             std::to_string(i));
    }
    state.t += 1;
    const double bc1 = 1.0 / (1.0 - std::pow(state.beta1, state.t));
    const double bc2 = 1.0 / (1.0 - std::pow(state.beta2, state.t));
    kernels::active().adam_update(params.data(), state.m.data(),
                                  state.v.data(), grad.data(), params.size(),
                                  state.lr, state.beta1, state.beta2,
                                  state.eps, bc1, bc2);
}

}  // namespace cnet
