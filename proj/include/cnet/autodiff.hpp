#pragma once

#include <functional>
#include <vector>

#include "cnet/optim.hpp"

namespace cnet {

// Reverse-mode engine for sequential models. A Tape records one forward
// pass (caching per-layer inputs and selection indices) and differentiates
// the loss with respect to every real parameter; complex parameters
// contribute (dL/d re, dL/d im) pairs. A Tape is single-owner during a
// pass; distinct tapes over a shared read-only model may run concurrently.
class Tape {
public:
    // Runs the chain; the result stays valid until the next call.
    const ModelOutput& forward(const Model& model, const Contour& input,
                               const std::vector<double>& aux = {});

    // forward + loss + backward. grad is resized to the parameter count and
    // overwritten. Accumulation order is fixed, so identical inputs produce
    // bit-identical results.
    double forward_backward(const Model& model, const Contour& input,
                            const std::vector<double>& aux,
                            const LossSpec& loss, const LossTarget& target,
                            std::vector<double>& grad);

    // Backward from an explicit cotangent on the model output (must follow
    // a forward on the same model/input). Adds into grad.
    void backward(const Model& model, const ModelOutput& out_cotangent,
                  std::vector<double>& grad);

    const ModelOutput& output() const { return out_; }

private:
    struct LayerCache {
        Contour input;
        std::vector<std::vector<cplx>> ext;  // conv: cyclically extended input
        std::vector<int> sel;                // coarsen argmax / pool max index
        std::vector<double> mags;            // cached |z|
        std::vector<double> pool_mean, pool_max;
        std::size_t feature_offset = 0;
    };

    const Model* model_ = nullptr;
    Contour current_;
    std::vector<LayerCache> caches_;
    std::vector<double> features_;
    std::vector<double> aux_;
    ModelOutput out_;
};

struct FdReport {
    double max_rel_error = 0.0;           // over all parameters
    double max_rel_error_included = 0.0;  // excluding kink-pinned parameters
    std::vector<std::size_t> excluded;
};

// Central finite differences against the tape gradient. Relative error uses
// denominator max(|analytic|, |numeric|, 1e-8). ModRelu bias parameters
// pinned at the ReLU kink (|r + b| below kink_eps somewhere on the tape)
// are reported but excluded from max_rel_error_included.
FdReport finite_difference_check(Model& model, const Contour& input,
                                 const std::vector<double>& aux,
                                 const LossSpec& loss, const LossTarget& target,
                                 double step, double kink_eps = 1e-4);

struct ExtractResult {
    std::vector<cplx> kernel;
    double residual = 0.0;
};

// Recovers the kernel of a black-box linear map T on length-n single-channel
// contours that commutes with shifts and rotations: y = T(delta_0), verified
// on `probes` random inputs against the direct circular convolution y * x.
// Throws NotConvolutional when the worst probe residual exceeds tol.
ExtractResult extract_convolution_kernel(
    const std::function<std::vector<cplx>(const std::vector<cplx>&)>& T, int n,
    int probes = 5, double tol = 1e-9, std::uint64_t seed = 0x5eedULL);

}  // namespace cnet
