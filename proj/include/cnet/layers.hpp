#pragma once

#include <functional>
#include <vector>

#include "cnet/contour.hpp"

namespace cnet {

// Bank of k' complex filters, each k channels x m taps. Tap storage is
// contiguous per (filter, channel) pair so the convolution kernel can walk
// it directly.
struct FilterBank {
    int out_channels = 0;  // k'
    int in_channels = 0;   // k
    int taps_per_filter = 0;  // m
    std::vector<cplx> taps;   // [(j * k + c) * m + t]

    FilterBank() = default;
    FilterBank(int out_ch, int in_ch, int m);

    cplx& tap(int j, int c, int t) {
        return taps[(static_cast<std::size_t>(j) * in_channels + c) *
                        taps_per_filter +
                    t];
    }
    const cplx& tap(int j, int c, int t) const {
        return taps[(static_cast<std::size_t>(j) * in_channels + c) *
                        taps_per_filter +
                    t];
    }
};

// Pointwise maps a(z) = g(|z|) z. Every such map commutes with rotations,
// and these are the only pointwise maps that do.
enum class ActKind { Siglog, ModRelu, AmplitudePhase, Custom };

struct ActivationSpec {
    ActKind kind = ActKind::ModRelu;
    double bias = 0.0;  // ModRelu only
    std::function<cplx(double)> custom_g;  // Custom only, r >= 0 -> C
};

// a(z) for one sample; a(0) = 0 for every kind.
cplx activation_value(const ActivationSpec& spec, cplx z);

enum class CoarsenMode { Coset, Strided };
enum class Aggregator { Mean, MagnitudeArgmax };

// Downsampling by factor p via an aggregator over p-element groups.
//   coset:   stride 1, dilation n/p — pools the coset {q, q+m, ..., q+(p-1)m}
//   strided: stride p, dilation 1  — pools consecutive windows
// Coset pooling commutes with every shift; strided pooling only with shifts
// that are multiples of p (shifting the input by l*p shifts the output by l).
struct CoarsenSpec {
    int p = 2;
    CoarsenMode mode = CoarsenMode::Strided;
    Aggregator agg = Aggregator::Mean;

    int stride(int /*n*/) const { return mode == CoarsenMode::Coset ? 1 : p; }
    int dilation(int n) const { return mode == CoarsenMode::Coset ? n / p : 1; }
};

// alpha-blend of mean and max channel magnitudes; invariant under the whole
// group action.
struct GlobalPoolSpec {
    double alpha = 0.5;  // in [0, 1], learnable
};

// output_j(q) = sum_c sum_t phi^j_c(t) x_c(q - t mod n). No bias term —
// adding one would break rotation equivariance.
Contour conv_forward(const FilterBank& bank, const Contour& x);

Contour activation_forward(const ActivationSpec& spec, const Contour& x);

Contour coarsen_forward(const CoarsenSpec& spec, const Contour& x);

// Zero insertion: y(q p) = x(q), other positions 0.
Contour upsample_forward(const Contour& x, int p);

// component i = alpha * mean_j |x_i(j)| + (1 - alpha) * max_j |x_i(j)|
std::vector<double> global_pool_forward(const GlobalPoolSpec& spec,
                                        const Contour& x);

// Cyclic extension used by the convolution kernels: the last m-1 samples of
// the channel prepended, so that ext[q + m - 1 - t] = x((q - t) mod n).
void extend_channel_front(std::span<const cplx> x, int m,
                          std::vector<cplx>& ext);
// Extension at the back: ext[i] = x(i mod n) for i < n + m - 1; used by the
// convolution backward pass.
void extend_channel_back(std::span<const cplx> x, int m,
                         std::vector<cplx>& ext);

}  // namespace cnet
