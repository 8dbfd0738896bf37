#include "cnet/layers.hpp"

#include <algorithm>
#include <cmath>

#include "cnet/kernels.hpp"

namespace cnet {

FilterBank::FilterBank(int out_ch, int in_ch, int m)
    : out_channels(out_ch), in_channels(in_ch), taps_per_filter(m) {
    if (out_ch < 1 || in_ch < 1 || m < 1)
        throw ShapeError("filter bank needs k' >= 1, k >= 1, m >= 1");
    taps.assign(static_cast<std::size_t>(out_ch) * in_ch * m, cplx{0.0, 0.0});
}

cplx activation_value(const ActivationSpec& spec, cplx z) {
    const double r = std::abs(z);
    switch (spec.kind) {
        case ActKind::Siglog:
            return z / (r + 1.0);
        case ActKind::ModRelu: {
            if (r == 0.0) return {0.0, 0.0};
            const double u = r + spec.bias;
            return u > 0.0 ? z * (u / r) : cplx{0.0, 0.0};
        }
        case ActKind::AmplitudePhase: {
            if (r == 0.0) return {0.0, 0.0};  // tanh(r)/r -> 1, z = 0
            return z * (std::tanh(r) / r);
        }
        case ActKind::Custom:
            if (r == 0.0) return {0.0, 0.0};
            return spec.custom_g(r) * z;
    }
    return z;
}

Contour conv_forward(const FilterBank& bank, const Contour& x) {
    const int n = x.n();
    const int m = bank.taps_per_filter;
    if (bank.in_channels != x.k())
        throw ShapeError("filter bank expects " +
                         std::to_string(bank.in_channels) + " channels, got " +
                         std::to_string(x.k()));
    if (m > n) throw ShapeError("kernel size exceeds contour length");

    const auto& kern = kernels::active();
    std::vector<std::vector<cplx>> ext(x.k());
    for (int c = 0; c < x.k(); ++c) extend_channel_front(x.channel(c), m, ext[c]);

    Contour out(bank.out_channels, n);
    for (int j = 0; j < bank.out_channels; ++j) {
        auto oj = out.channel(j);
        for (int c = 0; c < x.k(); ++c) {
            kern.conv_taps_mac(
                reinterpret_cast<const double*>(&bank.tap(j, c, 0)),
                static_cast<std::size_t>(m),
                reinterpret_cast<const double*>(ext[c].data()),
                reinterpret_cast<double*>(oj.data()),
                static_cast<std::size_t>(n));
        }
    }
    return out;
}

Contour activation_forward(const ActivationSpec& spec, const Contour& x) {
    Contour y(x.k(), x.n());
    for (std::size_t i = 0; i < x.data().size(); ++i)
        y.data()[i] = activation_value(spec, x.data()[i]);
    return y;
}

Contour coarsen_forward(const CoarsenSpec& spec, const Contour& x) {
    const int n = x.n();
    const int p = spec.p;
    if (p < 2) throw ShapeError("coarsening factor must be >= 2");
    if (n % p != 0)
        throw ShapeError("coarsening factor " + std::to_string(p) +
                         " does not divide contour length " +
                         std::to_string(n));
    const int m = n / p;
    const int ns = spec.stride(n);
    const int nd = spec.dilation(n);

    Contour out(x.k(), m);
    for (int c = 0; c < x.k(); ++c) {
        auto xc = x.channel(c);
        auto oc = out.channel(c);
        for (int q = 0; q < m; ++q) {
            if (spec.agg == Aggregator::Mean) {
                cplx acc{0.0, 0.0};
                for (int j = 0; j < p; ++j)
                    acc += xc[(q * ns + nd * j) % n];
                oc[q] = acc / static_cast<double>(p);
            } else {
                // element with the largest magnitude; ties -> lowest j
                cplx best = xc[(q * ns) % n];
                double best_mag = std::norm(best);
                for (int j = 1; j < p; ++j) {
                    const cplx z = xc[(q * ns + nd * j) % n];
                    const double mag = std::norm(z);
                    if (mag > best_mag) {
                        best = z;
                        best_mag = mag;
                    }
                }
                oc[q] = best;
            }
        }
    }
    return out;
}

Contour upsample_forward(const Contour& x, int p) {
    if (p < 2) throw ShapeError("upsampling factor must be >= 2");
    Contour out(x.k(), x.n() * p);
    for (int c = 0; c < x.k(); ++c) {
        auto xc = x.channel(c);
        auto oc = out.channel(c);
        for (int q = 0; q < x.n(); ++q) oc[q * p] = xc[q];
    }
    return out;
}

std::vector<double> global_pool_forward(const GlobalPoolSpec& spec,
                                        const Contour& x) {
    const auto& kern = kernels::active();
    std::vector<double> mags(x.n());
    std::vector<double> out(x.k());
    for (int c = 0; c < x.k(); ++c) {
        kern.magnitudes(reinterpret_cast<const double*>(x.channel(c).data()),
                        mags.data(), static_cast<std::size_t>(x.n()));
        double sum = 0.0, mx = mags[0];
        for (double r : mags) {
            sum += r;
            mx = std::max(mx, r);
        }
        out[c] = spec.alpha * (sum / x.n()) + (1.0 - spec.alpha) * mx;
    }
    return out;
}

void extend_channel_front(std::span<const cplx> x, int m,
                          std::vector<cplx>& ext) {
    const int n = static_cast<int>(x.size());
    ext.resize(static_cast<std::size_t>(n) + m - 1);
    for (int i = 0; i < m - 1; ++i) ext[i] = x[(n - (m - 1) + i) % n];
    std::copy(x.begin(), x.end(), ext.begin() + (m - 1));
}

void extend_channel_back(std::span<const cplx> x, int m,
                         std::vector<cplx>& ext) {
    const int n = static_cast<int>(x.size());
    ext.resize(static_cast<std::size_t>(n) + m - 1);
    std::copy(x.begin(), x.end(), ext.begin());
    for (int i = 0; i < m - 1; ++i) ext[n + i] = x[i % n];
}

}  // namespace cnet
