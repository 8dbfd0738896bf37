#include "cnet/kernels.hpp"

#include <cmath>

// Reference kernels. Written with explicit re/im arithmetic so the scalar
// path does not round-trip through the Annex-G complex multiply helpers.

namespace cnet::kernels {
namespace {

void conv_taps_mac_scalar(const double* taps, std::size_t m, const double* x,
                          double* out, std::size_t n) {
    for (std::size_t q = 0; q < n; ++q) {
        double acc_re = out[2 * q];
        double acc_im = out[2 * q + 1];
        for (std::size_t t = 0; t < m; ++t) {
            const double tr = taps[2 * t];
            const double ti = taps[2 * t + 1];
            const double* xe = x + 2 * (q + m - 1 - t);
            acc_re += tr * xe[0] - ti * xe[1];
            acc_im += tr * xe[1] + ti * xe[0];
        }
        out[2 * q] = acc_re;
        out[2 * q + 1] = acc_im;
    }
}

std::complex<double> dot_conj_scalar(const double* a, const double* b,
                                     std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        const double ar = a[2 * q], ai = a[2 * q + 1];
        const double br = b[2 * q], bi = b[2 * q + 1];
        re += ar * br + ai * bi;
        im += ai * br - ar * bi;
    }
    return {re, im};
}

void magnitudes_scalar(const double* z, double* out, std::size_t n) {
    for (std::size_t q = 0; q < n; ++q) {
        const double re = z[2 * q], im = z[2 * q + 1];
        out[q] = std::sqrt(re * re + im * im);
    }
}

void adam_update_scalar(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * (gi * gi);
        const double mhat = m[i] * bc1;
        const double vhat = v[i] * bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {
        conv_taps_mac_scalar, dot_conj_scalar, magnitudes_scalar,
        adam_update_scalar,   "scalar",
    };
    return table;
}

}  // namespace cnet::kernels
