#pragma once

#include <complex>
#include <cstddef>
#include <string>

// Arithmetic inner loops shared by the layers, the backward pass and the
// optimizer. Complex arrays are interleaved (re, im) pairs — the standard
// std::complex<double> layout — and lengths count complex elements.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The active table is picked once per process from the
// CPU features (overridable with CNET_SIMD=scalar|avx2|auto); the two
// variants are equivalence-tested against each other in the unit suite.

namespace cnet::kernels {

struct KernelTable {
    // out[q] += sum_{t<m} taps[t] * x[q + m - 1 - t], q in [0, n).
    // x must have n + m - 1 valid complex elements. This is the hot loop of
    // circular convolution once the input has been cyclically extended.
    void (*conv_taps_mac)(const double* taps, std::size_t m, const double* x,
                          double* out, std::size_t n);

    // sum_q a[q] * conj(b[q])
    std::complex<double> (*dot_conj)(const double* a, const double* b,
                                     std::size_t n);

    // out[q] = |z[q]|
    void (*magnitudes)(const double* z, double* out, std::size_t n);

    // In-place bias-corrected Adam update over n real parameters.
    // bc1 = 1/(1-beta1^t), bc2 = 1/(1-beta2^t).
    void (*adam_update)(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2);

    const char* name;
};

const KernelTable& scalar_table();

#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
bool avx2_supported();
#endif

// Active table for this process.
const KernelTable& active();

// Force a backend by name ("scalar", "avx2", "auto"); throws on an unknown
// or unsupported name. Intended for tests and the CLI --simd flag.
void force_backend(const std::string& name);

}  // namespace cnet::kernels
