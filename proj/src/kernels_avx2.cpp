// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; nothing here runs unless the dispatcher verified CPU
// support first.

#if defined(__x86_64__) || defined(_M_X64)

#include "cnet/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace cnet::kernels {
namespace {

// A __m256d holds two interleaved complex doubles: [re0, im0, re1, im1].
//
// Complex multiply-accumulate by a scalar tap (tr + i*ti) splits into two
// FMAs per register:
//   acc += tr * [re, im, ...]
//   acc += [-ti, +ti, ...] * [im, re, ...]
// which lands [tr*re - ti*im, tr*im + ti*re] in the right lanes.

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void conv_taps_mac_avx2(const double* taps, std::size_t m, const double* x,
                        double* out, std::size_t n) {
    std::size_t q = 0;
    for (; q + 4 <= n; q += 4) {
        __m256d acc0 = _mm256_loadu_pd(out + 2 * q);
        __m256d acc1 = _mm256_loadu_pd(out + 2 * q + 4);
        for (std::size_t t = 0; t < m; ++t) {
            const double tr = taps[2 * t];
            const double ti = taps[2 * t + 1];
            const __m256d vtr = _mm256_set1_pd(tr);
            const __m256d vti = _mm256_set_pd(ti, -ti, ti, -ti);
            const double* xe = x + 2 * (q + m - 1 - t);
            const __m256d x0 = _mm256_loadu_pd(xe);
            const __m256d x1 = _mm256_loadu_pd(xe + 4);
            acc0 = _mm256_fmadd_pd(vtr, x0, acc0);
            acc1 = _mm256_fmadd_pd(vtr, x1, acc1);
            acc0 = _mm256_fmadd_pd(vti, _mm256_permute_pd(x0, 0x5), acc0);
            acc1 = _mm256_fmadd_pd(vti, _mm256_permute_pd(x1, 0x5), acc1);
        }
        _mm256_storeu_pd(out + 2 * q, acc0);
        _mm256_storeu_pd(out + 2 * q + 4, acc1);
    }
    for (; q < n; ++q) {
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

std::complex<double> dot_conj_avx2(const double* a, const double* b,
                                   std::size_t n) {
    // re lanes: ar*br + ai*bi is a plain lane product summed across lanes.
    // im lanes: ai*br - ar*bi = swap(a) * (b with odd lanes negated).
    const __m256d odd_neg =
        _mm256_castsi256_pd(_mm256_set_epi64x(0x8000000000000000LL, 0,
                                              0x8000000000000000LL, 0));
    __m256d vre = _mm256_setzero_pd();
    __m256d vim = _mm256_setzero_pd();
    std::size_t q = 0;
    for (; q + 2 <= n; q += 2) {
        const __m256d va = _mm256_loadu_pd(a + 2 * q);
        const __m256d vb = _mm256_loadu_pd(b + 2 * q);
        vre = _mm256_fmadd_pd(va, vb, vre);
        vim = _mm256_fmadd_pd(_mm256_permute_pd(va, 0x5),
                              _mm256_xor_pd(vb, odd_neg), vim);
    }
    double re = hsum(vre);
    double im = hsum(vim);
    for (; q < n; ++q) {
        const double ar = a[2 * q], ai = a[2 * q + 1];
        const double br = b[2 * q], bi = b[2 * q + 1];
        re += ar * br + ai * bi;
        im += ai * br - ar * bi;
    }
    return {re, im};
}

void magnitudes_avx2(const double* z, double* out, std::size_t n) {
    std::size_t q = 0;
    for (; q + 4 <= n; q += 4) {
        const __m256d a = _mm256_loadu_pd(z + 2 * q);
        const __m256d b = _mm256_loadu_pd(z + 2 * q + 4);
        // hadd of the squared lanes yields [|z0|^2, |z2|^2, |z1|^2, |z3|^2];
        // permute back into order before the square root.
        const __m256d h =
            _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
        const __m256d sq = _mm256_permute4x64_pd(h, _MM_SHUFFLE(3, 1, 2, 0));
        _mm256_storeu_pd(out + q, _mm256_sqrt_pd(sq));
    }
    for (; q < n; ++q) {
        const double re = z[2 * q], im = z[2 * q + 1];
        out[q] = std::sqrt(re * re + im * im);
    }
}

void adam_update_avx2(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vc1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vc2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        vm = _mm256_add_pd(_mm256_mul_pd(vb1, vm), _mm256_mul_pd(vc1, vg));
        vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv),
                           _mm256_mul_pd(vc2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(vm, vbc1);
        const __m256d vhat = _mm256_mul_pd(vv, vbc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
    }
    for (; i < n; ++i) {
        const double gi = g[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * (gi * gi);
        const double mhat = m[i] * bc1;
        const double vhat = v[i] * bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const KernelTable& avx2_table() {
    static const KernelTable table = {
        conv_taps_mac_avx2, dot_conj_avx2, magnitudes_avx2,
        adam_update_avx2,   "avx2",
    };
    return table;
}

}  // namespace cnet::kernels

#endif  // x86-64
