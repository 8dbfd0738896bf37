#include <doctest.h>

#include <complex>
#include <vector>

#include "cnet/kernels.hpp"
#include "cnet/rng.hpp"

using cnet::Rng;
using cnet::kernels::KernelTable;
namespace kernels = cnet::kernels;

namespace {

using cvec = std::vector<std::complex<double>>;

cvec random_cvec(Rng& rng, std::size_t n) {
    cvec v(n);
    for (auto& z : v) z = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return v;
}

const double* raw(const cvec& v) {
    return reinterpret_cast<const double*>(v.data());
}
double* raw(cvec& v) { return reinterpret_cast<double*>(v.data()); }

// independent reference for the convolution MAC
cvec conv_taps_oracle(const cvec& taps, const cvec& x, std::size_t n) {
    const std::size_t m = taps.size();
    cvec out(n, {0.0, 0.0});
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t t = 0; t < m; ++t)
            out[q] += taps[t] * x[q + m - 1 - t];
    return out;
}

void run_table_vs_oracle(const KernelTable& table) {
    Rng rng(11);
    for (std::size_t n : {1, 2, 3, 4, 5, 7, 8, 16, 100, 101}) {
        for (std::size_t m : {std::size_t{1}, std::size_t{2}, std::size_t{5}, n}) {
            if (m > n) continue;
            const cvec taps = random_cvec(rng, m);
            const cvec ext = random_cvec(rng, n + m - 1);
            cvec out(n, {0.0, 0.0});
            table.conv_taps_mac(raw(taps), m, raw(ext), raw(out), n);
            const cvec expect = conv_taps_oracle(taps, ext, n);
            for (std::size_t q = 0; q < n; ++q)
                CHECK(std::abs(out[q] - expect[q]) < 1e-12);

            const cvec a = random_cvec(rng, n);
            const cvec b = random_cvec(rng, n);
            std::complex<double> dot{0.0, 0.0};
            for (std::size_t q = 0; q < n; ++q) dot += a[q] * std::conj(b[q]);
            CHECK(std::abs(table.dot_conj(raw(a), raw(b), n) - dot) < 1e-12);

            std::vector<double> mags(n);
            table.magnitudes(raw(a), mags.data(), n);
            for (std::size_t q = 0; q < n; ++q)
                CHECK(mags[q] == doctest::Approx(std::abs(a[q])).epsilon(1e-14));
        }
    }
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernels match independent oracles") {
    run_table_vs_oracle(kernels::scalar_table());
}

#if defined(__x86_64__)
TEST_CASE("avx2 kernels match independent oracles") {
    if (!kernels::avx2_supported()) return;
    run_table_vs_oracle(kernels::avx2_table());
}

TEST_CASE("avx2 and scalar variants are equivalent") {
    if (!kernels::avx2_supported()) return;
    const KernelTable& scalar = kernels::scalar_table();
    const KernelTable& avx2 = kernels::avx2_table();
    Rng rng(22);

    for (std::size_t n : {1, 2, 3, 4, 5, 6, 7, 9, 31, 64, 100, 127, 1000}) {
        const std::size_t m = 1 + rng.uniform_index(std::min<std::size_t>(n, 9));
        const cvec taps = random_cvec(rng, m);
        const cvec ext = random_cvec(rng, n + m - 1);
        cvec out_s(n, {0.1, -0.2});
        cvec out_v = out_s;
        scalar.conv_taps_mac(raw(taps), m, raw(ext), raw(out_s), n);
        avx2.conv_taps_mac(raw(taps), m, raw(ext), raw(out_v), n);
        for (std::size_t q = 0; q < n; ++q)
            CHECK(std::abs(out_s[q] - out_v[q]) < 1e-12);

        const cvec a = random_cvec(rng, n);
        const cvec b = random_cvec(rng, n);
        CHECK(std::abs(scalar.dot_conj(raw(a), raw(b), n) -
                       avx2.dot_conj(raw(a), raw(b), n)) < 1e-12 * (1.0 + n));

        std::vector<double> mags_s(n), mags_v(n);
        scalar.magnitudes(raw(a), mags_s.data(), n);
        avx2.magnitudes(raw(a), mags_v.data(), n);
        for (std::size_t q = 0; q < n; ++q) CHECK(mags_s[q] == mags_v[q]);

        std::vector<double> p_s(n), m_s(n, 0.0), v_s(n, 0.0), g(n);
        for (std::size_t i = 0; i < n; ++i) {
            p_s[i] = rng.uniform(-1.0, 1.0);
            g[i] = rng.uniform(-1.0, 1.0);
        }
        std::vector<double> p_v = p_s, m_v = m_s, v_v = v_s;
        for (int step = 1; step <= 3; ++step) {
            const double bc1 = 1.0 / (1.0 - std::pow(0.9, step));
            const double bc2 = 1.0 / (1.0 - std::pow(0.999, step));
            scalar.adam_update(p_s.data(), m_s.data(), v_s.data(), g.data(), n,
                               1e-3, 0.9, 0.999, 1e-8, bc1, bc2);
            avx2.adam_update(p_v.data(), m_v.data(), v_v.data(), g.data(), n,
                             1e-3, 0.9, 0.999, 1e-8, bc1, bc2);
        }
        for (std::size_t i = 0; i < n; ++i)
            CHECK(p_s[i] == doctest::Approx(p_v[i]).epsilon(1e-12));
    }
}
#endif

TEST_CASE("backend forcing") {
    kernels::force_backend("scalar");
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::force_backend("auto");
#if defined(__x86_64__)
    if (kernels::avx2_supported())
        CHECK(std::string(kernels::active().name) == "avx2");
#endif
    CHECK_THROWS(kernels::force_backend("neon"));
}

}  // TEST_SUITE
