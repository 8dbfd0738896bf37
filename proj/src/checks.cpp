#include "cnet/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cnet/train.hpp"

namespace cnet {

namespace {

double max_abs_diff(const Contour& a, const Contour& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

GroupElement random_group_element(Rng& rng, int n) {
    return GroupElement(rng.uniform_int(0, n - 1),
                        rng.uniform(0.0, 2.0 * std::numbers::pi), n);
}

FilterBank random_bank(Rng& rng, int out_ch, int in_ch, int m) {
    FilterBank bank(out_ch, in_ch, m);
    for (cplx& t : bank.taps) t = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return bank;
}

CheckResult make_result(std::string name, double residual, double tol) {
    return {std::move(name), residual, tol, residual <= tol};
}

}  // namespace

Contour random_contour(Rng& rng, int k, int n, double scale) {
    Contour x(k, n);
    for (cplx& z : x.data())
        z = {rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
    return x;
}

std::vector<cplx> naive_dft(std::span<const cplx> x) {
    const int n = static_cast<int>(x.size());
    std::vector<cplx> out(n);
    for (int f = 0; f < n; ++f) {
        cplx acc{0.0, 0.0};
        for (int q = 0; q < n; ++q)
            acc += x[q] * std::polar(1.0, -2.0 * std::numbers::pi * f * q / n);
        out[f] = acc;
    }
    return out;
}

std::vector<CheckResult> equivariance_suite(std::uint64_t seed, int trials) {
    std::vector<CheckResult> results;
    Rng rng(seed);

    // convolution commutes with the full group action
    {
        double worst = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            const int n = static_cast<int>(rng.uniform_int(4, 64));
            const int k = static_cast<int>(rng.uniform_int(1, 4));
            const int kp = static_cast<int>(rng.uniform_int(1, 4));
            const int m = static_cast<int>(rng.uniform_int(1, n));
            const FilterBank bank = random_bank(rng, kp, k, m);
            const Contour x = random_contour(rng, k, n);
            const GroupElement g = random_group_element(rng, n);
            worst = std::max(worst,
                             max_abs_diff(conv_forward(bank, act(g, x)),
                                          act(g, conv_forward(bank, x))));
        }
        results.push_back(make_result("conv_equivariance", worst, 1e-10));
    }

    // pointwise activations commute with rotations
    {
        double worst = 0.0;
        for (int trial = 0; trial < trials * 10; ++trial) {
            const cplx z{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
            const cplx w = std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
            for (const ActivationSpec& spec :
                 {ActivationSpec{ActKind::Siglog, 0.0, {}},
                  ActivationSpec{ActKind::ModRelu, rng.uniform(-1.0, 1.0), {}},
                  ActivationSpec{ActKind::AmplitudePhase, 0.0, {}}}) {
                worst = std::max(worst,
                                 std::abs(activation_value(spec, w * z) -
                                          w * activation_value(spec, z)));
            }
        }
        results.push_back(make_result("activation_rotation", worst, 1e-12));
    }

    // coset coarsening commutes with the full action (output shift l mod n/p)
    {
        double worst = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            const int p = static_cast<int>(rng.uniform_int(2, 4));
            const int mout = static_cast<int>(rng.uniform_int(2, 16));
            const int n = p * mout;
            const int k = static_cast<int>(rng.uniform_int(1, 3));
            const CoarsenSpec spec{p, CoarsenMode::Coset,
                                   trial % 2 == 0 ? Aggregator::Mean
                                                  : Aggregator::MagnitudeArgmax};
            const Contour x = random_contour(rng, k, n);
            const GroupElement g = random_group_element(rng, n);
            const GroupElement gout = GroupElement::from_rotation(
                g.shift(), g.rotation(), mout);
            worst = std::max(worst,
                             max_abs_diff(coarsen_forward(spec, act(g, x)),
                                          act(gout, coarsen_forward(spec, x))));
        }
        results.push_back(make_result("coset_coarsen_equivariance", worst, 1e-12));
    }

    // strided coarsening commutes with the subgroup p Z_n x S^1
    {
        double worst = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            const int p = static_cast<int>(rng.uniform_int(2, 4));
            const int mout = static_cast<int>(rng.uniform_int(2, 16));
            const int n = p * mout;
            const CoarsenSpec spec{p, CoarsenMode::Strided, Aggregator::Mean};
            const Contour x = random_contour(rng, 1, n);
            const std::int64_t l = rng.uniform_int(0, mout - 1);
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const GroupElement g(l * p, angle, n);
            const GroupElement gout(l, angle, mout);
            worst = std::max(worst,
                             max_abs_diff(coarsen_forward(spec, act(g, x)),
                                          act(gout, coarsen_forward(spec, x))));
        }
        results.push_back(make_result("strided_coarsen_subgroup", worst, 1e-12));
    }

    // strided coarsening fails for a unit shift: no output shift matches
    {
        const Contour x = Contour::from_channel({cplx{1.0, 0.0}, cplx{2.0, 0.0},
                                                 cplx{5.0, 0.0}, cplx{9.0, 0.0}});
        const CoarsenSpec spec{2, CoarsenMode::Strided, Aggregator::Mean};
        const Contour shifted = coarsen_forward(spec, act(GroupElement(1, 0.0, 4), x));
        const Contour base = coarsen_forward(spec, x);
        double violation = std::numeric_limits<double>::infinity();
        for (int l = 0; l < base.n(); ++l)
            violation = std::min(violation,
                                 max_abs_diff(shifted,
                                              act(GroupElement(l, 0.0, base.n()), base)));
        results.push_back(
            {"strided_coarsen_counterexample", violation, 1e-3, violation > 1e-3});
    }

    // global pooling is invariant
    {
        double worst = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            const int n = static_cast<int>(rng.uniform_int(4, 64));
            const int k = static_cast<int>(rng.uniform_int(1, 4));
            const GlobalPoolSpec spec{rng.uniform()};
            const Contour x = random_contour(rng, k, n);
            const GroupElement g = random_group_element(rng, n);
            const auto a = global_pool_forward(spec, x);
            const auto b = global_pool_forward(spec, act(g, x));
            for (int c = 0; c < k; ++c)
                worst = std::max(worst, std::fabs(a[c] - b[c]));
        }
        results.push_back(make_result("global_pool_invariance", worst, 1e-12));
    }

    // re-centering commutes with the action
    {
        double worst = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            const int n = static_cast<int>(rng.uniform_int(4, 64));
            const int k = static_cast<int>(rng.uniform_int(1, 4));
            const Contour x = random_contour(rng, k, n);
            const GroupElement g = random_group_element(rng, n);
            worst = std::max(worst, max_abs_diff(recenter(act(g, x)),
                                                 act(g, recenter(x))));
        }
        results.push_back(make_result("recenter_equivariance", worst, 1e-12));
    }

    // normalization commutes with the action
    {
        double worst = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            const int n = static_cast<int>(rng.uniform_int(4, 64));
            const int k = static_cast<int>(rng.uniform_int(1, 4));
            const Contour x = random_contour(rng, k, n);
            const GroupElement g = random_group_element(rng, n);
            worst = std::max(worst, max_abs_diff(normalize(act(g, x)),
                                                 act(g, normalize(x))));
        }
        results.push_back(make_result("normalize_equivariance", worst, 1e-10));
    }

    // spectral cross-check: DFT(conv(phi, x)) = sum_c DFT(phi_c) DFT(x_c)
    {
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const int n = static_cast<int>(rng.uniform_int(4, 32));
            const int k = static_cast<int>(rng.uniform_int(1, 3));
            const int m = static_cast<int>(rng.uniform_int(1, n));
            const FilterBank bank = random_bank(rng, 1, k, m);
            const Contour x = random_contour(rng, k, n);
            const Contour out = conv_forward(bank, x);
            const auto out_hat = naive_dft(out.channel(0));
            std::vector<cplx> expect(n, cplx{0.0, 0.0});
            for (int c = 0; c < k; ++c) {
                std::vector<cplx> phi(n, cplx{0.0, 0.0});
                for (int t = 0; t < m; ++t) phi[t] = bank.tap(0, c, t);
                const auto phi_hat = naive_dft(phi);
                const auto x_hat = naive_dft(x.channel(c));
                for (int f = 0; f < n; ++f) expect[f] += phi_hat[f] * x_hat[f];
            }
            double scale = 0.0, diff = 0.0;
            for (int f = 0; f < n; ++f) {
                scale = std::max(scale, std::abs(expect[f]));
                diff = std::max(diff, std::abs(expect[f] - out_hat[f]));
            }
            worst = std::max(worst, diff / std::max(scale, 1e-30));
        }
        results.push_back(make_result("conv_dft_crosscheck", worst, 1e-8));
    }

    // convolution of the zero contour is exactly zero
    {
        const FilterBank bank = random_bank(rng, 3, 2, 4);
        const Contour zero(2, 16);
        const Contour out = conv_forward(bank, zero);
        double worst = 0.0;
        for (const cplx& z : out.data()) worst = std::max(worst, std::abs(z));
        results.push_back(make_result("conv_no_bias", worst, 0.0));
    }

    return results;
}

std::vector<CheckResult> gradients_suite(std::uint64_t seed) {
    std::vector<CheckResult> results;
    Rng rng(seed);

    const auto randomize_biases = [&](Model& model) {
        for (const ParamStore::Segment& seg : model.params.layout) {
            if (seg.name != "bias") continue;
            for (std::size_t i = 0; i < seg.len; ++i) {
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                model.params.values[seg.offset + i] =
                    sign * rng.uniform(0.05, 0.3);
            }
        }
    };

    const auto check = [&](std::string name, Model model, TaskKind task,
                           const LossTarget& target, int n) {
        init_params(model, rng.next_u64());
        randomize_biases(model);
        const Contour input = random_contour(rng, model.input_k, n);
        const FdReport report = finite_difference_check(
            model, input, {}, loss_for_task(task), target, 1e-6);
        results.push_back(
            make_result(std::move(name), report.max_rel_error_included, 1e-5));
    };

    {
        Model model = build_classifier(
            16, 1, 3, 2,
            {.widths = {3, 4}, .kernel_size = 3,
             .coarsen = {2, CoarsenMode::Strided, Aggregator::Mean},
             .act = ActKind::ModRelu});
        check("grad_classifier_strided_mean", std::move(model),
              TaskKind::Classify, 1, 16);
    }
    {
        Model model = build_classifier(
            16, 2, 3, 2,
            {.widths = {3, 3}, .kernel_size = 3,
             .coarsen = {2, CoarsenMode::Coset, Aggregator::MagnitudeArgmax},
             .act = ActKind::Siglog});
        check("grad_classifier_coset_argmax", std::move(model),
              TaskKind::Classify, 2, 16);
    }
    {
        Model model = build_regressor(
            12, 1, 2, {.widths = {4, 3}, .kernel_size = 3,
                       .act = ActKind::ModRelu});
        std::vector<double> targets(12);
        for (double& t : targets) t = rng.uniform(0.0, 2.0);
        check("grad_regressor", std::move(model), TaskKind::Regress, targets,
              12);
    }
    {
        Model model = build_autoencoder(
            16, 1, 4, {.widths = {4, 4}, .kernel_size = 3,
                       .act = ActKind::AmplitudePhase});
        Rng target_rng(rng.next_u64());
        const Contour target = random_contour(target_rng, 1, 16);
        check("grad_autoencoder", std::move(model), TaskKind::Autoencode,
              target, 16);
    }
    return results;
}

std::vector<CheckResult> kernel_extraction_suite(std::uint64_t seed) {
    std::vector<CheckResult> results;
    Rng rng(seed);

    // identity map -> delta_0
    {
        const auto T = [](const std::vector<cplx>& x) { return x; };
        const ExtractResult r = extract_convolution_kernel(T, 8, 5, 1e-9, seed);
        double residual = std::abs(r.kernel[0] - cplx{1.0, 0.0});
        for (int q = 1; q < 8; ++q)
            residual = std::max(residual, std::abs(r.kernel[q]));
        results.push_back(make_result("extract_identity", residual, 1e-12));
    }

    // cyclic shift -> delta_1
    {
        const auto T = [](const std::vector<cplx>& x) {
            std::vector<cplx> y(x.size());
            for (std::size_t q = 0; q < x.size(); ++q)
                y[q] = x[(q + x.size() - 1) % x.size()];
            return y;
        };
        const ExtractResult r = extract_convolution_kernel(T, 8, 5, 1e-9, seed);
        double residual = std::abs(r.kernel[1] - cplx{1.0, 0.0});
        for (int q = 0; q < 8; ++q)
            if (q != 1) residual = std::max(residual, std::abs(r.kernel[q]));
        results.push_back(make_result("extract_shift", residual, 1e-12));
    }

    // known kernels round-trip exactly for n <= 16
    {
        double worst = 0.0;
        for (int n = 2; n <= 16; ++n) {
            std::vector<cplx> kernel(n);
            for (cplx& z : kernel)
                z = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            const auto T = [&kernel, n](const std::vector<cplx>& x) {
                std::vector<cplx> y(n, cplx{0.0, 0.0});
                for (int q = 0; q < n; ++q)
                    for (int j = 0; j < n; ++j)
                        y[q] += kernel[j] * x[((q - j) % n + n) % n];
                return y;
            };
            const ExtractResult r =
                extract_convolution_kernel(T, n, 5, 1e-9, seed + n);
            for (int q = 0; q < n; ++q)
                worst = std::max(worst, std::abs(r.kernel[q] - kernel[q]));
            worst = std::max(worst, r.residual);
        }
        results.push_back(make_result("extract_roundtrip", worst, 1e-12));
    }

    // a pointwise mask is linear and rotation-commuting but not
    // shift-equivariant; the probe check must reject it
    {
        const auto T = [](const std::vector<cplx>& x) {
            std::vector<cplx> y(x.size());
            for (std::size_t q = 0; q < x.size(); ++q)
                y[q] = x[q] * static_cast<double>(q + 1);
            return y;
        };
        bool rejected = false;
        try {
            extract_convolution_kernel(T, 8, 5, 1e-9, seed);
        } catch (const NotConvolutional&) {
            rejected = true;
        }
        results.push_back(
            {"extract_rejects_nonconvolutional", rejected ? 1.0 : 0.0, 0.0,
             rejected});
    }
    return results;
}

}  // namespace cnet
