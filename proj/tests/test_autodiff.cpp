#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "cnet/checks.hpp"
#include "cnet/train.hpp"

using namespace cnet;

namespace {

Model tiny_conv_model(int n, int m) {
    Model model;
    model.input_n = n;
    model.input_k = 1;
    model.layers.push_back(LayerSpec::conv(1, 1, m));
    finalize_model(model);
    return model;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("zero filter: loss 0, gradient 0 against a zero target") {
    Model model = tiny_conv_model(8, 3);  // params default to zero
    Rng rng(41);
    const Contour x = random_contour(rng, 1, 8);
    Tape tape;
    std::vector<double> grad;
    const double loss = tape.forward_backward(
        model, x, {}, {LossKind::MseComplex}, Contour(1, 8), grad);
    CHECK(loss == 0.0);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("quadratic in a single complex tap: grad = (2a, 2b)") {
    Model model = tiny_conv_model(1, 1);
    model.params.values = {0.7, -0.3};
    const Contour x = Contour::from_channel({cplx{1.0, 0.0}});
    Tape tape;
    std::vector<double> grad;
    const double loss = tape.forward_backward(
        model, x, {}, {LossKind::MseComplex}, Contour(1, 1), grad);
    CHECK(loss == doctest::Approx(0.7 * 0.7 + 0.3 * 0.3));
    CHECK(grad[0] == doctest::Approx(1.4));
    CHECK(grad[1] == doctest::Approx(-0.6));
}

TEST_CASE("tape forward matches the composed layer ops") {
    Rng rng(43);
    Model model = build_regressor(12, 1, 1, {.widths = {3}, .kernel_size = 3,
                                             .act = ActKind::ModRelu});
    init_params(model, 7);
    const Contour x = random_contour(rng, 1, 12);
    Tape tape;
    const ModelOutput& out = tape.forward(model, x);

    Contour cur = recenter(x);
    FilterBank bank(3, 1, 3);
    std::copy(model.params.values.begin(), model.params.values.begin() + 18,
              reinterpret_cast<double*>(bank.taps.data()));
    cur = conv_forward(bank, cur);
    const double* bias = model.params.segment(2, "bias");
    Contour activated(cur.k(), cur.n());
    for (int c = 0; c < cur.k(); ++c)
        for (int q = 0; q < cur.n(); ++q)
            activated.at(c, q) = activation_value(
                {ActKind::ModRelu, bias[c], {}}, cur.at(c, q));
    cur = recenter(activated);
    FilterBank head(1, 3, 3);
    std::copy(model.params.values.begin() + 18,
              model.params.values.begin() + 36,
              reinterpret_cast<double*>(head.taps.data()));
    cur = conv_forward(head, cur);
    for (int q = 0; q < 12; ++q)
        CHECK(out.reals[q] == doctest::Approx(std::abs(cur.at(0, q))).epsilon(1e-14));
}

TEST_CASE("finite differences agree with the tape on a two-block model") {
    Rng rng(47);
    Model model = build_regressor(10, 1, 2, {.widths = {3, 3},
                                             .kernel_size = 3,
                                             .act = ActKind::ModRelu});
    init_params(model, 11);
    const double* bseg = model.params.segment(2, "bias");
    (void)bseg;
    const Contour x = random_contour(rng, 1, 10);
    std::vector<double> targets(10);
    for (double& t : targets) t = rng.uniform(0.0, 1.0);
    const FdReport report = finite_difference_check(
        model, x, {}, {LossKind::MaeReal}, targets, 1e-6);
    CHECK(report.max_rel_error_included <= 1e-5);
}

TEST_CASE("full gradients suite passes") {
    for (const CheckResult& r : gradients_suite(0xAB12)) {
        INFO(r.name, " residual ", r.residual);
        CHECK(r.pass);
    }
}

TEST_CASE("gradients are linear in the output cotangent") {
    Rng rng(53);
    Model model = build_autoencoder(8, 1, 2, {.widths = {3}, .kernel_size = 3,
                                              .act = ActKind::Siglog});
    init_params(model, 13);
    const Contour x = random_contour(rng, 1, 8);
    const Contour t1 = random_contour(rng, 1, 8);
    const Contour t2 = random_contour(rng, 1, 8);
    const double c = 1.7;

    Tape tape;
    const ModelOutput& out = tape.forward(model, x);
    const ModelOutput cot1 = loss_backward({LossKind::MseComplex}, out, t1);
    const ModelOutput cot2 = loss_backward({LossKind::MseComplex}, out, t2);

    std::vector<double> g1(model.params.values.size(), 0.0);
    std::vector<double> g2(model.params.values.size(), 0.0);
    tape.backward(model, cot1, g1);
    tape.backward(model, cot2, g2);

    ModelOutput combined = cot1;
    for (std::size_t i = 0; i < combined.contour.data().size(); ++i)
        combined.contour.data()[i] += c * cot2.contour.data()[i];
    std::vector<double> gc(model.params.values.size(), 0.0);
    tape.backward(model, combined, gc);

    for (std::size_t i = 0; i < gc.size(); ++i)
        CHECK(std::fabs(gc[i] - (g1[i] + c * g2[i])) <= 1e-10);
}

TEST_CASE("invariant losses give identical gradients on transformed inputs") {
    Rng rng(59);
    Model model = build_classifier(
        12, 1, 3, 1,
        {.widths = {4}, .kernel_size = 3,
         .coarsen = {2, CoarsenMode::Coset, Aggregator::Mean},
         .act = ActKind::ModRelu});
    init_params(model, 17);
    const Contour x = random_contour(rng, 1, 12);
    const GroupElement g(5, 1.9, 12);

    Tape tape;
    std::vector<double> ga, gb;
    const double la = tape.forward_backward(model, x, {},
                                            {LossKind::CrossEntropy}, 1, ga);
    const double lb = tape.forward_backward(model, act(g, x), {},
                                            {LossKind::CrossEntropy}, 1, gb);
    CHECK(std::fabs(la - lb) <= 1e-9);
    for (std::size_t i = 0; i < ga.size(); ++i)
        CHECK(std::fabs(ga[i] - gb[i]) <= 1e-9);
}

TEST_CASE("two identical passes are bit-identical") {
    Rng rng(61);
    Model model = build_classifier(
        8, 1, 2, 1,
        {.widths = {3}, .kernel_size = 3,
         .coarsen = {2, CoarsenMode::Strided, Aggregator::MagnitudeArgmax},
         .act = ActKind::AmplitudePhase});
    init_params(model, 19);
    const Contour x = random_contour(rng, 1, 8);
    Tape t1, t2;
    std::vector<double> g1, g2;
    const double l1 =
        t1.forward_backward(model, x, {}, {LossKind::CrossEntropy}, 0, g1);
    const double l2 =
        t2.forward_backward(model, x, {}, {LossKind::CrossEntropy}, 0, g2);
    CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
    REQUIRE(g1.size() == g2.size());
    CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("kink-pinned modrelu biases are reported and excluded") {
    Model model;
    model.input_n = 4;
    model.input_k = 1;
    model.layers.push_back(LayerSpec::conv(1, 1, 1));
    model.layers.push_back(LayerSpec::activation(ActKind::ModRelu));
    model.layers.push_back(LayerSpec::magnitude_head());
    finalize_model(model);
    model.params.values = {1.0, 0.0, -1.0};  // identity tap, bias = -1
    const Contour x = Contour::from_channel(
        {cplx{1.0, 0.0}, cplx{0.0, 1.0}, cplx{-1.0, 0.0}, cplx{0.0, -1.0}});
    const FdReport report = finite_difference_check(
        model, x, {}, {LossKind::MaeReal},
        std::vector<double>{0.5, 0.5, 0.5, 0.5}, 1e-6);
    REQUIRE(report.excluded.size() == 1);
    CHECK(report.excluded[0] == 2);
}

TEST_CASE("kernel extraction suite passes") {
    for (const CheckResult& r : kernel_extraction_suite(0xFACE)) {
        INFO(r.name, " residual ", r.residual);
        CHECK(r.pass);
    }
}

TEST_CASE("kernel extraction reports the probe residual") {
    const auto T = [](const std::vector<cplx>& x) {
        std::vector<cplx> y(x.size());
        for (std::size_t q = 0; q < x.size(); ++q)
            y[q] = 2.0 * x[(q + 2) % x.size()];
        return y;
    };
    const ExtractResult r = extract_convolution_kernel(T, 6);
    CHECK(r.residual <= 1e-12);
    CHECK(std::abs(r.kernel[4] - cplx{2.0, 0.0}) < 1e-15);
}

}  // TEST_SUITE
