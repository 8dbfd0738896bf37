#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cnet/checks.hpp"
#include "cnet/contour.hpp"

using namespace cnet;

namespace {
const cplx I{0.0, 1.0};

double max_abs_diff(const Contour& a, const Contour& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}
}  // namespace

TEST_SUITE("contour") {

TEST_CASE("construction rejects bad shapes and non-finite samples") {
    CHECK_THROWS_AS(Contour(0, 4), ShapeError);
    CHECK_THROWS_AS(Contour(1, 0), ShapeError);
    CHECK_THROWS_AS(Contour(2, 3, std::vector<cplx>(5)), ShapeError);
    std::vector<cplx> bad{{1.0, 0.0}, {std::nan(""), 0.0}};
    CHECK_THROWS(Contour(1, 2, std::move(bad)));
}

TEST_CASE("group element keeps |w| = 1 and shift in range") {
    GroupElement g(7, 1.234, 5);
    CHECK(g.shift() == 2);
    CHECK(std::abs(std::abs(g.rotation()) - 1.0) < 1e-12);
    GroupElement neg(-1, 0.0, 5);
    CHECK(neg.shift() == 4);
    CHECK_THROWS(GroupElement::from_rotation(0, cplx{0.0, 0.0}, 4));
}

TEST_CASE("act: identity and full-cycle shifts fix the contour") {
    Rng rng(3);
    const Contour x = random_contour(rng, 2, 6);
    CHECK(max_abs_diff(act(GroupElement(0, 0.0, 6), x), x) == 0.0);
    CHECK(max_abs_diff(act(GroupElement(6, 0.0, 6), x), x) == 0.0);
}

TEST_CASE("act: n=2 rotation-shift example") {
    const Contour x = Contour::from_channel({cplx{1.0, 0.0}, I});
    const Contour y = act(GroupElement::from_rotation(1, I, 2), x);
    CHECK(std::abs(y.at(0, 0) - cplx{-1.0, 0.0}) < 1e-15);
    CHECK(std::abs(y.at(0, 1) - I) < 1e-15);
}

TEST_CASE("compose: shifts add, rotations multiply") {
    const GroupElement a = GroupElement::from_rotation(1, cplx{1.0, 0.0}, 4);
    const GroupElement ab = compose(a, a);
    CHECK(ab.shift() == 2);
    CHECK(std::abs(ab.rotation() - cplx{1.0, 0.0}) < 1e-15);

    const GroupElement g1 = GroupElement::from_rotation(1, I, 3);
    const GroupElement g2 = GroupElement::from_rotation(2, I, 3);
    const GroupElement c = compose(g1, g2);
    CHECK(c.shift() == 0);
    CHECK(std::abs(c.rotation() - cplx{-1.0, 0.0}) < 1e-15);

    const GroupElement g = GroupElement(3, 0.77, 5);
    const GroupElement e = compose(g, g.inverse());
    CHECK(e.shift() == 0);
    CHECK(std::abs(e.rotation() - cplx{1.0, 0.0}) < 1e-12);

    CHECK_THROWS_AS(compose(GroupElement(0, 0.0, 4), GroupElement(0, 0.0, 5)),
                    ShapeError);
}

TEST_CASE("left action law on random triples") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 16));
        const int k = static_cast<int>(rng.uniform_int(1, 3));
        const Contour x = random_contour(rng, k, n);
        const GroupElement g1(rng.uniform_int(0, n - 1),
                              rng.uniform(0.0, 2.0 * std::numbers::pi), n);
        const GroupElement g2(rng.uniform_int(0, n - 1),
                              rng.uniform(0.0, 2.0 * std::numbers::pi), n);
        CHECK(max_abs_diff(act(g1, act(g2, x)), act(compose(g1, g2), x)) <=
              1e-12);
    }
}

TEST_CASE("act preserves the channel-wise multiset of magnitudes") {
    Rng rng(19);
    const Contour x = random_contour(rng, 3, 12);
    const GroupElement g(5, 2.1, 12);
    const Contour y = act(g, x);
    for (int c = 0; c < x.k(); ++c) {
        std::vector<double> mx, my;
        for (int q = 0; q < x.n(); ++q) {
            mx.push_back(std::abs(x.at(c, q)));
            my.push_back(std::abs(y.at(c, q)));
        }
        std::sort(mx.begin(), mx.end());
        std::sort(my.begin(), my.end());
        for (int q = 0; q < x.n(); ++q)
            CHECK(std::fabs(mx[q] - my[q]) <= 1e-12);
    }
}

TEST_CASE("recenter: constants vanish, zero-mean is fixed, 1/3 example") {
    const Contour c = Contour::from_channel({cplx{2.5, -1.0}, cplx{2.5, -1.0}});
    const Contour rc = recenter(c);
    CHECK(std::abs(rc.at(0, 0)) < 1e-15);
    CHECK(std::abs(rc.at(0, 1)) < 1e-15);

    const Contour x = Contour::from_channel({cplx{1.0, 0.0}, cplx{3.0, 0.0}});
    const Contour r = recenter(x);
    CHECK(std::abs(r.at(0, 0) - cplx{-1.0, 0.0}) < 1e-15);
    CHECK(std::abs(r.at(0, 1) - cplx{1.0, 0.0}) < 1e-15);
    CHECK(max_abs_diff(recenter(r), r) < 1e-15);  // idempotent
}

TEST_CASE("recenter is equivariant for shifts and rotations") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 20));
        const Contour x = random_contour(rng, 2, n);
        const GroupElement g(rng.uniform_int(0, n - 1),
                             rng.uniform(0.0, 2.0 * std::numbers::pi), n);
        CHECK(max_abs_diff(recenter(act(g, x)), act(g, recenter(x))) <= 1e-12);
    }
}

TEST_CASE("normalize: unit circle is fixed") {
    const Contour x = Contour::from_channel(
        {cplx{1.0, 0.0}, I, cplx{-1.0, 0.0}, -I});
    const Contour y = normalize(x);
    CHECK(max_abs_diff(y, x) < 1e-12);
}

TEST_CASE("normalize: sigma matches an independent computation") {
    Rng rng(29);
    const Contour x = random_contour(rng, 2, 7, 3.0);
    const Contour y = normalize(x);

    // oracle: per-channel means, pooled r.m.s. deviation
    std::vector<cplx> means(x.k(), cplx{0.0, 0.0});
    for (int c = 0; c < x.k(); ++c) {
        for (int q = 0; q < x.n(); ++q) means[c] += x.at(c, q);
        means[c] /= static_cast<double>(x.n());
    }
    double acc = 0.0;
    for (int c = 0; c < x.k(); ++c)
        for (int q = 0; q < x.n(); ++q)
            acc += std::norm(x.at(c, q) - means[c]);
    const double sigma = std::sqrt(acc / (x.k() * x.n()));
    for (int c = 0; c < x.k(); ++c)
        for (int q = 0; q < x.n(); ++q)
            CHECK(std::abs(y.at(c, q) - (x.at(c, q) - means[c]) / sigma) <
                  1e-12);

    // post-condition: r.m.s. magnitude of the normalized deviations is 1
    double post = 0.0;
    for (const cplx& z : y.data()) post += std::norm(z);
    CHECK(std::sqrt(post / static_cast<double>(y.data().size())) ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("normalize: constant contour is degenerate") {
    const Contour c = Contour::from_channel({cplx{4.0, 2.0}, cplx{4.0, 2.0}});
    CHECK_THROWS_AS(normalize(c), DegenerateContour);
}

TEST_CASE("normalize: scale invariance") {
    Rng rng(31);
    const Contour x = random_contour(rng, 1, 9);
    Contour x5 = x;
    for (cplx& z : x5.data()) z *= 5.0;
    CHECK(max_abs_diff(normalize(x), normalize(x5)) < 1e-12);
}

TEST_CASE("normalize is equivariant") {
    Rng rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 20));
        const Contour x = random_contour(rng, 2, n);
        const GroupElement g(rng.uniform_int(0, n - 1),
                             rng.uniform(0.0, 2.0 * std::numbers::pi), n);
        CHECK(max_abs_diff(normalize(act(g, x)), act(g, normalize(x))) <=
              1e-10);
    }
}

TEST_CASE("normalize: per-channel mode scales channels independently") {
    const Contour x(2, 2, {cplx{1.0, 0.0}, cplx{-1.0, 0.0},   // spread 1
                           cplx{10.0, 0.0}, cplx{-10.0, 0.0}});  // spread 10
    const Contour y = normalize(x, SigmaMode::PerChannel);
    CHECK(std::abs(y.at(0, 0) - cplx{1.0, 0.0}) < 1e-12);
    CHECK(std::abs(y.at(1, 0) - cplx{1.0, 0.0}) < 1e-12);
    const Contour g = normalize(x, SigmaMode::Global);
    CHECK(std::abs(g.at(1, 0)) > std::abs(g.at(0, 0)));  // relative scale kept
}

}  // TEST_SUITE
