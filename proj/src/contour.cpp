#include "cnet/contour.hpp"

#include <cmath>
#include <utility>

namespace cnet {

Contour::Contour(int channels, int length)
    : k_(channels), n_(length) {
    if (channels < 1 || length < 1)
        throw ShapeError("contour needs k >= 1 and n >= 1");
    data_.assign(static_cast<std::size_t>(channels) * length, cplx{0.0, 0.0});
}

Contour::Contour(int channels, int length, std::vector<cplx> data)
    : k_(channels), n_(length), data_(std::move(data)) {
    if (channels < 1 || length < 1)
        throw ShapeError("contour needs k >= 1 and n >= 1");
    if (data_.size() != static_cast<std::size_t>(channels) * length)
        throw ShapeError("contour data size does not match k * n");
    validate_finite();
}

Contour Contour::from_channel(std::vector<cplx> samples) {
    const int n = static_cast<int>(samples.size());
    return Contour(1, n, std::move(samples));
}

void Contour::validate_finite() const {
    for (const cplx& z : data_) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw Error("non-finite sample in contour");
    }
}

GroupElement::GroupElement(std::int64_t shift, double angle, std::int64_t n) {
    *this = from_rotation(shift, std::polar(1.0, angle), n);
}

GroupElement GroupElement::from_rotation(std::int64_t shift, cplx w,
                                         std::int64_t n) {
    if (n < 1) throw ShapeError("group order must be positive");
    const double mag = std::abs(w);
    if (mag < 1e-12) throw Error("rotation has zero magnitude");
    GroupElement g;
    g.n_ = n;
    g.w_ = w / mag;  // renormalize so |w| = 1 does not drift
    g.shift_ = ((shift % n) + n) % n;
    return g;
}

GroupElement GroupElement::inverse() const {
    return from_rotation(-shift_, std::conj(w_), n_);
}

Contour act(const GroupElement& g, const Contour& x) {
    const int n = x.n();
    const int l = static_cast<int>(((g.shift() % n) + n) % n);
    const cplx w = g.rotation();
    Contour y(x.k(), n);
    for (int c = 0; c < x.k(); ++c) {
        auto xc = x.channel(c);
        auto yc = y.channel(c);
        for (int q = 0; q < n; ++q) yc[q] = w * xc[(q - l + n) % n];
    }
    return y;
}

GroupElement compose(const GroupElement& g1, const GroupElement& g2) {
    if (g1.order() != g2.order())
        throw ShapeError("cannot compose group elements of different order");
    return GroupElement::from_rotation(g1.shift() + g2.shift(),
                                       g1.rotation() * g2.rotation(),
                                       g1.order());
}

Contour recenter(const Contour& x) {
    Contour y(x.k(), x.n());
    const double inv_n = 1.0 / x.n();
    for (int c = 0; c < x.k(); ++c) {
        auto xc = x.channel(c);
        cplx mean{0.0, 0.0};
        for (int q = 0; q < x.n(); ++q) mean += xc[q];
        mean *= inv_n;
        auto yc = y.channel(c);
        for (int q = 0; q < x.n(); ++q) yc[q] = xc[q] - mean;
    }
    return y;
}

Contour normalize(const Contour& x, SigmaMode mode) {
    Contour y = recenter(x);
    const auto rescale = [](std::span<cplx> v, double sq_mean) {
        const double sigma = std::sqrt(sq_mean);
        if (sigma < 1e-12)
            throw DegenerateContour("contour has no spread; cannot normalize");
        for (cplx& z : v) z /= sigma;
    };
    if (mode == SigmaMode::PerChannel) {
        for (int c = 0; c < y.k(); ++c) {
            auto yc = y.channel(c);
            double acc = 0.0;
            for (const cplx& z : yc) acc += std::norm(z);
            rescale(yc, acc / y.n());
        }
    } else {
        double acc = 0.0;
        for (const cplx& z : y.data()) acc += std::norm(z);
        rescale({y.data().data(), y.data().size()},
                acc / static_cast<double>(y.data().size()));
    }
    return y;
}

}  // namespace cnet
