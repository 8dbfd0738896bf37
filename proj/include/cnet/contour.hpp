#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "cnet/errors.hpp"

namespace cnet {

using cplx = std::complex<double>;

// A k-channel complex signal on the cyclic group Z_n: channel c is the
// sequence x_c(0..n-1). Stored flat, channel-major, so each channel is a
// contiguous (re, im)-interleaved run the kernels can consume directly.
// Values are immutable once constructed (non-finite samples are rejected).
class Contour {
public:
    Contour() = default;
    Contour(int channels, int length);  // zero-filled
    Contour(int channels, int length, std::vector<cplx> data);

    static Contour from_channel(std::vector<cplx> samples);

    int k() const { return k_; }
    int n() const { return n_; }

    std::span<const cplx> channel(int c) const {
        return {data_.data() + static_cast<std::size_t>(c) * n_,
                static_cast<std::size_t>(n_)};
    }
    std::span<cplx> channel(int c) {
        return {data_.data() + static_cast<std::size_t>(c) * n_,
                static_cast<std::size_t>(n_)};
    }

    const cplx& at(int c, int q) const {
        return data_[static_cast<std::size_t>(c) * n_ + q];
    }
    cplx& at(int c, int q) {
        return data_[static_cast<std::size_t>(c) * n_ + q];
    }

    const std::vector<cplx>& data() const { return data_; }
    std::vector<cplx>& data() { return data_; }

    void validate_finite() const;

private:
    int k_ = 0;
    int n_ = 0;
    std::vector<cplx> data_;
};

// Element (shift l, rotation w) of the product group Z_n x S^1 acting on
// length-n contours. The rotation is kept on the unit circle; the shift is
// kept in [0, n).
class GroupElement {
public:
    GroupElement(std::int64_t shift, double angle, std::int64_t n);
    static GroupElement from_rotation(std::int64_t shift, cplx w,
                                      std::int64_t n);
    static GroupElement identity(std::int64_t n) {
        return GroupElement(0, 0.0, n);
    }

    std::int64_t shift() const { return shift_; }
    cplx rotation() const { return w_; }
    std::int64_t order() const { return n_; }

    GroupElement inverse() const;

private:
    GroupElement() = default;
    std::int64_t shift_ = 0;
    cplx w_{1.0, 0.0};
    std::int64_t n_ = 1;
};

// y(q) = w * x(q - l mod n), per channel. The shift is reduced modulo x.n().
Contour act(const GroupElement& g, const Contour& x);

// Group law (l1 + l2 mod n, w1 * w2); throws on mismatched n.
GroupElement compose(const GroupElement& g1, const GroupElement& g2);

// Subtract the per-channel mean.
Contour recenter(const Contour& x);

enum class SigmaMode { Global, PerChannel };

// Center each channel at its mean, then divide by the r.m.s. deviation
// sigma = sqrt(mean |x_i(q) - mu_i|^2). Global mode pools sigma over all
// channels (preserving relative channel scales); PerChannel rescales each
// channel on its own. Throws DegenerateContour when sigma < 1e-12.
Contour normalize(const Contour& x, SigmaMode mode = SigmaMode::Global);

}  // namespace cnet
