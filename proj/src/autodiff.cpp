#include "cnet/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "cnet/kernels.hpp"
#include "cnet/rng.hpp"

namespace cnet {
namespace {

const double* tap_params(const Model& model, int layer) {
    const double* p = model.params.segment(layer, "taps");
    if (!p) throw ShapeError("conv layer has no tap parameters");
    return p;
}

// Radial profile s(r) and its derivative for a(z) = s(|z|) z. Returns false
// when the sample sits in a zero-gradient regime (modrelu cut-off or z = 0).
bool radial_profile(ActKind kind, double bias, double r, double& s,
                    double& ds) {
    switch (kind) {
        case ActKind::Siglog: {
            const double d = 1.0 + r;
            s = 1.0 / d;
            ds = -1.0 / (d * d);
            return true;
        }
        case ActKind::ModRelu: {
            if (r == 0.0) return false;
            const double u = r + bias;
            if (u <= 0.0) return false;  // ReLU off; subgradient 0 at the kink
            s = u / r;
            ds = -bias / (r * r);
            return true;
        }
        case ActKind::AmplitudePhase: {
            if (r < 1e-12) {
                s = 1.0;
                ds = 0.0;
                return true;
            }
            const double th = std::tanh(r);
            s = th / r;
            ds = ((1.0 - th * th) * r - th) / (r * r);
            return true;
        }
        case ActKind::Custom:
            throw ShapeError("custom activations are not differentiable here");
    }
    return false;
}

}  // namespace

const ModelOutput& Tape::forward(const Model& model, const Contour& input,
                                 const std::vector<double>& aux) {
    if (input.k() != model.input_k || input.n() != model.input_n)
        throw ShapeError("model input shape mismatch");
    if (static_cast<int>(aux.size()) != model.aux_dim)
        throw ShapeError("auxiliary feature length mismatch");

    model_ = &model;
    aux_ = aux;
    caches_.resize(model.layers.size());
    features_.clear();
    current_ = input;
    out_.kind = model.output_kind;

    const auto& kern = kernels::active();
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& spec = model.layers[i];
        LayerCache& cache = caches_[i];
        const int li = static_cast<int>(i);
        switch (spec.kind) {
            case LayerKind::Recenter:
                current_ = recenter(current_);
                break;
            case LayerKind::Conv: {
                cache.input = current_;
                const int n = current_.n();
                const int m = spec.kernel_size;
                cache.ext.resize(current_.k());
                for (int c = 0; c < current_.k(); ++c)
                    extend_channel_front(current_.channel(c), m, cache.ext[c]);
                const double* taps = tap_params(model, li);
                Contour out(spec.out_channels, n);
                for (int j = 0; j < spec.out_channels; ++j) {
                    auto oj = out.channel(j);
                    for (int c = 0; c < current_.k(); ++c) {
                        const double* t =
                            taps + 2ULL * (static_cast<std::size_t>(j) *
                                               spec.in_channels +
                                           c) *
                                       m;
                        kern.conv_taps_mac(
                            t, static_cast<std::size_t>(m),
                            reinterpret_cast<const double*>(cache.ext[c].data()),
                            reinterpret_cast<double*>(oj.data()),
                            static_cast<std::size_t>(n));
                    }
                }
                current_ = std::move(out);
                break;
            }
            case LayerKind::Activation: {
                cache.input = current_;
                const double* bias = model.params.segment(li, "bias");
                Contour out(current_.k(), current_.n());
                for (int c = 0; c < current_.k(); ++c) {
                    ActivationSpec as{spec.act, bias ? bias[c] : 0.0, {}};
                    auto xc = current_.channel(c);
                    auto oc = out.channel(c);
                    for (int q = 0; q < current_.n(); ++q)
                        oc[q] = activation_value(as, xc[q]);
                }
                current_ = std::move(out);
                break;
            }
            case LayerKind::Coarsen: {
                cache.input = current_;
                if (spec.coarsen.agg == Aggregator::MagnitudeArgmax) {
                    // record the selected source index per output node
                    const int n = current_.n();
                    const int p = spec.coarsen.p;
                    const int mout = n / p;
                    const int ns = spec.coarsen.stride(n);
                    const int nd = spec.coarsen.dilation(n);
                    cache.sel.assign(
                        static_cast<std::size_t>(current_.k()) * mout, 0);
                    Contour out(current_.k(), mout);
                    for (int c = 0; c < current_.k(); ++c) {
                        auto xc = current_.channel(c);
                        auto oc = out.channel(c);
                        for (int q = 0; q < mout; ++q) {
                            int best_idx = (q * ns) % n;
                            double best = std::norm(xc[best_idx]);
                            for (int j = 1; j < p; ++j) {
                                const int idx = (q * ns + nd * j) % n;
                                const double mag = std::norm(xc[idx]);
                                if (mag > best) {
                                    best = mag;
                                    best_idx = idx;
                                }
                            }
                            oc[q] = xc[best_idx];
                            cache.sel[static_cast<std::size_t>(c) * mout + q] =
                                best_idx;
                        }
                    }
                    current_ = std::move(out);
                } else {
                    current_ = coarsen_forward(spec.coarsen, current_);
                }
                break;
            }
            case LayerKind::Upsample:
                cache.input = current_;
                current_ = upsample_forward(current_, spec.factor);
                break;
            case LayerKind::GlobalPoolTap: {
                cache.input = current_;
                const double alpha = *model.params.segment(li, "alpha");
                const int n = current_.n();
                const int k = current_.k();
                cache.mags.resize(static_cast<std::size_t>(k) * n);
                cache.sel.assign(k, 0);
                cache.pool_mean.assign(k, 0.0);
                cache.pool_max.assign(k, 0.0);
                cache.feature_offset = features_.size();
                for (int c = 0; c < k; ++c) {
                    double* mc = cache.mags.data() + static_cast<std::size_t>(c) * n;
                    kern.magnitudes(
                        reinterpret_cast<const double*>(current_.channel(c).data()),
                        mc, static_cast<std::size_t>(n));
                    double sum = 0.0, mx = mc[0];
                    int mxi = 0;
                    for (int q = 0; q < n; ++q) {
                        sum += mc[q];
                        if (mc[q] > mx) {
                            mx = mc[q];
                            mxi = q;
                        }
                    }
                    cache.pool_mean[c] = sum / n;
                    cache.pool_max[c] = mx;
                    cache.sel[c] = mxi;
                    features_.push_back(alpha * cache.pool_mean[c] +
                                        (1.0 - alpha) * mx);
                }
                break;
            }
            case LayerKind::MagnitudeHead: {
                cache.input = current_;
                const int n = current_.n();
                const int last = current_.k() - 1;
                cache.mags.resize(n);
                kern.magnitudes(
                    reinterpret_cast<const double*>(current_.channel(last).data()),
                    cache.mags.data(), static_cast<std::size_t>(n));
                out_.reals = cache.mags;
                break;
            }
            case LayerKind::AffineHead: {
                std::vector<double> feats = features_;
                feats.insert(feats.end(), aux_.begin(), aux_.end());
                cache.mags = feats;  // cached head input
                const double* w = model.params.segment(li, "weight");
                const double* b = model.params.segment(li, "wbias");
                out_.reals.assign(spec.out_dim, 0.0);
                for (int o = 0; o < spec.out_dim; ++o) {
                    double acc = b[o];
                    const double* wrow = w + static_cast<std::size_t>(o) * spec.in_dim;
                    for (int f = 0; f < spec.in_dim; ++f)
                        acc += wrow[f] * feats[f];
                    out_.reals[o] = acc;
                }
                break;
            }
        }
    }
    if (model.output_kind == OutputKind::Contour) out_.contour = current_;
    return out_;
}

void Tape::backward(const Model& model, const ModelOutput& out_cotangent,
                    std::vector<double>& grad) {
    if (model_ != &model) throw Error("backward without matching forward");
    if (grad.size() != model.params.values.size())
        grad.resize(model.params.values.size(), 0.0);

    const auto& kern = kernels::active();

    // Cotangent flowing backwards through the contour-valued part of the
    // chain, plus per-tap feature cotangents produced by the head.
    Contour gc;
    std::vector<double> gfeat;

    const int L = static_cast<int>(model.layers.size());
    int start = L - 1;

    switch (model.output_kind) {
        case OutputKind::Contour:
            gc = out_cotangent.contour;
            break;
        case OutputKind::NodeValues: {
            // d|z|/dz routed into the last channel
            const LayerSpec& spec = model.layers[L - 1];
            (void)spec;
            const LayerCache& cache = caches_[L - 1];
            const Contour& x = cache.input;
            gc = Contour(x.k(), x.n());
            const int last = x.k() - 1;
            auto xc = x.channel(last);
            auto gout = gc.channel(last);
            for (int q = 0; q < x.n(); ++q) {
                const double r = cache.mags[q];
                if (r > 0.0)
                    gout[q] = out_cotangent.reals[q] * (xc[q] / r);
            }
            start = L - 2;
            break;
        }
        case OutputKind::Logits: {
            const LayerSpec& spec = model.layers[L - 1];
            const LayerCache& cache = caches_[L - 1];
            const int li = L - 1;
            const ParamStore::Segment* wseg = model.params.find(li, "weight");
            const ParamStore::Segment* bseg = model.params.find(li, "wbias");
            const double* w = model.params.values.data() + wseg->offset;
            double* gw = grad.data() + wseg->offset;
            double* gb = grad.data() + bseg->offset;
            gfeat.assign(spec.in_dim, 0.0);
            for (int o = 0; o < spec.out_dim; ++o) {
                const double go = out_cotangent.reals[o];
                gb[o] += go;
                const double* wrow = w + static_cast<std::size_t>(o) * spec.in_dim;
                double* gwrow = gw + static_cast<std::size_t>(o) * spec.in_dim;
                for (int f = 0; f < spec.in_dim; ++f) {
                    gwrow[f] += go * cache.mags[f];
                    gfeat[f] += go * wrow[f];
                }
            }
            // aux part of gfeat is dropped; taps consume their slices below
            const auto& shape_before =
                L >= 2 ? model.shapes[L - 2]
                       : std::make_pair(model.input_k, model.input_n);
            gc = Contour(shape_before.first, shape_before.second);
            start = L - 2;
            break;
        }
    }

    for (int i = start; i >= 0; --i) {
        const LayerSpec& spec = model.layers[i];
        const LayerCache& cache = caches_[i];
        switch (spec.kind) {
            case LayerKind::Recenter: {
                Contour gin(gc.k(), gc.n());
                const double inv_n = 1.0 / gc.n();
                for (int c = 0; c < gc.k(); ++c) {
                    auto g = gc.channel(c);
                    cplx mean{0.0, 0.0};
                    for (int q = 0; q < gc.n(); ++q) mean += g[q];
                    mean *= inv_n;
                    auto gi = gin.channel(c);
                    for (int q = 0; q < gc.n(); ++q) gi[q] = g[q] - mean;
                }
                gc = std::move(gin);
                break;
            }
            case LayerKind::Conv: {
                const int n = gc.n();
                const int m = spec.kernel_size;
                const int kin = spec.in_channels;
                const int kout = spec.out_channels;
                const ParamStore::Segment* tseg = model.params.find(i, "taps");
                const double* taps = model.params.values.data() + tseg->offset;
                double* gtaps = grad.data() + tseg->offset;

                Contour gin(kin, n);
                std::vector<cplx> gext;
                std::vector<cplx> psi(m);
                for (int j = 0; j < kout; ++j) {
                    extend_channel_back(gc.channel(j), m, gext);
                    const double* gj =
                        reinterpret_cast<const double*>(gc.channel(j).data());
                    for (int c = 0; c < kin; ++c) {
                        const std::size_t base =
                            2ULL * (static_cast<std::size_t>(j) * kin + c) * m;
                        // filter cotangent: gphi(t) = sum_q g(q) conj(x(q-t))
                        for (int t = 0; t < m; ++t) {
                            const cplx d = kern.dot_conj(
                                gj,
                                reinterpret_cast<const double*>(
                                    cache.ext[c].data() + (m - 1 - t)),
                                static_cast<std::size_t>(n));
                            gtaps[base + 2 * t] += d.real();
                            gtaps[base + 2 * t + 1] += d.imag();
                        }
                        // input cotangent: gx(r) = sum_t conj(phi(t)) g(r+t),
                        // expressed as a mac with reversed conjugated taps.
                        const cplx* phi = reinterpret_cast<const cplx*>(
                            taps + base);
                        for (int t = 0; t < m; ++t)
                            psi[t] = std::conj(phi[m - 1 - t]);
                        kern.conv_taps_mac(
                            reinterpret_cast<const double*>(psi.data()),
                            static_cast<std::size_t>(m),
                            reinterpret_cast<const double*>(gext.data()),
                            reinterpret_cast<double*>(gin.channel(c).data()),
                            static_cast<std::size_t>(n));
                    }
                }
                gc = std::move(gin);
                break;
            }
            case LayerKind::Activation: {
                const Contour& x = cache.input;
                const ParamStore::Segment* bseg = model.params.find(i, "bias");
                const double* bias =
                    bseg ? model.params.values.data() + bseg->offset : nullptr;
                double* gbias = bseg ? grad.data() + bseg->offset : nullptr;
                Contour gin(x.k(), x.n());
                for (int c = 0; c < x.k(); ++c) {
                    const double b = bias ? bias[c] : 0.0;
                    auto xc = x.channel(c);
                    auto g = gc.channel(c);
                    auto gi = gin.channel(c);
                    double gb_acc = 0.0;
                    for (int q = 0; q < x.n(); ++q) {
                        const double xr = xc[q].real(), xi = xc[q].imag();
                        const double r = std::sqrt(xr * xr + xi * xi);
                        double s, ds;
                        if (!radial_profile(spec.act, b, r, s, ds)) continue;
                        const double gr = g[q].real(), gim = g[q].imag();
                        const double dsr = ds / r;
                        gi[q] = {gr * (s + dsr * xr * xr) + gim * dsr * xr * xi,
                                 gr * dsr * xr * xi + gim * (s + dsr * xi * xi)};
                        if (spec.act == ActKind::ModRelu)
                            gb_acc += (gr * xr + gim * xi) / r;
                    }
                    if (gbias) gbias[c] += gb_acc;
                }
                gc = std::move(gin);
                break;
            }
            case LayerKind::Coarsen: {
                const Contour& x = cache.input;
                const int n = x.n();
                const int p = spec.coarsen.p;
                const int mout = n / p;
                const int ns = spec.coarsen.stride(n);
                const int nd = spec.coarsen.dilation(n);
                Contour gin(x.k(), n);
                for (int c = 0; c < x.k(); ++c) {
                    auto g = gc.channel(c);
                    auto gi = gin.channel(c);
                    if (spec.coarsen.agg == Aggregator::Mean) {
                        const double inv_p = 1.0 / p;
                        for (int q = 0; q < mout; ++q)
                            for (int j = 0; j < p; ++j)
                                gi[(q * ns + nd * j) % n] += g[q] * inv_p;
                    } else {
                        for (int q = 0; q < mout; ++q)
                            gi[cache.sel[static_cast<std::size_t>(c) * mout + q]] +=
                                g[q];
                    }
                }
                gc = std::move(gin);
                break;
            }
            case LayerKind::Upsample: {
                const Contour& x = cache.input;
                Contour gin(x.k(), x.n());
                for (int c = 0; c < x.k(); ++c) {
                    auto g = gc.channel(c);
                    auto gi = gin.channel(c);
                    for (int q = 0; q < x.n(); ++q) gi[q] = g[q * spec.factor];
                }
                gc = std::move(gin);
                break;
            }
            case LayerKind::GlobalPoolTap: {
                const Contour& x = cache.input;
                const int n = x.n();
                const ParamStore::Segment* aseg = model.params.find(i, "alpha");
                const double alpha = model.params.values[aseg->offset];
                double galpha = 0.0;
                for (int c = 0; c < x.k(); ++c) {
                    const double gf =
                        gfeat.empty() ? 0.0
                                      : gfeat[cache.feature_offset + c];
                    if (gf == 0.0) continue;
                    galpha += gf * (cache.pool_mean[c] - cache.pool_max[c]);
                    const double* mc =
                        cache.mags.data() + static_cast<std::size_t>(c) * n;
                    auto xc = x.channel(c);
                    auto g = gc.channel(c);
                    const double coef_mean = gf * alpha / n;
                    for (int q = 0; q < n; ++q) {
                        double coef = coef_mean;
                        if (q == cache.sel[c]) coef += gf * (1.0 - alpha);
                        if (mc[q] > 0.0) g[q] += coef * (xc[q] / mc[q]);
                    }
                }
                grad[aseg->offset] += galpha;
                break;
            }
            case LayerKind::MagnitudeHead:
            case LayerKind::AffineHead:
                throw Error("head layer encountered mid-chain");
        }
    }
}

double Tape::forward_backward(const Model& model, const Contour& input,
                              const std::vector<double>& aux,
                              const LossSpec& loss, const LossTarget& target,
                              std::vector<double>& grad) {
    const ModelOutput& pred = forward(model, input, aux);
    const double value = compute_loss(loss, pred, target);
    grad.assign(model.params.values.size(), 0.0);
    backward(model, loss_backward(loss, pred, target), grad);
    return value;
}

FdReport finite_difference_check(Model& model, const Contour& input,
                                 const std::vector<double>& aux,
                                 const LossSpec& loss, const LossTarget& target,
                                 double step, double kink_eps) {
    if (step <= 0.0) throw Error("finite-difference step must be positive");
    Tape tape;
    std::vector<double> grad;
    tape.forward_backward(model, input, aux, loss, target, grad);

    // ModRelu biases whose channel comes within kink_eps of the ReLU cut-off
    // anywhere on the tape produce unreliable central differences. Re-walk
    // the chain with the public layer ops to inspect pre-activation radii.
    std::vector<bool> kink(model.params.values.size(), false);
    {
        Contour x = input;
        for (std::size_t i = 0; i < model.layers.size(); ++i) {
            const LayerSpec& s = model.layers[i];
            if (s.kind == LayerKind::MagnitudeHead ||
                s.kind == LayerKind::AffineHead)
                break;
            if (s.kind == LayerKind::Activation) {
                const ParamStore::Segment* bseg =
                    model.params.find(static_cast<int>(i), "bias");
                if (s.act == ActKind::ModRelu && bseg) {
                    for (int c = 0; c < x.k(); ++c) {
                        const double b = model.params.values[bseg->offset + c];
                        for (const cplx& z : x.channel(c)) {
                            if (std::abs(std::abs(z) + b) < kink_eps)
                                kink[bseg->offset + c] = true;
                        }
                    }
                }
            }
            x = [&]() -> Contour {
                switch (s.kind) {
                    case LayerKind::Recenter:
                        return recenter(x);
                    case LayerKind::Conv: {
                        FilterBank bank(s.out_channels, s.in_channels,
                                        s.kernel_size);
                        const double* taps =
                            model.params.segment(static_cast<int>(i), "taps");
                        std::copy(taps, taps + 2 * bank.taps.size(),
                                  reinterpret_cast<double*>(bank.taps.data()));
                        return conv_forward(bank, x);
                    }
                    case LayerKind::Activation: {
                        const double* bias =
                            model.params.segment(static_cast<int>(i), "bias");
                        Contour out(x.k(), x.n());
                        for (int c = 0; c < x.k(); ++c) {
                            ActivationSpec as{s.act, bias ? bias[c] : 0.0, {}};
                            for (int q = 0; q < x.n(); ++q)
                                out.at(c, q) = activation_value(as, x.at(c, q));
                        }
                        return out;
                    }
                    case LayerKind::Coarsen:
                        return coarsen_forward(s.coarsen, x);
                    case LayerKind::Upsample:
                        return upsample_forward(x, s.factor);
                    default:
                        return x;
                }
            }();
        }
    }

    FdReport report;
    Tape fd_tape;
    for (std::size_t i = 0; i < model.params.values.size(); ++i) {
        const double saved = model.params.values[i];
        model.params.values[i] = saved + step;
        const double lp = compute_loss(loss, fd_tape.forward(model, input, aux),
                                       target);
        model.params.values[i] = saved - step;
        const double lm = compute_loss(loss, fd_tape.forward(model, input, aux),
                                       target);
        model.params.values[i] = saved;
        const double numeric = (lp - lm) / (2.0 * step);
        const double denom =
            std::max({std::fabs(grad[i]), std::fabs(numeric), 1e-8});
        const double rel = std::fabs(grad[i] - numeric) / denom;
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (kink[i])
            report.excluded.push_back(i);
        else
            report.max_rel_error_included =
                std::max(report.max_rel_error_included, rel);
    }
    return report;
}

ExtractResult extract_convolution_kernel(
    const std::function<std::vector<cplx>(const std::vector<cplx>&)>& T, int n,
    int probes, double tol, std::uint64_t seed) {
    if (n < 1) throw ShapeError("kernel extraction needs n >= 1");
    std::vector<cplx> delta(n, cplx{0.0, 0.0});
    delta[0] = 1.0;
    ExtractResult result;
    result.kernel = T(delta);
    if (static_cast<int>(result.kernel.size()) != n)
        throw ShapeError("map changed signal length");

    Rng rng(seed);
    for (int p = 0; p < probes; ++p) {
        std::vector<cplx> x(n);
        for (cplx& z : x) z = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const std::vector<cplx> mapped = T(x);
        if (static_cast<int>(mapped.size()) != n)
            throw ShapeError("map changed signal length");
        for (int q = 0; q < n; ++q) {
            cplx conv{0.0, 0.0};
            for (int j = 0; j < n; ++j)
                conv += result.kernel[j] * x[((q - j) % n + n) % n];
            result.residual =
                std::max(result.residual, std::abs(mapped[q] - conv));
        }
    }
    if (result.residual > tol)
        throw NotConvolutional(result.residual,
                               "map is not a circular convolution (residual " +
                                   std::to_string(result.residual) + ")");
    return result;
}

}  // namespace cnet
