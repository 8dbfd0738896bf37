#include "cnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace cnet {
namespace {

using ordered_json = nlohmann::ordered_json;

const char kMagic[8] = {'C', 'N', 'E', 'T', 'M', 'D', 'L', '1'};

std::string act_name(ActKind a) {
    switch (a) {
        case ActKind::Siglog: return "siglog";
        case ActKind::ModRelu: return "modrelu";
        case ActKind::AmplitudePhase: return "amplitude_phase";
        case ActKind::Custom: return "custom";
    }
    return "modrelu";
}

ActKind act_from_name(const std::string& s) {
    if (s == "siglog") return ActKind::Siglog;
    if (s == "modrelu") return ActKind::ModRelu;
    if (s == "amplitude_phase") return ActKind::AmplitudePhase;
    throw IoError("unknown activation kind: " + s);
}

}  // namespace

const ParamStore::Segment* ParamStore::find(int layer,
                                            const std::string& name) const {
    for (const Segment& s : layout)
        if (s.layer == layer && s.name == name) return &s;
    return nullptr;
}

double* ParamStore::segment(int layer, const std::string& name) {
    const Segment* s = find(layer, name);
    return s ? values.data() + s->offset : nullptr;
}

const double* ParamStore::segment(int layer, const std::string& name) const {
    const Segment* s = find(layer, name);
    return s ? values.data() + s->offset : nullptr;
}

void Model::clamp_constrained() {
    for (std::size_t i : clamp01_params)
        params.values[i] = std::clamp(params.values[i], 0.0, 1.0);
}

void finalize_model(Model& model) {
    if (model.input_n < 1 || model.input_k < 1)
        throw ShapeError("model input shape must be positive");
    model.shapes.clear();
    model.clamp01_params.clear();
    model.params.layout.clear();
    model.feature_dim = 0;
    model.output_kind = OutputKind::Contour;

    int k = model.input_k;
    int n = model.input_n;
    std::size_t offset = 0;
    bool closed = false;  // a head has been placed

    auto add_segment = [&](int layer, const char* name, std::size_t len) {
        model.params.layout.push_back(
            {layer, name, offset, len});
        offset += len;
    };

    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& s = model.layers[i];
        if (closed) throw ShapeError("layer after model head");
        const int li = static_cast<int>(i);
        switch (s.kind) {
            case LayerKind::Recenter:
                break;
            case LayerKind::Conv:
                if (s.in_channels != k)
                    throw ShapeError("conv layer " + std::to_string(i) +
                                     " expects " + std::to_string(s.in_channels) +
                                     " channels, got " + std::to_string(k));
                if (s.kernel_size < 1 || s.kernel_size > n)
                    throw ShapeError("conv kernel size out of range");
                add_segment(li, "taps",
                            2ULL * s.in_channels * s.out_channels *
                                s.kernel_size);
                k = s.out_channels;
                break;
            case LayerKind::Activation:
                if (s.act == ActKind::Custom)
                    throw ShapeError("custom activations are not trainable");
                if (s.act == ActKind::ModRelu)
                    add_segment(li, "bias", static_cast<std::size_t>(k));
                break;
            case LayerKind::Coarsen:
                if (s.coarsen.p < 2 || n % s.coarsen.p != 0)
                    throw ShapeError(
                        "coarsening factor does not divide length " +
                        std::to_string(n));
                n /= s.coarsen.p;
                break;
            case LayerKind::Upsample:
                if (s.factor < 2) throw ShapeError("upsample factor must be >= 2");
                n *= s.factor;
                break;
            case LayerKind::GlobalPoolTap:
                model.clamp01_params.push_back(offset);
                add_segment(li, "alpha", 1);
                model.feature_dim += k;
                break;
            case LayerKind::MagnitudeHead:
                model.output_kind = OutputKind::NodeValues;
                closed = true;
                break;
            case LayerKind::AffineHead: {
                const int expect = model.feature_dim + model.aux_dim;
                if (s.in_dim != expect)
                    throw ShapeError("affine head expects " +
                                     std::to_string(s.in_dim) +
                                     " features, model provides " +
                                     std::to_string(expect));
                if (s.out_dim < 1) throw ShapeError("head output dim < 1");
                add_segment(li, "weight",
                            static_cast<std::size_t>(s.in_dim) * s.out_dim);
                add_segment(li, "wbias", static_cast<std::size_t>(s.out_dim));
                model.output_kind = OutputKind::Logits;
                closed = true;
                break;
            }
        }
        model.shapes.emplace_back(k, n);
    }
    if (model.feature_dim > 0 && model.output_kind != OutputKind::Logits)
        throw ShapeError("global-pool tap features are not consumed by a head");
    model.params.values.assign(offset, 0.0);
}

void init_params(Model& model, std::uint64_t seed) {
    Rng rng(seed);
    for (const ParamStore::Segment& seg : model.params.layout) {
        double* p = model.params.values.data() + seg.offset;
        const LayerSpec& layer = model.layers[seg.layer];
        if (seg.name == "taps") {
            const double s =
                std::sqrt(1.0 / (layer.in_channels * layer.kernel_size));
            for (std::size_t i = 0; i < seg.len; ++i)
                p[i] = rng.uniform(-s, s);
        } else if (seg.name == "weight") {
            const double s =
                std::sqrt(6.0 / (layer.in_dim + layer.out_dim));
            for (std::size_t i = 0; i < seg.len; ++i)
                p[i] = rng.uniform(-s, s);
        } else if (seg.name == "alpha") {
            for (std::size_t i = 0; i < seg.len; ++i) p[i] = 0.5;
        } else {  // biases
            for (std::size_t i = 0; i < seg.len; ++i) p[i] = 0.0;
        }
    }
}

namespace {

ordered_json layer_to_json(const LayerSpec& s) {
    ordered_json j;
    switch (s.kind) {
        case LayerKind::Recenter:
            j["kind"] = "recenter";
            break;
        case LayerKind::Conv:
            j["kind"] = "conv";
            j["in"] = s.in_channels;
            j["out"] = s.out_channels;
            j["m"] = s.kernel_size;
            break;
        case LayerKind::Activation:
            j["kind"] = "activation";
            j["act"] = act_name(s.act);
            break;
        case LayerKind::Coarsen:
            j["kind"] = "coarsen";
            j["p"] = s.coarsen.p;
            j["mode"] = s.coarsen.mode == CoarsenMode::Coset ? "coset" : "strided";
            j["agg"] = s.coarsen.agg == Aggregator::Mean ? "mean" : "magnitude_argmax";
            break;
        case LayerKind::Upsample:
            j["kind"] = "upsample";
            j["p"] = s.factor;
            break;
        case LayerKind::GlobalPoolTap:
            j["kind"] = "global_pool_tap";
            break;
        case LayerKind::MagnitudeHead:
            j["kind"] = "magnitude_head";
            break;
        case LayerKind::AffineHead:
            j["kind"] = "affine_head";
            j["in"] = s.in_dim;
            j["out"] = s.out_dim;
            break;
    }
    return j;
}

LayerSpec layer_from_json(const ordered_json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "recenter") return LayerSpec::recenter();
    if (kind == "conv")
        return LayerSpec::conv(j.at("in").get<int>(), j.at("out").get<int>(),
                               j.at("m").get<int>());
    if (kind == "activation")
        return LayerSpec::activation(act_from_name(j.at("act").get<std::string>()));
    if (kind == "coarsen") {
        CoarsenSpec c;
        c.p = j.at("p").get<int>();
        c.mode = j.at("mode").get<std::string>() == "coset" ? CoarsenMode::Coset
                                                            : CoarsenMode::Strided;
        c.agg = j.at("agg").get<std::string>() == "mean"
                    ? Aggregator::Mean
                    : Aggregator::MagnitudeArgmax;
        return LayerSpec::coarsen_layer(c);
    }
    if (kind == "upsample") return LayerSpec::upsample(j.at("p").get<int>());
    if (kind == "global_pool_tap") return LayerSpec::global_pool_tap();
    if (kind == "magnitude_head") return LayerSpec::magnitude_head();
    if (kind == "affine_head")
        return LayerSpec::affine_head(j.at("in").get<int>(),
                                      j.at("out").get<int>());
    throw IoError("unknown layer kind in checkpoint: " + kind);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

std::uint32_t read_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("truncated checkpoint");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw IoError("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
    ordered_json header;
    header["format"] = "cnet-model";
    header["version"] = 1;
    header["input_n"] = model.input_n;
    header["input_k"] = model.input_k;
    header["aux_dim"] = model.aux_dim;
    header["layers"] = ordered_json::array();
    for (const LayerSpec& s : model.layers)
        header["layers"].push_back(layer_to_json(s));
    header["param_count"] = model.params.values.size();
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32_le(out, static_cast<std::uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    write_u64_le(out, model.params.values.size());
    for (double d : model.params.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        write_u64_le(out, bits);
    }
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("not a model checkpoint: " + path);
    const std::uint32_t hlen = read_u32_le(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw IoError("truncated checkpoint header");
    ordered_json header = ordered_json::parse(hs);
    if (header.at("format").get<std::string>() != "cnet-model" ||
        header.at("version").get<int>() != 1)
        throw IoError("unsupported checkpoint version");

    Model model;
    model.input_n = header.at("input_n").get<int>();
    model.input_k = header.at("input_k").get<int>();
    model.aux_dim = header.at("aux_dim").get<int>();
    for (const auto& lj : header.at("layers"))
        model.layers.push_back(layer_from_json(lj));
    finalize_model(model);

    const std::uint64_t count = read_u64_le(in);
    if (count != model.params.values.size())
        throw IoError("checkpoint parameter count mismatch");
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t bits = read_u64_le(in);
        std::memcpy(&model.params.values[i], &bits, sizeof(double));
    }
    return model;
}

Model build_classifier(int n, int k, int classes, int blocks,
                       ClassifierOptions opts) {
    if (blocks < 1) throw ShapeError("classifier needs at least one block");
    if (opts.widths.empty()) throw ShapeError("classifier needs widths");
    std::vector<int> widths = opts.widths;
    widths.resize(blocks, widths.back());

    Model model;
    model.input_n = n;
    model.input_k = k;
    model.aux_dim = opts.aux_dim;
    int ch = k;
    int features = 0;
    for (int b = 0; b < blocks; ++b) {
        model.layers.push_back(LayerSpec::recenter());
        model.layers.push_back(LayerSpec::conv(ch, widths[b], opts.kernel_size));
        model.layers.push_back(LayerSpec::activation(opts.act));
        model.layers.push_back(LayerSpec::coarsen_layer(opts.coarsen));
        model.layers.push_back(LayerSpec::recenter());
        model.layers.push_back(LayerSpec::global_pool_tap());
        ch = widths[b];
        features += ch;
    }
    model.layers.push_back(
        LayerSpec::affine_head(features + opts.aux_dim, classes));
    finalize_model(model);
    return model;
}

Model build_regressor(int n, int k, int blocks, RegressorOptions opts) {
    if (blocks < 1) throw ShapeError("regressor needs at least one block");
    if (opts.widths.empty()) throw ShapeError("regressor needs widths");
    std::vector<int> widths = opts.widths;
    widths.resize(blocks, widths.back());

    Model model;
    model.input_n = n;
    model.input_k = k;
    int ch = k;
    for (int b = 0; b < blocks; ++b) {
        model.layers.push_back(LayerSpec::recenter());
        model.layers.push_back(LayerSpec::conv(ch, widths[b], opts.kernel_size));
        model.layers.push_back(LayerSpec::activation(opts.act));
        ch = widths[b];
    }
    model.layers.push_back(LayerSpec::recenter());
    model.layers.push_back(LayerSpec::conv(ch, 1, opts.kernel_size));
    model.layers.push_back(LayerSpec::magnitude_head());
    finalize_model(model);
    return model;
}

Model build_autoencoder(int n, int k, int latent_factor,
                        AutoencoderOptions opts) {
    if (latent_factor < 1) throw ShapeError("latent factor must be >= 1");
    int stages = 0;
    for (int f = latent_factor; f > 1; f /= 2) {
        if (f % 2 != 0)
            throw ShapeError("latent factor must be a power of two");
        ++stages;
    }
    if (opts.widths.empty()) throw ShapeError("autoencoder needs widths");
    std::vector<int> widths = opts.widths;
    widths.resize(std::max(stages, 1), widths.back());

    Model model;
    model.input_n = n;
    model.input_k = k;
    int ch = k;
    if (stages == 0) {
        model.layers.push_back(LayerSpec::recenter());
        model.layers.push_back(LayerSpec::conv(ch, widths[0], opts.kernel_size));
        model.layers.push_back(LayerSpec::activation(opts.act));
        ch = widths[0];
    }
    for (int s = 0; s < stages; ++s) {
        model.layers.push_back(LayerSpec::recenter());
        model.layers.push_back(LayerSpec::conv(ch, widths[s], opts.kernel_size));
        model.layers.push_back(LayerSpec::activation(opts.act));
        model.layers.push_back(LayerSpec::coarsen_layer(
            {.p = 2, .mode = CoarsenMode::Strided, .agg = Aggregator::Mean}));
        ch = widths[s];
    }
    for (int s = stages - 1; s >= 0; --s) {
        model.layers.push_back(LayerSpec::upsample(2));
        model.layers.push_back(LayerSpec::recenter());
        model.layers.push_back(LayerSpec::conv(ch, widths[s], opts.kernel_size));
        model.layers.push_back(LayerSpec::activation(opts.act));
        ch = widths[s];
    }
    model.layers.push_back(LayerSpec::recenter());
    model.layers.push_back(LayerSpec::conv(ch, k, opts.kernel_size));
    finalize_model(model);
    return model;
}

}  // namespace cnet
