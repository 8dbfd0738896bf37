#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cnet/layers.hpp"
#include "cnet/rng.hpp"

namespace cnet {

// Sequential models: a chain of layer specifications over one flat real
// parameter vector. Complex parameters are stored as (re, im) pairs.
//
// GlobalPoolTap layers pass their input through unchanged and additionally
// emit an invariant feature vector; the AffineHead (when present, last)
// consumes the concatenation of all tap features plus any auxiliary record
// features. MagnitudeHead turns the last channel into per-node real values.

enum class LayerKind {
    Recenter,
    Conv,
    Activation,
    Coarsen,
    Upsample,
    GlobalPoolTap,
    MagnitudeHead,
    AffineHead,
};

struct LayerSpec {
    LayerKind kind = LayerKind::Recenter;
    // Conv
    int in_channels = 0, out_channels = 0, kernel_size = 0;
    // Activation (ModRelu carries one learnable bias per channel)
    ActKind act = ActKind::ModRelu;
    // Coarsen / Upsample
    CoarsenSpec coarsen;
    int factor = 0;
    // AffineHead
    int in_dim = 0, out_dim = 0;

    static LayerSpec of(LayerKind kind) {
        LayerSpec s;
        s.kind = kind;
        return s;
    }
    static LayerSpec recenter() { return of(LayerKind::Recenter); }
    static LayerSpec conv(int in_ch, int out_ch, int m) {
        LayerSpec s = of(LayerKind::Conv);
        s.in_channels = in_ch;
        s.out_channels = out_ch;
        s.kernel_size = m;
        return s;
    }
    static LayerSpec activation(ActKind kind) {
        LayerSpec s = of(LayerKind::Activation);
        s.act = kind;
        return s;
    }
    static LayerSpec coarsen_layer(CoarsenSpec c) {
        LayerSpec s = of(LayerKind::Coarsen);
        s.coarsen = c;
        return s;
    }
    static LayerSpec upsample(int p) {
        LayerSpec s = of(LayerKind::Upsample);
        s.factor = p;
        return s;
    }
    static LayerSpec global_pool_tap() { return of(LayerKind::GlobalPoolTap); }
    static LayerSpec magnitude_head() { return of(LayerKind::MagnitudeHead); }
    static LayerSpec affine_head(int in_dim, int out_dim) {
        LayerSpec s = of(LayerKind::AffineHead);
        s.in_dim = in_dim;
        s.out_dim = out_dim;
        return s;
    }
};

// Flat real parameter vector plus the layout table mapping each layer's
// named parameter block to an index range.
struct ParamStore {
    struct Segment {
        int layer;         // index into Model::layers
        std::string name;  // "taps" | "bias" | "alpha" | "weight"
        std::size_t offset = 0;
        std::size_t len = 0;
    };
    std::vector<double> values;
    std::vector<Segment> layout;

    const Segment* find(int layer, const std::string& name) const;
    double* segment(int layer, const std::string& name);
    const double* segment(int layer, const std::string& name) const;
};

enum class OutputKind { Contour, NodeValues, Logits };

struct Model {
    int input_n = 0;
    int input_k = 0;
    int aux_dim = 0;  // auxiliary real features appended before the head
    std::vector<LayerSpec> layers;
    ParamStore params;

    // Derived by finalize():
    std::vector<std::pair<int, int>> shapes;  // (k, n) after each layer
    std::vector<std::size_t> clamp01_params;  // alpha indices
    int feature_dim = 0;                      // sum of tap dims (excl. aux)
    OutputKind output_kind = OutputKind::Contour;

    int output_n() const { return shapes.empty() ? input_n : shapes.back().second; }
    int output_k() const { return shapes.empty() ? input_k : shapes.back().first; }

    // Clamp range-constrained parameters (pool alphas to [0,1]); called by
    // the training loop after each optimizer step.
    void clamp_constrained();
};

// Validates shape composition, computes the parameter layout and allocates
// zeroed parameters. Throws ShapeError on non-composing chains.
void finalize_model(Model& model);

// Deterministic parameter init: conv taps uniform +-sqrt(1/(k m)) per
// component, affine weights Glorot-uniform, ModRelu biases 0, alphas 0.5.
void init_params(Model& model, std::uint64_t seed);

// Checkpoint blob: magic + version, little-endian JSON header with the
// layer specs and shapes, then the raw little-endian f64 parameter payload.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// --- Builders -------------------------------------------------------------

struct ClassifierOptions {
    std::vector<int> widths = {16, 32, 64};  // channels per block
    int kernel_size = 5;
    CoarsenSpec coarsen{.p = 2, .mode = CoarsenMode::Strided,
                        .agg = Aggregator::Mean};
    ActKind act = ActKind::ModRelu;
    int aux_dim = 0;
};

// Blocks of [recenter, conv, activation, coarsen] with a re-centered
// invariant global-pool tap after each block; affine head over the
// concatenated multi-scale features (plus aux features when configured).
Model build_classifier(int n, int k, int classes, int blocks,
                       ClassifierOptions opts = {});

struct RegressorOptions {
    std::vector<int> widths = {32, 32};  // hidden channels per block
    int kernel_size = 5;
    ActKind act = ActKind::ModRelu;
};

// Equivariant stack without coarsening; per-node output is the magnitude of
// the final 1-channel convolution (nonnegative, rotation-invariant per node,
// exactly shift-equivariant).
Model build_regressor(int n, int k, int blocks, RegressorOptions opts = {});

struct AutoencoderOptions {
    std::vector<int> widths = {16, 16};  // encoder channels; decoder mirrors
    int kernel_size = 5;
    ActKind act = ActKind::ModRelu;
};

// Encoder coarsens by 2 per stage down to n / latent_factor, decoder
// mirrors with zero-insertion upsampling; the chain is rotation-equivariant
// end to end. latent_factor must be a power of two dividing n (1 = no
// coarsening).
Model build_autoencoder(int n, int k, int latent_factor,
                        AutoencoderOptions opts = {});

}  // namespace cnet
