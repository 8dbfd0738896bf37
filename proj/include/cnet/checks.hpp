#pragma once

#include <string>
#include <vector>

#include "cnet/autodiff.hpp"

namespace cnet {

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Randomized layer-equivariance properties: convolution, activations,
// coset/strided coarsening (including the strided counterexample), global
// pooling, re-centering, normalization, and the spectral cross-check of the
// convolution against a naive DFT oracle.
std::vector<CheckResult> equivariance_suite(std::uint64_t seed,
                                            int trials = 100);

// Central finite differences against the tape gradient for classifier,
// regressor and autoencoder stacks exercising every layer kind.
std::vector<CheckResult> gradients_suite(std::uint64_t seed);

// Kernel extraction: identity/shift/known-kernel round trips and rejection
// of a map that fails the convolution hypothesis.
std::vector<CheckResult> kernel_extraction_suite(std::uint64_t seed);

// Naive O(n^2) DFT, used only as an independent test oracle.
std::vector<cplx> naive_dft(std::span<const cplx> x);

// Random contour with entries uniform in the complex unit square.
Contour random_contour(Rng& rng, int k, int n, double scale = 1.0);

}  // namespace cnet
