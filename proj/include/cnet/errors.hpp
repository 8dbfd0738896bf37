#pragma once

#include <stdexcept>
#include <string>

namespace cnet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Contour with zero spread; cannot be rescaled.
struct DegenerateContour : Error {
    using Error::Error;
};

// Binary image without a usable foreground boundary.
struct NoContour : Error {
    using Error::Error;
};

// Probe residual shows the map is not a circular convolution.
struct NotConvolutional : Error {
    explicit NotConvolutional(double residual_, const std::string& msg)
        : Error(msg), residual(residual_) {}
    double residual;
};

// Curve parameter where the speed vanishes; curvature undefined.
struct CuspError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct TrainError : Error {
    using Error::Error;
};

}  // namespace cnet
