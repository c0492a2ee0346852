#pragma once

#include <istream>
#include <ostream>

#include "oihrl/nn/dense_net.hpp"

namespace oihrl::nn {

// Layout: u32 layer_count, then per layer {u32 out, u32 in, u8 activation}, then per layer the
// row-major weight matrix followed by the bias, all as little-endian float64.

void write_net(std::ostream &os, const DenseNet &net);

/// Throws LoadError on truncation or malformed header.
auto read_net(std::istream &is) -> DenseNet;

}    // namespace oihrl::nn
