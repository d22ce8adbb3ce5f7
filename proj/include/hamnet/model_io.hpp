#pragma once

#include <string>
#include <utility>

#include "hamnet/conv.hpp"
#include "hamnet/layers.hpp"

namespace hamnet {

// Binary model container, little-endian, versioned magic. Dense networks use
// "HDNN1": arch tag, N, h, n, M, shared flag, then the K blocks, b blocks, W
// and mu as raw row-major 64-bit blocks. Convolutional digit models use the
// sibling "HDNC1" with the expansion kernel and per-layer kernel/bias blocks.
// Both round-trip byte-exactly.
void save_model(const NetworkParams& params, const OutputHead& head, const std::string& path);
std::pair<NetworkParams, OutputHead> load_model(const std::string& path);

void save_mnist_model(const MnistNet& net, const std::string& path);
MnistNet load_mnist_model(const std::string& path);

// Peeks at the magic: true for "HDNC1", false for "HDNN1", throws otherwise.
bool is_conv_model(const std::string& path);

}  // namespace hamnet
