#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hamnet/data.hpp"
#include "hamnet/layers.hpp"
#include "hamnet/training.hpp"

namespace hamnet {

// 3x3 kernel bank, weights laid out [out_ch][in_ch][ky][kx]. All spatial maps
// are 28x28 fields stored channel-major (data[c * 784 + y * 28 + x]).
struct ConvKernel {
    std::size_t out_ch = 0;
    std::size_t in_ch = 0;
    std::vector<double> w;

    ConvKernel() = default;
    ConvKernel(std::size_t out_channels, std::size_t in_channels)
        : out_ch(out_channels), in_ch(in_channels), w(out_channels * in_channels * 9, 0.0) {}

    double& at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
        return w[((o * in_ch + i) * 3 + ky) * 3 + kx];
    }
    double at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
        return w[((o * in_ch + i) * 3 + ky) * 3 + kx];
    }
};

constexpr std::size_t kImageSide = 28;
constexpr std::size_t kPixels = kImageSide * kImageSide;

// out = K * in (same-padding cross-correlation).
void conv3x3_same(const ConvKernel& k, std::span<const double> in, std::span<double> out);
// out = K^T * in (adjoint of conv3x3_same).
void conv3x3_adjoint(const ConvKernel& k, std::span<const double> in, std::span<double> out);
// dk += coef * d<out_grad, K * in>/dK.
void conv3x3_kernel_grad(ConvKernel& dk, std::span<const double> out_grad,
                         std::span<const double> in, double coef);

// Trainable 1 -> 8 expansion, no bias.
struct ConvExpand {
    ConvKernel kernel;  // 8 x 1
};

// Applies J on the channel axis, identically at every pixel.
void apply_channel_j(const Matrix& j, std::span<const double> in, std::span<double> out);

enum class ConvVariant { H2, MS1 };

// Convolutional Hamiltonian classifier for 28x28 gray-scale digits:
// trainable 1->8 expansion, N Hamiltonian layers whose K_j are 3x3 channel
// convolutions (J acts as the H2 sign matrix on the channel axis for the H2
// variant; MS1 uses the Verlet split over channel halves), dense softmax head
// over all 6272 outputs.
struct MnistNet {
    ConvVariant variant = ConvVariant::H2;
    std::size_t layers = 0;
    double h = 0.05;
    ConvExpand expand;
    std::vector<ConvKernel> K;  // H2: 8->8; MS1: 4->4 (the K0 block)
    std::vector<Vector> bias;   // per-channel, length 8 ([b1; b2] for MS1)
    Matrix W;                   // 10 x 6272
    Vector mu;                  // 10
    Matrix channel_j;           // 8x8 H2 interconnection (H2 variant)

    std::size_t state_len() const { return 8 * kPixels; }
};

MnistNet init_mnist_net(ConvVariant variant, std::size_t layers, double h, std::uint64_t seed);

struct MnistLayerCache {
    std::vector<double> t1, d1;  // tanh and tanh' fields (half-channel for MS1)
    std::vector<double> t2, d2;  // MS1 second substep
};

struct MnistCache {
    std::vector<std::vector<double>> states;  // x_0 .. x_N, 8x784 each
    std::vector<MnistLayerCache> layer;
};

// Forward pass from a raw 784-pixel image; fills the cache when given.
Vector mnist_forward(const MnistNet& net, std::span<const double> image, MnistCache* cache);

// Flat gradient buffer congruent with trainable_arrays(MnistNet).
std::vector<std::span<double>> mnist_hidden_arrays(MnistNet& net);
std::vector<std::span<double>> mnist_head_arrays(MnistNet& net);

struct MnistGrads {
    ConvKernel expand;
    std::vector<ConvKernel> K;
    std::vector<Vector> bias;
    Matrix W;
    Vector mu;
};

MnistGrads mnist_zero_grads(const MnistNet& net);
std::vector<std::span<double>> mnist_hidden_arrays(MnistGrads& g);
std::vector<std::span<double>> mnist_head_arrays(MnistGrads& g);

// Reverse pass for one sample; accumulates into grads and returns the loss.
double mnist_backward(const MnistNet& net, const MnistCache& cache,
                      std::span<const double> image, std::size_t label, MnistGrads& grads);

// Expands every image through the current 1->8 convolution, flattening to
// n = 6272 features (conv has no bias, so zero images stay zero).
Dataset mnist_pipeline(const Dataset& d, const ConvExpand& conv);

// Coordinate-descent training of the conv net; same protocol as the dense
// trainer (inner head iterations, one hidden step per batch, epoch lr decay).
struct MnistTrainResult {
    MnistNet net;
    std::vector<HistoryRow> history;
};
MnistTrainResult train_mnist(MnistNet net, const Dataset& data, const TrainConfig& cfg);

double evaluate_mnist(const MnistNet& net, const Dataset& data);
Vector mnist_predict(const MnistNet& net, std::span<const double> image);

}  // namespace hamnet
