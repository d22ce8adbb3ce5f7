#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamnet/linalg.hpp"

namespace hamnet {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Dataset {
    Matrix features;  // s x n
    std::vector<std::size_t> labels;
    std::size_t classes = 0;
    std::string name;
    // Per-coordinate standardization applied by the generators (empty otherwise);
    // original = standardized * std + mean.
    std::vector<double> feature_mean;
    std::vector<double> feature_std;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols; }
    Vector row(std::size_t i) const;
};

// Shifts/scales every coordinate to zero mean and unit (population) variance,
// recording the constants in the dataset. Coordinates with zero variance are
// only centered.
void standardize(Dataset& d);

// Two interleaved half circles: class 0 at (cos t, sin t), class 1 at
// (1 - cos t, 0.5 - sin t), t uniform in [0, pi], plus N(0, noise^2) on each
// coordinate, then standardized. s must be even; classes are balanced.
Dataset gen_double_moons(std::size_t s, double noise_std, std::uint64_t seed);

// Two interleaved spirals r(t) (cos(t + c pi), sin(t + c pi)) with
// r(t) = 0.2 + 0.6 t / (3 pi), t uniform in [0, 3 pi], noise as above.
Dataset gen_swiss_roll(std::size_t s, double noise_std, std::uint64_t seed);

constexpr double kDoubleMoonsNoise = 0.1;
constexpr double kSwissRollNoise = 0.02;

// Zero-pads feature vectors on the right to dimension target_n.
Dataset augment_features(const Dataset& d, std::size_t target_n);

// Big-endian IDX container (MNIST): 32-bit magic, one 32-bit size per
// dimension, then the raw byte payload.
struct IdxFile {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload;
};

constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::uint32_t kIdxImagesMagic = 0x00000803;

IdxFile idx_read(const std::string& path);
void idx_write(const std::string& path, const IdxFile& file);

// Decodes an images/labels pair: images magic 0x803 with dims [count, 28, 28],
// bytes scaled to [0, 1]; labels magic 0x801 with dims [count]. Counts must
// match. Errors name the offending field and byte offset.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Encodes a dataset whose features are 28x28 images with values on the k/255
// grid back into the IDX pair (used by fixtures and round-trip checks).
void save_mnist_idx(const Dataset& d, const std::string& images_path,
                    const std::string& labels_path);

// CSV with header x1,...,xn,label and 17-significant-digit floats.
void save_dataset_csv(const Dataset& d, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

}  // namespace hamnet
