#include "hamnet/data.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hamnet/rng.hpp"

namespace hamnet {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

Vector Dataset::row(std::size_t i) const {
    Vector v(features.cols);
    const double* src = &features.data[i * features.cols];
    for (std::size_t j = 0; j < features.cols; ++j) v[j] = src[j];
    return v;
}

void standardize(Dataset& d) {
    const std::size_t s = d.size();
    const std::size_t n = d.dim();
    if (s == 0) return;
    d.feature_mean.assign(n, 0.0);
    d.feature_std.assign(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < s; ++i) mean += d.features(i, j);
        mean /= static_cast<double>(s);
        double var = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            const double c = d.features(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(s);
        const double stddev = std::sqrt(var);
        d.feature_mean[j] = mean;
        d.feature_std[j] = (stddev > 0.0) ? stddev : 1.0;
        for (std::size_t i = 0; i < s; ++i) {
            d.features(i, j) = (d.features(i, j) - mean) / d.feature_std[j];
        }
    }
}

namespace {

Dataset gen_two_class(std::size_t s, double noise_std, std::uint64_t seed, const char* name,
                      void (*point)(double t, std::size_t cls, double out[2]), double t_max) {
    if (s % 2 != 0) throw std::invalid_argument(std::string(name) + ": sample count must be even");
    Dataset d;
    d.name = name;
    d.classes = 2;
    d.features = Matrix(s, 2);
    d.labels.resize(s);
    Rng rng(seed);
    const std::size_t half = s / 2;
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t cls = i < half ? 0 : 1;
        const double t = rng.uniform(0.0, t_max);
        double p[2];
        point(t, cls, p);
        d.features(i, 0) = p[0] + (noise_std > 0.0 ? rng.normal(0.0, noise_std) : 0.0);
        d.features(i, 1) = p[1] + (noise_std > 0.0 ? rng.normal(0.0, noise_std) : 0.0);
        d.labels[i] = cls;
    }
    standardize(d);
    return d;
}

}  // namespace

Dataset gen_double_moons(std::size_t s, double noise_std, std::uint64_t seed) {
    return gen_two_class(
        s, noise_std, seed, "double_moons",
        [](double t, std::size_t cls, double out[2]) {
            if (cls == 0) {
                out[0] = std::cos(t);
                out[1] = std::sin(t);
            } else {
                out[0] = 1.0 - std::cos(t);
                out[1] = 0.5 - std::sin(t);
            }
        },
        kPi);
}

Dataset gen_swiss_roll(std::size_t s, double noise_std, std::uint64_t seed) {
    return gen_two_class(
        s, noise_std, seed, "swiss_roll",
        [](double t, std::size_t cls, double out[2]) {
            const double r = 0.2 + 0.6 * t / (3.0 * kPi);
            const double phase = t + (cls == 1 ? kPi : 0.0);
            out[0] = r * std::cos(phase);
            out[1] = r * std::sin(phase);
        },
        3.0 * kPi);
}

Dataset augment_features(const Dataset& d, std::size_t target_n) {
    if (target_n < d.dim()) {
        throw DimensionError("augment_features: target dimension " + std::to_string(target_n) +
                             " is below current " + std::to_string(d.dim()));
    }
    if (target_n == d.dim()) return d;
    Dataset out = d;
    out.features = Matrix(d.size(), target_n);
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.dim(); ++j) out.features(i, j) = d.features(i, j);
    out.feature_mean.clear();
    out.feature_std.clear();
    return out;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path, const char* field,
                        std::size_t offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4) {
        throw IoError(path + ": truncated while reading " + field + " at byte offset " +
                      std::to_string(offset));
    }
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

IdxFile idx_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    IdxFile f;
    f.magic = read_be32(in, path, "magic", 0);
    if (f.magic != kIdxLabelsMagic && f.magic != kIdxImagesMagic) {
        throw IoError(path + ": bad magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%08x", f.magic);
            return std::string(buf);
        }() + " at byte offset 0 (expected 0x00000801 or 0x00000803)");
    }
    const std::size_t rank = f.magic & 0xff;
    std::size_t total = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        const std::uint32_t dim = read_be32(in, path, "dimension size", 4 + 4 * i);
        f.dims.push_back(dim);
        total *= dim;
    }
    f.payload.resize(total);
    in.read(reinterpret_cast<char*>(f.payload.data()), static_cast<std::streamsize>(total));
    const std::size_t got = static_cast<std::size_t>(in.gcount());
    if (got != total) {
        throw IoError(path + ": truncated payload at byte offset " +
                      std::to_string(4 + 4 * rank + got) + " (expected " + std::to_string(total) +
                      " bytes, got " + std::to_string(got) + ")");
    }
    return f;
}

void idx_write(const std::string& path, const IdxFile& file) {
    std::size_t total = 1;
    for (std::uint32_t d : file.dims) total *= d;
    if (total != file.payload.size()) {
        throw IoError(path + ": payload length " + std::to_string(file.payload.size()) +
                      " does not match dims product " + std::to_string(total));
    }
    if ((file.magic & 0xff) != file.dims.size()) {
        throw IoError(path + ": magic rank does not match dims count");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    write_be32(out, file.magic);
    for (std::uint32_t d : file.dims) write_be32(out, d);
    out.write(reinterpret_cast<const char*>(file.payload.data()),
              static_cast<std::streamsize>(file.payload.size()));
    if (!out) throw IoError(path + ": write failed");
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    const IdxFile images = idx_read(images_path);
    if (images.magic != kIdxImagesMagic) {
        throw IoError(images_path + ": magic is not the images magic 0x00000803");
    }
    if (images.dims.size() != 3 || images.dims[1] != 28 || images.dims[2] != 28) {
        throw IoError(images_path + ": expected dims [count, 28, 28]");
    }
    const IdxFile labels = idx_read(labels_path);
    if (labels.magic != kIdxLabelsMagic) {
        throw IoError(labels_path + ": magic is not the labels magic 0x00000801");
    }
    if (labels.dims.size() != 1) throw IoError(labels_path + ": expected dims [count]");
    if (labels.dims[0] != images.dims[0]) {
        throw IoError("count mismatch: " + images_path + " has " + std::to_string(images.dims[0]) +
                      " images, " + labels_path + " has " + std::to_string(labels.dims[0]) +
                      " labels");
    }

    Dataset d;
    d.name = "mnist";
    d.classes = 10;
    const std::size_t s = images.dims[0];
    d.features = Matrix(s, 784);
    d.labels.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t p = 0; p < 784; ++p) {
            d.features.data[i * 784 + p] = images.payload[i * 784 + p] / 255.0;
        }
        const std::uint8_t lab = labels.payload[i];
        if (lab > 9) {
            throw IoError(labels_path + ": label " + std::to_string(lab) + " out of range at index " +
                          std::to_string(i));
        }
        d.labels[i] = lab;
    }
    return d;
}

void save_mnist_idx(const Dataset& d, const std::string& images_path,
                    const std::string& labels_path) {
    if (d.dim() != 784) throw IoError("save_mnist_idx: features are not 28x28 images");
    IdxFile images;
    images.magic = kIdxImagesMagic;
    images.dims = {static_cast<std::uint32_t>(d.size()), 28, 28};
    images.payload.resize(d.size() * 784);
    for (std::size_t i = 0; i < d.features.data.size(); ++i) {
        const double v = d.features.data[i] * 255.0;
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9 || r < 0.0 || r > 255.0) {
            throw IoError("save_mnist_idx: feature value " + std::to_string(d.features.data[i]) +
                          " is not on the k/255 grid");
        }
        images.payload[i] = static_cast<std::uint8_t>(r);
    }
    IdxFile labels;
    labels.magic = kIdxLabelsMagic;
    labels.dims = {static_cast<std::uint32_t>(d.size())};
    labels.payload.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) labels.payload[i] = static_cast<std::uint8_t>(d.labels[i]);
    idx_write(images_path, images);
    idx_write(labels_path, labels);
}

void save_dataset_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    for (std::size_t j = 0; j < d.dim(); ++j) out << "x" << (j + 1) << ",";
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < d.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", d.features(i, j));
            out << buf << ",";
        }
        out << d.labels[i] << "\n";
    }
    if (!out) throw IoError(path + ": write failed");
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");

    std::size_t cols = 0;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) ++cols;
    }
    if (cols < 2) throw IoError(path + ": header needs at least one feature and a label column");
    const std::size_t n = cols - 1;

    std::vector<double> values;
    std::vector<std::size_t> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::size_t col = 0;
        while (std::getline(ss, tok, ',')) {
            try {
                if (col < n) {
                    values.push_back(std::stod(tok));
                } else {
                    labels.push_back(static_cast<std::size_t>(std::stoul(tok)));
                }
            } catch (const std::exception&) {
                throw IoError(path + ":" + std::to_string(lineno) + ": cannot parse '" + tok + "'");
            }
            ++col;
        }
        if (col != cols) {
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(cols) + " columns, got " + std::to_string(col));
        }
    }

    Dataset d;
    d.name = path;
    d.features = Matrix(labels.size(), n, std::move(values));
    d.labels = std::move(labels);
    std::size_t max_label = 0;
    for (std::size_t lab : d.labels) max_label = std::max(max_label, lab);
    d.classes = std::max<std::size_t>(2, max_label + 1);
    check_finite(d.features, "load_dataset_csv");
    return d;
}

}  // namespace hamnet
