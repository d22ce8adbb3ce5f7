#include "hamnet/model_io.hpp"

#include <cstring>
#include <fstream>

#include "hamnet/data.hpp"

namespace hamnet {

namespace {

constexpr char kDenseMagic[5] = {'H', 'D', 'N', 'N', '1'};
constexpr char kConvMagic[5] = {'H', 'D', 'N', 'C', '1'};

void put_u32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64_block(std::ofstream& out, const double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) put_f64(out, data[i]);
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path, const char* field) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw IoError(path + ": truncated reading " + field);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::ifstream& in, const std::string& path, const char* field) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw IoError(path + ": truncated reading " + field);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void get_f64_block(std::ifstream& in, const std::string& path, const char* field, double* data,
                   std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) data[i] = get_f64(in, path, field);
}

std::uint32_t variant_tag(Variant v) { return static_cast<std::uint32_t>(v); }

Variant variant_from_tag(std::uint32_t tag, const std::string& path) {
    if (tag > 5) throw IoError(path + ": unknown architecture tag " + std::to_string(tag));
    return static_cast<Variant>(tag);
}

}  // namespace

void save_model(const NetworkParams& params, const OutputHead& head, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out.write(kDenseMagic, 5);
    put_u32(out, variant_tag(params.arch.variant));
    put_u32(out, static_cast<std::uint32_t>(params.layers));
    put_f64(out, params.step);
    put_u32(out, static_cast<std::uint32_t>(params.arch.n));
    put_u32(out, static_cast<std::uint32_t>(head.classes));
    put_u32(out, params.shared_weights ? 1 : 0);
    for (const auto& k : params.K) put_f64_block(out, k.data.data(), k.data.size());
    for (const auto& b : params.b) put_f64_block(out, b.data.data(), b.size());
    put_f64_block(out, head.W.data.data(), head.W.data.size());
    put_f64_block(out, head.mu.data.data(), head.mu.size());
    if (!out) throw IoError(path + ": write failed");
}

std::pair<NetworkParams, OutputHead> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    char magic[5];
    in.read(magic, 5);
    if (in.gcount() != 5 || std::memcmp(magic, kDenseMagic, 5) != 0) {
        throw IoError(path + ": bad magic (expected HDNN1)");
    }
    NetworkParams params;
    params.arch.variant = variant_from_tag(get_u32(in, path, "arch tag"), path);
    params.layers = get_u32(in, path, "layer count");
    params.step = get_f64(in, path, "step size");
    params.arch.n = get_u32(in, path, "state dimension");
    const std::uint32_t classes = get_u32(in, path, "class count");
    params.shared_weights = get_u32(in, path, "shared flag") != 0;
    validate_architecture(params.arch);
    if (classes < 2) throw IoError(path + ": class count must be >= 2");

    const std::size_t n = params.arch.n;
    std::size_t krows = n, kcols = n;
    switch (params.arch.variant) {
        case Variant::MS1: krows = kcols = n / 2; break;
        case Variant::MS2: krows = ms2_packed_len(n); kcols = 1; break;
        case Variant::MS3: krows = n; kcols = n / 2; break;
        default: break;
    }
    const std::size_t slots =
        params.shared_weights ? std::min<std::size_t>(1, params.layers) : params.layers;
    params.K.reserve(slots);
    params.b.reserve(slots);
    for (std::size_t s = 0; s < slots; ++s) {
        Matrix k(krows, kcols);
        get_f64_block(in, path, "K block", k.data.data(), k.data.size());
        params.K.push_back(std::move(k));
    }
    for (std::size_t s = 0; s < slots; ++s) {
        Vector b(n);
        get_f64_block(in, path, "b block", b.data.data(), b.size());
        params.b.push_back(std::move(b));
    }
    if (params.arch.variant == Variant::H1 || params.arch.variant == Variant::H2) {
        params.J = make_interconnection(params.arch.variant, n);
    }

    OutputHead head;
    head.classes = classes;
    head.W = Matrix(classes == 2 ? 1 : classes, n);
    head.mu = Vector(classes == 2 ? 1 : classes);
    get_f64_block(in, path, "W block", head.W.data.data(), head.W.data.size());
    get_f64_block(in, path, "mu block", head.mu.data.data(), head.mu.size());

    in.peek();
    if (!in.eof()) throw IoError(path + ": trailing bytes after model payload");
    return {std::move(params), std::move(head)};
}

void save_mnist_model(const MnistNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out.write(kConvMagic, 5);
    put_u32(out, net.variant == ConvVariant::H2 ? 0 : 1);
    put_u32(out, static_cast<std::uint32_t>(net.layers));
    put_f64(out, net.h);
    put_f64_block(out, net.expand.kernel.w.data(), net.expand.kernel.w.size());
    for (const auto& k : net.K) put_f64_block(out, k.w.data(), k.w.size());
    for (const auto& b : net.bias) put_f64_block(out, b.data.data(), b.size());
    put_f64_block(out, net.W.data.data(), net.W.data.size());
    put_f64_block(out, net.mu.data.data(), net.mu.size());
    if (!out) throw IoError(path + ": write failed");
}

MnistNet load_mnist_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    char magic[5];
    in.read(magic, 5);
    if (in.gcount() != 5 || std::memcmp(magic, kConvMagic, 5) != 0) {
        throw IoError(path + ": bad magic (expected HDNC1)");
    }
    const std::uint32_t vtag = get_u32(in, path, "variant tag");
    if (vtag > 1) throw IoError(path + ": unknown conv variant tag " + std::to_string(vtag));
    const std::uint32_t layers = get_u32(in, path, "layer count");
    const double h = get_f64(in, path, "step size");

    MnistNet net = init_mnist_net(vtag == 0 ? ConvVariant::H2 : ConvVariant::MS1, layers, h, 0);
    get_f64_block(in, path, "expand kernel", net.expand.kernel.w.data(),
                  net.expand.kernel.w.size());
    for (auto& k : net.K) get_f64_block(in, path, "layer kernel", k.w.data(), k.w.size());
    for (auto& b : net.bias) get_f64_block(in, path, "layer bias", b.data.data(), b.size());
    get_f64_block(in, path, "W block", net.W.data.data(), net.W.data.size());
    get_f64_block(in, path, "mu block", net.mu.data.data(), net.mu.size());
    in.peek();
    if (!in.eof()) throw IoError(path + ": trailing bytes after model payload");
    return net;
}

bool is_conv_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    char magic[5];
    in.read(magic, 5);
    if (in.gcount() != 5) throw IoError(path + ": truncated magic");
    if (std::memcmp(magic, kConvMagic, 5) == 0) return true;
    if (std::memcmp(magic, kDenseMagic, 5) == 0) return false;
    throw IoError(path + ": unrecognized model magic");
}

}  // namespace hamnet
