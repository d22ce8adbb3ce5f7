#include <doctest.h>

#include <fstream>

#include "hamnet/model_io.hpp"
#include "test_util.hpp"

using namespace hamnet;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("dense model round-trip is byte-identical for every variant") {
    Rng rng(1);
    for (Variant v : {Variant::H1, Variant::H2, Variant::MS1, Variant::MS2, Variant::MS3,
                      Variant::FCNN}) {
        NetworkParams params = init_network(Architecture{v, 4}, 3, 0.31, 7 + static_cast<int>(v));
        OutputHead head = init_head(2, 4);
        testutil::randomize_all(params, head, rng);

        const std::string p1 = "/tmp/hamnet_model_a.bin";
        const std::string p2 = "/tmp/hamnet_model_b.bin";
        save_model(params, head, p1);
        auto [loaded_params, loaded_head] = load_model(p1);
        save_model(loaded_params, loaded_head, p2);
        CHECK(slurp(p1) == slurp(p2));

        CHECK(loaded_params.arch.variant == v);
        CHECK(loaded_params.layers == 3);
        CHECK(loaded_params.step == params.step);
        for (std::size_t s = 0; s < params.K.size(); ++s) {
            CHECK(loaded_params.K[s].data == params.K[s].data);
            CHECK(loaded_params.b[s].data == params.b[s].data);
        }
        CHECK(loaded_head.W.data == head.W.data);
    }
}

TEST_CASE("shared-weight and 10-class models round-trip") {
    NetworkParams params = init_network(Architecture{Variant::H1, 6}, 8, 0.05, 3, true);
    OutputHead head = init_head(10, 6);
    const std::string path = "/tmp/hamnet_model_shared.bin";
    save_model(params, head, path);
    auto [lp, lh] = load_model(path);
    CHECK(lp.shared_weights);
    CHECK(lp.stored_slots() == 1);
    CHECK(lp.layers == 8);
    CHECK(lh.classes == 10);
    CHECK(lh.W.rows == 10);
}

TEST_CASE("conv model round-trip is byte-identical") {
    MnistNet net = init_mnist_net(ConvVariant::H2, 2, 0.05, 5);
    Rng rng(6);
    for (double& w : net.W.data) w = rng.normal(0.0, 0.01);
    const std::string p1 = "/tmp/hamnet_conv_a.bin";
    const std::string p2 = "/tmp/hamnet_conv_b.bin";
    save_mnist_model(net, p1);
    const MnistNet loaded = load_mnist_model(p1);
    save_mnist_model(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(loaded.layers == 2);
    CHECK(loaded.h == net.h);
    CHECK(loaded.K[0].w == net.K[0].w);
    CHECK(is_conv_model(p1));

    save_model(init_network(Architecture{Variant::H1, 4}, 1, 0.5, 0), init_head(2, 4),
               "/tmp/hamnet_dense.bin");
    CHECK_FALSE(is_conv_model("/tmp/hamnet_dense.bin"));
}

TEST_CASE("corrupted magic and truncation are rejected") {
    const std::string path = "/tmp/hamnet_corrupt.bin";
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "NOPE!123456789";
    }
    CHECK_THROWS_AS(load_model(path), IoError);
    CHECK_THROWS_AS(is_conv_model(path), IoError);

    // Valid magic, truncated payload.
    NetworkParams params = init_network(Architecture{Variant::H1, 4}, 2, 0.5, 9);
    OutputHead head = init_head(2, 4);
    save_model(params, head, path);
    const std::string full = slurp(path);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(full.data(), static_cast<std::streamsize>(full.size() - 13));
    }
    CHECK_THROWS_AS(load_model(path), IoError);

    // Trailing garbage is also rejected.
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(full.data(), static_cast<std::streamsize>(full.size()));
        out << "extra";
    }
    CHECK_THROWS_AS(load_model(path), IoError);
}
