// Acceptance suite: one checked claim per criterion, one PASS/FAIL line each.
// Usage: acceptance [1-9|all]. Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "hamnet/conv.hpp"
#include "hamnet/diagnostics.hpp"
#include "hamnet/experiment.hpp"
#include "hamnet/model_io.hpp"
#include "hamnet/rng.hpp"

using namespace hamnet;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", criterion, name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentSpec benchmark_spec(const std::string& dataset, Variant arch, std::size_t layers,
                              double h, std::uint64_t seed) {
    ExperimentSpec spec;
    spec.dataset = dataset;
    spec.arch = arch;
    spec.layers = layers;
    spec.h = h;
    spec.n = 4;
    spec.samples = 5000;
    spec.train.lr = 0.05;
    spec.train.epochs = 50;
    spec.train.batch_size = 125;
    spec.train.alpha = 5e-3;
    spec.train.alpha_c = 1e-4;
    spec.train.inner_head_iters = 10;
    spec.train.seed = seed;
    return spec;
}

char buf[512];

// --- criterion 1: double moons benchmark ------------------------------------
void criterion1() {
    bool pass = true;
    std::string detail;
    for (std::size_t layers : {1ul, 2ul, 4ul}) {
        const auto t0 = std::chrono::steady_clock::now();
        const ExperimentSpec spec = benchmark_spec("double_moons", Variant::H1, layers, 0.5, 0);
        const ExperimentResult r = run_experiment(spec);
        const double dt = seconds_since(t0);
        pass = pass && r.test_accuracy >= 0.99 && dt < 120.0;
        std::snprintf(buf, sizeof(buf), "N=%zu acc %.4f (%.0fs) ", layers, r.test_accuracy, dt);
        detail += buf;
    }
    report(1, "double moons H1 N in {1,2,4} >= 99%", pass, detail);
}

// --- criterion 2: swiss roll benchmark --------------------------------------
void criterion2() {
    bool pass = true;
    std::string detail;
    for (Variant v : {Variant::H1, Variant::H2}) {
        const auto t0 = std::chrono::steady_clock::now();
        const ExperimentResult deep =
            run_experiment(benchmark_spec("swiss_roll", v, 64, 0.05, 0));
        const double dt = seconds_since(t0);
        pass = pass && deep.test_accuracy >= 0.99 && dt < 600.0;
        std::snprintf(buf, sizeof(buf), "%s N=64 acc %.4f (%.0fs) ", variant_name(v),
                      deep.test_accuracy, dt);
        detail += buf;

        const ExperimentResult shallow =
            run_experiment(benchmark_spec("swiss_roll", v, 4, 0.05, 0));
        pass = pass && shallow.test_accuracy >= 0.90;
        std::snprintf(buf, sizeof(buf), "%s N=4 acc %.4f ", variant_name(v),
                      shallow.test_accuracy);
        detail += buf;
    }
    report(2, "swiss roll H1/H2 N=64 >= 99%, N=4 >= 90%", pass, detail);
}

// --- criterion 3: expressivity ordering at N=4 ------------------------------
void criterion3() {
    double avg[4] = {0, 0, 0, 0};
    const Variant variants[4] = {Variant::H1, Variant::H2, Variant::MS1, Variant::MS2};
    for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
        for (int i = 0; i < 4; ++i) {
            const ExperimentResult r =
                run_experiment(benchmark_spec("swiss_roll", variants[i], 4, 0.05, seed));
            avg[i] += r.test_accuracy / 3.0;
        }
    }
    const double min_h = std::min(avg[0], avg[1]);
    const double max_ms = std::max(avg[2], avg[3]);
    const double gap = (min_h - max_ms) * 100.0;
    std::snprintf(buf, sizeof(buf),
                  "3-seed means H1 %.4f H2 %.4f MS1 %.4f MS2 %.4f, gap %.1f points",
                  avg[0], avg[1], avg[2], avg[3], gap);
    report(3, "min(H1,H2) exceeds max(MS1,MS2) by >= 5 points at N=4", gap >= 5.0, buf);
}

// --- criterion 4: gradient-norm bands over the 960-iteration study ----------
void band_run(bool shared, double lo_bound, double hi_bound, bool& pass, std::string& detail) {
    const std::uint64_t seed = 0;
    const Dataset train = augment_features(gen_double_moons(5000, kDoubleMoonsNoise, seed), 4);
    NetworkParams params = init_network(Architecture{Variant::H1, 4}, 64, 0.05, seed, shared);
    OutputHead head = init_head(2, 4);
    TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.epochs = 24;  // 24 epochs x 40 mini-batches = the 960 training iterations
    cfg.batch_size = 125;
    cfg.alpha = 5e-3;
    cfg.alpha_c = 1e-4;
    cfg.inner_head_iters = 10;
    cfg.seed = seed;

    GradNormTrace trace;
    auto hook = make_gradnorm_hook(trace, gradnorm_layer_subset(64));
    train_coordinate_descent(std::move(params), std::move(head), train, cfg, hook);

    double lo = 1e300, hi = 0.0;
    for (const auto& s : trace) {
        lo = std::min(lo, s.norm);
        hi = std::max(hi, s.norm);
    }
    const bool ok = lo >= lo_bound && hi <= hi_bound && trace.size() == 960 * 7;
    pass = pass && ok;
    std::snprintf(buf, sizeof(buf), "%s norms [%.3g, %.3g] over 960 iters (bounds [%g, %g]) ",
                  shared ? "time-invariant" : "layer-varying", lo, hi, lo_bound, hi_bound);
    detail += buf;
}

void criterion4() {
    bool pass = true;
    std::string detail;
    band_run(false, 0.5, 50.0, pass, detail);
    band_run(true, 0.5, 100.0, pass, detail);
    report(4, "64-layer H1 gradient norms bounded through training", pass, detail);
}

// --- criterion 5: FCNN vanishing-gradient negative control ------------------
void criterion5() {
    TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.epochs = 50;
    cfg.batch_size = 125;
    cfg.alpha = 5e-3;
    cfg.alpha_c = 2e-4;
    cfg.inner_head_iters = 10;
    cfg.seed = 0;
    const VanishingDemoResult res = fcnn_vanishing_demo(cfg);

    double j0_min_early = 1e300;
    for (const auto& s : res.trace) {
        if (s.layer == 0 && s.iteration < 400) j0_min_early = std::min(j0_min_early, s.norm);
    }
    const bool pass = res.test_accuracy <= 0.60 && j0_min_early < 1e-3;
    std::snprintf(buf, sizeof(buf),
                  "32-layer FCNN test acc %.4f (<= 0.60), j=0 norm min over first 400 iters %.3e "
                  "(< 1e-3)",
                  res.test_accuracy, j0_min_early);
    report(5, "FCNN control: low accuracy and vanished gradients", pass, buf);
}

// --- criterion 6: MNIST at reduced scale ------------------------------------
std::string mnist_dir() {
    if (const char* env = std::getenv("MNIST_DIR")) return env;
    return "data/mnist";
}

bool mnist_available() {
    const std::string dir = mnist_dir();
    std::ifstream a(dir + "/train-images-idx3-ubyte");
    std::ifstream b(dir + "/train-labels-idx1-ubyte");
    std::ifstream c(dir + "/t10k-images-idx3-ubyte");
    std::ifstream d(dir + "/t10k-labels-idx1-ubyte");
    return a.good() && b.good() && c.good() && d.good();
}

void criterion6() {
    if (!mnist_available()) {
        report(6, "MNIST H2 N=2 reduced-scale >= 95%", false,
               "MNIST IDX files not found under '" + mnist_dir() +
                   "' (set MNIST_DIR); this sandbox has no dataset network access, so the "
                   "criterion cannot execute here. The full pipeline is implemented and "
                   "unit-tested on synthetic IDX fixtures.");
        return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentSpec spec;
    spec.dataset = "mnist";
    spec.mnist_dir = mnist_dir();
    spec.mnist_subset = 10000;
    spec.arch = Variant::H2;
    spec.layers = 2;
    spec.h = 0.05;
    spec.train.lr = 0.04;
    spec.train.lr_decay_gamma = 0.8;
    spec.train.epochs = 10;
    spec.train.batch_size = 100;
    spec.train.alpha = 1e-3;
    spec.train.alpha_c = 2e-4;
    spec.train.inner_head_iters = 1;
    spec.train.seed = 0;
    const ExperimentResult r = run_experiment(spec);
    const double dt = seconds_since(t0);
    const bool pass = r.test_accuracy >= 0.95 && dt < 1800.0;
    std::snprintf(buf, sizeof(buf), "test acc %.4f on full 10k test set (%.0fs)",
                  r.test_accuracy, dt);
    report(6, "MNIST H2 N=2 reduced-scale >= 95%", pass, buf);
}

// --- criterion 7: stability validation suite --------------------------------
void criterion7() {
    bool pass = true;
    std::string detail;

    // (a) spectral checks across 100 random instances per J-variant.
    {
        Rng rng(2024);
        double worst_skew = 0.0, worst_re = 0.0;
        for (Variant v : {Variant::H1, Variant::H2}) {
            for (int trial = 0; trial < 100; ++trial) {
                const std::size_t n = 4 + 2 * (trial % 3);  // 4, 6, 8
                const Matrix J = make_interconnection(v, n);
                Matrix K(n, n);
                for (double& x : K.data) x = rng.normal();
                Vector b(n), y(n);
                for (std::size_t i = 0; i < n; ++i) {
                    b[i] = rng.normal(0.0, 0.4);
                    y[i] = rng.normal();
                }
                const StabilityReport rep = check_marginal_stability_spectrum(K, b, y, J);
                worst_skew = std::max(worst_skew,
                                      rep.skew_residual / std::max(frobenius_norm(K), 1.0));
                worst_re = std::max(worst_re, rep.max_re_lambda);
                pass = pass && rep.pass;
            }
        }
        pass = pass && worst_skew < 1e-9 && worst_re < 1e-8;
        std::snprintf(buf, sizeof(buf), "(a) 200 instances: worst skew %.2e, worst |Re| %.2e; ",
                      worst_skew, worst_re);
        detail += buf;
    }

    // (b) Richardson study: first-order convergence of the Jacobian product.
    {
        Rng rng(7);
        Matrix K(4, 4);
        for (double& x : K.data) x = rng.normal(0.0, 0.6);
        Vector b(4), y0(4);
        for (std::size_t i = 0; i < 4; ++i) {
            b[i] = rng.normal(0.0, 0.3);
            y0[i] = rng.normal();
        }
        const Matrix J = make_interconnection(Variant::H1, 4);
        const std::size_t counts[] = {64, 128, 256};
        const auto rows = backward_ode_richardson(K, b, J, y0, 2.0, counts, 4096);
        const double r1 = rows[0].error / rows[1].error;
        const double r2 = rows[1].error / rows[2].error;
        const bool ok = r1 > 2.0 / 1.3 && r1 < 2.0 / 0.7 && r2 > 2.0 / 1.3 && r2 < 2.0 / 0.7;
        pass = pass && ok;
        std::snprintf(buf, sizeof(buf),
                      "(b) errors %.2e/%.2e/%.2e ratios %.2f, %.2f (want ~2); ", rows[0].error,
                      rows[1].error, rows[2].error, r1, r2);
        detail += buf;
    }

    // (c) envelope bounded both ways for frozen-D systems; unstable control.
    {
        Rng rng(11);
        bool ok = true;
        for (int trial = 0; trial < 3; ++trial) {
            const std::size_t n = 4;
            Matrix K(n, n);
            for (double& x : K.data) x = rng.normal();
            Vector b(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                b[i] = rng.normal(0.0, 0.3);
                y[i] = rng.normal();
            }
            const Matrix J = make_interconnection(trial % 2 ? Variant::H2 : Variant::H1, n);
            Vector a = matvec(K, y) + b;
            Matrix dk(n, n);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = std::tanh(a[i]);
                for (std::size_t c = 0; c < n; ++c) dk(i, c) = (1.0 - t * t) * K(i, c);
            }
            const Matrix A = matmul(transpose(K), matmul(dk, transpose(J)));
            const double bound = envelope_condition_bound(K, b, y);
            const double grid[] = {0.0, 25.0, 50.0, 75.0, 100.0};
            for (const auto& p : exp_norm_envelope(A, grid)) {
                ok = ok && p.sigma_max <= bound * (1.0 + 1e-6) &&
                     p.sigma_min >= (1.0 - 1e-6) / bound;
            }
        }
        Matrix unstable(2, 2);
        unstable(0, 0) = 0.5;
        unstable(0, 1) = 1.0;
        unstable(1, 1) = -0.3;
        const double grid[] = {0.0, 40.0};
        const auto env = exp_norm_envelope(unstable, grid);
        ok = ok && env.back().sigma_max > 1e8;
        pass = pass && ok;
        std::snprintf(buf, sizeof(buf),
                      "(c) frozen-D envelopes within cond bound over t in [0,100], control grew "
                      "to %.2e",
                      env.back().sigma_max);
        detail += buf;
    }

    report(7, "stability validation suite", pass, detail);
}

// --- criterion 8: gradient correctness --------------------------------------
void criterion8() {
    Rng rng(4096);
    bool pass = true;
    std::string detail;
    double worst = 0.0;      // with the 1e-8 absolute floor (the gate)
    double worst_raw = 0.0;  // unfloored, for the record
    std::size_t total_coords = 0;
    const Dataset probe_data = [&] {
        Dataset d;
        d.classes = 2;
        d.features = Matrix(4, 4);
        d.labels = {0, 1, 1, 0};
        Rng r2(99);
        for (double& v : d.features.data) v = r2.normal();
        return d;
    }();
    TrainConfig cfg;
    cfg.alpha = 5e-3;
    cfg.alpha_c = 1e-4;

    for (Variant v : {Variant::H1, Variant::H2, Variant::MS1, Variant::MS2, Variant::MS3,
                      Variant::FCNN}) {
        NetworkParams net = init_network(Architecture{v, 4}, 3, 0.3, 777 + static_cast<int>(v));
        OutputHead head = init_head(2, 4);
        for (auto& bb : net.b)
            for (std::size_t i = 0; i < bb.size(); ++i) bb[i] = rng.normal(0.0, 0.3);
        for (double& w : head.W.data) w = rng.normal(0.0, 0.5);
        for (std::size_t i = 0; i < head.mu.size(); ++i) head.mu[i] = rng.normal(0.0, 0.5);

        // Per-sample loss + both regularizers, all coordinates, against central
        // finite differences at eps = 1e-5.
        std::vector<std::size_t> idx(probe_data.size());
        std::iota(idx.begin(), idx.end(), 0);
        ParamGrads grads = objective_gradients(net, head, probe_data, idx, cfg);
        const double eps = 1e-5;
        std::size_t coords = 0, ok_coords = 0;
        auto walk = [&](std::span<double> values, std::span<const double> grad) {
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double saved = values[i];
                values[i] = saved + eps;
                const double up = objective(net, head, probe_data, idx, cfg);
                values[i] = saved - eps;
                const double dn = objective(net, head, probe_data, idx, cfg);
                values[i] = saved;
                const double fd = (up - dn) / (2.0 * eps);
                const double diff = std::abs(fd - grad[i]);
                const double denom = std::max(std::abs(fd), std::abs(grad[i]));
                const double rel = diff <= 1e-8 ? 0.0 : diff / denom;
                worst = std::max(worst, rel);
                if (denom > 0.0) worst_raw = std::max(worst_raw, diff / denom);
                ++coords;
                if (rel < 1e-5) ++ok_coords;
            }
        };
        auto pa = hidden_arrays(net);
        auto ga = hidden_arrays(grads);
        for (std::size_t a = 0; a < pa.size(); ++a) walk(pa[a], ga[a]);
        auto ha = head_arrays(head);
        auto hg = head_arrays(grads);
        for (std::size_t a = 0; a < ha.size(); ++a) walk(ha[a], hg[a]);

        pass = pass && coords == ok_coords;
        total_coords += coords;
    }
    std::snprintf(buf, sizeof(buf),
                  "%zu coordinates across 6 variants, worst rel err %.2e (raw FD noise %.2e)",
                  total_coords, worst, worst_raw);
    report(8, "finite-difference gradient agreement incl. regularizers", pass, buf);
}

// --- criterion 9: infrastructure round trips --------------------------------
void criterion9() {
    bool pass = true;
    std::string detail;

    // IDX fixture round trip, byte-exact.
    {
        IdxFile images;
        images.magic = kIdxImagesMagic;
        images.dims = {3, 28, 28};
        images.payload.resize(3 * 784);
        Rng rng(5);
        for (auto& px : images.payload) px = static_cast<std::uint8_t>(rng.below(256));
        IdxFile labels;
        labels.magic = kIdxLabelsMagic;
        labels.dims = {3};
        labels.payload = {1, 2, 3};
        idx_write("/tmp/acc-images-idx3-ubyte", images);
        idx_write("/tmp/acc-labels-idx1-ubyte", labels);
        const Dataset d = load_mnist_idx("/tmp/acc-images-idx3-ubyte", "/tmp/acc-labels-idx1-ubyte");
        save_mnist_idx(d, "/tmp/acc2-images-idx3-ubyte", "/tmp/acc2-labels-idx1-ubyte");
        auto slurp = [](const std::string& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string(std::istreambuf_iterator<char>(in), {});
        };
        const bool ok = slurp("/tmp/acc-images-idx3-ubyte") == slurp("/tmp/acc2-images-idx3-ubyte") &&
                        slurp("/tmp/acc-labels-idx1-ubyte") == slurp("/tmp/acc2-labels-idx1-ubyte");
        pass = pass && ok;
        detail += ok ? "IDX round-trip byte-exact; " : "IDX round-trip differs; ";
    }

    // Model round trip, byte-exact.
    {
        NetworkParams params = init_network(Architecture{Variant::MS3, 6}, 4, 0.21, 6);
        OutputHead head = init_head(10, 6);
        Rng rng(7);
        for (double& w : head.W.data) w = rng.normal();
        save_model(params, head, "/tmp/acc_model_a.bin");
        auto [lp, lh] = load_model("/tmp/acc_model_a.bin");
        save_model(lp, lh, "/tmp/acc_model_b.bin");
        auto slurp = [](const std::string& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string(std::istreambuf_iterator<char>(in), {});
        };
        const bool ok = slurp("/tmp/acc_model_a.bin") == slurp("/tmp/acc_model_b.bin");
        pass = pass && ok;
        detail += ok ? "model round-trip byte-exact; " : "model round-trip differs; ";
    }

    // Seeded runs bit-reproducible under a fixed thread count.
    {
        const Dataset data = augment_features(gen_double_moons(500, kDoubleMoonsNoise, 9), 4);
        TrainConfig cfg;
        cfg.epochs = 3;
        cfg.batch_size = 125;
        cfg.seed = 11;
        auto run = [&]() {
            NetworkParams net = init_network(Architecture{Variant::H1, 4}, 4, 0.5, 13);
            OutputHead head = init_head(2, 4);
            return train_coordinate_descent(std::move(net), std::move(head), data, cfg);
        };
        const TrainResult a = run();
        const TrainResult b = run();
        bool ok = a.history.size() == b.history.size();
        for (std::size_t i = 0; ok && i < a.history.size(); ++i) {
            ok = a.history[i].loss == b.history[i].loss;
        }
        for (std::size_t s = 0; ok && s < a.params.K.size(); ++s) {
            ok = a.params.K[s].data == b.params.K[s].data;
        }
        pass = pass && ok;
        detail += ok ? "seeded training bit-reproducible" : "seeded training differs";
    }

    report(9, "infrastructure round trips and reproducibility", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
    const std::string which = argc > 1 ? argv[1] : "all";
    const bool all = which == "all";
    if (all || which == "1") criterion1();
    if (all || which == "2") criterion2();
    if (all || which == "3") criterion3();
    if (all || which == "4") criterion4();
    if (all || which == "5") criterion5();
    if (all || which == "6") criterion6();
    if (all || which == "7") criterion7();
    if (all || which == "8") criterion8();
    if (all || which == "9") criterion9();
    return g_failures;
}
