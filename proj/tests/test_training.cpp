#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "hamnet/data.hpp"
#include "hamnet/training.hpp"
#include "test_util.hpp"

using namespace hamnet;
using testutil::random_vector;
using testutil::randomize_all;

namespace {

Dataset tiny_dataset(std::size_t s, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.classes = 2;
    d.name = "tiny";
    d.features = Matrix(s, n);
    d.labels.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < n; ++j) d.features(i, j) = rng.normal();
        d.labels[i] = rng.below(2);
    }
    return d;
}

std::vector<std::size_t> all_indices(std::size_t s) {
    std::vector<std::size_t> idx(s);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

TEST_CASE("cross entropy reference values") {
    Vector half(2);
    half[0] = half[1] = 0.5;
    CHECK(cross_entropy(half, 0) == doctest::Approx(0.6931471805599453).epsilon(1e-15));

    Vector sure(3);
    sure[1] = 1.0;
    CHECK(cross_entropy(sure, 1) == 0.0);

    Vector uniform(10);
    for (std::size_t i = 0; i < 10; ++i) uniform[i] = 0.1;
    CHECK(cross_entropy(uniform, 7) == doctest::Approx(std::log(10.0)).epsilon(1e-14));

    CHECK_THROWS_AS(cross_entropy(half, 2), std::invalid_argument);

    // Clamp: a zero probability gives -log(1e-12), not infinity.
    Vector zerop(2);
    zerop[1] = 1.0;
    CHECK(cross_entropy(zerop, 0) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    TrainConfig cfg;
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 2, 0.5, 1);
    OutputHead head = init_head(2, 4);
    const NetworkParams before = net;
    ParamGrads g = zero_grads_like(net, head);
    AdamState state = AdamState::like(hidden_arrays(net));
    for (int i = 0; i < 5; ++i) adam_step(net, g, state, 0.1, cfg);
    for (std::size_t s = 0; s < net.K.size(); ++s) {
        CHECK(testutil::max_abs_diff(net.K[s], before.K[s]) == 0.0);
    }
}

TEST_CASE("adam: first step moves by -lr g/(|g|+eps) per coordinate") {
    TrainConfig cfg;
    cfg.adam_eps = 1e-8;
    NetworkParams net = init_network(Architecture{Variant::H1, 2}, 1, 0.5, 2);
    OutputHead head = init_head(2, 2);
    const NetworkParams before = net;
    ParamGrads g = zero_grads_like(net, head);
    Rng rng(5);
    for (double& v : g.K[0].data) v = rng.normal();
    AdamState state = AdamState::like(hidden_arrays(net));
    const double lr = 0.05;
    adam_step(net, g, state, lr, cfg);
    for (std::size_t i = 0; i < g.K[0].data.size(); ++i) {
        const double gv = g.K[0].data[i];
        const double expect = before.K[0].data[i] - lr * gv / (std::abs(gv) + cfg.adam_eps);
        CHECK(net.K[0].data[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("adam: two steps with constant gradient match the hand recurrence") {
    TrainConfig cfg;
    const double lr = 0.01, g0 = 0.37;
    std::vector<double> param{1.0};
    std::vector<double> grad{g0};
    std::vector<std::span<double>> pspan{std::span<double>(param)};
    std::vector<std::span<const double>> gspan{std::span<const double>(grad)};
    AdamState state = AdamState::like(pspan);
    adam_step_arrays(pspan, gspan, state, lr, cfg);
    adam_step_arrays(pspan, gspan, state, lr, cfg);

    double m = 0.0, v = 0.0, x = 1.0;
    for (int t = 1; t <= 2; ++t) {
        m = cfg.beta1 * m + (1 - cfg.beta1) * g0;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g0 * g0;
        const double mhat = m / (1 - std::pow(cfg.beta1, t));
        const double vhat = v / (1 - std::pow(cfg.beta2, t));
        x -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
    CHECK(param[0] == doctest::Approx(x).epsilon(1e-15));
}

TEST_CASE("objective: alpha terms switch on and off") {
    Rng rng(7);
    const Dataset data = tiny_dataset(8, 4, 3);
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 2, 0.4, 4);
    OutputHead head = init_head(2, 4);
    randomize_all(net, head, rng);
    const auto idx = all_indices(data.size());

    TrainConfig cfg;
    cfg.alpha = 0.0;
    cfg.alpha_c = 0.0;
    double mean_ce = 0.0;
    for (std::size_t i : idx) {
        mean_ce += cross_entropy(predict_probabilities(net, head, data.row(i)), data.labels[i]);
    }
    mean_ce /= static_cast<double>(idx.size());
    CHECK(objective(net, head, data, idx, cfg) == doctest::Approx(mean_ce).epsilon(1e-12));

    // Constant weights across layers: only the head term is added.
    net.K[1] = net.K[0];
    net.b[1] = net.b[0];
    cfg.alpha = 0.5;
    cfg.alpha_c = 0.25;
    double head_term = 0.0;
    for (double w : head.W.data) head_term += w * w;
    for (std::size_t i = 0; i < head.mu.size(); ++i) head_term += head.mu[i] * head.mu[i];
    double mean_ce2 = 0.0;
    for (std::size_t i : idx) {
        mean_ce2 += cross_entropy(predict_probabilities(net, head, data.row(i)), data.labels[i]);
    }
    mean_ce2 /= static_cast<double>(idx.size());
    CHECK(objective(net, head, data, idx, cfg) ==
          doctest::Approx(mean_ce2 + 0.25 * head_term).epsilon(1e-12));
}

TEST_CASE("objective: N=2 hand-computed regularizer sum") {
    const Dataset data = tiny_dataset(4, 4, 11);
    NetworkParams net = init_network(Architecture{Variant::H2, 4}, 2, 0.4, 12);
    OutputHead head = init_head(2, 4);
    Rng rng(13);
    randomize_all(net, head, rng);
    TrainConfig cfg;
    cfg.alpha = 0.02;
    cfg.alpha_c = 0.0;
    const auto idx = all_indices(data.size());

    double rk = 0.0;
    for (std::size_t i = 0; i < net.K[0].data.size(); ++i) {
        const double dd = net.K[1].data[i] - net.K[0].data[i];
        rk += dd * dd;
    }
    double rb = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double dd = net.b[1][i] - net.b[0][i];
        rb += dd * dd;
    }
    double mean_ce = 0.0;
    for (std::size_t i : idx) {
        mean_ce += cross_entropy(predict_probabilities(net, head, data.row(i)), data.labels[i]);
    }
    mean_ce /= 4.0;
    const double expect = mean_ce + cfg.alpha * 0.5 * net.step * (rk + rb);
    CHECK(objective(net, head, data, idx, cfg) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("objective decreases under one small full-batch gradient step") {
    Rng rng(17);
    TrainConfig cfg;
    cfg.alpha = 5e-3;
    cfg.alpha_c = 1e-4;
    int ok = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset data = tiny_dataset(16, 4, 100 + trial);
        NetworkParams net = init_network(Architecture{trial % 2 ? Variant::H1 : Variant::H2, 4},
                                         3, 0.3, 200 + trial);
        OutputHead head = init_head(2, 4);
        randomize_all(net, head, rng);
        const auto idx = all_indices(data.size());
        const double before = objective(net, head, data, idx, cfg);
        ParamGrads g = objective_gradients(net, head, data, idx, cfg);
        const double lr = 1e-4;
        auto pa = hidden_arrays(net);
        auto ga = hidden_arrays(g);
        for (std::size_t a = 0; a < pa.size(); ++a)
            for (std::size_t i = 0; i < pa[a].size(); ++i) pa[a][i] -= lr * ga[a][i];
        auto ha = head_arrays(head);
        auto hg = head_arrays(g);
        for (std::size_t a = 0; a < ha.size(); ++a)
            for (std::size_t i = 0; i < ha[a].size(); ++i) ha[a][i] -= lr * hg[a][i];
        const double after = objective(net, head, data, idx, cfg);
        if (after < before) ++ok;
    }
    CHECK(ok == 20);
}

TEST_CASE("objective_gradients match finite differences including both regularizers") {
    const Dataset data = tiny_dataset(6, 4, 19);
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 3, 0.35, 20);
    OutputHead head = init_head(2, 4);
    Rng rng(21);
    randomize_all(net, head, rng);
    TrainConfig cfg;
    cfg.alpha = 7e-3;
    cfg.alpha_c = 3e-4;
    const auto idx = all_indices(data.size());

    ParamGrads g = objective_gradients(net, head, data, idx, cfg);
    const double eps = 1e-5;
    auto walk = [&](std::span<double> values, std::span<const double> grad) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + eps;
            const double up = objective(net, head, data, idx, cfg);
            values[i] = saved - eps;
            const double dn = objective(net, head, data, idx, cfg);
            values[i] = saved;
            const double fd = (up - dn) / (2.0 * eps);
            const double diff = std::abs(fd - grad[i]);
            CHECK((diff <= 1e-8 ||
                   diff / std::max(std::abs(fd), std::abs(grad[i])) < 1e-5));
        }
    };
    auto pa = hidden_arrays(net);
    auto ga = hidden_arrays(g);
    for (std::size_t a = 0; a < pa.size(); ++a) walk(pa[a], ga[a]);
    auto ha = head_arrays(head);
    auto hg = head_arrays(g);
    for (std::size_t a = 0; a < ha.size(); ++a) walk(ha[a], hg[a]);
}

TEST_CASE("evaluate: degenerate predictors and recount oracle") {
    Dataset data = tiny_dataset(10, 4, 23);
    for (std::size_t i = 0; i < 10; ++i) data.labels[i] = i < 5 ? 0 : 1;

    // Zero head predicts (0.5, 0.5) everywhere; ties break to class 0.
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 0, 0.5, 24);
    OutputHead head = init_head(2, 4);
    CHECK(evaluate(net, head, data) == doctest::Approx(0.5));

    Rng rng(25);
    randomize_all(net, head, rng);
    const double acc = evaluate(net, head, data);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Vector probs = predict_probabilities(net, head, data.row(i));
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c)
            if (probs[c] > probs[best]) best = c;
        if (best == data.labels[i]) ++correct;
    }
    CHECK(acc == doctest::Approx(correct / 10.0));
}

TEST_CASE("training: epochs=0 returns parameters unchanged") {
    const Dataset data = tiny_dataset(8, 4, 29);
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 2, 0.5, 30);
    OutputHead head = init_head(2, 4);
    TrainConfig cfg;
    cfg.epochs = 0;
    const NetworkParams before = net;
    TrainResult r = train_coordinate_descent(net, head, data, cfg);
    CHECK(r.history.empty());
    for (std::size_t s = 0; s < before.K.size(); ++s) {
        CHECK(testutil::max_abs_diff(r.params.K[s], before.K[s]) == 0.0);
    }
}

TEST_CASE("training: two runs with the same seed produce identical histories") {
    const Dataset data = tiny_dataset(32, 4, 31);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.inner_head_iters = 4;
    cfg.seed = 7;

    auto run = [&]() {
        NetworkParams net = init_network(Architecture{Variant::H2, 4}, 3, 0.4, 40);
        OutputHead head = init_head(2, 4);
        return train_coordinate_descent(net, head, data, cfg);
    };
    const TrainResult a = run();
    const TrainResult b = run();
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].loss == b.history[i].loss);
        CHECK(a.history[i].train_acc == b.history[i].train_acc);
    }
    for (std::size_t s = 0; s < a.params.K.size(); ++s) {
        CHECK(testutil::max_abs_diff(a.params.K[s], b.params.K[s]) == 0.0);
    }
}

TEST_CASE("training: non-finite loss aborts with the iteration index") {
    Dataset data = tiny_dataset(8, 4, 33);
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 1, 1e120, 34);
    for (double& v : net.K[0].data) v = 1e200;
    OutputHead head = init_head(2, 4);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    CHECK_THROWS_AS(train_coordinate_descent(net, head, data, cfg), NumericError);
}

TEST_CASE("large alpha forces near-constant weights across layers") {
    const Dataset data = tiny_dataset(64, 4, 35);
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 4, 0.4, 36);
    OutputHead head = init_head(2, 4);
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.batch_size = 16;
    cfg.alpha = 1e3;
    cfg.lr = 0.05;
    cfg.lr_decay_gamma = 0.96;
    cfg.seed = 1;
    TrainResult r = train_coordinate_descent(net, head, data, cfg);
    for (std::size_t s = 1; s < r.params.K.size(); ++s) {
        CHECK(frobenius_norm(sub(r.params.K[s], r.params.K[s - 1])) < 1e-2);
    }
}

TEST_CASE("history CSV export") {
    std::vector<HistoryRow> history{{0, 0, 0.7, 0.5}, {0, 1, 0.6, 0.75}};
    const std::string path = "/tmp/hamnet_test_history.csv";
    save_history_csv(history, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,iter,loss,train_acc");
    std::getline(in, line);
    CHECK(line.rfind("0,0,", 0) == 0);
}

TEST_CASE("monotone burn-in on double moons: epoch-5 loss below epoch-0 loss") {
    const Dataset train =
        augment_features(gen_double_moons(1000, kDoubleMoonsNoise, 51), 4);
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 2, 0.5, 52);
    OutputHead head = init_head(2, 4);
    TrainConfig cfg;
    cfg.epochs = 7;
    cfg.batch_size = 125;
    cfg.seed = 53;
    const TrainResult r = train_coordinate_descent(net, head, train, cfg);
    auto epoch_mean = [&](std::size_t epoch) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& row : r.history) {
            if (row.epoch == epoch) {
                sum += row.loss;
                ++count;
            }
        }
        return sum / static_cast<double>(count);
    };
    CHECK(epoch_mean(5) < epoch_mean(0));
}

TEST_CASE("perfect head on linearly separated data scores 1.0") {
    Dataset d;
    d.classes = 2;
    d.features = Matrix(10, 4);
    d.labels.resize(10);
    for (std::size_t i = 0; i < 10; ++i) {
        d.features(i, 0) = (i < 5) ? -2.0 - 0.1 * i : 2.0 + 0.1 * i;
        d.labels[i] = i < 5 ? 0 : 1;
    }
    NetworkParams net = init_network(Architecture{Variant::H1, 4}, 0, 0.5, 54);
    OutputHead head = init_head(2, 4);
    head.W(0, 0) = -5.0;  // probs[0] = logistic(-5 x0): high for class 0 side
    CHECK(evaluate(net, head, d) == 1.0);
}
