#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "hamnet/data.hpp"
#include "hamnet/diagnostics.hpp"
#include "hamnet/experiment.hpp"
#include "hamnet/model_io.hpp"
#include "hamnet/rng.hpp"

namespace {

using namespace hamnet;

int cmd_gen(const std::string& spec_path, const std::string& mode, std::uint64_t seed,
            bool seed_set, const std::string& out_path) {
    ExperimentSpec spec;
    if (!spec_path.empty()) spec = parse_spec_file(spec_path);
    if (!mode.empty()) spec.dataset = mode;
    if (seed_set) spec.train.seed = seed;
    const Dataset d =
        generate_named_dataset(spec.dataset, spec.samples, spec.noise, spec.train.seed);
    save_dataset_csv(d, out_path);
    std::cout << "wrote " << d.size() << " samples (" << spec.dataset << ", seed "
              << spec.train.seed << ") to " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& spec_path, std::uint64_t seed, bool seed_set,
              const std::string& out_override) {
    ExperimentSpec spec = parse_spec_file(spec_path);
    if (seed_set) spec.train.seed = seed;
    if (!out_override.empty()) spec.model_out = out_override;
    if (spec.model_out.empty()) spec.model_out = "model.bin";
    if (spec.history_out.empty()) spec.history_out = "history.csv";

    const ExperimentResult result = run_experiment(spec);
    if (result.is_conv) {
        save_mnist_model(*result.net, spec.model_out);
    } else {
        save_model(result.params, result.head, spec.model_out);
    }
    save_history_csv(result.history, spec.history_out);
    if (!spec.gradnorms_out.empty()) save_gradnorm_csv(result.gradnorms, spec.gradnorms_out);

    std::printf("train_acc %.4f\n", result.train_accuracy);
    std::printf("test_acc %.4f\n", result.test_accuracy);
    std::cout << "model " << spec.model_out << "\nhistory " << spec.history_out << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& out_path) {
    const std::string pred_path = out_path.empty() ? "pred.csv" : out_path;
    std::ofstream pred(pred_path, std::ios::trunc);
    if (!pred) throw IoError(pred_path + ": cannot open for writing");

    double accuracy = 0.0;
    if (is_conv_model(model_path)) {
        const MnistNet net = load_mnist_model(model_path);
        const Dataset data = load_mnist_idx(data_path + "/t10k-images-idx3-ubyte",
                                            data_path + "/t10k-labels-idx1-ubyte");
        pred << "index,label,pred";
        for (std::size_t c = 0; c < 10; ++c) pred << ",p" << c;
        pred << "\n";
        std::size_t correct = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const Vector probs = mnist_predict(
                net, std::span<const double>(&data.features.data[i * 784], 784));
            std::size_t best = 0;
            for (std::size_t c = 1; c < probs.size(); ++c)
                if (probs[c] > probs[best]) best = c;
            if (best == data.labels[i]) ++correct;
            pred << i << "," << data.labels[i] << "," << best;
            char buf[32];
            for (std::size_t c = 0; c < probs.size(); ++c) {
                std::snprintf(buf, sizeof(buf), ",%.17g", probs[c]);
                pred << buf;
            }
            pred << "\n";
        }
        accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    } else {
        auto [params, head] = load_model(model_path);
        Dataset data = load_dataset_csv(data_path);
        if (data.dim() < params.arch.n) data = augment_features(data, params.arch.n);
        if (data.dim() != params.arch.n) {
            throw DimensionError("eval: data dimension " + std::to_string(data.dim()) +
                                 " does not match model n=" + std::to_string(params.arch.n));
        }
        pred << "index,label,pred";
        for (std::size_t c = 0; c < head.classes; ++c) pred << ",p" << c;
        pred << "\n";
        std::size_t correct = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const Vector probs = predict_probabilities(params, head, data.row(i));
            std::size_t best = 0;
            for (std::size_t c = 1; c < probs.size(); ++c)
                if (probs[c] > probs[best]) best = c;
            if (best == data.labels[i]) ++correct;
            pred << i << "," << data.labels[i] << "," << best;
            char buf[32];
            for (std::size_t c = 0; c < probs.size(); ++c) {
                std::snprintf(buf, sizeof(buf), ",%.17g", probs[c]);
                pred << buf;
            }
            pred << "\n";
        }
        accuracy = data.size() ? static_cast<double>(correct) / static_cast<double>(data.size())
                               : 0.0;
    }
    std::printf("accuracy %.4f\n", accuracy);
    std::cout << "predictions " << pred_path << "\n";
    return 0;
}

int cmd_diagnose(const std::string& model_path, const std::string& mode,
                 const std::string& out_path, std::uint64_t seed) {
    if (is_conv_model(model_path)) {
        throw std::invalid_argument("diagnose: convolutional digit models are not supported; "
                                    "diagnostics run on dense models");
    }
    auto [params, head] = load_model(model_path);
    (void)head;
    Rng rng(seed);
    Vector probe(params.arch.n);
    for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = rng.normal();

    if (mode == "gradnorms") {
        GradNormTrace trace;
        std::vector<std::size_t> subset(params.layers);
        for (std::size_t j = 0; j < params.layers; ++j) subset[j] = j;
        for (const auto& [layer, norm] : backward_sensitivity_norms(params, probe, subset)) {
            trace.push_back({0, layer, norm});
        }
        save_gradnorm_csv(trace, out_path);
    } else if (mode == "spectrum") {
        if (params.arch.variant != Variant::H1 && params.arch.variant != Variant::H2) {
            throw std::invalid_argument("diagnose spectrum: needs an H1/H2 model");
        }
        std::vector<SpectrumRow> rows;
        for (std::size_t s = 0; s < params.stored_slots(); ++s) {
            const StabilityReport rep =
                check_marginal_stability_spectrum(params.K[s], params.b[s], probe, params.J);
            rows.push_back({"layer" + std::to_string(s), rep.max_re_lambda, rep.skew_residual});
            if (!rep.pass) {
                std::cerr << "layer " << s << ": marginal-stability check FAILED\n";
            }
        }
        save_spectrum_csv(rows, out_path);
    } else if (mode == "lemma1") {
        if (params.arch.variant != Variant::H1 && params.arch.variant != Variant::H2) {
            throw std::invalid_argument("diagnose lemma1: needs an H1/H2 model");
        }
        // Trained weights can carry large field Jacobians; start the h-halving
        // study fine enough to sit in the first-order regime.
        const double T = std::max(1.0, params.step * static_cast<double>(params.layers));
        const std::size_t counts[] = {1024, 2048, 4096};
        const auto rows = backward_ode_richardson(params.K[0], params.b[0], params.J, probe, T,
                                                  counts, 4096);
        save_richardson_csv(rows, out_path);
    } else {
        throw std::invalid_argument("diagnose: unknown mode '" + mode +
                                    "' (gradnorms|spectrum|lemma1)");
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_grid(const std::string& spec_path, const std::string& out_path, std::uint64_t seed,
             bool seed_set) {
    ExperimentSpec spec = parse_spec_file(spec_path);
    if (seed_set) spec.train.seed = seed;
    const auto rows = run_grid(spec);
    save_grid_csv(rows, out_path);
    bool any_failed = false;
    for (const auto& r : rows) {
        if (r.failed) {
            any_failed = true;
            std::cerr << variant_name(r.arch) << " N=" << r.layers << " failed: " << r.error
                      << "\n";
        } else {
            std::printf("%s N=%zu test_acc %.4f\n", variant_name(r.arch), r.layers,
                        r.test_accuracy);
        }
    }
    std::cout << "wrote " << out_path << "\n";
    return any_failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hamiltonian deep network trainer and diagnostics"};
    app.require_subcommand(1);

    std::string spec_path, model_path, data_path, out_path, mode;
    std::uint64_t seed = 0;

    auto* gen = app.add_subcommand("gen", "generate a benchmark dataset as CSV");
    gen->add_option("--spec", spec_path, "experiment spec file");
    gen->add_option("--mode", mode, "dataset name (double_moons|swiss_roll)");
    auto* gen_seed = gen->add_option("--seed", seed, "RNG seed");
    gen->add_option("--out", out_path, "output CSV path")->required();

    auto* train = app.add_subcommand("train", "train a model from a spec file");
    train->add_option("--spec", spec_path, "experiment spec file")->required();
    auto* train_seed = train->add_option("--seed", seed, "RNG seed override");
    train->add_option("--out", out_path, "model output path override");

    auto* eval = app.add_subcommand("eval", "evaluate a model on a dataset");
    eval->add_option("--model", model_path, "model file")->required();
    eval->add_option("--data", data_path, "CSV dataset (or MNIST dir for conv models)")
        ->required();
    eval->add_option("--out", out_path, "per-sample prediction CSV (default pred.csv)");

    auto* diag = app.add_subcommand("diagnose", "export diagnostics for a trained model");
    diag->add_option("--model", model_path, "model file")->required();
    diag->add_option("--mode", mode, "gradnorms|spectrum|lemma1")->required();
    diag->add_option("--out", out_path, "output CSV path")->required();
    diag->add_option("--seed", seed, "probe seed");

    auto* grid = app.add_subcommand("grid", "run an (arch x layers) accuracy grid");
    grid->add_option("--spec", spec_path, "experiment spec file")->required();
    auto* grid_seed = grid->add_option("--seed", seed, "RNG seed override");
    grid->add_option("--out", out_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(spec_path, mode, seed, gen_seed->count() > 0, out_path);
        if (train->parsed())
            return cmd_train(spec_path, seed, train_seed->count() > 0, out_path);
        if (eval->parsed()) return cmd_eval(model_path, data_path, out_path);
        if (diag->parsed()) return cmd_diagnose(model_path, mode, out_path, seed);
        if (grid->parsed()) return cmd_grid(spec_path, out_path, seed, grid_seed->count() > 0);
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
