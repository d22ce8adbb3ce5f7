#include "hamnet/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hamnet/model_io.hpp"

namespace hamnet {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& v, const std::string& key, int line) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw SpecParseError("line " + std::to_string(line) + ": bad numeric value for " + key +
                                 ": '" + v + "'",
                             line);
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key, int line) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return u;
    } catch (const std::exception&) {
        throw SpecParseError("line " + std::to_string(line) + ": bad integer value for " + key +
                                 ": '" + v + "'",
                             line);
    }
}

bool parse_bool(const std::string& v, const std::string& key, int line) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw SpecParseError("line " + std::to_string(line) + ": bad boolean for " + key + ": '" + v +
                             "'",
                         line);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

}  // namespace

ExperimentSpec parse_spec_text(const std::string& text, const std::string& origin) {
    ExperimentSpec spec;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw SpecParseError(origin + ": line " + std::to_string(lineno) +
                                     ": expected key=value, got '" + line + "'",
                                 lineno);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw SpecParseError(origin + ": line " + std::to_string(lineno) +
                                     ": empty key or value",
                                 lineno);
        }

        try {
            if (key == "dataset") {
                if (value != "double_moons" && value != "swiss_roll" && value != "mnist" &&
                    value != "csv") {
                    throw SpecParseError("line " + std::to_string(lineno) + ": unknown dataset '" +
                                             value + "'",
                                         lineno);
                }
                spec.dataset = value;
            } else if (key == "data") {
                spec.data_path = value;
                if (spec.dataset != "mnist") spec.dataset = "csv";
            } else if (key == "test_data") {
                spec.test_data_path = value;
            } else if (key == "mnist_dir") {
                spec.mnist_dir = value;
            } else if (key == "mnist_subset") {
                spec.mnist_subset = parse_u64(value, key, lineno);
            } else if (key == "arch") {
                spec.arch = variant_from_name(value);
            } else if (key == "layers") {
                spec.layers = parse_u64(value, key, lineno);
            } else if (key == "h") {
                spec.h = parse_double(value, key, lineno);
            } else if (key == "h_ms1") {
                spec.h_ms1 = parse_double(value, key, lineno);
            } else if (key == "n") {
                spec.n = parse_u64(value, key, lineno);
            } else if (key == "samples") {
                spec.samples = parse_u64(value, key, lineno);
            } else if (key == "noise") {
                spec.noise = parse_double(value, key, lineno);
            } else if (key == "time_invariant") {
                spec.time_invariant = parse_bool(value, key, lineno);
            } else if (key == "lr") {
                spec.train.lr = parse_double(value, key, lineno);
            } else if (key == "lr_decay") {
                spec.train.lr_decay_gamma = parse_double(value, key, lineno);
            } else if (key == "epochs") {
                spec.train.epochs = parse_u64(value, key, lineno);
            } else if (key == "batch") {
                spec.train.batch_size = parse_u64(value, key, lineno);
            } else if (key == "alpha") {
                spec.train.alpha = parse_double(value, key, lineno);
            } else if (key == "alpha_c") {
                spec.train.alpha_c = parse_double(value, key, lineno);
            } else if (key == "beta1") {
                spec.train.beta1 = parse_double(value, key, lineno);
            } else if (key == "beta2") {
                spec.train.beta2 = parse_double(value, key, lineno);
            } else if (key == "adam_eps") {
                spec.train.adam_eps = parse_double(value, key, lineno);
            } else if (key == "inner_head_iters") {
                spec.train.inner_head_iters = parse_u64(value, key, lineno);
            } else if (key == "seed") {
                spec.train.seed = parse_u64(value, key, lineno);
            } else if (key == "model_out") {
                spec.model_out = value;
            } else if (key == "history_out") {
                spec.history_out = value;
            } else if (key == "gradnorms_out") {
                spec.gradnorms_out = value;
            } else if (key == "gradnorm_stride") {
                spec.gradnorm_stride = parse_u64(value, key, lineno);
            } else if (key == "archs") {
                for (const auto& name : split_list(value))
                    spec.grid_archs.push_back(variant_from_name(name));
            } else if (key == "layers_list") {
                for (const auto& tok : split_list(value))
                    spec.grid_layers.push_back(parse_u64(tok, key, lineno));
            } else {
                throw SpecParseError(origin + ": line " + std::to_string(lineno) +
                                         ": unknown key '" + key + "'",
                                     lineno);
            }
        } catch (const std::invalid_argument& e) {
            throw SpecParseError(origin + ": line " + std::to_string(lineno) + ": " + e.what(),
                                 lineno);
        }
    }
    if (!(spec.h > 0.0)) {
        throw SpecParseError(origin + ": h must be positive", 0);
    }
    return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str(), path);
}

Dataset generate_named_dataset(const std::string& name, std::size_t samples, double noise,
                               std::uint64_t seed) {
    if (name == "double_moons") {
        return gen_double_moons(samples, noise < 0.0 ? kDoubleMoonsNoise : noise, seed);
    }
    if (name == "swiss_roll") {
        return gen_swiss_roll(samples, noise < 0.0 ? kSwissRollNoise : noise, seed);
    }
    throw std::invalid_argument("unknown generator dataset: " + name);
}

namespace {

Dataset mnist_train_set(const ExperimentSpec& spec) {
    const std::string dir = spec.mnist_dir.empty() ? "data/mnist" : spec.mnist_dir;
    Dataset d = load_mnist_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
    if (spec.mnist_subset > 0 && spec.mnist_subset < d.size()) {
        Dataset sub;
        sub.name = d.name + "-subset";
        sub.classes = d.classes;
        sub.features = Matrix(spec.mnist_subset, d.dim());
        sub.labels.assign(d.labels.begin(),
                          d.labels.begin() + static_cast<std::ptrdiff_t>(spec.mnist_subset));
        std::copy(d.features.data.begin(),
                  d.features.data.begin() +
                      static_cast<std::ptrdiff_t>(spec.mnist_subset * d.dim()),
                  sub.features.data.begin());
        return sub;
    }
    return d;
}

Dataset mnist_test_set(const ExperimentSpec& spec) {
    const std::string dir = spec.mnist_dir.empty() ? "data/mnist" : spec.mnist_dir;
    return load_mnist_idx(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");
}

}  // namespace

std::pair<Dataset, Dataset> make_datasets(const ExperimentSpec& spec) {
    if (spec.dataset == "mnist") {
        return {mnist_train_set(spec), mnist_test_set(spec)};
    }
    if (spec.dataset == "csv") {
        Dataset train = load_dataset_csv(spec.data_path);
        Dataset test = spec.test_data_path.empty() ? train : load_dataset_csv(spec.test_data_path);
        return {std::move(train), std::move(test)};
    }
    Dataset train = generate_named_dataset(spec.dataset, spec.samples, spec.noise, spec.train.seed);
    Dataset test = generate_named_dataset(spec.dataset, spec.samples, spec.noise,
                                          spec.train.seed + kTestSeedOffset);
    return {augment_features(train, spec.n), augment_features(test, spec.n)};
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    ExperimentResult result;
    if (spec.dataset == "mnist") {
        auto [train, test] = make_datasets(spec);
        const ConvVariant cv = spec.arch == Variant::MS1 ? ConvVariant::MS1 : ConvVariant::H2;
        if (spec.arch != Variant::H2 && spec.arch != Variant::MS1) {
            throw std::invalid_argument(
                "mnist experiments support only H2 and MS1 architectures");
        }
        const double h = (cv == ConvVariant::MS1 && spec.h_ms1 > 0.0) ? spec.h_ms1 : spec.h;
        MnistNet net = init_mnist_net(cv, spec.layers, h, spec.train.seed);
        MnistTrainResult tr = train_mnist(std::move(net), train, spec.train);
        result.is_conv = true;
        result.history = std::move(tr.history);
        result.train_accuracy = evaluate_mnist(tr.net, train);
        result.test_accuracy = evaluate_mnist(tr.net, test);
        result.net = std::move(tr.net);
        return result;
    }

    auto [train, test] = make_datasets(spec);
    if (train.dim() != spec.n) {
        // CSV data may already carry the augmented dimension.
        if (train.dim() > spec.n) {
            throw DimensionError("experiment: dataset dimension " + std::to_string(train.dim()) +
                                 " exceeds configured n=" + std::to_string(spec.n));
        }
        train = augment_features(train, spec.n);
        test = augment_features(test, spec.n);
    }

    const Architecture arch{spec.arch, spec.n};
    NetworkParams params =
        init_network(arch, spec.layers, spec.h, spec.train.seed, spec.time_invariant);
    OutputHead head = init_head(train.classes, spec.n);

    IterationCallback hook;
    if (!spec.gradnorms_out.empty()) {
        hook = make_gradnorm_hook(result.gradnorms,
                                  gradnorm_layer_subset(spec.layers, spec.gradnorm_stride));
    }
    TrainResult tr = train_coordinate_descent(std::move(params), std::move(head), train,
                                              spec.train, hook);
    result.train_accuracy = evaluate(tr.params, tr.head, train);
    result.test_accuracy = evaluate(tr.params, tr.head, test);
    result.history = std::move(tr.history);
    result.params = std::move(tr.params);
    result.head = std::move(tr.head);
    return result;
}

std::vector<GridRow> run_grid(const ExperimentSpec& spec) {
    std::vector<Variant> archs = spec.grid_archs;
    if (archs.empty()) archs.push_back(spec.arch);
    std::vector<std::size_t> layer_counts = spec.grid_layers;
    if (layer_counts.empty()) layer_counts.push_back(spec.layers);

    std::vector<GridRow> rows;
    for (Variant arch : archs) {
        for (std::size_t layers : layer_counts) {
            GridRow row;
            row.arch = arch;
            row.layers = layers;
            ExperimentSpec cell = spec;
            cell.arch = arch;
            cell.layers = layers;
            cell.grid_archs.clear();
            cell.grid_layers.clear();
            try {
                if (spec.dataset == "mnist") {
                    const std::size_t ch = arch == Variant::MS1 ? 4 : 8;
                    row.params_per_layer = ch * ch * 9 + 8;
                } else {
                    row.params_per_layer = params_per_layer(Architecture{arch, cell.n});
                }
                const ExperimentResult r = run_experiment(cell);
                row.test_accuracy = r.test_accuracy;
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void save_grid_csv(const std::vector<GridRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "arch,layers,test_acc,params_per_layer\n";
    char buf[160];
    for (const auto& r : rows) {
        if (r.failed) {
            out << variant_name(r.arch) << "," << r.layers << ",ERROR," << r.params_per_layer
                << "\n";
        } else {
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.6f,%zu\n", variant_name(r.arch), r.layers,
                          r.test_accuracy, r.params_per_layer);
            out << buf;
        }
    }
    if (!out) throw IoError(path + ": write failed");
}

}  // namespace hamnet
