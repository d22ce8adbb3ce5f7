#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hamnet/conv.hpp"
#include "hamnet/diagnostics.hpp"
#include "hamnet/training.hpp"

namespace hamnet {

struct SpecParseError : std::runtime_error {
    int line;
    SpecParseError(const std::string& msg, int line_no)
        : std::runtime_error(msg), line(line_no) {}
};

// Flat experiment description, parsed from a plain key=value file
// (one key per line, '#' comments). Every experiment is a flat
// hyperparameter set.
struct ExperimentSpec {
    std::string dataset = "double_moons";  // double_moons | swiss_roll | mnist | csv
    std::string data_path;       // train CSV when dataset=csv
    std::string test_data_path;  // optional test CSV
    std::string mnist_dir;       // directory with the four IDX files
    std::size_t mnist_subset = 0;  // 0 = full training set

    Variant arch = Variant::H1;
    std::size_t layers = 1;
    double h = 0.5;
    double h_ms1 = 0.0;  // optional per-arch override used by MNIST grids
    std::size_t n = 4;   // post-augmentation state dimension
    std::size_t samples = 5000;
    double noise = -1.0;  // negative = dataset default
    bool time_invariant = false;

    TrainConfig train;

    std::vector<Variant> grid_archs;
    std::vector<std::size_t> grid_layers;

    std::string model_out;
    std::string history_out;
    std::string gradnorms_out;
    std::size_t gradnorm_stride = 10;
};

ExperimentSpec parse_spec_text(const std::string& text, const std::string& origin);
ExperimentSpec parse_spec_file(const std::string& path);

// Train/test pair for the configured dataset: generated sets use the given
// seed for training and a fixed mixed offset for the independent test set.
std::pair<Dataset, Dataset> make_datasets(const ExperimentSpec& spec);

Dataset generate_named_dataset(const std::string& name, std::size_t samples, double noise,
                               std::uint64_t seed);

struct ExperimentResult {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<HistoryRow> history;
    GradNormTrace gradnorms;
    bool is_conv = false;
    NetworkParams params;  // dense path
    OutputHead head;
    std::optional<MnistNet> net;  // conv path
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

struct GridRow {
    Variant arch;
    std::size_t layers = 0;
    double test_accuracy = 0.0;
    std::size_t params_per_layer = 0;
    bool failed = false;
    std::string error;
};

std::vector<GridRow> run_grid(const ExperimentSpec& spec);
void save_grid_csv(const std::vector<GridRow>& rows, const std::string& path);

constexpr std::uint64_t kTestSeedOffset = 0x9e3779b97f4a7c15ULL;

}  // namespace hamnet
