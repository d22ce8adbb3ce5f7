#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hamnet/backprop.hpp"
#include "hamnet/data.hpp"
#include "hamnet/layers.hpp"

namespace hamnet {

struct TrainConfig {
    double lr = 0.05;
    double lr_decay_gamma = 1.0;  // multiplies lr after each epoch when < 1
    std::size_t epochs = 50;
    std::size_t batch_size = 125;
    double alpha = 5e-3;    // layer-smoothness regularization weight
    double alpha_c = 1e-4;  // output-layer weight decay
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t inner_head_iters = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

// Flat Adam moment buffers, congruent with an ordered list of parameter arrays.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;

    static AdamState like(const std::vector<std::span<const double>>& arrays);
    static AdamState like(const std::vector<std::span<double>>& arrays);
};

// One bias-corrected Adam update over the given arrays.
void adam_step_arrays(const std::vector<std::span<double>>& params,
                      const std::vector<std::span<const double>>& grads, AdamState& state,
                      double lr, const TrainConfig& cfg);

// Convenience forms over the hidden-layer / output-head parameter groups.
void adam_step(NetworkParams& params, const ParamGrads& grads, AdamState& state, double lr,
               const TrainConfig& cfg);
void adam_step(OutputHead& head, const ParamGrads& grads, AdamState& state, double lr,
               const TrainConfig& cfg);

// -log probs[label] with probs clamped to >= 1e-12.
double cross_entropy(const Vector& probs, std::size_t label);

// Mean cross-entropy over the batch plus alpha_c (||W||^2 + ||mu||^2) plus
// alpha (R_K + R_b).
double objective(const NetworkParams& params, const OutputHead& head, const Dataset& data,
                 std::span<const std::size_t> batch, const TrainConfig& cfg);

// Mean loss gradients over the batch including both regularization terms
// (hidden drift penalty and head weight decay).
ParamGrads objective_gradients(const NetworkParams& params, const OutputHead& head,
                               const Dataset& data, std::span<const std::size_t> batch,
                               const TrainConfig& cfg);

struct HistoryRow {
    std::size_t epoch = 0;
    std::size_t iteration = 0;  // global mini-batch counter
    double loss = 0.0;          // batch objective at iteration entry
    double train_acc = 0.0;     // batch accuracy at iteration entry
};

void save_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

// Observed at every mini-batch iteration before any update, so diagnostics see
// exactly the parameters whose gradients drive this step.
struct IterationContext {
    std::size_t epoch;
    std::size_t iteration;
    const NetworkParams& params;
    const OutputHead& head;
    const Dataset& data;
    std::span<const std::size_t> batch;
    double batch_loss;
    double batch_acc;
};
using IterationCallback = std::function<void(const IterationContext&)>;

struct TrainResult {
    NetworkParams params;
    OutputHead head;
    std::vector<HistoryRow> history;
};

// Alternating scheme: per mini-batch, up to inner_head_iters Adam steps on
// (W, mu) with hidden weights frozen, then one Adam step on {K_j, b_j} with the
// head frozen. Mini-batches come from one seeded shuffle per epoch; lr decays
// by lr_decay_gamma per epoch when < 1. Throws NumericError (with the
// iteration index) if the loss goes non-finite.
TrainResult train_coordinate_descent(NetworkParams params, OutputHead head, const Dataset& data,
                                     const TrainConfig& cfg, const IterationCallback& hook = {});

// Fraction of argmax-correct predictions, ties resolved toward the lower index.
double evaluate(const NetworkParams& params, const OutputHead& head, const Dataset& data);

Vector predict_probabilities(const NetworkParams& params, const OutputHead& head,
                             const Vector& sample);

// Worker count for batch-parallel evaluation: HAMNET_THREADS if set, else the
// hardware concurrency. Gradient reduction order is fixed, so runs are
// bit-reproducible for a fixed thread count.
std::size_t worker_threads();

// Runs fn(chunk_index, begin, end) over contiguous chunks of [0, count).
void parallel_chunks(std::size_t count, std::size_t nthreads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace hamnet
