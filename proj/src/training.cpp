#include "hamnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <thread>

#include "hamnet/rng.hpp"

namespace hamnet {

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("TrainConfig: beta1/beta2 must lie in [0, 1)");
    }
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (alpha < 0.0 || alpha_c < 0.0) {
        throw std::invalid_argument("TrainConfig: alpha and alpha_c must be non-negative");
    }
}

AdamState AdamState::like(const std::vector<std::span<const double>>& arrays) {
    AdamState s;
    s.m.reserve(arrays.size());
    s.v.reserve(arrays.size());
    for (const auto& a : arrays) {
        s.m.emplace_back(a.size(), 0.0);
        s.v.emplace_back(a.size(), 0.0);
    }
    return s;
}

AdamState AdamState::like(const std::vector<std::span<double>>& arrays) {
    std::vector<std::span<const double>> view(arrays.begin(), arrays.end());
    return like(view);
}

void adam_step_arrays(const std::vector<std::span<double>>& params,
                      const std::vector<std::span<const double>>& grads, AdamState& state,
                      double lr, const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw DimensionError("adam_step: array count mismatch");
    }
    state.step += 1;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t a = 0; a < params.size(); ++a) {
        if (params[a].size() != grads[a].size() || params[a].size() != state.m[a].size()) {
            throw DimensionError("adam_step: array " + std::to_string(a) + " shape mismatch");
        }
        double* m = state.m[a].data();
        double* v = state.v[a].data();
        double* p = params[a].data();
        const double* g = grads[a].data();
        for (std::size_t i = 0; i < params[a].size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bias1;
            const double vhat = v[i] / bias2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            if (!std::isfinite(v[i]) || !std::isfinite(p[i])) {
                throw NumericError("adam_step: non-finite update at array " + std::to_string(a) +
                                   " index " + std::to_string(i));
            }
        }
    }
}

void adam_step(NetworkParams& params, const ParamGrads& grads, AdamState& state, double lr,
               const TrainConfig& cfg) {
    adam_step_arrays(hidden_arrays(params), hidden_arrays(grads), state, lr, cfg);
}

void adam_step(OutputHead& head, const ParamGrads& grads, AdamState& state, double lr,
               const TrainConfig& cfg) {
    adam_step_arrays(head_arrays(head), head_arrays(grads), state, lr, cfg);
}

double cross_entropy(const Vector& probs, std::size_t label) {
    if (label >= probs.size()) {
        throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(probs.size()) +
                                    " classes");
    }
    return -std::log(std::max(probs[label], 1e-12));
}

std::size_t worker_threads() {
    if (const char* env = std::getenv("HAMNET_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void parallel_chunks(std::size_t count, std::size_t nthreads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    nthreads = std::max<std::size_t>(1, std::min(nthreads, count));
    if (nthreads <= 1 || count == 0) {
        if (count > 0) fn(0, 0, count);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(nthreads);
    workers.reserve(nthreads);
    const std::size_t base = count / nthreads;
    const std::size_t extra = count % nthreads;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < nthreads; ++c) {
        const std::size_t len = base + (c < extra ? 1 : 0);
        const std::size_t end = begin + len;
        workers.emplace_back([c, begin, end, &fn, &errors] {
            try {
                fn(c, begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

namespace {

double head_decay_value(const OutputHead& head, double alpha_c) {
    if (alpha_c == 0.0) return 0.0;
    double acc = 0.0;
    for (double w : head.W.data) acc += w * w;
    for (std::size_t i = 0; i < head.mu.size(); ++i) acc += head.mu[i] * head.mu[i];
    return alpha_c * acc;
}

std::size_t argmax_low_tie(const Vector& probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return best;
}

struct BatchEval {
    double mean_loss = 0.0;  // cross-entropy only
    double accuracy = 0.0;
};

// Forward pass over the batch; caches are stored per batch position when wanted.
BatchEval forward_batch(const NetworkParams& params, const OutputHead& head, const Dataset& data,
                        std::span<const std::size_t> batch, std::vector<ForwardCache>* caches,
                        std::vector<Vector>* outputs) {
    const std::size_t count = batch.size();
    if (caches) caches->resize(count);
    if (outputs) outputs->resize(count);
    std::vector<double> losses(count);
    std::vector<unsigned char> correct(count);
    parallel_chunks(count, worker_threads(), [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto [y_out, cache] = forward_network(data.row(batch[i]), params);
            const Vector probs = output_head(y_out, head);
            losses[i] = cross_entropy(probs, data.labels[batch[i]]);
            correct[i] = argmax_low_tie(probs) == data.labels[batch[i]] ? 1 : 0;
            if (outputs) (*outputs)[i] = y_out;
            if (caches) (*caches)[i] = std::move(cache);
        }
    });
    BatchEval ev;
    for (std::size_t i = 0; i < count; ++i) {
        ev.mean_loss += losses[i];
        ev.accuracy += correct[i];
    }
    if (count > 0) {
        ev.mean_loss /= static_cast<double>(count);
        ev.accuracy /= static_cast<double>(count);
    }
    return ev;
}

// Mean head gradient over cached network outputs, plus weight decay.
ParamGrads head_gradients_from_outputs(const OutputHead& head, const std::vector<Vector>& outputs,
                                       const Dataset& data, std::span<const std::size_t> batch,
                                       double alpha_c, const NetworkParams& params) {
    ParamGrads g = zero_grads_like(params, head);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vector probs = output_head(outputs[i], head);
        const std::size_t label = data.labels[batch[i]];
        for (std::size_t r = 0; r < head.logit_rows(); ++r) {
            double err;
            if (head.classes == 2) {
                err = probs[0] - (label == 0 ? 1.0 : 0.0);
            } else {
                err = probs[r] - (r == label ? 1.0 : 0.0);
            }
            g.mu[r] += inv * err;
            double* row = &g.W.data[r * g.W.cols];
            const Vector& y = outputs[i];
            for (std::size_t c = 0; c < g.W.cols; ++c) row[c] += inv * err * y[c];
        }
    }
    for (std::size_t i = 0; i < g.W.data.size(); ++i) g.W.data[i] += 2.0 * alpha_c * head.W.data[i];
    for (std::size_t i = 0; i < g.mu.size(); ++i) g.mu[i] += 2.0 * alpha_c * head.mu[i];
    return g;
}

// Mean hidden-layer gradient over cached forward passes (head frozen), with the
// drift regularizer folded in. Reduction order is fixed chunk-by-chunk.
ParamGrads hidden_gradients_from_caches(const NetworkParams& params, const OutputHead& head,
                                        const std::vector<ForwardCache>& caches,
                                        const Dataset& data, std::span<const std::size_t> batch,
                                        double alpha) {
    const std::size_t count = batch.size();
    const std::size_t nthreads = std::max<std::size_t>(1, std::min(worker_threads(), count));
    std::vector<ParamGrads> partial;
    partial.reserve(nthreads);
    for (std::size_t c = 0; c < nthreads; ++c) partial.push_back(zero_grads_like(params, head));

    parallel_chunks(count, nthreads, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto [g, loss] = backward(caches[i], params, head, data.labels[batch[i]]);
            (void)loss;
            accumulate(partial[chunk], g);
        }
    });

    ParamGrads total = std::move(partial[0]);
    for (std::size_t c = 1; c < partial.size(); ++c) accumulate(total, partial[c]);
    scale_grads(total, 1.0 / static_cast<double>(count));
    accumulate(total, regularizer_grads(params, alpha, params.step));
    return total;
}

}  // namespace

double objective(const NetworkParams& params, const OutputHead& head, const Dataset& data,
                 std::span<const std::size_t> batch, const TrainConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("objective: batch is empty");
    const BatchEval ev = forward_batch(params, head, data, batch, nullptr, nullptr);
    return ev.mean_loss + head_decay_value(head, cfg.alpha_c) +
           regularizer_value(params, cfg.alpha, params.step);
}

ParamGrads objective_gradients(const NetworkParams& params, const OutputHead& head,
                               const Dataset& data, std::span<const std::size_t> batch,
                               const TrainConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("objective_gradients: batch is empty");
    std::vector<ForwardCache> caches;
    forward_batch(params, head, data, batch, &caches, nullptr);

    const std::size_t count = batch.size();
    const std::size_t nthreads = std::max<std::size_t>(1, std::min(worker_threads(), count));
    std::vector<ParamGrads> partial;
    partial.reserve(nthreads);
    for (std::size_t c = 0; c < nthreads; ++c) partial.push_back(zero_grads_like(params, head));
    parallel_chunks(count, nthreads, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto [g, loss] = backward(caches[i], params, head, data.labels[batch[i]]);
            (void)loss;
            accumulate(partial[chunk], g);
        }
    });
    ParamGrads total = std::move(partial[0]);
    for (std::size_t c = 1; c < partial.size(); ++c) accumulate(total, partial[c]);
    scale_grads(total, 1.0 / static_cast<double>(count));
    accumulate(total, regularizer_grads(params, cfg.alpha, params.step));
    for (std::size_t i = 0; i < total.W.data.size(); ++i)
        total.W.data[i] += 2.0 * cfg.alpha_c * head.W.data[i];
    for (std::size_t i = 0; i < total.mu.size(); ++i)
        total.mu[i] += 2.0 * cfg.alpha_c * head.mu[i];
    return total;
}

void save_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "epoch,iter,loss,train_acc\n";
    char buf[96];
    for (const auto& row : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g\n", row.epoch, row.iteration, row.loss,
                      row.train_acc);
        out << buf;
    }
    if (!out) throw IoError(path + ": write failed");
}

TrainResult train_coordinate_descent(NetworkParams params, OutputHead head, const Dataset& data,
                                     const TrainConfig& cfg, const IterationCallback& hook) {
    cfg.validate();
    if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
    if (data.dim() != params.arch.n) {
        throw DimensionError("train: dataset dimension " + std::to_string(data.dim()) +
                             " does not match network n=" + std::to_string(params.arch.n));
    }

    TrainResult result;
    result.history.reserve(cfg.epochs * (data.size() / std::max<std::size_t>(1, cfg.batch_size) + 1));

    AdamState head_state = AdamState::like(head_arrays(head));
    AdamState hidden_state = AdamState::like(hidden_arrays(params));

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    double lr = cfg.lr;
    std::size_t iteration = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> batch(order.data() + start, end - start);

            std::vector<ForwardCache> caches;
            std::vector<Vector> outputs;
            const BatchEval ev = forward_batch(params, head, data, batch, &caches, &outputs);
            const double batch_obj = ev.mean_loss + head_decay_value(head, cfg.alpha_c) +
                                     regularizer_value(params, cfg.alpha, params.step);
            if (!std::isfinite(batch_obj)) {
                throw NumericError("train: non-finite loss at iteration " +
                                   std::to_string(iteration));
            }
            result.history.push_back({epoch, iteration, batch_obj, ev.accuracy});
            if (hook) {
                hook(IterationContext{epoch, iteration, params, head, data, batch, batch_obj,
                                      ev.accuracy});
            }

            // (a) output-layer refresh on frozen hidden weights
            for (std::size_t it = 0; it < cfg.inner_head_iters; ++it) {
                const ParamGrads hg =
                    head_gradients_from_outputs(head, outputs, data, batch, cfg.alpha_c, params);
                adam_step(head, hg, head_state, lr, cfg);
            }

            // (b) one step on the hidden layers with the head fixed
            if (params.layers > 0) {
                const ParamGrads grads =
                    hidden_gradients_from_caches(params, head, caches, data, batch, cfg.alpha);
                adam_step(params, grads, hidden_state, lr, cfg);
            }
            ++iteration;
        }
        if (cfg.lr_decay_gamma < 1.0) lr *= cfg.lr_decay_gamma;
    }

    result.params = std::move(params);
    result.head = std::move(head);
    return result;
}

double evaluate(const NetworkParams& params, const OutputHead& head, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    const BatchEval ev = forward_batch(params, head, data, all, nullptr, nullptr);
    return ev.accuracy;
}

Vector predict_probabilities(const NetworkParams& params, const OutputHead& head,
                             const Vector& sample) {
    const auto [y_out, cache] = forward_network(sample, params);
    return output_head(y_out, head);
}

}  // namespace hamnet
