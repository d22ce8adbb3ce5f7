#include "hamnet/conv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hamnet/rng.hpp"

namespace hamnet {

namespace {

constexpr std::size_t kPad = kImageSide + 2;  // 30x30 zero-bordered scratch

// Copies one channel into a zero-bordered 30x30 buffer.
void pad_channel(std::span<const double> field, std::size_t c, double* padded) {
    std::fill(padded, padded + kPad * kPad, 0.0);
    const double* src = field.data() + c * kPixels;
    for (std::size_t y = 0; y < kImageSide; ++y) {
        double* dst = padded + (y + 1) * kPad + 1;
        for (std::size_t x = 0; x < kImageSide; ++x) dst[x] = src[y * kImageSide + x];
    }
}

thread_local std::vector<double> tl_padded;

}  // namespace

void conv3x3_same(const ConvKernel& k, std::span<const double> in, std::span<double> out) {
    tl_padded.resize(k.in_ch * kPad * kPad);
    for (std::size_t i = 0; i < k.in_ch; ++i) pad_channel(in, i, tl_padded.data() + i * kPad * kPad);
    std::fill(out.begin(), out.end(), 0.0);

    for (std::size_t o = 0; o < k.out_ch; ++o) {
        double* dst = out.data() + o * kPixels;
        for (std::size_t i = 0; i < k.in_ch; ++i) {
            const double* p = tl_padded.data() + i * kPad * kPad;
            const double* kw = &k.w[(o * k.in_ch + i) * 9];
            for (std::size_t y = 0; y < kImageSide; ++y) {
                const double* r0 = p + y * kPad;
                const double* r1 = r0 + kPad;
                const double* r2 = r1 + kPad;
                double* drow = dst + y * kImageSide;
                for (std::size_t x = 0; x < kImageSide; ++x) {
                    drow[x] += kw[0] * r0[x] + kw[1] * r0[x + 1] + kw[2] * r0[x + 2] +
                               kw[3] * r1[x] + kw[4] * r1[x + 1] + kw[5] * r1[x + 2] +
                               kw[6] * r2[x] + kw[7] * r2[x + 1] + kw[8] * r2[x + 2];
                }
            }
        }
    }
}

void conv3x3_adjoint(const ConvKernel& k, std::span<const double> in, std::span<double> out) {
    // The adjoint is a same-padding convolution with channels swapped and the
    // 3x3 taps flipped.
    ConvKernel flipped(k.in_ch, k.out_ch);
    for (std::size_t o = 0; o < k.out_ch; ++o)
        for (std::size_t i = 0; i < k.in_ch; ++i)
            for (std::size_t t = 0; t < 9; ++t)
                flipped.w[(i * k.out_ch + o) * 9 + t] = k.w[(o * k.in_ch + i) * 9 + (8 - t)];
    conv3x3_same(flipped, in, out);
}

void conv3x3_kernel_grad(ConvKernel& dk, std::span<const double> out_grad,
                         std::span<const double> in, double coef) {
    tl_padded.resize(dk.in_ch * kPad * kPad);
    for (std::size_t i = 0; i < dk.in_ch; ++i)
        pad_channel(in, i, tl_padded.data() + i * kPad * kPad);

    for (std::size_t o = 0; o < dk.out_ch; ++o) {
        const double* g = out_grad.data() + o * kPixels;
        for (std::size_t i = 0; i < dk.in_ch; ++i) {
            const double* p = tl_padded.data() + i * kPad * kPad;
            double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            for (std::size_t y = 0; y < kImageSide; ++y) {
                const double* r0 = p + y * kPad;
                const double* r1 = r0 + kPad;
                const double* r2 = r1 + kPad;
                const double* grow = g + y * kImageSide;
                for (std::size_t x = 0; x < kImageSide; ++x) {
                    const double gv = grow[x];
                    acc[0] += gv * r0[x];
                    acc[1] += gv * r0[x + 1];
                    acc[2] += gv * r0[x + 2];
                    acc[3] += gv * r1[x];
                    acc[4] += gv * r1[x + 1];
                    acc[5] += gv * r1[x + 2];
                    acc[6] += gv * r2[x];
                    acc[7] += gv * r2[x + 1];
                    acc[8] += gv * r2[x + 2];
                }
            }
            double* kw = &dk.w[(o * dk.in_ch + i) * 9];
            for (std::size_t t = 0; t < 9; ++t) kw[t] += coef * acc[t];
        }
    }
}

void apply_channel_j(const Matrix& j, std::span<const double> in, std::span<double> out) {
    const std::size_t ch = j.rows;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < ch; ++r) {
        double* dst = out.data() + r * kPixels;
        for (std::size_t c = 0; c < ch; ++c) {
            const double jv = j(r, c);
            if (jv == 0.0) continue;
            const double* src = in.data() + c * kPixels;
            for (std::size_t p = 0; p < kPixels; ++p) dst[p] += jv * src[p];
        }
    }
}

MnistNet init_mnist_net(ConvVariant variant, std::size_t layers, double h, std::uint64_t seed) {
    MnistNet net;
    net.variant = variant;
    net.layers = layers;
    net.h = h;
    Rng rng(seed);

    net.expand.kernel = ConvKernel(8, 1);
    for (double& v : net.expand.kernel.w) v = rng.normal(0.0, 1.0 / 3.0);  // fan-in 9

    const std::size_t layer_ch = (variant == ConvVariant::H2) ? 8 : 4;
    const double stddev = 1.0 / std::sqrt(static_cast<double>(layer_ch * 9));
    net.K.reserve(layers);
    net.bias.reserve(layers);
    for (std::size_t j = 0; j < layers; ++j) {
        ConvKernel k(layer_ch, layer_ch);
        for (double& v : k.w) v = rng.normal(0.0, stddev);
        net.K.push_back(std::move(k));
        net.bias.emplace_back(8);
    }

    net.W = Matrix(10, 8 * kPixels);
    net.mu = Vector(10);
    if (variant == ConvVariant::H2) net.channel_j = make_interconnection(Variant::H2, 8);
    return net;
}

namespace {

void add_bias_tanh(const std::vector<double>& pre, const Vector& bias, std::size_t ch_offset,
                   std::size_t channels, std::vector<double>& t, std::vector<double>& d) {
    t.resize(channels * kPixels);
    d.resize(channels * kPixels);
    for (std::size_t c = 0; c < channels; ++c) {
        const double bv = bias[ch_offset + c];
        const double* src = pre.data() + c * kPixels;
        double* tp = t.data() + c * kPixels;
        double* dp = d.data() + c * kPixels;
        for (std::size_t p = 0; p < kPixels; ++p) {
            const double tv = std::tanh(src[p] + bv);
            tp[p] = tv;
            dp[p] = 1.0 - tv * tv;
        }
    }
}

}  // namespace

Vector mnist_forward(const MnistNet& net, std::span<const double> image, MnistCache* cache) {
    if (image.size() != kPixels) {
        throw DimensionError("mnist_forward: image must have 784 pixels, got " +
                             std::to_string(image.size()));
    }
    const std::size_t len = net.state_len();
    std::vector<double> state(len);
    conv3x3_same(net.expand.kernel, image, state);

    if (cache) {
        cache->states.clear();
        cache->layer.clear();
        cache->states.reserve(net.layers + 1);
        cache->layer.reserve(net.layers);
        cache->states.push_back(state);
    }

    std::vector<double> pre(len), field(len), mixed(len);
    for (std::size_t j = 0; j < net.layers; ++j) {
        MnistLayerCache lc;
        if (net.variant == ConvVariant::H2) {
            conv3x3_same(net.K[j], state, pre);
            add_bias_tanh(pre, net.bias[j], 0, 8, lc.t1, lc.d1);
            conv3x3_adjoint(net.K[j], lc.t1, field);
            apply_channel_j(net.channel_j, field, mixed);
            for (std::size_t i = 0; i < len; ++i) state[i] += net.h * mixed[i];
        } else {
            // MS1 over channel halves: y = ch 0..3, z = ch 4..7.
            const std::size_t half = len / 2;
            std::span<const double> y_half(state.data(), half);
            std::span<double> z_half(state.data() + half, half);
            std::vector<double> pre1(half);
            conv3x3_adjoint(net.K[j], y_half, pre1);
            add_bias_tanh(pre1, net.bias[j], 0, 4, lc.t1, lc.d1);
            for (std::size_t i = 0; i < half; ++i) z_half[i] -= net.h * lc.t1[i];
            std::vector<double> pre2(half);
            conv3x3_same(net.K[j], std::span<const double>(state.data() + half, half), pre2);
            add_bias_tanh(pre2, net.bias[j], 4, 4, lc.t2, lc.d2);
            for (std::size_t i = 0; i < half; ++i) state[i] += net.h * lc.t2[i];
        }
        for (double v : state) {
            if (!std::isfinite(v)) {
                throw NumericError("mnist_forward: non-finite state after layer " +
                                   std::to_string(j));
            }
        }
        if (cache) {
            cache->states.push_back(state);
            cache->layer.push_back(std::move(lc));
        }
    }

    // Softmax head over the flattened state.
    Vector logits(10);
    for (std::size_t r = 0; r < 10; ++r) {
        const double* row = &net.W.data[r * len];
        double acc = net.mu[r];
        for (std::size_t i = 0; i < len; ++i) acc += row[i] * state[i];
        logits[r] = acc;
    }
    double m = logits[0];
    for (std::size_t r = 1; r < 10; ++r) m = std::max(m, logits[r]);
    Vector probs(10);
    double sum = 0.0;
    for (std::size_t r = 0; r < 10; ++r) {
        probs[r] = std::exp(logits[r] - m);
        sum += probs[r];
    }
    for (std::size_t r = 0; r < 10; ++r) probs[r] /= sum;
    return probs;
}

MnistGrads mnist_zero_grads(const MnistNet& net) {
    MnistGrads g;
    g.expand = ConvKernel(net.expand.kernel.out_ch, net.expand.kernel.in_ch);
    g.K.reserve(net.K.size());
    g.bias.reserve(net.bias.size());
    for (const auto& k : net.K) g.K.emplace_back(k.out_ch, k.in_ch);
    for (const auto& b : net.bias) g.bias.emplace_back(b.size());
    g.W = Matrix(net.W.rows, net.W.cols);
    g.mu = Vector(net.mu.size());
    return g;
}

std::vector<std::span<double>> mnist_hidden_arrays(MnistNet& net) {
    std::vector<std::span<double>> out;
    out.emplace_back(net.expand.kernel.w);
    for (auto& k : net.K) out.emplace_back(k.w);
    for (auto& b : net.bias) out.emplace_back(b.data);
    return out;
}
std::vector<std::span<double>> mnist_head_arrays(MnistNet& net) {
    return {std::span<double>(net.W.data), std::span<double>(net.mu.data)};
}
std::vector<std::span<double>> mnist_hidden_arrays(MnistGrads& g) {
    std::vector<std::span<double>> out;
    out.emplace_back(g.expand.w);
    for (auto& k : g.K) out.emplace_back(k.w);
    for (auto& b : g.bias) out.emplace_back(b.data);
    return out;
}
std::vector<std::span<double>> mnist_head_arrays(MnistGrads& g) {
    return {std::span<double>(g.W.data), std::span<double>(g.mu.data)};
}

double mnist_backward(const MnistNet& net, const MnistCache& cache,
                      std::span<const double> image, std::size_t label, MnistGrads& grads) {
    const std::size_t len = net.state_len();
    const std::vector<double>& y_out = cache.states.back();

    // Recompute head probabilities from the cached final state.
    Vector probs(10);
    {
        Vector logits(10);
        for (std::size_t r = 0; r < 10; ++r) {
            const double* row = &net.W.data[r * len];
            double acc = net.mu[r];
            for (std::size_t i = 0; i < len; ++i) acc += row[i] * y_out[i];
            logits[r] = acc;
        }
        double m = logits[0];
        for (std::size_t r = 1; r < 10; ++r) m = std::max(m, logits[r]);
        double sum = 0.0;
        for (std::size_t r = 0; r < 10; ++r) {
            probs[r] = std::exp(logits[r] - m);
            sum += probs[r];
        }
        for (std::size_t r = 0; r < 10; ++r) probs[r] /= sum;
    }
    const double loss = cross_entropy(probs, label);

    std::vector<double> g(len, 0.0);
    for (std::size_t r = 0; r < 10; ++r) {
        const double err = probs[r] - (r == label ? 1.0 : 0.0);
        grads.mu[r] += err;
        double* wrow = &grads.W.data[r * len];
        const double* wsrc = &net.W.data[r * len];
        for (std::size_t i = 0; i < len; ++i) {
            wrow[i] += err * y_out[i];
            g[i] += err * wsrc[i];
        }
    }

    std::vector<double> w_field(len), r_field(len), back(len);
    for (std::size_t jj = net.layers; jj-- > 0;) {
        const MnistLayerCache& lc = cache.layer[jj];
        const std::vector<double>& x_in = cache.states[jj];

        if (net.variant == ConvVariant::H2) {
            // w = h J^T g = -h J g (channel op), then the dense H-layer pattern.
            apply_channel_j(net.channel_j, g, w_field);
            for (std::size_t i = 0; i < len; ++i) w_field[i] *= -net.h;
            conv3x3_same(net.K[jj], w_field, r_field);
            for (std::size_t i = 0; i < len; ++i) r_field[i] *= lc.d1[i];

            conv3x3_kernel_grad(grads.K[jj], lc.t1, w_field, 1.0);
            conv3x3_kernel_grad(grads.K[jj], r_field, x_in, 1.0);
            for (std::size_t c = 0; c < 8; ++c) {
                double acc = 0.0;
                const double* rp = r_field.data() + c * kPixels;
                for (std::size_t p = 0; p < kPixels; ++p) acc += rp[p];
                grads.bias[jj][c] += acc;
            }
            conv3x3_adjoint(net.K[jj], r_field, back);
            for (std::size_t i = 0; i < len; ++i) g[i] += back[i];
        } else {
            const std::size_t half = len / 2;
            const std::vector<double>& x_next = cache.states[jj + 1];
            // Substep 2: y' = y + h tanh(K0 z' + b2).
            std::vector<double> r2(half);
            for (std::size_t i = 0; i < half; ++i) r2[i] = net.h * lc.d2[i] * g[i];
            conv3x3_kernel_grad(grads.K[jj], r2,
                                std::span<const double>(x_next.data() + half, half), 1.0);
            for (std::size_t c = 0; c < 4; ++c) {
                double acc = 0.0;
                for (std::size_t p = 0; p < kPixels; ++p) acc += r2[c * kPixels + p];
                grads.bias[jj][4 + c] += acc;
            }
            std::vector<double> gz_hat(half);
            conv3x3_adjoint(net.K[jj], r2, gz_hat);
            for (std::size_t i = 0; i < half; ++i) gz_hat[i] += g[half + i];
            // Substep 1: z' = z - h tanh(K0^T y + b1).
            std::vector<double> r1(half);
            for (std::size_t i = 0; i < half; ++i) r1[i] = -net.h * lc.d1[i] * gz_hat[i];
            // a1 = K0^T y: kernel grad of an adjoint application swaps the roles.
            conv3x3_kernel_grad(grads.K[jj], std::span<const double>(x_in.data(), half), r1, 1.0);
            for (std::size_t c = 0; c < 4; ++c) {
                double acc = 0.0;
                for (std::size_t p = 0; p < kPixels; ++p) acc += r1[c * kPixels + p];
                grads.bias[jj][c] += acc;
            }
            std::vector<double> gy_back(half);
            conv3x3_same(net.K[jj], r1, gy_back);
            for (std::size_t i = 0; i < half; ++i) {
                const double gy_prev = g[i] + gy_back[i];
                g[i] = gy_prev;
                g[half + i] = gz_hat[i];
            }
        }
    }

    conv3x3_kernel_grad(grads.expand, g, image, 1.0);
    return loss;
}

Dataset mnist_pipeline(const Dataset& d, const ConvExpand& conv) {
    if (d.dim() != kPixels) {
        throw DimensionError("mnist_pipeline: expected 28x28 inputs, got dimension " +
                             std::to_string(d.dim()));
    }
    Dataset out;
    out.name = d.name + "+conv8";
    out.classes = d.classes;
    out.labels = d.labels;
    out.features = Matrix(d.size(), 8 * kPixels);
    std::vector<double> field(8 * kPixels);
    for (std::size_t i = 0; i < d.size(); ++i) {
        conv3x3_same(conv.kernel, std::span<const double>(&d.features.data[i * kPixels], kPixels),
                     field);
        std::copy(field.begin(), field.end(), &out.features.data[i * 8 * kPixels]);
    }
    check_finite(out.features, "mnist_pipeline");
    return out;
}

namespace {

struct MnistBatchEval {
    double mean_loss = 0.0;
    double accuracy = 0.0;
};

MnistBatchEval mnist_forward_batch(const MnistNet& net, const Dataset& data,
                                   std::span<const std::size_t> batch,
                                   std::vector<MnistCache>* caches) {
    const std::size_t count = batch.size();
    if (caches) caches->resize(count);
    std::vector<double> losses(count);
    std::vector<unsigned char> correct(count);
    parallel_chunks(count, worker_threads(), [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const std::span<const double> img(&data.features.data[batch[i] * kPixels], kPixels);
            const Vector probs = mnist_forward(net, img, caches ? &(*caches)[i] : nullptr);
            const std::size_t label = data.labels[batch[i]];
            losses[i] = cross_entropy(probs, label);
            std::size_t best = 0;
            for (std::size_t r = 1; r < probs.size(); ++r)
                if (probs[r] > probs[best]) best = r;
            correct[i] = best == label ? 1 : 0;
        }
    });
    MnistBatchEval ev;
    for (std::size_t i = 0; i < count; ++i) {
        ev.mean_loss += losses[i];
        ev.accuracy += correct[i];
    }
    if (count) {
        ev.mean_loss /= static_cast<double>(count);
        ev.accuracy /= static_cast<double>(count);
    }
    return ev;
}

void mnist_add_regularizer(const MnistNet& net, double alpha, MnistGrads& grads) {
    const std::size_t slots = net.K.size();
    if (slots <= 1 || alpha == 0.0) return;
    const double c = alpha * net.h;
    for (std::size_t j = 0; j < slots; ++j) {
        for (std::size_t i = 0; i < net.K[j].w.size(); ++i) {
            double v = 0.0;
            if (j >= 1) v += net.K[j].w[i] - net.K[j - 1].w[i];
            if (j + 1 < slots) v -= net.K[j + 1].w[i] - net.K[j].w[i];
            grads.K[j].w[i] += c * v;
        }
        for (std::size_t i = 0; i < net.bias[j].size(); ++i) {
            double v = 0.0;
            if (j >= 1) v += net.bias[j][i] - net.bias[j - 1][i];
            if (j + 1 < slots) v -= net.bias[j + 1][i] - net.bias[j][i];
            grads.bias[j][i] += c * v;
        }
    }
}

}  // namespace

MnistTrainResult train_mnist(MnistNet net, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.dim() != kPixels) throw DimensionError("train_mnist: dataset is not 28x28 images");

    MnistTrainResult result;
    AdamState head_state = AdamState::like(mnist_head_arrays(net));
    AdamState hidden_state = AdamState::like(mnist_hidden_arrays(net));

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t len = net.state_len();
    double lr = cfg.lr;
    std::size_t iteration = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> batch(order.data() + start, end - start);
            const std::size_t count = batch.size();

            std::vector<MnistCache> caches;
            const MnistBatchEval ev = mnist_forward_batch(net, data, batch, &caches);
            if (!std::isfinite(ev.mean_loss)) {
                throw NumericError("train_mnist: non-finite loss at iteration " +
                                   std::to_string(iteration));
            }
            result.history.push_back({epoch, iteration, ev.mean_loss, ev.accuracy});

            // (a) head refresh on the cached final states
            for (std::size_t it = 0; it < cfg.inner_head_iters; ++it) {
                MnistGrads hg = mnist_zero_grads(net);
                const double inv = 1.0 / static_cast<double>(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const std::vector<double>& y_out = caches[i].states.back();
                    Vector logits(10);
                    for (std::size_t r = 0; r < 10; ++r) {
                        const double* row = &net.W.data[r * len];
                        double acc = net.mu[r];
                        for (std::size_t p = 0; p < len; ++p) acc += row[p] * y_out[p];
                        logits[r] = acc;
                    }
                    double m = logits[0];
                    for (std::size_t r = 1; r < 10; ++r) m = std::max(m, logits[r]);
                    double sum = 0.0;
                    Vector probs(10);
                    for (std::size_t r = 0; r < 10; ++r) {
                        probs[r] = std::exp(logits[r] - m);
                        sum += probs[r];
                    }
                    const std::size_t label = data.labels[batch[i]];
                    for (std::size_t r = 0; r < 10; ++r) {
                        const double err = probs[r] / sum - (r == label ? 1.0 : 0.0);
                        hg.mu[r] += inv * err;
                        double* wrow = &hg.W.data[r * len];
                        for (std::size_t p = 0; p < len; ++p) wrow[p] += inv * err * y_out[p];
                    }
                }
                for (std::size_t i = 0; i < hg.W.data.size(); ++i)
                    hg.W.data[i] += 2.0 * cfg.alpha_c * net.W.data[i];
                for (std::size_t i = 0; i < hg.mu.size(); ++i)
                    hg.mu[i] += 2.0 * cfg.alpha_c * net.mu[i];
                auto harrays = mnist_head_arrays(net);
                auto garrays = mnist_head_arrays(hg);
                std::vector<std::span<const double>> gview(garrays.begin(), garrays.end());
                adam_step_arrays(harrays, gview, head_state, lr, cfg);
            }

            // (b) one hidden step with the refreshed head
            {
                const std::size_t nthreads =
                    std::max<std::size_t>(1, std::min(worker_threads(), count));
                std::vector<MnistGrads> partial;
                partial.reserve(nthreads);
                for (std::size_t c = 0; c < nthreads; ++c) partial.push_back(mnist_zero_grads(net));
                parallel_chunks(count, nthreads,
                                [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
                                    for (std::size_t i = lo; i < hi; ++i) {
                                        const std::span<const double> img(
                                            &data.features.data[batch[i] * kPixels], kPixels);
                                        mnist_backward(net, caches[i], img,
                                                       data.labels[batch[i]], partial[chunk]);
                                    }
                                });
                MnistGrads total = std::move(partial[0]);
                for (std::size_t c = 1; c < partial.size(); ++c) {
                    auto dst = mnist_hidden_arrays(total);
                    auto src = mnist_hidden_arrays(partial[c]);
                    for (std::size_t a = 0; a < dst.size(); ++a)
                        for (std::size_t i = 0; i < dst[a].size(); ++i) dst[a][i] += src[a][i];
                    auto dsth = mnist_head_arrays(total);
                    auto srch = mnist_head_arrays(partial[c]);
                    for (std::size_t a = 0; a < dsth.size(); ++a)
                        for (std::size_t i = 0; i < dsth[a].size(); ++i) dsth[a][i] += srch[a][i];
                }
                const double inv = 1.0 / static_cast<double>(count);
                for (auto span : mnist_hidden_arrays(total))
                    for (double& v : span) v *= inv;
                mnist_add_regularizer(net, cfg.alpha, total);
                auto parrays = mnist_hidden_arrays(net);
                auto garrays = mnist_hidden_arrays(total);
                std::vector<std::span<const double>> gview(garrays.begin(), garrays.end());
                adam_step_arrays(parrays, gview, hidden_state, lr, cfg);
            }
            ++iteration;
        }
        if (cfg.lr_decay_gamma < 1.0) lr *= cfg.lr_decay_gamma;
    }

    result.net = std::move(net);
    return result;
}

double evaluate_mnist(const MnistNet& net, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return mnist_forward_batch(net, data, all, nullptr).accuracy;
}

Vector mnist_predict(const MnistNet& net, std::span<const double> image) {
    return mnist_forward(net, image, nullptr);
}

}  // namespace hamnet
