#include "hamnet/backprop.hpp"

#include <cmath>

#include "hamnet/training.hpp"

namespace hamnet {

namespace {

// M += coef * u v^T
void add_outer(Matrix& m, const Vector& u, const Vector& v, double coef) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ui = coef * u[i];
        double* row = &m.data[i * m.cols];
        for (std::size_t j = 0; j < v.size(); ++j) row[j] += ui * v[j];
    }
}

void add_scaled(Vector& into, const Vector& v, double coef) {
    for (std::size_t i = 0; i < v.size(); ++i) into[i] += coef * v[i];
}

Vector hadamard(const Vector& a, const Vector& b) {
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
    return c;
}

// Shared pattern for updates of the form  out += K^T tanh(K x + b)  scaled by a
// coefficient already folded into w:
//   dK += t w^T + (D K w) x^T,  db += D K w,  adjoint of x += K^T (D K w)
void accumulate_ham_grads(const Matrix& K, const Vector& x, const Vector& t, const Vector& d,
                          const Vector& w, Matrix& dK, Vector& db, Vector& gx) {
    const Vector r = hadamard(d, matvec(K, w));
    add_outer(dK, t, w, 1.0);
    add_outer(dK, r, x, 1.0);
    add_scaled(db, r, 1.0);
    const Vector back = matvec_transposed(K, r);
    add_scaled(gx, back, 1.0);
}

void split(const Vector& s, Vector& first, Vector& second) {
    const std::size_t half = s.size() / 2;
    first = Vector(half);
    second = Vector(half);
    for (std::size_t i = 0; i < half; ++i) {
        first[i] = s[i];
        second[i] = s[half + i];
    }
}

}  // namespace

ParamGrads zero_grads_like(const NetworkParams& params, const OutputHead& head) {
    ParamGrads g;
    g.K.reserve(params.stored_slots());
    g.b.reserve(params.stored_slots());
    for (std::size_t s = 0; s < params.stored_slots(); ++s) {
        g.K.emplace_back(params.K[s].rows, params.K[s].cols);
        g.b.emplace_back(params.b[s].size());
    }
    g.W = Matrix(head.W.rows, head.W.cols);
    g.mu = Vector(head.mu.size());
    return g;
}

void accumulate(ParamGrads& into, const ParamGrads& g) {
    for (std::size_t s = 0; s < into.K.size(); ++s) {
        for (std::size_t i = 0; i < into.K[s].data.size(); ++i) into.K[s].data[i] += g.K[s].data[i];
        for (std::size_t i = 0; i < into.b[s].size(); ++i) into.b[s][i] += g.b[s][i];
    }
    // Hidden-only contributions (the drift regularizer) carry empty head blocks.
    if (!g.W.data.empty()) {
        if (!g.W.same_shape(into.W) || g.mu.size() != into.mu.size()) {
            throw DimensionError("accumulate: head gradient shape mismatch");
        }
        for (std::size_t i = 0; i < into.W.data.size(); ++i) into.W.data[i] += g.W.data[i];
        for (std::size_t i = 0; i < into.mu.size(); ++i) into.mu[i] += g.mu[i];
    }
}

void scale_grads(ParamGrads& g, double s) {
    for (auto& k : g.K)
        for (double& v : k.data) v *= s;
    for (auto& b : g.b)
        for (std::size_t i = 0; i < b.size(); ++i) b[i] *= s;
    for (double& v : g.W.data) v *= s;
    for (std::size_t i = 0; i < g.mu.size(); ++i) g.mu[i] *= s;
}

Matrix layer_jacobian(const Vector& y, const Matrix& K, const Vector& b, const Matrix& J,
                      double h) {
    const std::size_t n = y.size();
    Vector a = matvec(K, y) + b;
    Vector d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = tanh_prime(std::tanh(a[i]));

    // I + h J K^T D K
    Matrix dk(K.rows, K.cols);
    for (std::size_t i = 0; i < K.rows; ++i)
        for (std::size_t j = 0; j < K.cols; ++j) dk(i, j) = d[i] * K(i, j);
    Matrix ktdk = matmul(transpose(K), dk);
    Matrix m = matmul(J, ktdk);
    for (double& v : m.data) v *= h;
    for (std::size_t i = 0; i < n; ++i) m(i, i) += 1.0;
    return m;
}

namespace {

Matrix verlet_jacobian_from_pieces(const Vector& d1, const Vector& d2, const Matrix& K_stored,
                                   double h, Variant variant, std::size_t n) {
    const std::size_t half = n / 2;
    Matrix m(n, n);
    if (variant == Variant::MS1) {
        const Matrix& K0 = K_stored;
        // [[I - h^2 D2 K0 D1 K0^T, h D2 K0], [-h D1 K0^T, I]]
        Matrix d1k0t(half, half);  // D1 K0^T
        for (std::size_t i = 0; i < half; ++i)
            for (std::size_t j = 0; j < half; ++j) d1k0t(i, j) = d1[i] * K0(j, i);
        Matrix d2k0(half, half);  // D2 K0
        for (std::size_t i = 0; i < half; ++i)
            for (std::size_t j = 0; j < half; ++j) d2k0(i, j) = d2[i] * K0(i, j);
        const Matrix top_left = matmul(d2k0, d1k0t);
        for (std::size_t i = 0; i < half; ++i) {
            for (std::size_t j = 0; j < half; ++j) {
                m(i, j) = (i == j ? 1.0 : 0.0) - h * h * top_left(i, j);
                m(i, half + j) = h * d2k0(i, j);
                m(half + i, j) = -h * d1k0t(i, j);
                m(half + i, half + j) = (i == j ? 1.0 : 0.0);
            }
        }
        return m;
    }
    // MS3: [[I, h K1^T D1 K1], [-h K2^T D2 K2, I - h^2 K2^T D2 K2 K1^T D1 K1]]
    Matrix K1(half, half), K2(half, half);
    for (std::size_t i = 0; i < half; ++i)
        for (std::size_t j = 0; j < half; ++j) {
            K1(i, j) = K_stored(i, j);
            K2(i, j) = K_stored(half + i, j);
        }
    auto sandwich = [half](const Matrix& K, const Vector& d) {
        Matrix dk(half, half);
        for (std::size_t i = 0; i < half; ++i)
            for (std::size_t j = 0; j < half; ++j) dk(i, j) = d[i] * K(i, j);
        return matmul(transpose(K), dk);
    };
    const Matrix s1 = sandwich(K1, d1);
    const Matrix s2 = sandwich(K2, d2);
    const Matrix prod = matmul(s2, s1);
    for (std::size_t i = 0; i < half; ++i) {
        for (std::size_t j = 0; j < half; ++j) {
            m(i, j) = (i == j ? 1.0 : 0.0);
            m(i, half + j) = h * s1(i, j);
            m(half + i, j) = -h * s2(i, j);
            m(half + i, half + j) = (i == j ? 1.0 : 0.0) - h * h * prod(i, j);
        }
    }
    return m;
}

}  // namespace

Matrix layer_jacobian_verlet(const Vector& state, const Matrix& K_stored, const Vector& b,
                             double h, Variant variant) {
    if (variant != Variant::MS1 && variant != Variant::MS3) {
        throw std::invalid_argument("layer_jacobian_verlet: variant must be MS1 or MS3");
    }
    const std::size_t n = state.size();
    Vector y, z, b1, b2;
    split(state, y, z);
    split(b, b1, b2);

    Vector d1(n / 2), d2(n / 2);
    if (variant == Variant::MS1) {
        const auto [y_next, z_next] = forward_layer_ms1(y, z, K_stored, b1, b2, h);
        Vector a1 = matvec_transposed(K_stored, y) + b1;
        Vector a2 = matvec(K_stored, z_next) + b2;
        for (std::size_t i = 0; i < n / 2; ++i) {
            d1[i] = tanh_prime(std::tanh(a1[i]));
            d2[i] = tanh_prime(std::tanh(a2[i]));
        }
    } else {
        const std::size_t half = n / 2;
        Matrix K1(half, half), K2(half, half);
        for (std::size_t i = 0; i < half; ++i)
            for (std::size_t j = 0; j < half; ++j) {
                K1(i, j) = K_stored(i, j);
                K2(i, j) = K_stored(half + i, j);
            }
        const auto [y_next, z_next] = forward_layer_ms3(y, z, K1, K2, b1, b2, h);
        Vector a1 = matvec(K1, z) + b1;
        Vector a2 = matvec(K2, y_next) + b2;
        for (std::size_t i = 0; i < half; ++i) {
            d1[i] = tanh_prime(std::tanh(a1[i]));
            d2[i] = tanh_prime(std::tanh(a2[i]));
        }
    }
    return verlet_jacobian_from_pieces(d1, d2, K_stored, h, variant, n);
}

Matrix layer_jacobian_at(const NetworkParams& params, const ForwardCache& cache, std::size_t j) {
    if (j >= cache.layers.size()) {
        throw DimensionError("layer_jacobian_at: layer index out of range");
    }
    const std::size_t n = params.arch.n;
    const LayerCache& lc = cache.layers[j];
    const Matrix& K = params.K[params.slot(j)];
    const double h = params.step;

    switch (params.arch.variant) {
        case Variant::H1:
        case Variant::H2: {
            Matrix dk(K.rows, K.cols);
            for (std::size_t r = 0; r < K.rows; ++r)
                for (std::size_t c = 0; c < K.cols; ++c) dk(r, c) = lc.d1[r] * K(r, c);
            Matrix m = matmul(params.J, matmul(transpose(K), dk));
            for (double& v : m.data) v *= h;
            for (std::size_t i = 0; i < n; ++i) m(i, i) += 1.0;
            return m;
        }
        case Variant::MS2: {
            const Matrix Ks = ms2_materialize(K, n);
            Matrix m(n, n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c)
                    m(r, c) = (r == c ? 1.0 : 0.0) + h * lc.d1[r] * Ks(r, c);
            return m;
        }
        case Variant::FCNN: {
            Matrix m(n, n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) m(r, c) = lc.d1[r] * K(r, c);
            return m;
        }
        case Variant::MS1:
        case Variant::MS3:
            return verlet_jacobian_from_pieces(lc.d1, lc.d2, K, h, params.arch.variant, n);
    }
    throw std::logic_error("layer_jacobian_at: unreachable");
}

std::pair<ParamGrads, double> backward(const ForwardCache& cache, const NetworkParams& params,
                                       const OutputHead& head, std::size_t label) {
    if (cache.states.size() != params.layers + 1 || cache.layers.size() != params.layers) {
        throw DimensionError("backward: cache does not match params (expected " +
                             std::to_string(params.layers) + " layers, cache has " +
                             std::to_string(cache.layers.size()) + ")");
    }
    const std::size_t n = params.arch.n;
    const Vector& y_out = cache.states.back();
    if (y_out.size() != n) throw DimensionError("backward: stale cache state dimension");

    ParamGrads grads = zero_grads_like(params, head);
    const Vector probs = output_head(y_out, head);
    const double loss = cross_entropy(probs, label);

    // Head: d loss / d logits = p - onehot (softmax), or p0 - [label==0] (logistic).
    Vector err(head.logit_rows());
    if (head.classes == 2) {
        err[0] = probs[0] - (label == 0 ? 1.0 : 0.0);
    } else {
        for (std::size_t i = 0; i < head.classes; ++i)
            err[i] = probs[i] - (i == label ? 1.0 : 0.0);
    }
    add_outer(grads.W, err, y_out, 1.0);
    add_scaled(grads.mu, err, 1.0);
    Vector g = matvec_transposed(head.W, err);  // adjoint at y_N

    const double h = params.step;
    for (std::size_t jj = params.layers; jj-- > 0;) {
        const std::size_t s = params.slot(jj);
        const Matrix& K = params.K[s];
        const LayerCache& lc = cache.layers[jj];
        const Vector& y_in = cache.states[jj];
        Matrix& dK = grads.K[s];
        Vector& db = grads.b[s];

        switch (params.arch.variant) {
            case Variant::H1:
            case Variant::H2: {
                Vector w = matvec_transposed(params.J, g);
                for (std::size_t i = 0; i < w.size(); ++i) w[i] *= h;
                accumulate_ham_grads(K, y_in, lc.t1, lc.d1, w, dK, db, g);
                break;
            }
            case Variant::MS2: {
                const Matrix Ks = ms2_materialize(K, n);
                Vector r(n);
                for (std::size_t i = 0; i < n; ++i) r[i] = h * lc.d1[i] * g[i];
                // Packed strict-upper gradient is the skew projection of r y^T.
                std::size_t idx = 0;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j2 = i + 1; j2 < n; ++j2)
                        dK.data[idx++] += r[i] * y_in[j2] - r[j2] * y_in[i];
                add_scaled(db, r, 1.0);
                const Vector back = matvec_transposed(Ks, r);
                add_scaled(g, back, 1.0);
                break;
            }
            case Variant::FCNN: {
                Vector r(n);
                for (std::size_t i = 0; i < n; ++i) r[i] = lc.d1[i] * g[i];
                add_outer(dK, r, y_in, 1.0);
                add_scaled(db, r, 1.0);
                g = matvec_transposed(K, r);
                break;
            }
            case Variant::MS1: {
                const std::size_t half = n / 2;
                Vector gy, gz, y_j, z_j, y_next, z_next;
                split(g, gy, gz);
                split(y_in, y_j, z_j);
                split(cache.states[jj + 1], y_next, z_next);

                // Second substep y' = y + h tanh(K0 z' + b2).
                Vector r2(half);
                for (std::size_t i = 0; i < half; ++i) r2[i] = h * lc.d2[i] * gy[i];
                add_outer(dK, r2, z_next, 1.0);
                Vector gz_hat = gz + matvec_transposed(K, r2);
                // First substep z' = z - h tanh(K0^T y + b1).
                Vector r1(half);
                for (std::size_t i = 0; i < half; ++i) r1[i] = -h * lc.d1[i] * gz_hat[i];
                add_outer(dK, y_j, r1, 1.0);  // grad += y_j r1^T  (K0^T pattern)
                Vector gy_prev = gy + matvec(K, r1);

                for (std::size_t i = 0; i < half; ++i) {
                    db[half + i] += r2[i];
                    db[i] += r1[i];
                    g[i] = gy_prev[i];
                    g[half + i] = gz_hat[i];
                }
                break;
            }
            case Variant::MS3: {
                const std::size_t half = n / 2;
                Vector gy, gz, y_j, z_j, y_next, z_next;
                split(g, gy, gz);
                split(y_in, y_j, z_j);
                split(cache.states[jj + 1], y_next, z_next);

                Matrix K1(half, half), K2(half, half);
                for (std::size_t i = 0; i < half; ++i)
                    for (std::size_t c = 0; c < half; ++c) {
                        K1(i, c) = K(i, c);
                        K2(i, c) = K(half + i, c);
                    }

                // Substep 2: z' = z - h K2^T tanh(K2 y' + b2); coefficient -h.
                Vector w2(half);
                for (std::size_t i = 0; i < half; ++i) w2[i] = -h * gz[i];
                Matrix dK2(half, half);
                Vector db2(half);
                Vector gy_hat = gy;
                accumulate_ham_grads(K2, y_next, lc.t2, lc.d2, w2, dK2, db2, gy_hat);

                // Substep 1: y' = y + h K1^T tanh(K1 z + b1); coefficient +h.
                Vector w1(half);
                for (std::size_t i = 0; i < half; ++i) w1[i] = h * gy_hat[i];
                Matrix dK1(half, half);
                Vector db1(half);
                Vector gz_prev = gz;
                accumulate_ham_grads(K1, z_j, lc.t1, lc.d1, w1, dK1, db1, gz_prev);

                for (std::size_t i = 0; i < half; ++i) {
                    for (std::size_t c = 0; c < half; ++c) {
                        dK(i, c) += dK1(i, c);
                        dK(half + i, c) += dK2(i, c);
                    }
                    db[i] += db1[i];
                    db[half + i] += db2[i];
                    g[i] = gy_hat[i];
                    g[half + i] = gz_prev[i];
                }
                break;
            }
        }
    }

    return {std::move(grads), loss};
}

ParamGrads regularizer_grads(const NetworkParams& params, double alpha, double h) {
    OutputHead empty_head;
    empty_head.classes = 2;
    empty_head.W = Matrix(0, 0);
    empty_head.mu = Vector(0);
    ParamGrads g = zero_grads_like(params, empty_head);
    const std::size_t slots = params.stored_slots();
    if (params.shared_weights || slots <= 1 || alpha == 0.0) return g;

    const double c = alpha * h;
    for (std::size_t j = 0; j < slots; ++j) {
        for (std::size_t i = 0; i < params.K[j].data.size(); ++i) {
            double v = 0.0;
            if (j >= 1) v += params.K[j].data[i] - params.K[j - 1].data[i];
            if (j + 1 < slots) v -= params.K[j + 1].data[i] - params.K[j].data[i];
            g.K[j].data[i] = c * v;
        }
        for (std::size_t i = 0; i < params.b[j].size(); ++i) {
            double v = 0.0;
            if (j >= 1) v += params.b[j][i] - params.b[j - 1][i];
            if (j + 1 < slots) v -= params.b[j + 1][i] - params.b[j][i];
            g.b[j][i] = c * v;
        }
    }
    return g;
}

double regularizer_value(const NetworkParams& params, double alpha, double h) {
    const std::size_t slots = params.stored_slots();
    if (params.shared_weights || slots <= 1 || alpha == 0.0) return 0.0;
    double rk = 0.0, rb = 0.0;
    for (std::size_t j = 1; j < slots; ++j) {
        for (std::size_t i = 0; i < params.K[j].data.size(); ++i) {
            const double d = params.K[j].data[i] - params.K[j - 1].data[i];
            rk += d * d;
        }
        for (std::size_t i = 0; i < params.b[j].size(); ++i) {
            const double d = params.b[j][i] - params.b[j - 1][i];
            rb += d * d;
        }
    }
    return alpha * 0.5 * h * (rk + rb);
}

std::vector<std::span<double>> hidden_arrays(NetworkParams& params) {
    std::vector<std::span<double>> out;
    for (auto& k : params.K) out.emplace_back(k.data);
    for (auto& b : params.b) out.emplace_back(b.data);
    return out;
}
std::vector<std::span<double>> head_arrays(OutputHead& head) {
    return {std::span<double>(head.W.data), std::span<double>(head.mu.data)};
}
std::vector<std::span<double>> hidden_arrays(ParamGrads& g) {
    std::vector<std::span<double>> out;
    for (auto& k : g.K) out.emplace_back(k.data);
    for (auto& b : g.b) out.emplace_back(b.data);
    return out;
}
std::vector<std::span<double>> head_arrays(ParamGrads& g) {
    return {std::span<double>(g.W.data), std::span<double>(g.mu.data)};
}
std::vector<std::span<const double>> hidden_arrays(const NetworkParams& params) {
    std::vector<std::span<const double>> out;
    for (const auto& k : params.K) out.emplace_back(k.data);
    for (const auto& b : params.b) out.emplace_back(b.data);
    return out;
}
std::vector<std::span<const double>> head_arrays(const OutputHead& head) {
    return {std::span<const double>(head.W.data), std::span<const double>(head.mu.data)};
}
std::vector<std::span<const double>> hidden_arrays(const ParamGrads& g) {
    std::vector<std::span<const double>> out;
    for (const auto& k : g.K) out.emplace_back(k.data);
    for (const auto& b : g.b) out.emplace_back(b.data);
    return out;
}
std::vector<std::span<const double>> head_arrays(const ParamGrads& g) {
    return {std::span<const double>(g.W.data), std::span<const double>(g.mu.data)};
}

FiniteDiffReport finite_difference_check(NetworkParams& params, OutputHead& head,
                                         const Vector& sample, std::size_t label, double eps) {
    if (!(eps >= 1e-8 && eps <= 1e-3)) {
        throw std::invalid_argument("finite_difference_check: eps must lie in [1e-8, 1e-3]");
    }

    const auto loss_at = [&]() {
        const auto [y_out, cache] = forward_network(sample, params);
        return cross_entropy(output_head(y_out, head), label);
    };
    const auto [y_out, cache] = forward_network(sample, params);
    auto [grads, loss] = backward(cache, params, head, label);
    (void)loss;

    FiniteDiffReport report;
    auto walk = [&](std::span<double> values, std::span<const double> grad,
                    const std::string& name) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + eps;
            const double up = loss_at();
            values[i] = saved - eps;
            const double down = loss_at();
            values[i] = saved;
            const double fd = (up - down) / (2.0 * eps);
            // Relative error with an absolute 1e-8 floor: differences below the
            // floor are finite-difference noise, not gradient defects.
            const double diff = std::abs(fd - grad[i]);
            const double rel =
                diff <= 1e-8 ? 0.0 : diff / std::max(std::abs(fd), std::abs(grad[i]));
            ++report.coordinates;
            if (rel > report.max_rel_err || report.worst_coordinate.empty()) {
                report.max_rel_err = rel;
                report.worst_coordinate = name + "[" + std::to_string(i) + "]";
            }
        }
    };

    const auto pv = hidden_arrays(params);
    const auto gv = hidden_arrays(grads);
    for (std::size_t a = 0; a < pv.size(); ++a) {
        const bool is_k = a < params.stored_slots();
        const std::size_t slot = is_k ? a : a - params.stored_slots();
        walk(pv[a], gv[a], std::string(is_k ? "K" : "b") + std::to_string(slot));
    }
    const auto hv = head_arrays(head);
    const auto hg = head_arrays(grads);
    walk(hv[0], hg[0], "W");
    walk(hv[1], hg[1], "mu");
    return report;
}

}  // namespace hamnet
