#include "hamnet/layers.hpp"

#include <algorithm>
#include <cmath>

#include "hamnet/rng.hpp"

namespace hamnet {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::H1: return "H1";
        case Variant::H2: return "H2";
        case Variant::MS1: return "MS1";
        case Variant::MS2: return "MS2";
        case Variant::MS3: return "MS3";
        case Variant::FCNN: return "FCNN";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "H1") return Variant::H1;
    if (name == "H2") return Variant::H2;
    if (name == "MS1") return Variant::MS1;
    if (name == "MS2") return Variant::MS2;
    if (name == "MS3") return Variant::MS3;
    if (name == "FCNN") return Variant::FCNN;
    throw std::invalid_argument("unknown architecture variant: " + name);
}

void validate_architecture(const Architecture& arch) {
    if (arch.n == 0) throw DimensionError("architecture: state dimension must be positive");
    const bool needs_even = arch.variant == Variant::H1 || arch.variant == Variant::MS1 ||
                            arch.variant == Variant::MS3;
    if (needs_even && arch.n % 2 != 0) {
        throw DimensionError(std::string("architecture: ") + variant_name(arch.variant) +
                             " requires an even state dimension, got " + std::to_string(arch.n));
    }
}

double log_cosh(double x) {
    const double ax = std::abs(x);
    return ax + std::log1p(std::exp(-2.0 * ax)) - 0.6931471805599453094172321214581766;
}

double tanh_prime(double tanh_value) { return 1.0 - tanh_value * tanh_value; }

double hamiltonian_energy(const Vector& y, const Matrix& K, const Vector& b) {
    if (K.cols != y.size() || K.rows != b.size()) {
        throw DimensionError("hamiltonian_energy: K is " + std::to_string(K.rows) + "x" +
                             std::to_string(K.cols) + ", y has " + std::to_string(y.size()) +
                             ", b has " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < K.rows; ++i) {
        double a = b[i];
        const double* row = &K.data[i * K.cols];
        for (std::size_t j = 0; j < K.cols; ++j) a += row[j] * y[j];
        acc += log_cosh(a);
    }
    return acc;
}

Vector hamiltonian_gradient(const Vector& y, const Matrix& K, const Vector& b) {
    Vector a = matvec(K, y) + b;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::tanh(a[i]);
    return matvec_transposed(K, a);
}

Matrix make_interconnection(Variant variant, std::size_t n) {
    Matrix j(n, n);
    if (variant == Variant::H1) {
        if (n % 2 != 0) throw DimensionError("make_interconnection: H1 needs even n");
        const std::size_t half = n / 2;
        for (std::size_t i = 0; i < half; ++i) {
            j(i, half + i) = 1.0;
            j(half + i, i) = -1.0;
        }
        return j;
    }
    if (variant == Variant::H2) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) j(r, c) = (r < c) ? 1.0 : (r > c ? -1.0 : 0.0);
        return j;
    }
    throw std::invalid_argument(std::string("make_interconnection: no constant J for ") +
                                variant_name(variant));
}

std::size_t ms2_packed_len(std::size_t n) { return n * (n - 1) / 2; }

Matrix ms2_materialize(const Matrix& packed, std::size_t n) {
    if (packed.data.size() != ms2_packed_len(n)) {
        throw DimensionError("ms2_materialize: packed length " + std::to_string(packed.data.size()) +
                             " does not match n=" + std::to_string(n));
    }
    Matrix k(n, n);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = packed.data[idx++];
            k(i, j) = v;
            k(j, i) = -v;
        }
    }
    return k;
}

namespace {

Vector affine(const Matrix& K, const Vector& y, const Vector& b) {
    if (K.cols != y.size() || K.rows != b.size()) {
        throw DimensionError("layer: K " + std::to_string(K.rows) + "x" + std::to_string(K.cols) +
                             " against y(" + std::to_string(y.size()) + "), b(" +
                             std::to_string(b.size()) + ")");
    }
    Vector a(K.rows);
    for (std::size_t i = 0; i < K.rows; ++i) {
        double acc = b[i];
        const double* row = &K.data[i * K.cols];
        for (std::size_t j = 0; j < K.cols; ++j) acc += row[j] * y[j];
        a[i] = acc;
    }
    return a;
}

Vector tanh_vec(const Vector& a) {
    Vector t(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) t[i] = std::tanh(a[i]);
    return t;
}

Vector dtanh_vec(const Vector& t) {
    Vector d(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) d[i] = tanh_prime(t[i]);
    return d;
}

}  // namespace

Vector forward_layer_h(const Vector& y, const Matrix& K, const Vector& b, const Matrix& J,
                       double h) {
    if (J.rows != y.size() || J.cols != K.rows) {
        throw DimensionError("forward_layer_h: J has shape " + std::to_string(J.rows) + "x" +
                             std::to_string(J.cols));
    }
    const Vector t = tanh_vec(affine(K, y, b));
    const Vector g = matvec_transposed(K, t);
    const Vector jg = matvec(J, g);
    Vector out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + h * jg[i];
    return out;
}

std::pair<Vector, Vector> forward_layer_ms1(const Vector& y, const Vector& z, const Matrix& K0,
                                            const Vector& b1, const Vector& b2, double h) {
    if (y.size() != z.size()) throw DimensionError("forward_layer_ms1: y/z length mismatch");
    const Vector t1 = tanh_vec(affine(transpose(K0), y, b1));
    Vector z_next(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) z_next[i] = z[i] - h * t1[i];
    const Vector t2 = tanh_vec(affine(K0, z_next, b2));
    Vector y_next(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_next[i] = y[i] + h * t2[i];
    return {y_next, z_next};
}

Vector forward_layer_ms2(const Vector& y, const Matrix& K_skew, const Vector& b, double h) {
    const Vector t = tanh_vec(affine(K_skew, y, b));
    Vector out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + h * t[i];
    return out;
}

std::pair<Vector, Vector> forward_layer_ms3(const Vector& y, const Vector& z, const Matrix& K1,
                                            const Matrix& K2, const Vector& b1, const Vector& b2,
                                            double h) {
    if (y.size() != z.size()) throw DimensionError("forward_layer_ms3: y/z length mismatch");
    const Vector t1 = tanh_vec(affine(K1, z, b1));
    const Vector g1 = matvec_transposed(K1, t1);
    Vector y_next(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_next[i] = y[i] + h * g1[i];
    const Vector t2 = tanh_vec(affine(K2, y_next, b2));
    const Vector g2 = matvec_transposed(K2, t2);
    Vector z_next(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) z_next[i] = z[i] - h * g2[i];
    return {y_next, z_next};
}

Vector forward_layer_fcnn(const Vector& y, const Matrix& K, const Vector& b) {
    return tanh_vec(affine(K, y, b));
}

namespace {

void split_state(const Vector& s, Vector& y, Vector& z) {
    const std::size_t half = s.size() / 2;
    y = Vector(half);
    z = Vector(half);
    for (std::size_t i = 0; i < half; ++i) {
        y[i] = s[i];
        z[i] = s[half + i];
    }
}

Vector stack_state(const Vector& y, const Vector& z) {
    Vector s(y.size() + z.size());
    for (std::size_t i = 0; i < y.size(); ++i) s[i] = y[i];
    for (std::size_t i = 0; i < z.size(); ++i) s[y.size() + i] = z[i];
    return s;
}

void split_bias(const Vector& b, Vector& b1, Vector& b2) {
    const std::size_t half = b.size() / 2;
    b1 = Vector(half);
    b2 = Vector(half);
    for (std::size_t i = 0; i < half; ++i) {
        b1[i] = b[i];
        b2[i] = b[half + i];
    }
}

void split_ms3_kernels(const Matrix& K, std::size_t n, Matrix& K1, Matrix& K2) {
    const std::size_t half = n / 2;
    K1 = Matrix(half, half);
    K2 = Matrix(half, half);
    for (std::size_t i = 0; i < half; ++i)
        for (std::size_t j = 0; j < half; ++j) {
            K1(i, j) = K(i, j);
            K2(i, j) = K(half + i, j);
        }
}

}  // namespace

std::pair<Vector, ForwardCache> forward_network(const Vector& y0, const NetworkParams& params) {
    validate_architecture(params.arch);
    const std::size_t n = params.arch.n;
    if (y0.size() != n) {
        throw DimensionError("forward_network: input has length " + std::to_string(y0.size()) +
                             ", expected " + std::to_string(n));
    }

    ForwardCache cache;
    cache.states.reserve(params.layers + 1);
    cache.layers.reserve(params.layers);
    cache.states.push_back(y0);

    Vector state = y0;
    for (std::size_t j = 0; j < params.layers; ++j) {
        const Matrix& K = params.K[params.slot(j)];
        const Vector& b = params.b[params.slot(j)];
        LayerCache lc;

        switch (params.arch.variant) {
            case Variant::H1:
            case Variant::H2: {
                lc.a1 = affine(K, state, b);
                lc.t1 = tanh_vec(lc.a1);
                lc.d1 = dtanh_vec(lc.t1);
                const Vector g = matvec_transposed(K, lc.t1);
                const Vector jg = matvec(params.J, g);
                for (std::size_t i = 0; i < n; ++i) state[i] += params.step * jg[i];
                break;
            }
            case Variant::MS2: {
                const Matrix Ks = ms2_materialize(K, n);
                lc.a1 = affine(Ks, state, b);
                lc.t1 = tanh_vec(lc.a1);
                lc.d1 = dtanh_vec(lc.t1);
                for (std::size_t i = 0; i < n; ++i) state[i] += params.step * lc.t1[i];
                break;
            }
            case Variant::FCNN: {
                lc.a1 = affine(K, state, b);
                lc.t1 = tanh_vec(lc.a1);
                lc.d1 = dtanh_vec(lc.t1);
                state = lc.t1;
                break;
            }
            case Variant::MS1: {
                Vector y, z, b1, b2;
                split_state(state, y, z);
                split_bias(b, b1, b2);
                lc.a1 = affine(transpose(K), y, b1);
                lc.t1 = tanh_vec(lc.a1);
                lc.d1 = dtanh_vec(lc.t1);
                Vector z_next(z.size());
                for (std::size_t i = 0; i < z.size(); ++i) z_next[i] = z[i] - params.step * lc.t1[i];
                lc.a2 = affine(K, z_next, b2);
                lc.t2 = tanh_vec(lc.a2);
                lc.d2 = dtanh_vec(lc.t2);
                Vector y_next(y.size());
                for (std::size_t i = 0; i < y.size(); ++i) y_next[i] = y[i] + params.step * lc.t2[i];
                state = stack_state(y_next, z_next);
                break;
            }
            case Variant::MS3: {
                Vector y, z, b1, b2;
                Matrix K1, K2;
                split_state(state, y, z);
                split_bias(b, b1, b2);
                split_ms3_kernels(K, n, K1, K2);
                lc.a1 = affine(K1, z, b1);
                lc.t1 = tanh_vec(lc.a1);
                lc.d1 = dtanh_vec(lc.t1);
                const Vector g1 = matvec_transposed(K1, lc.t1);
                Vector y_next(y.size());
                for (std::size_t i = 0; i < y.size(); ++i) y_next[i] = y[i] + params.step * g1[i];
                lc.a2 = affine(K2, y_next, b2);
                lc.t2 = tanh_vec(lc.a2);
                lc.d2 = dtanh_vec(lc.t2);
                const Vector g2 = matvec_transposed(K2, lc.t2);
                Vector z_next(z.size());
                for (std::size_t i = 0; i < z.size(); ++i) z_next[i] = z[i] - params.step * g2[i];
                state = stack_state(y_next, z_next);
                break;
            }
        }

        for (std::size_t i = 0; i < state.size(); ++i) {
            if (!std::isfinite(state[i])) {
                throw NumericError("forward_network: non-finite state after layer " +
                                   std::to_string(j));
            }
        }
        cache.states.push_back(state);
        cache.layers.push_back(std::move(lc));
    }

    return {state, cache};
}

Vector output_head(const Vector& y, const OutputHead& head) {
    if (head.classes < 2) throw DimensionError("output_head: need at least 2 classes");
    if (head.W.rows != head.logit_rows() || head.W.cols != y.size() ||
        head.mu.size() != head.logit_rows()) {
        throw DimensionError("output_head: W is " + std::to_string(head.W.rows) + "x" +
                             std::to_string(head.W.cols) + " against y(" +
                             std::to_string(y.size()) + "), M=" + std::to_string(head.classes));
    }
    const Vector logits = affine(head.W, y, head.mu);
    if (head.classes == 2) {
        const double z = logits[0];
        double p;
        if (z >= 0.0) {
            p = 1.0 / (1.0 + std::exp(-z));
        } else {
            const double e = std::exp(z);
            p = e / (1.0 + e);
        }
        Vector probs(2);
        probs[0] = p;
        probs[1] = 1.0 - p;
        return probs;
    }
    double m = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) m = std::max(m, logits[i]);
    Vector probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - m);
        sum += probs[i];
    }
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] /= sum;
    return probs;
}

std::size_t params_per_layer(const Architecture& arch) {
    const std::size_t n = arch.n;
    switch (arch.variant) {
        case Variant::H1:
        case Variant::H2:
        case Variant::FCNN: return n * n + n;
        case Variant::MS1: return n * n / 4 + n;
        case Variant::MS2: return n * (n - 1) / 2 + n;
        case Variant::MS3: return n * n / 2 + n;
    }
    return 0;
}

std::size_t trainable_scalar_count(const NetworkParams& params, const OutputHead& head) {
    std::size_t count = head.W.data.size() + head.mu.size();
    for (std::size_t s = 0; s < params.stored_slots(); ++s) {
        count += params.K[s].data.size() + params.b[s].size();
    }
    return count;
}

NetworkParams init_network(const Architecture& arch, std::size_t layers, double h,
                           std::uint64_t seed, bool shared_weights) {
    validate_architecture(arch);
    NetworkParams p;
    p.arch = arch;
    p.layers = layers;
    p.step = h;
    p.shared_weights = shared_weights;
    if (arch.variant == Variant::H1 || arch.variant == Variant::H2) {
        p.J = make_interconnection(arch.variant, arch.n);
    }

    const std::size_t n = arch.n;
    std::size_t krows = n, kcols = n;
    switch (arch.variant) {
        case Variant::MS1: krows = kcols = n / 2; break;
        case Variant::MS2: krows = ms2_packed_len(n); kcols = 1; break;
        case Variant::MS3: krows = n; kcols = n / 2; break;
        default: break;
    }

    const std::size_t slots = shared_weights ? std::min<std::size_t>(1, layers) : layers;
    const double stddev = 1.0 / std::sqrt(static_cast<double>(n));
    Rng rng(seed);
    p.K.reserve(slots);
    p.b.reserve(slots);
    for (std::size_t s = 0; s < slots; ++s) {
        Matrix k(krows, kcols);
        for (double& v : k.data) v = rng.normal(0.0, stddev);
        p.K.push_back(std::move(k));
        p.b.emplace_back(n);
    }
    return p;
}

OutputHead init_head(std::size_t classes, std::size_t n) {
    if (classes < 2) throw DimensionError("init_head: need at least 2 classes");
    OutputHead head;
    head.classes = classes;
    head.W = Matrix(classes == 2 ? 1 : classes, n);
    head.mu = Vector(classes == 2 ? 1 : classes);
    return head;
}

}  // namespace hamnet
