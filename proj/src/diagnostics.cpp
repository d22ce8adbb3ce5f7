#include "hamnet/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "hamnet/data.hpp"

namespace hamnet {

namespace {

// Spectral norm via the QR eigen route on the Gram matrix. The Jacobian
// products audited during training are near-isometries whose top singular
// values cluster, which stalls the power-iteration stopping rule; the QR
// solver has no such degeneracy problem at these sizes.
double spectral_norm_gram(const Matrix& m) {
    const Matrix gram = matmul(transpose(m), m);
    double top = 0.0;
    for (const auto& ev : eigenvalues_qr(gram)) top = std::max(top, ev.real());
    return std::sqrt(std::max(top, 0.0));
}

}  // namespace

std::vector<std::pair<std::size_t, double>> backward_sensitivity_norms(
    const NetworkParams& params, const Vector& y0, std::span<const std::size_t> layer_subset) {
    const std::size_t N = params.layers;
    std::vector<std::size_t> wanted(layer_subset.begin(), layer_subset.end());
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
    for (std::size_t j : wanted) {
        if (j >= N) throw DimensionError("backward_sensitivity_norms: layer index out of range");
    }

    const auto [y_out, cache] = forward_network(y0, params);
    (void)y_out;

    std::vector<std::pair<std::size_t, double>> result;
    result.reserve(wanted.size());

    // Walk the product P = M_{N-1} ... M_l from l = N-1 down; after absorbing
    // M_l the product equals dy_N/dy_l, i.e. the entry for j = l - 1.
    Matrix P = Matrix::identity(params.arch.n);
    auto it = wanted.rbegin();
    if (it != wanted.rend() && *it == N - 1) {
        result.emplace_back(N - 1, 1.0);  // empty product
        ++it;
    }
    for (std::size_t l = N; l-- > 1;) {
        if (it == wanted.rend()) break;
        P = matmul(P, layer_jacobian_at(params, cache, l));
        if (*it == l - 1) {
            result.emplace_back(l - 1, spectral_norm_gram(P));
            ++it;
        }
    }
    std::reverse(result.begin(), result.end());
    return result;
}

namespace {

// Conventional Jacobian A(y) = J K^T D(y) K.
Matrix continuous_jacobian(const Matrix& K, const Vector& b, const Matrix& J, const Vector& y) {
    Vector a = matvec(K, y) + b;
    Matrix dk(K.rows, K.cols);
    for (std::size_t i = 0; i < K.rows; ++i) {
        const double t = std::tanh(a[i]);
        const double d = 1.0 - t * t;
        for (std::size_t j = 0; j < K.cols; ++j) dk(i, j) = d * K(i, j);
    }
    return matmul(J, matmul(transpose(K), dk));
}

Vector ham_field(const Matrix& K, const Vector& b, const Matrix& J, const Vector& y) {
    return matvec(J, hamiltonian_gradient(y, K, b));
}

}  // namespace

std::vector<SensitivityMatrix> integrate_backward_gradient_ode(const Matrix& K, const Vector& b,
                                                               const Matrix& J, const Vector& y0,
                                                               double T, std::size_t steps) {
    if (steps < 10) throw std::invalid_argument("integrate_backward_gradient_ode: steps >= 10");
    const std::size_t n = y0.size();
    const double dt = T / static_cast<double>(steps);

    // Forward state trajectory on a half-step grid so the Phi integrator can
    // evaluate A at RK4 midpoints exactly.
    const std::size_t fine = 2 * steps;
    const double fdt = T / static_cast<double>(fine);
    std::vector<Vector> traj;
    traj.reserve(fine + 1);
    Vector y = y0;
    traj.push_back(y);
    for (std::size_t i = 0; i < fine; ++i) {
        const Vector k1 = ham_field(K, b, J, y);
        const Vector k2 = ham_field(K, b, J, y + 0.5 * fdt * k1);
        const Vector k3 = ham_field(K, b, J, y + 0.5 * fdt * k2);
        const Vector k4 = ham_field(K, b, J, y + fdt * k3);
        for (std::size_t c = 0; c < n; ++c)
            y[c] += fdt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        check_finite(y, "integrate_backward_gradient_ode state");
        traj.push_back(y);
    }

    std::vector<Matrix> A;
    A.reserve(fine + 1);
    for (const Vector& state : traj) A.push_back(continuous_jacobian(K, b, J, state));

    // dPhi/dt = Phi A(T - t); t = k dt maps to trajectory index fine - 2k.
    std::vector<SensitivityMatrix> out;
    out.reserve(steps + 1);
    Matrix phi = Matrix::identity(n);
    out.push_back({phi, T, 0.0});
    for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t idx = fine - 2 * k;
        const Matrix& a0 = A[idx];
        const Matrix& am = A[idx - 1];
        const Matrix& a1 = A[idx - 2];
        const Matrix k1 = matmul(phi, a0);
        const Matrix k2 = matmul(phi + scale(k1, 0.5 * dt), am);
        const Matrix k3 = matmul(phi + scale(k2, 0.5 * dt), am);
        const Matrix k4 = matmul(phi + scale(k3, dt), a1);
        phi = phi + scale(k1 + scale(k2, 2.0) + scale(k3, 2.0) + k4, dt / 6.0);
        out.push_back({phi, T, (k + 1) * dt});
    }
    return out;
}

std::vector<SensitivityMatrix> integrate_backward_gradient_ode(const NetworkParams& params,
                                                               const Vector& y0, double T,
                                                               std::size_t steps) {
    if (params.arch.variant != Variant::H1 && params.arch.variant != Variant::H2) {
        throw std::invalid_argument("integrate_backward_gradient_ode: needs an H1/H2 network");
    }
    if (params.stored_slots() != 1) {
        throw std::invalid_argument(
            "integrate_backward_gradient_ode: network must be time-invariant (one stored layer)");
    }
    return integrate_backward_gradient_ode(params.K[0], params.b[0], params.J, y0, T, steps);
}

StabilityReport check_marginal_stability_spectrum(const Matrix& K, const Vector& b,
                                                  const Vector& y, const Matrix& J) {
    StabilityReport report;
    Vector a = matvec(K, y) + b;
    Matrix t_mat(K.rows, K.cols);  // D^{1/2} K
    for (std::size_t i = 0; i < K.rows; ++i) {
        const double t = std::tanh(a[i]);
        const double droot = std::sqrt(1.0 - t * t);
        for (std::size_t j = 0; j < K.cols; ++j) t_mat(i, j) = droot * K(i, j);
    }
    const Matrix S = matmul(t_mat, matmul(transpose(J), transpose(t_mat)));
    const Matrix sym = add(S, transpose(S));
    report.skew_residual = frobenius_norm(sym);
    const double snorm = frobenius_norm(S);
    report.skew_residual_rel = snorm > 0.0 ? report.skew_residual / snorm : 0.0;
    const Matrix st = transpose(S);
    report.normality_residual = frobenius_norm(sub(matmul(S, st), matmul(st, S)));

    // Paper-convention Jacobian K^T D K J^T, eigenvalues straight from QR.
    Matrix dk(K.rows, K.cols);
    for (std::size_t i = 0; i < K.rows; ++i) {
        const double t = std::tanh(a[i]);
        const double d = 1.0 - t * t;
        for (std::size_t j = 0; j < K.cols; ++j) dk(i, j) = d * K(i, j);
    }
    const Matrix jac = matmul(transpose(K), matmul(dk, transpose(J)));
    for (const auto& lambda : eigenvalues_qr(jac)) {
        report.max_re_lambda = std::max(report.max_re_lambda, std::abs(lambda.real()));
    }
    // The similarity witness is the machine-precision signal; QR real parts
    // carry ~1e-8 noise for repeated eigenvalues and are reported, not gated.
    report.pass = report.skew_residual < 1e-10;
    return report;
}

std::vector<EnvelopePoint> exp_norm_envelope(const Matrix& A, std::span<const double> t_grid) {
    if (A.rows != A.cols) throw DimensionError("exp_norm_envelope: A must be square");
    const std::size_t n = A.rows;
    const double anorm = std::max(frobenius_norm(A), 1e-12);

    std::vector<EnvelopePoint> out;
    out.reserve(t_grid.size());
    Matrix phi = Matrix::identity(n);
    double t_cur = 0.0;

    auto record = [&](double t) {
        const Matrix gram = matmul(transpose(phi), phi);
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (const auto& lambda : eigenvalues_qr(gram)) {
            const double v = lambda.real();
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        out.push_back({t, std::sqrt(std::max(hi, 0.0)), std::sqrt(std::max(lo, 0.0))});
    };

    for (double t : t_grid) {
        if (t < t_cur) throw std::invalid_argument("exp_norm_envelope: t_grid must be ascending");
        const double span = t - t_cur;
        if (span > 0.0) {
            const std::size_t m = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::ceil(span * anorm / 0.02)));
            const double dt = span / static_cast<double>(m);
            for (std::size_t i = 0; i < m; ++i) {
                const Matrix k1 = matmul(A, phi);
                const Matrix k2 = matmul(A, phi + scale(k1, 0.5 * dt));
                const Matrix k3 = matmul(A, phi + scale(k2, 0.5 * dt));
                const Matrix k4 = matmul(A, phi + scale(k3, dt));
                phi = phi + scale(k1 + scale(k2, 2.0) + scale(k3, 2.0) + k4, dt / 6.0);
            }
            t_cur = t;
        }
        record(t);
    }
    return out;
}

double envelope_condition_bound(const Matrix& K, const Vector& b, const Vector& y) {
    Vector a = matvec(K, y) + b;
    Matrix t_mat(K.rows, K.cols);
    for (std::size_t i = 0; i < K.rows; ++i) {
        const double t = std::tanh(a[i]);
        const double droot = std::sqrt(1.0 - t * t);
        for (std::size_t j = 0; j < K.cols; ++j) t_mat(i, j) = droot * K(i, j);
    }
    const double smax = spectral_norm(t_mat);
    const Matrix gram = matmul(transpose(t_mat), t_mat);
    double lo = 0.0;
    bool first = true;
    for (const auto& lambda : eigenvalues_qr(gram)) {
        const double v = lambda.real();
        if (first) {
            lo = v;
            first = false;
        } else {
            lo = std::min(lo, v);
        }
    }
    if (lo <= 0.0) throw NumericError("envelope_condition_bound: D^{1/2} K is singular");
    return smax / std::sqrt(lo);
}

void save_gradnorm_csv(const GradNormTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "iteration,layer,norm\n";
    char buf[80];
    for (const auto& s : trace) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", s.iteration, s.layer, s.norm);
        out << buf;
    }
    if (!out) throw IoError(path + ": write failed");
}

void save_spectrum_csv(const std::vector<SpectrumRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "case,max_re_lambda,skew_residual\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", r.label.c_str(), r.max_re_lambda,
                      r.skew_residual);
        out << buf;
    }
    if (!out) throw IoError(path + ": write failed");
}

IterationCallback make_gradnorm_hook(GradNormTrace& trace, std::vector<std::size_t> layer_subset) {
    return [&trace, subset = std::move(layer_subset)](const IterationContext& ctx) {
        const Vector probe = ctx.data.row(ctx.batch[0]);
        for (const auto& [layer, norm] : backward_sensitivity_norms(ctx.params, probe, subset)) {
            trace.push_back({ctx.iteration, layer, norm});
        }
    };
}

std::vector<std::size_t> gradnorm_layer_subset(std::size_t layers, std::size_t stride) {
    std::vector<std::size_t> subset;
    if (layers < 2) return subset;
    for (std::size_t j = 0; j + 1 < layers; j += stride) subset.push_back(j);
    return subset;
}

std::vector<RichardsonRow> backward_ode_richardson(const Matrix& K, const Vector& b, const Matrix& J,
                                             const Vector& y0, double T,
                                             std::span<const std::size_t> layer_counts,
                                             std::size_t ode_steps) {
    const auto trajectory = integrate_backward_gradient_ode(K, b, J, y0, T, ode_steps);
    const Matrix& phi_ref = trajectory.back().value;
    const std::size_t n = y0.size();

    std::vector<RichardsonRow> rows;
    rows.reserve(layer_counts.size());
    for (std::size_t N : layer_counts) {
        const double h = T / static_cast<double>(N);
        Vector y = y0;
        Matrix product = Matrix::identity(n);
        for (std::size_t j = 0; j < N; ++j) {
            const Matrix m = layer_jacobian(y, K, b, J, h);
            product = matmul(m, product);
            y = forward_layer_h(y, K, b, J, h);
        }
        rows.push_back({N, h, frobenius_norm(sub(product, phi_ref))});
    }
    return rows;
}

void save_richardson_csv(const std::vector<RichardsonRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "layers,h,error\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", r.layers, r.h, r.error);
        out << buf;
    }
    if (!out) throw IoError(path + ": write failed");
}

VanishingDemoResult fcnn_vanishing_demo(const TrainConfig& cfg, std::size_t layers,
                                        std::size_t samples) {
    const Dataset train =
        augment_features(gen_double_moons(samples, kDoubleMoonsNoise, cfg.seed), 4);
    const Dataset test = augment_features(
        gen_double_moons(samples, kDoubleMoonsNoise, cfg.seed + 0x9e3779b97f4a7c15ULL), 4);

    const Architecture arch{Variant::FCNN, 4};
    NetworkParams params = init_network(arch, layers, 1.0, cfg.seed);
    OutputHead head = init_head(2, 4);

    VanishingDemoResult result;
    std::vector<std::size_t> subset = gradnorm_layer_subset(layers);
    const IterationCallback hook = make_gradnorm_hook(result.trace, std::move(subset));
    TrainResult tr = train_coordinate_descent(std::move(params), std::move(head), train, cfg, hook);
    result.test_accuracy = evaluate(tr.params, tr.head, test);
    result.history = std::move(tr.history);
    return result;
}

}  // namespace hamnet
