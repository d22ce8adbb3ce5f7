#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hamnet/backprop.hpp"
#include "hamnet/layers.hpp"
#include "hamnet/training.hpp"

namespace hamnet {

// phi(T, T-t) = dy(T)/dy(T-t), the backward gradient state. value = I at t = 0.
struct SensitivityMatrix {
    Matrix value;
    double horizon = 0.0;  // T
    double elapsed = 0.0;  // t
};

// Spectral norms of dy_N/dy_{j+1} = M_{N-1} ... M_{j+1} for each requested j.
// j = N-1 is the empty product, reported as exactly 1. Results are sorted by j.
std::vector<std::pair<std::size_t, double>> backward_sensitivity_norms(
    const NetworkParams& params, const Vector& y0, std::span<const std::size_t> layer_subset);

// Integrates the backward gradient dynamics of a time-invariant system
// f(y) = J K^T tanh(K y + b): first the state trajectory on [0, T] with RK4,
// then dPhi/dt = Phi A(T-t) with A = J K^T D K evaluated along the stored
// trajectory. Returns phi(T, T-t) at every step boundary t = k T / steps.
std::vector<SensitivityMatrix> integrate_backward_gradient_ode(const Matrix& K, const Vector& b,
                                                               const Matrix& J, const Vector& y0,
                                                               double T, std::size_t steps);

// Same entry point over a whole (time-invariant) network.
std::vector<SensitivityMatrix> integrate_backward_gradient_ode(const NetworkParams& params,
                                                               const Vector& y0, double T,
                                                               std::size_t steps);

// Marginal-stability witness for the Jacobian K^T D K J^T at a state y:
// S = D^{1/2} K J^T K^T D^{1/2} must be skew-symmetric (which makes the similar
// Jacobian purely imaginary and diagonalizable); the QR eigensolver reports the
// worst real part directly.
struct StabilityReport {
    double skew_residual = 0.0;      // ||S + S^T||_F
    double skew_residual_rel = 0.0;  // relative to ||S||_F
    double normality_residual = 0.0; // ||S S^T - S^T S||_F
    double max_re_lambda = 0.0;
    bool pass = false;
};

StabilityReport check_marginal_stability_spectrum(const Matrix& K, const Vector& b,
                                                  const Vector& y, const Matrix& J);

// Extreme singular values of Phi(t) with dPhi/dt = A Phi, Phi(0) = I, sampled
// at the given time grid (RK4 between checkpoints).
struct EnvelopePoint {
    double t = 0.0;
    double sigma_max = 0.0;
    double sigma_min = 0.0;
};

std::vector<EnvelopePoint> exp_norm_envelope(const Matrix& A, std::span<const double> t_grid);

// Condition-number bound for the envelope of A = K^T D K J^T systems:
// with T = D^{1/2} K invertible, exp(At) = T^T exp(St) T^{-T} with S skew, so
// sigma_max <= cond(T) and sigma_min >= 1/cond(T).
double envelope_condition_bound(const Matrix& K, const Vector& b, const Vector& y);

struct GradNormSample {
    std::size_t iteration = 0;
    std::size_t layer = 0;
    double norm = 0.0;
};
using GradNormTrace = std::vector<GradNormSample>;

void save_gradnorm_csv(const GradNormTrace& trace, const std::string& path);

struct SpectrumRow {
    std::string label;
    double max_re_lambda = 0.0;
    double skew_residual = 0.0;
};
void save_spectrum_csv(const std::vector<SpectrumRow>& rows, const std::string& path);

// Training hook recording backward sensitivity norms on the first sample of
// every mini-batch for the given layer indices.
IterationCallback make_gradnorm_hook(GradNormTrace& trace, std::vector<std::size_t> layer_subset);

// Default audit subset {0, 10, 20, ...} up to N-2.
std::vector<std::size_t> gradnorm_layer_subset(std::size_t layers, std::size_t stride = 10);

// Discretization study for the backward gradient ODE: error between the
// integrated phi(T, 0) and the product of discrete layer Jacobians of an
// N-layer Euler network with h = T/N, for each N. First-order convergence
// shows as the error halving when N doubles.
struct RichardsonRow {
    std::size_t layers = 0;
    double h = 0.0;
    double error = 0.0;
};

std::vector<RichardsonRow> backward_ode_richardson(const Matrix& K, const Vector& b, const Matrix& J,
                                             const Vector& y0, double T,
                                             std::span<const std::size_t> layer_counts,
                                             std::size_t ode_steps);
void save_richardson_csv(const std::vector<RichardsonRow>& rows, const std::string& path);

// 32-layer FCNN negative control on double moons: trains under the 2-D
// protocol (head weight decay 2e-4) while tracing gradient norms; returns the
// trace and the final test accuracy.
struct VanishingDemoResult {
    GradNormTrace trace;
    double test_accuracy = 0.0;
    std::vector<HistoryRow> history;
};

VanishingDemoResult fcnn_vanishing_demo(const TrainConfig& cfg, std::size_t layers = 32,
                                        std::size_t samples = 5000);

}  // namespace hamnet
