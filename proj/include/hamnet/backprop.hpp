#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hamnet/layers.hpp"

namespace hamnet {

// Gradient of the loss w.r.t. every trainable scalar, shape-congruent with the
// stored parameterization of NetworkParams / OutputHead.
struct ParamGrads {
    std::vector<Matrix> K;
    std::vector<Vector> b;
    Matrix W;
    Vector mu;
};

ParamGrads zero_grads_like(const NetworkParams& params, const OutputHead& head);
void accumulate(ParamGrads& into, const ParamGrads& g);
void scale_grads(ParamGrads& g, double s);

// Conventional Jacobian M_j = I + h J K^T D K of the H1/H2 layer map.
// (In the column-gradient convention this reads as the transpose
// K^T D K J^T; adjoints here are propagated as g <- M^T g, which is the
// same thing.)
Matrix layer_jacobian(const Vector& y, const Matrix& K, const Vector& b, const Matrix& J,
                      double h);

// Composite Jacobian of the two Verlet substeps for MS1/MS3, evaluated at the
// stacked layer input state.
Matrix layer_jacobian_verlet(const Vector& state, const Matrix& K_stored, const Vector& b,
                             double h, Variant variant);

// Jacobian of layer j of any variant, read off a forward cache.
Matrix layer_jacobian_at(const NetworkParams& params, const ForwardCache& cache, std::size_t j);

// Reverse-mode gradients of cross_entropy(output_head(y_N), label) w.r.t. every
// trainable scalar, plus the loss value. The cache must come from
// forward_network on the same params.
std::pair<ParamGrads, double> backward(const ForwardCache& cache, const NetworkParams& params,
                                       const OutputHead& head, std::size_t label);

// Gradient contribution of alpha * (R_K + R_b) with
// R_K = (h/2) sum_j ||K_j - K_{j-1}||_F^2 (and likewise for b), taken over the
// stored parameter arrays. Zero for shared weights or N <= 1.
ParamGrads regularizer_grads(const NetworkParams& params, double alpha, double h);

// Values of alpha * (R_K + R_b), for objectives and finite-difference tests.
double regularizer_value(const NetworkParams& params, double alpha, double h);

struct FiniteDiffReport {
    double max_rel_err = 0.0;
    std::string worst_coordinate;
    std::size_t coordinates = 0;
};

// Central finite differences of the per-sample cross-entropy loss against
// backward(), over every trainable scalar. eps must lie in [1e-8, 1e-3].
FiniteDiffReport finite_difference_check(NetworkParams& params, OutputHead& head,
                                         const Vector& sample, std::size_t label, double eps);

// Ordered trainable arrays (hidden: K slots then b slots; head: W then mu).
// The order is the contract shared by Adam state, serialization and the
// finite-difference walker.
std::vector<std::span<double>> hidden_arrays(NetworkParams& params);
std::vector<std::span<double>> head_arrays(OutputHead& head);
std::vector<std::span<double>> hidden_arrays(ParamGrads& g);
std::vector<std::span<double>> head_arrays(ParamGrads& g);
std::vector<std::span<const double>> hidden_arrays(const NetworkParams& params);
std::vector<std::span<const double>> head_arrays(const OutputHead& head);
std::vector<std::span<const double>> hidden_arrays(const ParamGrads& g);
std::vector<std::span<const double>> head_arrays(const ParamGrads& g);

}  // namespace hamnet
