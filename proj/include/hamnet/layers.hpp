#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hamnet/linalg.hpp"

namespace hamnet {

enum class Variant { H1, H2, MS1, MS2, MS3, FCNN };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// State dimension n is the post-augmentation dimension. H1/MS1/MS3 need n even
// (paired (y, z) halves / block structure).
struct Architecture {
    Variant variant = Variant::H1;
    std::size_t n = 0;
};

void validate_architecture(const Architecture& arch);

// Trainable hidden-layer parameters. K holds the *stored* parameterization,
// which is exactly the set of trainable scalars:
//   H1, H2, FCNN : K[j] is n x n, b[j] has length n
//   MS1          : K[j] is K0, (n/2) x (n/2); b[j] = [b1; b2], length n
//   MS2          : K[j] packs the strict upper triangle row-major into an
//                  n(n-1)/2 x 1 matrix; the skew matrix U - U^T is materialized
//                  on demand (skew-symmetry is structural, never penalized)
//   MS3          : K[j] stacks [K1; K2], n x (n/2); b[j] = [b1; b2]
// With shared_weights (time-invariant network) a single stored slot is used by
// every layer.
struct NetworkParams {
    Architecture arch;
    std::size_t layers = 0;  // N
    double step = 0.0;       // h
    bool shared_weights = false;
    std::vector<Matrix> K;
    std::vector<Vector> b;
    Matrix J;  // n x n for H1/H2, empty otherwise

    std::size_t slot(std::size_t layer) const { return shared_weights ? 0 : layer; }
    std::size_t stored_slots() const { return K.size(); }
};

struct OutputHead {
    Matrix W;   // M x n, or 1 x n with a logistic unit when M = 2
    Vector mu;
    std::size_t classes = 0;

    std::size_t logit_rows() const { return classes == 2 ? 1 : classes; }
};

// Per-layer forward pass records used by backprop and the Jacobian builders.
// a1/t1/d1 belong to the (first) substep: pre-activation, tanh, tanh'.
// Verlet variants (MS1, MS3) also fill a2/t2/d2 for the second substep.
struct LayerCache {
    Vector a1, t1, d1;
    Vector a2, t2, d2;
};

struct ForwardCache {
    std::vector<Vector> states;      // y_0 .. y_N (stacked [y; z] for MS1/MS3)
    std::vector<LayerCache> layers;  // N entries
};

// Sum of log cosh(K y + b), evaluated in the overflow-safe form
// |x| + log((1 + e^{-2|x|}) / 2).
double hamiltonian_energy(const Vector& y, const Matrix& K, const Vector& b);

// K^T tanh(K y + b).
Vector hamiltonian_gradient(const Vector& y, const Matrix& K, const Vector& b);

double log_cosh(double x);
double tanh_prime(double tanh_value);

// The constant skew-symmetric interconnection matrix: block [[0, I], [-I, 0]]
// for H1 (n even), signed all-ones triangle for H2.
Matrix make_interconnection(Variant variant, std::size_t n);

// Expand the packed strict-upper storage into the full skew matrix U - U^T.
Matrix ms2_materialize(const Matrix& packed, std::size_t n);
std::size_t ms2_packed_len(std::size_t n);

// y + h J K^T tanh(K y + b)
Vector forward_layer_h(const Vector& y, const Matrix& K, const Vector& b, const Matrix& J,
                       double h);

// Verlet pair: z' = z - h tanh(K0^T y + b1), then y' = y + h tanh(K0 z' + b2).
std::pair<Vector, Vector> forward_layer_ms1(const Vector& y, const Vector& z, const Matrix& K0,
                                            const Vector& b1, const Vector& b2, double h);

// y + h tanh(K y + b) with K skew-symmetric (already materialized).
Vector forward_layer_ms2(const Vector& y, const Matrix& K_skew, const Vector& b, double h);

// Verlet pair: y' = y + h K1^T tanh(K1 z + b1), then z' = z - h K2^T tanh(K2 y' + b2).
std::pair<Vector, Vector> forward_layer_ms3(const Vector& y, const Vector& z, const Matrix& K1,
                                            const Matrix& K2, const Vector& b1, const Vector& b2,
                                            double h);

// Baseline fully-connected layer y' = tanh(K y + b).
Vector forward_layer_fcnn(const Vector& y, const Matrix& K, const Vector& b);

// Applies the variant's layer map N times, recording states and per-layer
// activation data. Throws NumericError naming the layer index if a state
// goes non-finite.
std::pair<Vector, ForwardCache> forward_network(const Vector& y0, const NetworkParams& params);

// Class probabilities: softmax(W y + mu) for M > 2, logistic for M = 2
// (returned as (p, 1-p)). Max-subtraction keeps the softmax finite.
Vector output_head(const Vector& y, const OutputHead& head);

// Trainable scalar counts; per-layer counts match the closed forms
// n^2+n (H1/H2/FCNN), n^2/4+n (MS1), (n^2+n)/2 (MS2), n^2/2+n (MS3).
std::size_t params_per_layer(const Architecture& arch);
std::size_t trainable_scalar_count(const NetworkParams& params, const OutputHead& head);

// Fresh network: K entries i.i.d. normal with std 1/sqrt(n), b = 0, W = 0, mu = 0.
NetworkParams init_network(const Architecture& arch, std::size_t layers, double h,
                           std::uint64_t seed, bool shared_weights = false);
OutputHead init_head(std::size_t classes, std::size_t n);

}  // namespace hamnet
