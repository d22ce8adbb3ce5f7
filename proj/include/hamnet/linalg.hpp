#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hamnet {

// Thrown on shape violations (matmul of non-conformable operands, etc).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when an operation produces NaN/Inf entries.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown by iterative solvers; carries the last iterate so callers can inspect it.
struct ConvergenceError : std::runtime_error {
    double last_estimate;
    double residual;
    ConvergenceError(const std::string& msg, double est, double res)
        : std::runtime_error(msg), last_estimate(est), residual(res) {}
};

struct Vector {
    std::vector<double> data;

    Vector() = default;
    explicit Vector(std::size_t len) : data(len, 0.0) {}
    Vector(std::initializer_list<double> init) : data(init) {}
    explicit Vector(std::vector<double> values) : data(std::move(values)) {}

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

// Dense row-major matrix of doubles. All entries are expected to stay finite;
// operations that could produce NaN/Inf verify their result.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

void check_finite(const double* values, std::size_t count, const char* op);
void check_finite(const Matrix& m, const char* op);
void check_finite(const Vector& v, const char* op);

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);
Vector matvec_transposed(const Matrix& a, const Vector& x);  // a^T x without forming a^T
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix elementwise_map(const Matrix& a, const std::function<double(double)>& f);
Matrix outer(const Vector& u, const Vector& v);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(const Vector& a, double s);
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);

double frobenius_norm(const Matrix& a);

// Largest singular value via power iteration on a^T a.
// Relative tolerance 1e-10, at most 10000 iterations; throws ConvergenceError
// (carrying the last estimate and residual) if the iteration stalls.
double spectral_norm(const Matrix& a);

// All eigenvalues of a square matrix: Householder reduction to Hessenberg form
// followed by Francis double-shift QR with subdiagonal deflation at 1e-10.
// Complex conjugate pairs come from irreducible 2x2 blocks. Throws
// ConvergenceError after 100*n sweeps without deflation.
std::vector<std::complex<double>> eigenvalues_qr(const Matrix& a);

inline Matrix operator+(const Matrix& a, const Matrix& b) { return add(a, b); }
inline Matrix operator-(const Matrix& a, const Matrix& b) { return sub(a, b); }
inline Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }
inline Matrix operator*(double s, const Matrix& a) { return scale(a, s); }
inline Vector operator*(const Matrix& a, const Vector& x) { return matvec(a, x); }
inline Vector operator+(const Vector& a, const Vector& b) { return add(a, b); }
inline Vector operator-(const Vector& a, const Vector& b) { return sub(a, b); }
inline Vector operator*(double s, const Vector& a) { return scale(a, s); }

}  // namespace hamnet
