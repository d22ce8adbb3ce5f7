#include "hamnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hamnet {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
        throw DimensionError("Matrix: buffer length " + std::to_string(data.size()) +
                             " does not match " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void check_finite(const double* values, std::size_t count, const char* op) {
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(values[i])) {
            throw NumericError(std::string(op) + ": non-finite entry at flat index " +
                               std::to_string(i));
        }
    }
}

void check_finite(const Matrix& m, const char* op) { check_finite(m.data.data(), m.data.size(), op); }
void check_finite(const Vector& v, const char* op) { check_finite(v.data.data(), v.data.size(), op); }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: " + shape_str(a) + " * " + shape_str(b));
    }
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.data[k * b.cols];
            double* crow = &c.data[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    check_finite(c, "matmul");
    return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols != x.size()) {
        throw DimensionError("matvec: " + shape_str(a) + " * vec(" + std::to_string(x.size()) + ")");
    }
    Vector y(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* row = &a.data[i * a.cols];
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    check_finite(y, "matvec");
    return y;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
    if (a.rows != x.size()) {
        throw DimensionError("matvec_transposed: " + shape_str(a) + "^T * vec(" +
                             std::to_string(x.size()) + ")");
    }
    Vector y(a.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = &a.data[i * a.cols];
        for (std::size_t j = 0; j < a.cols; ++j) y[j] += row[j] * xi;
    }
    check_finite(y, "matvec_transposed");
    return y;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionError("add: " + shape_str(a) + " + " + shape_str(b));
    Matrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] + b.data[i];
    check_finite(c, "add");
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionError("sub: " + shape_str(a) + " - " + shape_str(b));
    Matrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] - b.data[i];
    check_finite(c, "sub");
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] * s;
    check_finite(c, "scale");
    return c;
}

Matrix elementwise_map(const Matrix& a, const std::function<double(double)>& f) {
    Matrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = f(a.data[i]);
    check_finite(c, "elementwise_map");
    return c;
}

Matrix outer(const Vector& u, const Vector& v) {
    Matrix c(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) c(i, j) = u[i] * v[j];
    check_finite(c, "outer");
    return c;
}

Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("vector add: length mismatch");
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

Vector sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("vector sub: length mismatch");
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

Vector scale(const Vector& a, double s) {
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * s;
    return c;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double x : a.data) acc += x * x;
    return std::sqrt(acc);
}

double spectral_norm(const Matrix& a) {
    check_finite(a, "spectral_norm input");
    const std::size_t n = a.cols;
    if (n == 0 || a.rows == 0) return 0.0;

    // Gram matrix a^T a; its top eigenvalue is sigma_max^2.
    Matrix b(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.rows; ++k) acc += a(k, i) * a(k, j);
            b(i, j) = acc;
            b(j, i) = acc;
        }
    }

    double bnorm = frobenius_norm(b);
    if (bnorm == 0.0) return 0.0;

    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i);
    {
        const double nv = norm2(v);
        for (std::size_t i = 0; i < n; ++i) v[i] /= nv;
    }

    constexpr double rel_tol = 1e-10;
    constexpr int max_iters = 10000;
    double lambda_prev = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iters; ++iter) {
        Vector w = matvec(b, v);
        const double lambda = dot(v, w);  // Rayleigh quotient, exact for the fixed point
        const double wn = norm2(w);
        if (wn == 0.0) {
            // v landed in the kernel; restart from a canonical direction.
            std::fill(v.data.begin(), v.data.end(), 0.0);
            v[iter % n] = 1.0;
            lambda_prev = 0.0;
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
        residual = std::abs(lambda - lambda_prev);
        if (iter > 0 && residual <= rel_tol * std::max(std::abs(lambda), 1e-300)) {
            return std::sqrt(std::max(lambda, 0.0));
        }
        lambda_prev = lambda;
    }
    throw ConvergenceError("spectral_norm: power iteration did not converge",
                           std::sqrt(std::max(lambda_prev, 0.0)), residual);
}

namespace {

// Householder reduction to upper Hessenberg form, in place.
void hessenberg_reduce(Matrix& h) {
    const std::size_t n = h.rows;
    if (n < 3) return;
    std::vector<double> u(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double colnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) colnorm += h(i, k) * h(i, k);
        colnorm = std::sqrt(colnorm);
        if (colnorm == 0.0) continue;

        const double alpha = (h(k + 1, k) >= 0.0) ? -colnorm : colnorm;
        double unorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            u[i] = h(i, k);
            if (i == k + 1) u[i] -= alpha;
            unorm2 += u[i] * u[i];
        }
        if (unorm2 == 0.0) continue;

        // H <- P H P with P = I - 2 u u^T / (u^T u), acting on rows/cols k+1..n-1.
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += u[i] * h(i, j);
            s = 2.0 * s / unorm2;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * u[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * u[j];
            s = 2.0 * s / unorm2;
            for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * u[j];
        }
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

void append_block_eigenvalues(const Matrix& h, std::size_t lo, std::size_t size,
                              std::vector<std::complex<double>>& out) {
    if (size == 1) {
        out.emplace_back(h(lo, lo), 0.0);
        return;
    }
    const double a = h(lo, lo), b = h(lo, lo + 1);
    const double c = h(lo + 1, lo), d = h(lo + 1, lo + 1);
    const double tr_half = 0.5 * (a + d);
    const double det = a * d - b * c;
    const double disc = tr_half * tr_half - det;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        // Larger-magnitude root first, partner from the determinant (avoids cancellation).
        const double l1 = (tr_half >= 0.0) ? tr_half + root : tr_half - root;
        const double l2 = (l1 != 0.0) ? det / l1 : tr_half - std::copysign(root, tr_half);
        out.emplace_back(l1, 0.0);
        out.emplace_back(l2, 0.0);
    } else {
        const double imag = std::sqrt(-disc);
        out.emplace_back(tr_half, imag);
        out.emplace_back(tr_half, -imag);
    }
}

void householder3(double x, double y, double z, double v[3], bool& nontrivial) {
    const double norm = std::sqrt(x * x + y * y + z * z);
    nontrivial = false;
    if (norm == 0.0) return;
    const double alpha = (x >= 0.0) ? -norm : norm;
    v[0] = x - alpha;
    v[1] = y;
    v[2] = z;
    const double vnorm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if (vnorm2 == 0.0) return;
    const double inv = std::sqrt(2.0 / vnorm2);
    v[0] *= inv;
    v[1] *= inv;
    v[2] *= inv;
    nontrivial = true;  // P = I - v v^T with |v| = sqrt(2)
}

// One implicit Francis double-shift sweep on the active block h[lo..hi].
void francis_sweep(Matrix& h, std::size_t lo, std::size_t hi, double shift_s, double shift_t) {
    const std::size_t n = h.rows;
    double x = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) - shift_s * h(lo, lo) + shift_t;
    double y = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - shift_s);
    double z = (lo + 2 <= hi) ? h(lo + 1, lo) * h(lo + 2, lo + 1) : 0.0;

    for (std::size_t k = lo; k + 1 < hi; ++k) {
        double v[3];
        bool nontrivial;
        householder3(x, y, z, v, nontrivial);
        if (nontrivial) {
            const std::size_t r = std::min(k + 2, hi);  // rows touched: k, k+1, (k+2)
            const std::size_t rcount = r - k + 1;
            const std::size_t jstart = (k > lo) ? k - 1 : lo;
            for (std::size_t j = jstart; j < n; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < rcount; ++i) s += v[i] * h(k + i, j);
                for (std::size_t i = 0; i < rcount; ++i) h(k + i, j) -= v[i] * s;
            }
            const std::size_t iend = std::min(k + 3, hi);
            for (std::size_t i = 0; i <= iend; ++i) {
                double s = 0.0;
                for (std::size_t jj = 0; jj < rcount; ++jj) s += h(i, k + jj) * v[jj];
                for (std::size_t jj = 0; jj < rcount; ++jj) h(i, k + jj) -= s * v[jj];
            }
        }
        x = h(k + 1, k);
        if (k + 2 <= hi) y = h(k + 2, k);
        z = (k + 3 <= hi) ? h(k + 3, k) : 0.0;
    }

    // Final 2x2 rotation on rows hi-1, hi.
    {
        const std::size_t k = hi - 1;
        const double norm = std::hypot(x, y);
        if (norm != 0.0) {
            const double alpha = (x >= 0.0) ? -norm : norm;
            double v0 = x - alpha, v1 = y;
            const double vnorm2 = v0 * v0 + v1 * v1;
            if (vnorm2 != 0.0) {
                const double inv = std::sqrt(2.0 / vnorm2);
                v0 *= inv;
                v1 *= inv;
                const std::size_t jstart = (k > lo) ? k - 1 : lo;
                for (std::size_t j = jstart; j < n; ++j) {
                    const double s = v0 * h(k, j) + v1 * h(k + 1, j);
                    h(k, j) -= v0 * s;
                    h(k + 1, j) -= v1 * s;
                }
                for (std::size_t i = 0; i <= hi; ++i) {
                    const double s = h(i, k) * v0 + h(i, k + 1) * v1;
                    h(i, k) -= s * v0;
                    h(i, k + 1) -= s * v1;
                }
            }
        }
    }
}

}  // namespace

std::vector<std::complex<double>> eigenvalues_qr(const Matrix& a) {
    if (a.rows != a.cols) {
        throw DimensionError("eigenvalues_qr: matrix is " + std::to_string(a.rows) + "x" +
                             std::to_string(a.cols));
    }
    check_finite(a, "eigenvalues_qr input");
    const std::size_t n = a.rows;
    std::vector<std::complex<double>> eigs;
    if (n == 0) return eigs;
    eigs.reserve(n);

    Matrix h = a;
    hessenberg_reduce(h);

    constexpr double tol = 1e-10;
    const double hnorm = std::max(frobenius_norm(h), std::numeric_limits<double>::min());
    const std::size_t max_sweeps = 100 * n;

    std::size_t hi = n - 1;
    std::size_t sweeps = 0;
    std::size_t stall = 0;  // sweeps since last deflation, drives exceptional shifts

    while (true) {
        // Zero out negligible subdiagonals, then find the active block [lo, hi].
        std::size_t lo = hi;
        while (lo > 0) {
            const double off = std::abs(h(lo, lo - 1));
            double scale = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (scale == 0.0) scale = hnorm;
            if (off <= tol * scale) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }

        if (lo == hi) {
            append_block_eigenvalues(h, hi, 1, eigs);
            if (hi == 0) break;
            --hi;
            stall = 0;
            continue;
        }
        if (lo + 1 == hi) {
            append_block_eigenvalues(h, lo, 2, eigs);
            if (lo == 0) break;
            hi = lo - 1;
            stall = 0;
            continue;
        }

        if (sweeps++ >= max_sweeps) {
            throw ConvergenceError("eigenvalues_qr: QR iteration did not deflate after " +
                                       std::to_string(max_sweeps) + " sweeps",
                                   h(hi, hi), std::abs(h(hi, hi - 1)));
        }

        // Double shift from the trailing 2x2 block; exceptional ad-hoc shift when stalled.
        double s, t;
        if (stall > 0 && stall % 10 == 0) {
            const double w = std::abs(h(hi, hi - 1)) + std::abs(h(hi - 1, hi - 2));
            s = 1.5 * w;
            t = w * w;
        } else {
            s = h(hi - 1, hi - 1) + h(hi, hi);
            t = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
        }
        francis_sweep(h, lo, hi, s, t);
        ++stall;
    }

    return eigs;
}

}  // namespace hamnet
