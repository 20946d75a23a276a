#pragma once

#include <array>
#include <initializer_list>
#include <numbers>
#include <cmath>
#include <random>
#include <utility>

#include "errors.hpp"

namespace ftlab {

/// Symmetric d x d matrix, d in {1, 2, 3}, stored once as its upper triangle.
class SymMatrix {
   public:
    SymMatrix() = default;
    explicit SymMatrix(int dim) : dim_(dim) {
        if (dim < 1 || dim > 3) throw DomainError("SymMatrix dimension must be 1, 2 or 3");
    }

    static SymMatrix zero(int dim) { return SymMatrix(dim); }
    static SymMatrix identity(int dim, double scale = 1.0) {
        SymMatrix m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = scale;
        return m;
    }
    static SymMatrix diag(std::initializer_list<double> values) {
        SymMatrix m(static_cast<int>(values.size()));
        int i = 0;
        for (double v : values) {
            m(i, i) = v;
            ++i;
        }
        return m;
    }
    /// v v^T
    static SymMatrix outer(const std::array<double, 3>& v, int dim) {
        SymMatrix m(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) m(i, j) = v[i] * v[j];
        return m;
    }

    int dim() const { return dim_; }

    double& operator()(int i, int j) { return data_[slot(i, j)]; }
    double operator()(int i, int j) const { return data_[slot(i, j)]; }

    SymMatrix& operator+=(const SymMatrix& o) {
        check_same(o);
        for (int k = 0; k < 6; ++k) data_[k] += o.data_[k];
        return *this;
    }
    SymMatrix& operator-=(const SymMatrix& o) {
        check_same(o);
        for (int k = 0; k < 6; ++k) data_[k] -= o.data_[k];
        return *this;
    }
    SymMatrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }
    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
    friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }
    friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

    double trace() const {
        double t = 0.0;
        for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    /// Frobenius norm.
    double norm() const {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }

    /// A v
    std::array<double, 3> apply(const std::array<double, 3>& v) const {
        std::array<double, 3> out{0.0, 0.0, 0.0};
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) out[i] += (*this)(i, j) * v[j];
        return out;
    }

    /// v^T A v
    double quadratic(const std::array<double, 3>& v) const {
        const auto av = apply(v);
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += v[i] * av[i];
        return s;
    }

   private:
    static constexpr int kSlot[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    static int slot(int i, int j) { return kSlot[i][j]; }
    void check_same(const SymMatrix& o) const {
        if (o.dim_ != dim_) throw DomainError("SymMatrix dimension mismatch");
    }

    int dim_ = 1;
    std::array<double, 6> data_{};
};

/// Tr(A B) for symmetric A, B.
inline double trace_product(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw DomainError("SymMatrix dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) s += a(i, j) * b(i, j);
    return s;
}

/// Eigenpairs sorted by ascending eigenvalue; vectors[k] is a unit vector for values[k].
struct EigenDecomposition {
    int dim = 1;
    std::array<double, 3> values{};
    std::array<std::array<double, 3>, 3> vectors{};
};

/// Cyclic Jacobi rotations. For d <= 3 a handful of sweeps reaches machine
/// precision and the eigenvectors stay orthonormal even for clustered
/// eigenvalues, which closed-form cubic roots do not guarantee.
inline EigenDecomposition eigen(const SymMatrix& m) {
    const int d = m.dim();
    double a[3][3] = {};
    double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            a[i][j] = m(i, j);
            if (!std::isfinite(a[i][j])) throw NumericError("eigen: non-finite matrix entry");
        }
    const double scale = m.norm();
    for (int sweep = 0; sweep < 64 && d > 1; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += a[p][q] * a[p][q];
        if (std::sqrt(off) <= 1e-15 * scale || off == 0.0) break;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) {
                if (a[p][q] == 0.0) continue;
                const double tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
    }
    EigenDecomposition out;
    out.dim = d;
    std::array<int, 3> order{0, 1, 2};
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (a[order[j]][order[j]] < a[order[i]][order[i]]) std::swap(order[i], order[j]);
    for (int k = 0; k < d; ++k) {
        out.values[k] = a[order[k]][order[k]];
        for (int i = 0; i < d; ++i) out.vectors[k][i] = v[i][order[k]];
    }
    return out;
}

/// Entries uniform in [-1, 1], symmetrized as (B + B^T) / 2.
template <class Rng>
SymMatrix random_sym_matrix(int dim, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double b[3][3];
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) b[i][j] = u(rng);
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) m(i, j) = 0.5 * (b[i][j] + b[j][i]);
    return m;
}

/// Uniformly distributed rotation, rows are an orthonormal frame.
template <class Rng>
std::array<std::array<double, 3>, 3> random_rotation(int dim, Rng& rng) {
    std::array<std::array<double, 3>, 3> q{};
    if (dim == 1) {
        q[0][0] = 1.0;
    } else if (dim == 2) {
        std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
        const double t = ang(rng);
        q[0] = {std::cos(t), std::sin(t), 0.0};
        q[1] = {-std::sin(t), std::cos(t), 0.0};
    } else {
        std::normal_distribution<double> g(0.0, 1.0);
        double w = g(rng), x = g(rng), y = g(rng), z = g(rng);
        const double n = std::sqrt(w * w + x * x + y * y + z * z);
        w /= n, x /= n, y /= n, z /= n;
        q[0] = {1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)};
        q[1] = {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)};
        q[2] = {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)};
    }
    return q;
}

}  // namespace ftlab
