#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "errors.hpp"

namespace ftlab {

/// A point of the computational square; the second coordinate is unused in 1D.
using Point = std::array<double, 2>;

/// Uniform grid on [-1, 1]^d, d in {1, 2}, with n nodes per axis.
/// Node (i, j) has flat index i + n * j and sits at (-1 + i h, -1 + j h).
class Grid {
   public:
    static constexpr int kMinNodes = 9;

    Grid(int dim, int n) : dim_(dim), n_(n) {
        if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
        if (n < kMinNodes) throw ConfigError("grid needs at least 9 nodes per axis");
        h_ = 2.0 / (n - 1);
    }

    int dim() const { return dim_; }
    int n() const { return n_; }
    double h() const { return h_; }
    std::size_t size() const { return dim_ == 1 ? std::size_t(n_) : std::size_t(n_) * n_; }

    std::size_t index(int i, int j = 0) const { return std::size_t(i) + std::size_t(n_) * j; }
    int ix(std::size_t idx) const { return int(idx % n_); }
    int jy(std::size_t idx) const { return dim_ == 1 ? 0 : int(idx / n_); }

    double coord(int i) const { return -1.0 + i * h_; }
    Point point(std::size_t idx) const {
        return {coord(ix(idx)), dim_ == 1 ? 0.0 : coord(jy(idx))};
    }

    bool is_boundary(std::size_t idx) const {
        const int i = ix(idx);
        if (i == 0 || i == n_ - 1) return true;
        if (dim_ == 1) return false;
        const int j = jy(idx);
        return j == 0 || j == n_ - 1;
    }

    /// Node nearest to a point, clamped into the grid.
    std::size_t nearest(const Point& x) const {
        auto snap = [&](double c) { return std::clamp(int(std::lround((c + 1.0) / h_)), 0, n_ - 1); };
        return dim_ == 1 ? index(snap(x[0])) : index(snap(x[0]), snap(x[1]));
    }

    friend bool operator==(const Grid& a, const Grid& b) { return a.dim_ == b.dim_ && a.n_ == b.n_; }

   private:
    int dim_;
    int n_;
    double h_;
};

/// Gridded scalar function.
class DiscreteField {
   public:
    explicit DiscreteField(Grid grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
    DiscreteField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw DomainError("field size does not match grid");
    }

    static DiscreteField sample(Grid grid, const std::function<double(const Point&)>& fn) {
        DiscreteField out(grid);
        for (std::size_t k = 0; k < grid.size(); ++k) out.values_[k] = fn(grid.point(k));
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }
    double at(int i, int j = 0) const { return values_[grid_.index(i, j)]; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

   private:
    Grid grid_;
    std::vector<double> values_;
};

/// max |a - b| over all nodes.
inline double max_abs_difference(const DiscreteField& a, const DiscreteField& b) {
    if (!(a.grid() == b.grid())) throw DomainError("fields live on different grids");
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

/// Bilinear (linear in 1D) interpolation of a field at an arbitrary point of
/// the square. Throws outside [-1, 1]^d.
inline double interpolate(const DiscreteField& u, const Point& x) {
    const Grid& g = u.grid();
    constexpr double kEdge = 1e-12;
    auto locate = [&](double c, int& i, double& w) {
        if (c < -1.0 - kEdge || c > 1.0 + kEdge) throw DomainError("interpolation point outside the grid");
        const double s = std::clamp((c + 1.0) / g.h(), 0.0, double(g.n() - 1));
        i = std::min(int(s), g.n() - 2);
        w = s - i;
    };
    int i, j = 0;
    double wx, wy = 0.0;
    locate(x[0], i, wx);
    if (g.dim() == 1) return (1 - wx) * u.at(i) + wx * u.at(i + 1);
    locate(x[1], j, wy);
    return (1 - wx) * (1 - wy) * u.at(i, j) + wx * (1 - wy) * u.at(i + 1, j) +
           (1 - wx) * wy * u.at(i, j + 1) + wx * wy * u.at(i + 1, j + 1);
}

}  // namespace ftlab
