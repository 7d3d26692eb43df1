#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace nslab {

/// Periodic grid on the torus [0, 2π)^d with n samples per axis.
struct Grid {
    int dim = 1;
    int n = 64;

    static constexpr double period = 2.0 * std::numbers::pi;

    Grid() = default;
    Grid(int dim_, int n_) : dim(dim_), n(n_) { validate(); }

    void validate() const {
        if (dim != 1 && dim != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
        if (n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("grid n must be a power of two >= 8");
    }

    [[nodiscard]] double spacing() const { return period / n; }
    [[nodiscard]] std::size_t size() const { return dim == 1 ? std::size_t(n) : std::size_t(n) * n; }
    /// Quadrature weight of one cell, spacing^d.
    [[nodiscard]] double cell_volume() const { return std::pow(spacing(), dim); }
    [[nodiscard]] double volume() const { return std::pow(period, dim); }

    /// Signed lattice offset of index i in [-n/2, n/2).
    [[nodiscard]] int signed_index(int i) const { return i < n / 2 ? i : i - n; }

    /// Torus distance from the origin to the grid point with flat index idx.
    [[nodiscard]] double torus_norm(std::size_t idx) const {
        const double h = spacing();
        if (dim == 1) return std::abs(signed_index(int(idx))) * h;
        const int i = int(idx / n), j = int(idx % n);
        const double a = signed_index(i) * h, b = signed_index(j) * h;
        return std::sqrt(a * a + b * b);
    }

    /// Coordinate of sample (axis, index).
    [[nodiscard]] double coord(int i) const { return i * spacing(); }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Scalar field sampled on a Grid (row-major for d = 2: index = i*n + j, i along x).
class Field {
public:
    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) {}
    Field(const Grid& g, std::vector<double> v) : grid_(g), values_(std::move(v)) {
        if (values_.size() != grid_.size()) throw std::invalid_argument("field size does not match grid");
    }

    template <class F>
    static Field from_function(const Grid& g, F&& f) {
        Field out(g);
        const double h = g.spacing();
        if (g.dim == 1) {
            for (int i = 0; i < g.n; ++i) out[i] = f(i * h, 0.0);
        } else {
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j) out[std::size_t(i) * g.n + j] = f(i * h, j * h);
        }
        return out;
    }

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }
    [[nodiscard]] std::vector<double>& raw() { return values_; }
    [[nodiscard]] const std::vector<double>& raw() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    [[nodiscard]] double sum() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s;
    }
    [[nodiscard]] double mean() const { return sum() / double(values_.size()); }
    /// Quadrature integral over the torus.
    [[nodiscard]] double integral() const { return sum() * grid_.cell_volume(); }
    [[nodiscard]] double max() const;
    [[nodiscard]] double min() const;
    [[nodiscard]] double max_abs() const;
    [[nodiscard]] bool finite() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double a);
    Field& operator+=(double a);

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, double s) { return a *= s; }
    friend Field operator*(double s, Field a) { return a *= s; }

private:
    Grid grid_{};
    std::vector<double> values_;
};

/// Pointwise product.
Field hadamard(const Field& a, const Field& b);
/// a + s*b.
Field axpy(const Field& a, double s, const Field& b);
Field abs(const Field& a);

/// d-component vector field sharing one grid.
class VecField {
public:
    VecField() = default;
    explicit VecField(const Grid& g, double fill = 0.0) : grid_(g), comps_(std::size_t(g.dim), Field(g, fill)) {}
    VecField(const Grid& g, std::vector<Field> comps);

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] int dim() const { return grid_.dim; }
    Field& operator[](int c) { return comps_[std::size_t(c)]; }
    const Field& operator[](int c) const { return comps_[std::size_t(c)]; }

    /// Pointwise Euclidean magnitude.
    [[nodiscard]] Field magnitude() const;
    [[nodiscard]] double max_abs() const;
    [[nodiscard]] bool finite() const;
    /// Σ_c ∫ a_c b_c.
    [[nodiscard]] double dot_integral(const VecField& o) const;

    VecField& operator+=(const VecField& o);
    VecField& operator-=(const VecField& o);
    VecField& operator*=(double a);
    friend VecField operator+(VecField a, const VecField& b) { return a += b; }
    friend VecField operator-(VecField a, const VecField& b) { return a -= b; }
    friend VecField operator*(VecField a, double s) { return a *= s; }
    friend VecField operator*(double s, VecField a) { return a *= s; }

private:
    Grid grid_{};
    std::vector<Field> comps_;
};

/// ∇u stored as a d×d array of fields: entry (i, j) = ∂_j u_i.
struct TensorField {
    Grid grid;
    std::vector<Field> entries;  // row-major, size d*d

    explicit TensorField(const Grid& g) : grid(g), entries(std::size_t(g.dim * g.dim), Field(g)) {}
    Field& at(int i, int j) { return entries[std::size_t(i * grid.dim + j)]; }
    const Field& at(int i, int j) const { return entries[std::size_t(i * grid.dim + j)]; }
    /// Pointwise Frobenius norm.
    [[nodiscard]] Field frobenius() const;
    [[nodiscard]] Field trace() const;
};

}  // namespace nslab
