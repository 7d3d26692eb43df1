#include "nslab/field.hpp"

#include <algorithm>

namespace nslab {

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool Field::finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field& Field::operator+=(const Field& o) {
    if (!(o.grid_ == grid_)) throw std::invalid_argument("grid mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    if (!(o.grid_ == grid_)) throw std::invalid_argument("grid mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

Field& Field::operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
}

Field& Field::operator+=(double a) {
    for (double& v : values_) v += a;
    return *this;
}

Field hadamard(const Field& a, const Field& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("grid mismatch");
    Field out(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Field axpy(const Field& a, double s, const Field& b) {
    Field out = a;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += s * b[i];
    return out;
}

Field abs(const Field& a) {
    Field out(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i]);
    return out;
}

VecField::VecField(const Grid& g, std::vector<Field> comps) : grid_(g), comps_(std::move(comps)) {
    if (int(comps_.size()) != g.dim) throw std::invalid_argument("vector field needs d components");
    for (const auto& c : comps_)
        if (!(c.grid() == g)) throw std::invalid_argument("vector field components must share the grid");
}

Field VecField::magnitude() const {
    Field out(grid_);
    for (const auto& c : comps_)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i] * c[i];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]);
    return out;
}

double VecField::max_abs() const { return magnitude().max(); }

bool VecField::finite() const {
    return std::all_of(comps_.begin(), comps_.end(), [](const Field& f) { return f.finite(); });
}

double VecField::dot_integral(const VecField& o) const {
    double s = 0.0;
    for (int c = 0; c < dim(); ++c) s += hadamard((*this)[c], o[c]).integral();
    return s;
}

VecField& VecField::operator+=(const VecField& o) {
    for (int c = 0; c < dim(); ++c) comps_[std::size_t(c)] += o[c];
    return *this;
}

VecField& VecField::operator-=(const VecField& o) {
    for (int c = 0; c < dim(); ++c) comps_[std::size_t(c)] -= o[c];
    return *this;
}

VecField& VecField::operator*=(double a) {
    for (auto& c : comps_) c *= a;
    return *this;
}

Field TensorField::frobenius() const {
    Field out(grid);
    for (const auto& e : entries)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += e[i] * e[i];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]);
    return out;
}

Field TensorField::trace() const {
    Field out(grid);
    for (int i = 0; i < grid.dim; ++i) out += at(i, i);
    return out;
}

}  // namespace nslab
