#pragma once

#include "nslab/field.hpp"

namespace nslab {

/// Dyadic maximal function: max over r ∈ {0, spacing, 2·spacing, ..., L/2} of ball averages of |f|.
Field maximal(const Field& f);

/// D_r f = (1/r) Σ_{0<|z|<=r} |∇f(x+z)| |z|^{1-d} spacing^d.
Field D_r(const Field& f, double r);
/// Same operator applied to a precomputed gradient magnitude.
Field D_r_of_magnitude(const Field& grad_mag, double r);
/// D_r at a single grid point by direct summation.
double D_r_at(const Field& grad_mag, std::size_t idx, double r);

/// ∫ K_h(z)‖D_{|z|}u − D_{|z|}u(·+z)‖_{L2} dz / (|ln h|^{1/2}‖u‖_{W^{1,2}}).
double D_shift_decay(const Field& u, double h);

struct SmoothedSignParams {
    double sigma = 1e-3;
    void validate() const;
};

/// |w|^σ: |w| − σ/2 for |w| > σ, w²/(2σ) otherwise.
double smoothed_abs(double w, double sigma);
/// sgn^σ: sgn w for |w| > σ, w/σ otherwise.
double smoothed_sign(double w, double sigma);
Field smoothed_abs(const Field& w, double sigma);

struct LagrangeCheck {
    double constant;  ///< max |f(x)−f(y)| / (|x−y|(D f(x) + D f(y)))
    int pairs;
};
/// Samples random grid pairs and returns the smallest C for the Lagrange inequality.
LagrangeCheck lagrange_constant(const Field& f, int pairs, unsigned seed);

}  // namespace nslab
