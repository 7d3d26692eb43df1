#pragma once

#include "nslab/field.hpp"

namespace nslab {

enum class KernelKind { FlatKh, GaussianPeriodized };

struct KernelSpec {
    KernelKind kind = KernelKind::FlatKh;
    double h = 0.1;  ///< width; standard deviation for the Gaussian
};

/// K_h(z) = (|z|+h)^{-d} for |z| <= 1/2, (1/2+h)^{-d} otherwise.
double kh_value(double r, double h, int d);

struct KernelSample {
    Field field;                  ///< centered at index 0
    bool under_resolved = false;  ///< spacing > h/2
};

/// Sampled kernel. FlatKh is left unnormalized; the Gaussian has unit quadrature mass.
KernelSample kernel_field(const KernelSpec& spec, const Grid& grid);
/// Unit-mass version (κ_h for FlatKh).
Field normalized_kernel(const KernelSpec& spec, const Grid& grid);

/// ‖K_h‖_{L1} / |ln h| on the given grid; throws if the grid does not resolve h.
double l1_norm_ratio(double h, const Grid& grid);
/// 1-D picks the coarsest power-of-two grid resolving h; 2-D uses radial quadrature.
double l1_norm_ratio(double h, int d);
/// ‖K_h‖_{L1} in 2-D by radial quadrature over the disc plus the constant tail.
double l1_norm_2d_radial(double h, int samples = 1 << 16);

/// Periodic convolution with quadrature weight spacing^d.
Field convolve(const Field& f, const Field& g);
/// κ ∗ f with the unit-mass kernel of spec.
Field mollify(const Field& f, const KernelSpec& spec);
VecField mollify(const VecField& v, const KernelSpec& spec);

struct ConvLemmaResult {
    double constant;  ///< max_z (κ1∗κ2)/(κ1+κ2)
    Field ratio;      ///< the pointwise ratio
};
/// Empirical constant of the two-kernel convolution bound.
ConvLemmaResult conv_lemma_constant(double h1, double h2, const Grid& grid);

/// ‖[fg]_δ − [f]_δ g‖_{L1}·|ln δ| / (‖f‖_{L2}‖∇g‖_{L2}); 0 when f or ∇g vanish.
double commutator_defect(const Field& f, const Field& g, double delta,
                         KernelKind kind = KernelKind::FlatKh);

/// max |z||∇K_h(z)| / K_h(z) on grid points at least two cells away from the |z| = 1/2 seam.
double gradk_constant(double h, const Grid& grid);

/// ∫ κ_h(z)|z| dz by quadrature.
double first_moment(double h, const Grid& grid);

}  // namespace nslab
