#pragma once

#include "spikefisher/rmt.hpp"
#include "spikefisher/spectral_fn.hpp"
#include "spikefisher/spectrum.hpp"

namespace spikefisher {

enum class CltMethod { closed_form, contour_lowrank, contour_general };

// Asymptotic mean and variance of the centered partial linear spectral
// statistic under the null.
struct MeanVar {
  double mu = 0.0;
  double nu = 0.0;
  CltMethod method = CltMethod::closed_form;
  double quad_error = 0.0;  // coarse-vs-fine discrepancy; 0 for closed forms
};

// f = x, H = delta_1 closed form.
MeanVar meanvar_x_delta1(double c1, double c2, const MomentProfile& moments);

// f = log, H = delta_1 closed form; requires h^2 < 1.
MeanVar meanvar_log_delta1(double c1, double c2, const MomentProfile& moments);

// f = log(1 + (c2/c1) x) closed form for the modified Wilks statistic,
// real Gaussian case.
MeanVar meanvar_regression(double c1, double c2);

// Unit-circle method for H = delta_1 and any f analytic near the support:
// the integrands are expanded in Laurent series of f(z(xi)) on |xi| = 1
// (a cosine transform of samples at real arguments), after which every
// contour integral and the r -> 1 limit are evaluated exactly as series.
// grid = 0 sizes the transform from the coefficient decay rate.
MeanVar meanvar_contour_lowrank(const SpectralFn& f, double c1, double c2,
                                const MomentProfile& moments, int grid = 0);

struct ContourOptions {
  int top_nodes = 160;         // Gauss-Legendre nodes per horizontal run
  int side_panels = 3;         // geometrically graded panels per vertical run
  int side_panel_nodes = 24;
  int bank_nodes = 256;        // nodes per support interval for the jump integral
  double lo_clearance = 0.5;   // left gap as a fraction of the left edge
  double hi_clearance = 0.35;  // right gap as a fraction of the right edge
  double height = 0.0;         // rectangle half-height; 0 = 0.35 * width
  bool error_estimate = true;  // re-run at coarser resolution for diagnostics
};

// Rectangle-contour evaluation for atomic H: the d-log mean terms use the
// analytic derivative of the bracket with respect to m0; in the variance
// cross-kernel the inner contour is collapsed onto the support, leaving a
// boundary-jump integral that keeps the two quadratures well separated.
MeanVar meanvar_contour_general(const SpectralFn& f, double c1, double c2, const SpectrumH& h,
                                const MomentProfile& moments, const ContourOptions& opts = {});

}  // namespace spikefisher
