#pragma once

#include <functional>
#include <vector>

#include "spherevort/construction.hpp"
#include "spherevort/geometry.hpp"

namespace spherevort {

// ---------------------------------------------------------------------------
// Analytic odd-odd fields
// ---------------------------------------------------------------------------

// A field given in closed form on the quarter chart (0,pi)x(0,pi/2) and
// extended to the sphere by odd reflection in phi and theta. Needed for
// estimate sweeps at scales (2^-20) no uniform grid can resolve.
struct AnalyticOddField {
    std::function<double(double phi, double theta)> value;  // quarter chart
    double sup_norm = 1.0;
    // sup of |grad| over the window [0, phi_max] x [0, theta_max]
    std::function<double(double phi_max, double theta_max)> grad_sup_window;
};

// Evaluates the extension to arbitrary (phi in [-pi,pi), theta in [-pi/2,pi/2]).
double analytic_field_value(const AnalyticOddField& f, double phi, double theta);

// ---------------------------------------------------------------------------
// Graded quadrature
// ---------------------------------------------------------------------------

// Tensor-product integration over an axis-parallel rectangle with node ladders
// refined geometrically toward a set of anchor coordinates per axis (region
// corners, kernel singularities). Each ladder cell carries 2-point
// Gauss-Legendre nodes per axis.
struct GradedQuadOpts {
    double ratio = 1.35;       // geometric ladder growth factor
    double core = 1e-30;       // innermost rung half-width around an anchor
    int min_cells_per_run = 4; // floor on uniform subdivisions between anchors
};

double graded_integral(const std::function<double(double, double)>& f,
                       double phi_lo, double phi_hi, double theta_lo, double theta_hi,
                       const std::vector<double>& phi_anchors,
                       const std::vector<double>& theta_anchors,
                       const GradedQuadOpts& opts);

// ---------------------------------------------------------------------------
// Velocity from the quarter-sphere kernels, analytic-field route
// ---------------------------------------------------------------------------

// Evaluates the odd-odd reduced kernels at (phi, theta) by graded quadrature
// of the analytic field over the quarter sphere, with ladders anchored at the
// target and at the image points. Accurate at targets far below grid scales.
struct QuarterVelocity {
    double u_phi = 0.0;
    double u_theta = 0.0;
};
QuarterVelocity velocity_oddodd_analytic(const AnalyticOddField& f, double phi, double theta,
                                         const GradedQuadOpts& opts);

// ---------------------------------------------------------------------------
// Estimate reports
// ---------------------------------------------------------------------------

struct EstimateReport {
    double leading = 0.0;
    double remainder = 0.0;
    double bound = 0.0;
    double ratio = 0.0;  // |remainder| / bound-without-gain: the quantity C1 majorizes
    bool pass = false;
};

enum class LeadingRegion { Q, Qtilde };
enum class VelocityComponent { phi, theta };

// (4/pi) * integral over Q(3phi/2, 3theta/2) (or the annulus Qtilde(r),
// r = sqrt(phi^2+theta^2)) of y2 y3 / |y - x0|^4 * omega, x0 = (1,0,0).
double leading_term(const AnalyticOddField& f, double phi, double theta, LeadingRegion which,
                    const GradedQuadOpts& opts);

// Normalized velocity minus leading term, with the bound
//   C1 * sup|omega| * (1 + min{ln(1+theta/phi), (M/sup|omega|) theta}),
// M the gradient sup over the local window (roles of phi and theta swap for
// the theta component).
EstimateReport remainder_B(const AnalyticOddField& f, double phi, double theta,
                           VelocityComponent component, LeadingRegion which, double C1_fit,
                           const GradedQuadOpts& opts);

// Sweep (phi,theta) = (2^-k1, 2^-k2) over k ranges; returns reports in row
// order and the max ratio (the fitted C1 before padding).
struct RemainderSweep {
    std::vector<double> phis;
    std::vector<double> thetas;
    std::vector<EstimateReport> reports;  // phis-major ordering
    double max_ratio = 0.0;
};
RemainderSweep remainder_sweep(const AnalyticOddField& f, int k_min, int k_max,
                               VelocityComponent component, LeadingRegion which, double C1_fit,
                               const GradedQuadOpts& opts);

// ---------------------------------------------------------------------------
// Approach speed of the two mirror cells
// ---------------------------------------------------------------------------

// u_phi(-eps, 0) - u_phi(eps, 0) through the displayed two-point kernel
//   (2 sin eps / pi) * int_{S^2} y2 y3 omega / (|x1e - y|^2 |x2e - y|^2),
// x_{1,2 eps} = (cos eps, -+ sin eps, 0); reduced to the quarter sphere by
// summing the four image kernels (y2 y3 omega is reflection-invariant).
double approach_speed(const AnalyticOddField& f, double eps, const GradedQuadOpts& opts);

// ---------------------------------------------------------------------------
// Double-exponential majorant
// ---------------------------------------------------------------------------

// exp( e^{2t/pi + CI (1 - e^{-2t/pi})} * max{ln grad0, 1} ); overflows to
// +infinity honestly on long horizons.
double upper_envelope(double grad0, double I, double t, double CI);

// ln ln of the same majorant, stable at any horizon.
double upper_envelope_log_log(double grad0, double I, double t, double CI);

}  // namespace spherevort
