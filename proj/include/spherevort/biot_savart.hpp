#pragma once

#include <vector>

#include "spherevort/field.hpp"
#include "spherevort/geometry.hpp"

namespace spherevort {

// ---------------------------------------------------------------------------
// Quadrature description
// ---------------------------------------------------------------------------

enum class QuadRule { midpoint, gauss_composite };

struct QuadratureSpec {
    int n_phi = 64;
    int n_theta = 32;
    double singularity_cutoff = 0.0;  // chordal radius of the excluded ball
    QuadRule rule = QuadRule::midpoint;
};

// Chart cell diagonal sqrt(dphi^2 + dtheta^2) for an n_phi x n_theta grid.
double cell_diagonal(int n_phi, int n_theta);

// Spec with cutoff = diagonals * cell diagonal (default two diagonals).
QuadratureSpec make_quadrature(int n_phi, int n_theta, double diagonals = 2.0,
                               QuadRule rule = QuadRule::midpoint);

// Rejects non-even or undersized grids and cutoffs under one cell diagonal.
void validate_quadrature(const QuadratureSpec& q);

// ---------------------------------------------------------------------------
// Velocity evaluation
// ---------------------------------------------------------------------------

struct TangentVelocity {
    double u_phi = 0.0;    // chart component (defined when |x3| < 1)
    double u_theta = 0.0;
    Vec3 cart{0.0, 0.0, 0.0};       // tangent-projected Cartesian velocity
    double tangency_residual = 0.0; // |normal component| before projection
    bool frame_valid = false;       // false at poles: u_phi/u_theta unset
    bool gauss_warning = false;     // field violated the mean-zero constraint
};

// Biot-Savart quadrature of the cross-product kernel over the whole grid,
// excluding the chordal ball |x-y| < cutoff around the target. Deterministic
// row-major accumulation; identical arithmetic order for every target.
TangentVelocity velocity_full(const VorticityField& field, const Vec3& p, const QuadratureSpec& q);
TangentVelocity velocity_full(const VorticityField& field, double phi, double theta,
                              const QuadratureSpec& q);

// All grid nodes in one pass (row-major over targets); each entry equals the
// point evaluation at that node bit-for-bit.
std::vector<TangentVelocity> velocity_grid(const VorticityField& field, const QuadratureSpec& q);

// The quarter-sphere reductions for odd-odd fields, evaluated verbatim from
// the two explicit kernels (four image distances per source node); integrates
// over the open quarter only. Requires odd_odd symmetry and |theta| < pi/2.
TangentVelocity velocity_oddodd(const VorticityField& field, double phi, double theta,
                                const QuadratureSpec& q);

// u2 (the y-axis Cartesian component) at the north (+1) or south (-1) pole;
// vanishes for odd-odd fields.
double velocity_pole_component(const VorticityField& field, int pole, const QuadratureSpec& q);

// ---------------------------------------------------------------------------
// Stream function
// ---------------------------------------------------------------------------

enum class KernelKind { sphere, hemisphere };

// (1/2pi) integral of ln|x-y| (sphere) or ln(|x-y|/|x-ybar|) (hemisphere,
// field support required in the open upper hemisphere) against the field.
double stream_function(const VorticityField& field, const Vec3& p, KernelKind kernel,
                       const QuadratureSpec& q);

// ---------------------------------------------------------------------------
// Speed bound
// ---------------------------------------------------------------------------

struct SpeedBoundReport {
    double max_speed = 0.0;
    double bound_constant = 0.0;  // max_speed / sup|omega|
    int n_samples = 0;
};

// Sweeps |u| over the field's own nodes and reports the uniform bound.
SpeedBoundReport speed_bound_check(const VorticityField& field, const QuadratureSpec& q);

}  // namespace spherevort
