#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "spherevort/field.hpp"

namespace spherevort {

inline constexpr double kInvE = 0.36787944117144233;   // 1/e
inline constexpr double kTwoOverPi = 0.63661977236758138;

// ---------------------------------------------------------------------------
// Profile functions
// ---------------------------------------------------------------------------

// g(s) = s * ln(e^e - 1 + |ln s|) on (0, 1/e]; g(1/e) = 1.
double g_eval(double s);

// Same formula without the domain restriction (any s > 0); used where a ramp
// extends past 1/e.
double g_eval_extended(double s);

// g'(s) = ln(e^e - 1 - ln s) - 1/(e^e - 1 - ln s); lies in (1, g(s)/s).
double gprime_eval(double s);

// f(s) = 2 + ln ln(e^e - 1 + |ln s|).
double f_eval(double s);

// ---------------------------------------------------------------------------
// The h profile
// ---------------------------------------------------------------------------

enum class HMethod { flat_chart, sphere_quadrature };

// h(s): the normalized mass of the attracting kernel over the annular region
// {(phi', theta') in (0,pi)x(0,pi/2) : phi'^2 + theta'^2 > s^2 + g(s)^2},
// divided by |ln s|. flat_chart uses the closed form of the polar-coordinate
// integral of phi' theta'/(phi'^2+theta'^2)^2; sphere_quadrature integrates
// the actual spherical kernel y2 y3/|y-x0|^4 with the cos(theta') area factor.
// The two agree up to O(1/|ln s|) and both approach 2/pi from below.
double h_eval(double s, HMethod method);

// h(s)*|ln s| expressed through ell = -ln s, stable for ell far beyond the
// range where s itself is representable (flat-chart closed form).
double h_times_log_from_ell(double ell);

// The constant radial tail of the closed form (the part of the polar integral
// beyond r = pi/2, where the quarter arc starts getting clipped).
double h_outer_constant();

// ---------------------------------------------------------------------------
// Derived constants
// ---------------------------------------------------------------------------

struct ConstructionConstants {
    double C1 = 0.0;      // remainder gain (fitted upstream)
    double Cr = 0.0;      // region-substitution slack (fitted upstream)
    double CI = 0.0;      // growth offset (fitted upstream; settable later)
    double s0 = 0.0;      // threshold below which the attraction dominates
    double Cprime = 0.0;  // outer-speed gain, max over [s0, 1/e)
    double rho0 = 0.0;    // outer gap minimum over [s0, 1/e)
    double C2 = 0.0;      // boundary offset, > 3*C1 + Cr
    double C3 = 0.0;      // 2*C2/cos(1)
    double Cpp = 0.0;     // assembled bookkeeping constant (C'')
};

// From fitted C1 and Cr, finds the largest grid s0 <= e^{-4} such that
//   h(s)|ln s| >= (C1/(cos 1 cos(1/e))) f(s) + Cr   for all s <= s0,
// then extremizes the outer-speed gain and gap over [s0, 1/e) and assembles
// the bookkeeping constants. Throws if no s0 exists down to e^{-300}.
ConstructionConstants derive_constants(double C1_fit, double Cr_fit);

// ---------------------------------------------------------------------------
// Envelope ODE system
// ---------------------------------------------------------------------------

// State of the coupled contraction/attraction envelope. alpha and eps decay
// beyond double range on long horizons, so the integrated primaries are
// ln(alpha) and k = ln(-ln eps); alpha() and eps() may honestly underflow.
struct EnvelopeState {
    double t = 0.0;
    double ln_alpha = 0.0;
    double k = 0.0;

    double alpha() const { return std::exp(ln_alpha); }
    double eps() const { return std::exp(-std::exp(k)); }
};

// Probe supplying inf over s in [0, alpha] of (phi-velocity at the right edge
// divided by cos s); arguments are (t, alpha-as-ln). A live solver can bind
// its own; standalone runs use the built-in right-edge bound, which is
// proportional to alpha and keeps alpha positive for all time.
using VelocityProbe = std::function<double(double t, double ln_alpha)>;

struct EnvelopeParams {
    ConstructionConstants consts;
    VelocityProbe probe;  // empty -> the standalone right-edge bound
};

// Initial state: alpha(0) = 1, eps(0) = largest ladder value <= s0 whose
// decay bracket is already positive (so eps'(0) < 0). Throws if none exists.
EnvelopeState envelope_init(const ConstructionConstants& consts);

// One fixed-step RK4 update of (ln alpha, k). Enforces alpha in (0,1],
// eps in (0, s0], k nondecreasing; throws on violation.
EnvelopeState envelope_step(const EnvelopeState& state, double dt, const EnvelopeParams& params);

// Right-hand sides (exposed for tests): d(ln alpha)/dt and dk/dt.
double envelope_dlnalpha_dt(double t, double ln_alpha, const EnvelopeParams& params);
double envelope_dk_dt(double k, const ConstructionConstants& consts);

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

// Exact membership predicates on the closed quarter chart [0,pi]x[0,pi/2].
struct RegionSpec {
    enum class Kind {
        Q,          // {phi' in (k1,pi), theta' in (k2,pi/2)}
        Qtilde,     // {sqrt(phi'^2+theta'^2) > r} within the open quarter
        Q2,         // {phi' in (0,k1], theta' in (0,pi/2)}: near-meridian band
        Q3,         // {phi' in (k1,pi), theta' in (0,k2]}: far low band
        Q3p,        // {phi' in (k2,pi), theta' in (0,k2]}: Q3 beyond the square
        Q4,         // {phi' in (k1,k2], theta' in (0,k2]}: local square part
        Qt2,        // {phi' in (0,pi), theta' in (0,k2]}: full-width low band
        Qt3,        // {phi' in (0,k1], theta' in (k2,pi/2)}: near-meridian top
        Qt3p,       // {phi' in (0,k1], theta' in (k1,pi/2)}: Qt3 beyond the square
        Qt4,        // {phi' in (0,k1], theta' in (k2,k1]}: local square part
        D_s,        // trapping-region annulus: s^2+g^2 < r^2 < e^{-2}, inside Omega_0
        Omega_eps,  // {eps < phi' < 1/e, 0 < theta' < g(phi')} in the unit square
        scaled      // alpha-scaled copy of another region
    };
    Kind kind = Kind::Q;
    double k1 = 0.0, k2 = 0.0;  // Q thresholds
    double r = 0.0;             // Qtilde / D_s radius parameter
    double s = 0.0;             // D_s parameter
    double eps = 0.0;           // Omega_eps parameter
    double alpha = 1.0;         // scale for kind == scaled
    const RegionSpec* base = nullptr;  // scaled: the region being scaled
};

bool region_contains(const RegionSpec& region, double phi, double theta);

// ---------------------------------------------------------------------------
// Boundary sign conditions
// ---------------------------------------------------------------------------

struct BoundaryMargin {
    double s = 0.0;        // arc parameter along the boundary piece
    double phi = 0.0;      // probe position
    double theta = 0.0;
    double margin = 0.0;   // >= 0 means the sign condition holds
    bool pass = false;
};

struct BoundaryFluxReport {
    // Graph piece, s in [eps, s0]: u_phi <= 0 and u_theta >= 0; margins are
    // the signed distances from violation, normalized by alpha*s*sup|omega|.
    std::vector<BoundaryMargin> graph_uphi;
    std::vector<BoundaryMargin> graph_utheta;
    // Outer piece, s in [s0, 1/e): |components| < C' alpha s.
    std::vector<BoundaryMargin> outer;
    // Left-edge inflow inequality margin (single aggregate check).
    BoundaryMargin left_edge;
    bool all_pass = false;
    double worst_graph_margin = 0.0;
};

// Samples the boundary pieces of the alpha-scaled trapping region for the
// patch field chi(quadrant)*sgn pattern ("maximal field") or any field
// satisfying the sandwich, evaluating the odd-odd reduced kernels directly.
// n_samples points per piece, log-spaced in s.
BoundaryFluxReport boundary_flux_check(double alpha, double eps,
                                       const ConstructionConstants& consts, int n_samples);

}  // namespace spherevort
