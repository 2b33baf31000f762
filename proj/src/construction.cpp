#include "spherevort/construction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "spherevort/estimates.hpp"
#include "spherevort/geometry.hpp"

namespace spherevort {

namespace {

const double kEE = std::exp(std::exp(1.0));  // e^e
const double kCos1 = std::cos(1.0);
const double kCosInvE = std::cos(kInvE);

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// lambda(ell) = ln(e^e - 1 + ell), the slowly varying factor of g at s = e^-ell.
double lam_from_ell(double ell) { return std::log(kEE - 1.0 + ell); }

// f(s) expressed through ell = -ln s (stable for any ell >= 0).
double f_from_ell(double ell) { return 2.0 + std::log(lam_from_ell(ell)); }

}  // namespace

// ---------------------------------------------------------------------------
// Profile functions
// ---------------------------------------------------------------------------

double g_eval_extended(double s) {
    require(s > 0.0, "g: s must be positive");
    return s * std::log(kEE - 1.0 + std::fabs(std::log(s)));
}

double g_eval(double s) {
    require(s > 0.0 && s <= kInvE * (1.0 + 1e-14), "g: s outside (0, 1/e]");
    return g_eval_extended(s);
}

double gprime_eval(double s) {
    require(s > 0.0 && s <= kInvE * (1.0 + 1e-14), "g': s outside (0, 1/e]");
    const double big = kEE - 1.0 - std::log(s);
    return std::log(big) - 1.0 / big;
}

double f_eval(double s) {
    require(s > 0.0 && s < 1.0, "f: s outside (0, 1)");
    return f_from_ell(-std::log(s));
}

// ---------------------------------------------------------------------------
// The h profile
// ---------------------------------------------------------------------------

double h_outer_constant() {
    // Polar integration of cos(b) sin(b) / r over the quarter rectangle
    // (0,pi)x(0,pi/2) beyond r = pi/2, where the arc starts getting clipped:
    //   pi/2 < r <= pi   : the theta' < pi/2 side cuts in,
    //   pi   < r <= pi sqrt(5)/2 : the phi' < pi side cuts in as well.
    // Both radial pieces integrate in closed form to 3/16 and
    // 1/16 - (1/2) ln(sqrt(5)/2).
    return 0.25 - 0.5 * std::log(std::sqrt(5.0) / 2.0);
}

double h_times_log_from_ell(double ell) {
    require(ell > 0.0, "h: ell must be positive");
    const double lam = lam_from_ell(ell);
    // inner radius r = s * sqrt(1 + lambda^2);  ln r = -ell + ln sqrt(1+lambda^2)
    const double ln_rin = -ell + 0.5 * std::log1p(lam * lam);
    require(ln_rin < std::log(kPi / 2.0), "h: annulus inner radius above pi/2");
    const double inner = 0.5 * (std::log(kPi / 2.0) - ln_rin);
    return (4.0 / kPi) * (inner + h_outer_constant());
}

namespace {

// Radial extent of the quarter rectangle (0,pi)x(0,pi/2) along direction b.
double quarter_rmax(double beta) {
    const double c = std::cos(beta), s = std::sin(beta);
    double r = kPi * 2.0;  // larger than the far corner
    if (c > 0.0) r = std::min(r, kPi / c);
    if (s > 0.0) r = std::min(r, (kPi / 2.0) / s);
    return r;
}

// (4/pi) * integral over the spherical annulus {r > r_in} in the quarter of
// y2 y3 / |y - x0|^4 with area weight cos(theta'), polar chart coordinates,
// log-radial composite Gauss rule.
double h_mass_sphere(double r_in) {
    static const double gl = 0.57735026918962576;  // 2-point Gauss node
    const int n_beta = 96;
    double total = 0.0;
    for (int ib = 0; ib < n_beta; ++ib) {
        const double b0 = (kPi / 2.0) * ib / n_beta;
        const double b1 = (kPi / 2.0) * (ib + 1) / n_beta;
        const double bm = 0.5 * (b0 + b1), bh = 0.5 * (b1 - b0);
        for (int jb = 0; jb < 2; ++jb) {
            const double beta = bm + (jb == 0 ? -gl : gl) * bh;
            const double rmax = quarter_rmax(beta);
            if (rmax <= r_in) continue;
            const double umax = std::log(rmax / r_in);
            const int n_u = std::max(16, static_cast<int>(umax / 0.04));
            double radial = 0.0;
            for (int iu = 0; iu < n_u; ++iu) {
                const double u0 = umax * iu / n_u;
                const double u1 = umax * (iu + 1) / n_u;
                const double um = 0.5 * (u0 + u1), uh = 0.5 * (u1 - u0);
                for (int ju = 0; ju < 2; ++ju) {
                    const double r = r_in * std::exp(um + (ju == 0 ? -gl : gl) * uh);
                    const double phi = r * std::cos(beta);
                    const double theta = r * std::sin(beta);
                    const Vec3 y = from_angles(phi, theta);
                    const double dx = y.x - 1.0, dy = y.y, dz = y.z;
                    const double d2 = dx * dx + dy * dy + dz * dz;
                    // r^2 du from the log-radial substitution of r dr
                    radial += uh * (y.y * y.z * std::cos(theta) / (d2 * d2)) * r * r;
                }
            }
            total += bh * radial;
        }
    }
    return (4.0 / kPi) * total;
}

}  // namespace

double h_eval(double s, HMethod method) {
    require(s > 0.0 && s <= std::exp(-4.0) * (1.0 + 1e-14), "h: s outside (0, e^-4]");
    const double ell = -std::log(s);
    if (method == HMethod::flat_chart) {
        return h_times_log_from_ell(ell) / ell;
    }
    const double g = g_eval_extended(s);
    const double r_in = std::sqrt(s * s + g * g);
    return h_mass_sphere(r_in) / ell;
}

// ---------------------------------------------------------------------------
// Derived constants
// ---------------------------------------------------------------------------

ConstructionConstants derive_constants(double C1_fit, double Cr_fit) {
    require(C1_fit >= 1.0, "derive_constants: C1 must be >= 1");
    require(Cr_fit > 0.0, "derive_constants: Cr must be positive");
    ConstructionConstants c;
    c.C1 = C1_fit;
    c.Cr = Cr_fit;

    const double coef = C1_fit / (kCos1 * kCosInvE);
    auto threshold_gap = [&](double ell) {
        return h_times_log_from_ell(ell) - coef * f_from_ell(ell) - Cr_fit;
    };

    // Largest s0 = e^-ell0 <= e^-4 whose gap is nonnegative for all smaller s.
    double ell0 = -1.0;
    for (double ell = 4.0; ell <= 690.0; ell += 0.25) {
        if (threshold_gap(ell) >= 0.0) {
            ell0 = ell;
            break;
        }
    }
    require(ell0 > 0.0, "derive_constants: no admissible s0 down to e^-690");
    // The gap grows linearly in ell against a doubly logarithmic term; verify
    // on a stretched tail grid anyway.
    for (double ell = ell0; ell <= 690.0; ell *= 1.25) {
        require(threshold_gap(ell) >= 0.0, "derive_constants: threshold gap dips on tail grid");
    }
    c.s0 = std::exp(-ell0);

    // Outer-speed gain (C1/cos1) * lambda * (1 + ln(1+lambda)) and gap
    // s/(Lambda*lambda - 1): the first decreases in s, the second increases,
    // so both extremes sit at s0; confirmed on a log grid.
    auto gain = [&](double ell) {
        const double lam = lam_from_ell(ell);
        return (C1_fit / kCos1) * lam * (1.0 + std::log1p(lam));
    };
    auto gap = [&](double ell) {
        const double big = kEE - 1.0 + ell;
        return std::exp(-ell) / (big * std::log(big) - 1.0);
    };
    double max_gain = 0.0, min_gap = 1e300;
    for (int i = 0; i <= 256; ++i) {
        const double ell = 1.0 + (ell0 - 1.0) * i / 256.0;
        max_gain = std::max(max_gain, gain(ell));
        min_gap = std::min(min_gap, gap(ell));
    }
    const double gain0 = gain(ell0), gap0 = gap(ell0);
    require(max_gain <= gain0 * (1.0 + 1e-12), "derive_constants: gain maximum not at s0");
    require(min_gap >= gap0 * (1.0 - 1e-12), "derive_constants: gap minimum not at s0");
    c.Cprime = gain0;
    c.rho0 = gap0;
    require(std::isfinite(c.rho0) && c.rho0 > 0.0, "derive_constants: degenerate rho0");

    c.C2 = 3.0 * C1_fit + Cr_fit + 1.0;
    c.C3 = 2.0 * c.C2 / kCos1;
    c.Cpp = (2.0 * C1_fit + c.C2) / kCos1 + 1.0;
    c.CI = 0.0;
    return c;
}

// ---------------------------------------------------------------------------
// Envelope ODE system
// ---------------------------------------------------------------------------

double envelope_dk_dt(double k, const ConstructionConstants& consts) {
    if (k > 700.0) return kTwoOverPi;  // ell overflows; the bracket has converged
    const double ell = std::exp(k);
    double sin_ratio = 1.0;
    if (ell < 40.0) {
        const double eps = std::exp(-ell);
        sin_ratio = std::sin(eps) / eps;
    }
    const double bracket = sin_ratio * h_times_log_from_ell(ell) -
                           (consts.C1 / kCos1) * std::log(lam_from_ell(ell)) -
                           (consts.Cpp + 1.0);
    return bracket / ell;
}

double envelope_dlnalpha_dt(double t, double ln_alpha, const EnvelopeParams& params) {
    const ConstructionConstants& c = params.consts;
    const double A = 3.0 * c.Cprime / (c.rho0 * kCos1);
    const double base = -(A + c.C3);
    if (params.probe) {
        require(ln_alpha > -700.0, "envelope: external probe needs representable alpha");
        const double alpha = std::exp(ln_alpha);
        const double denom = std::sin(alpha * kInvE);
        return base + params.probe(t, ln_alpha) / denom;
    }
    // Standalone right-edge bound |u_phi| <= (2/(pi e)) (|ln(2 alpha/e)| + CI) alpha,
    // divided through by sin(alpha/e) in the alpha -> 0 limit-safe form.
    const double mag = std::fabs(ln_alpha + std::log(2.0) - 1.0) + c.CI;
    double alpha_over_sin = std::exp(1.0);  // limit of alpha / sin(alpha/e)
    double cos_cap = 1.0;
    if (ln_alpha > -18.0) {
        const double alpha = std::exp(ln_alpha);
        alpha_over_sin = alpha / std::sin(alpha * kInvE);
        cos_cap = std::cos(std::min(alpha, 1.0));
    }
    return base - (2.0 / (kPi * std::exp(1.0))) * mag * alpha_over_sin / cos_cap;
}

EnvelopeState envelope_init(const ConstructionConstants& consts) {
    require(consts.s0 > 0.0, "envelope: constants not derived");
    const double ell_min = -std::log(consts.s0);
    for (double ell = ell_min; ell <= 5000.0; ell += 0.25) {
        const double k = std::log(ell);
        if (envelope_dk_dt(k, consts) > 0.0) {
            EnvelopeState st;
            st.t = 0.0;
            st.ln_alpha = 0.0;
            st.k = k;
            return st;
        }
    }
    throw std::runtime_error("envelope: no shrinking start point below s0");
}

EnvelopeState envelope_step(const EnvelopeState& state, double dt, const EnvelopeParams& params) {
    require(dt > 0.0, "envelope: dt must be positive");
    const ConstructionConstants& c = params.consts;

    auto fa = [&](double t, double la) { return envelope_dlnalpha_dt(t, la, params); };
    auto fk = [&](double k) { return envelope_dk_dt(k, c); };

    const double a0 = state.ln_alpha, k0 = state.k, t0 = state.t;
    const double a1 = fa(t0, a0);
    const double a2 = fa(t0 + dt / 2, a0 + dt / 2 * a1);
    const double a3 = fa(t0 + dt / 2, a0 + dt / 2 * a2);
    const double a4 = fa(t0 + dt, a0 + dt * a3);
    const double k1 = fk(k0);
    const double k2 = fk(k0 + dt / 2 * k1);
    const double k3 = fk(k0 + dt / 2 * k2);
    const double k4 = fk(k0 + dt * k3);

    EnvelopeState next;
    next.t = t0 + dt;
    next.ln_alpha = a0 + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
    next.k = k0 + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);

    if (!(std::isfinite(next.ln_alpha) && std::isfinite(next.k)))
        throw std::runtime_error("envelope: state left the finite range");
    if (!(next.ln_alpha < a0))
        throw std::runtime_error("envelope: alpha failed to decrease");
    if (next.ln_alpha > 0.0)
        throw std::runtime_error("envelope: alpha above 1");
    if (!(next.k >= k0))
        throw std::runtime_error("envelope: k decreased");
    const double ell_min = -std::log(c.s0);
    if (std::exp(next.k) < ell_min * (1.0 - 1e-12))
        throw std::runtime_error("envelope: eps above s0");
    return next;
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

bool region_contains(const RegionSpec& region, double phi, double theta) {
    using K = RegionSpec::Kind;
    const double half = kPi / 2.0;
    switch (region.kind) {
        case K::Q:
            return phi > region.k1 && phi < kPi && theta > region.k2 && theta < half;
        case K::Qtilde:
            return phi > 0.0 && phi < kPi && theta > 0.0 && theta < half &&
                   phi * phi + theta * theta > region.r * region.r;
        case K::Q2:
            return phi > 0.0 && phi <= region.k1 && theta > 0.0 && theta < half;
        case K::Q3:
            return phi > region.k1 && phi < kPi && theta > 0.0 && theta <= region.k2;
        case K::Q3p:
            return phi > region.k2 && phi < kPi && theta > 0.0 && theta <= region.k2;
        case K::Q4:
            return phi > region.k1 && phi <= region.k2 && theta > 0.0 && theta <= region.k2;
        case K::Qt2:
            return phi > 0.0 && phi < kPi && theta > 0.0 && theta <= region.k2;
        case K::Qt3:
            return phi > 0.0 && phi <= region.k1 && theta > region.k2 && theta < half;
        case K::Qt3p:
            return phi > 0.0 && phi <= region.k1 && theta > region.k1 && theta < half;
        case K::Qt4:
            return phi > 0.0 && phi <= region.k1 && theta > region.k2 && theta <= region.k1;
        case K::D_s: {
            if (!(phi > 0.0 && phi < kInvE && theta > 0.0)) return false;
            if (theta >= g_eval(phi)) return false;
            const double g = g_eval_extended(region.s);
            const double r2 = phi * phi + theta * theta;
            return r2 > region.s * region.s + g * g && r2 < std::exp(-2.0);
        }
        case K::Omega_eps:
            return phi > region.eps && phi < kInvE && theta > 0.0 && phi < 1.0 && theta < 1.0 &&
                   theta < g_eval(phi);
        case K::scaled: {
            require(region.base != nullptr && region.alpha > 0.0, "region: bad scaled spec");
            return region_contains(*region.base, phi / region.alpha, theta / region.alpha);
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Boundary sign conditions
// ---------------------------------------------------------------------------

BoundaryFluxReport boundary_flux_check(double alpha, double eps,
                                       const ConstructionConstants& consts, int n_samples) {
    require(alpha > 0.0 && alpha <= 1.0, "boundary_flux: alpha outside (0,1]");
    require(consts.s0 > 0.0, "boundary_flux: constants not derived");
    require(eps > 0.0 && eps <= consts.s0, "boundary_flux: eps outside (0,s0]");
    require(n_samples >= 2, "boundary_flux: need at least 2 samples");

    // Largest admissible field under the sandwich: 1 on the open quarter.
    AnalyticOddField full;
    full.value = [](double p, double t) { return (p > 0.0 && t > 0.0) ? 1.0 : 0.0; };
    full.sup_norm = 1.0;
    full.grad_sup_window = [](double, double) { return 0.0; };

    GradedQuadOpts opts;
    opts.core = std::max(1e-280, eps * alpha * 1e-8);

    BoundaryFluxReport rep;
    rep.all_pass = true;
    rep.worst_graph_margin = 1e300;

    const double tol = -1e-6;

    // Graph piece, s in [eps, s0]: u_phi <= 0, u_theta >= 0.
    const double l_lo = std::log(eps), l_hi = std::log(consts.s0);
    for (int i = 0; i < n_samples; ++i) {
        const double s = std::exp(l_lo + (l_hi - l_lo) * i / (n_samples - 1));
        const double phi = alpha * s;
        const double theta = alpha * g_eval_extended(s);
        const QuarterVelocity v = velocity_oddodd_analytic(full, phi, theta, opts);
        const double scale = alpha * s * full.sup_norm;
        BoundaryMargin mp{s, phi, theta, -v.u_phi / scale, false};
        mp.pass = mp.margin >= tol;
        BoundaryMargin mt{s, phi, theta, v.u_theta / scale, false};
        mt.pass = mt.margin >= tol;
        rep.graph_uphi.push_back(mp);
        rep.graph_utheta.push_back(mt);
        rep.all_pass = rep.all_pass && mp.pass && mt.pass;
        rep.worst_graph_margin = std::min({rep.worst_graph_margin, mp.margin, mt.margin});
    }

    // Outer graph piece, s in [s0, 1/e): strict speed cap C' alpha s.
    const double o_lo = std::log(consts.s0), o_hi = std::log(kInvE * 0.999);
    for (int i = 0; i < n_samples; ++i) {
        const double s = std::exp(o_lo + (o_hi - o_lo) * i / (n_samples - 1));
        const double phi = alpha * s;
        const double theta = alpha * g_eval_extended(s);
        const QuarterVelocity v = velocity_oddodd_analytic(full, phi, theta, opts);
        const double cap = consts.Cprime * alpha * s;
        BoundaryMargin m{s, phi, theta, std::min(cap - v.u_phi, v.u_theta + cap) / cap, false};
        m.pass = m.margin >= tol;
        rep.outer.push_back(m);
        rep.all_pass = rep.all_pass && m.pass;
    }

    // Left-edge inflow inequality:
    //   sup over theta in [0, alpha g(eps)] of u_phi(alpha eps, theta)/sin(alpha eps)
    //     <= -h(eps)|ln eps| + C1 f(eps) + C2
    //        + inf over theta in [0, alpha] of u_phi(alpha/e, theta)/sin(alpha/e).
    {
        const int edge_samples = 16;
        double sup_left = -1e300;
        const double top = alpha * g_eval_extended(eps);
        for (int i = 0; i <= edge_samples; ++i) {
            const double th = top * i / edge_samples;
            const QuarterVelocity v =
                velocity_oddodd_analytic(full, alpha * eps, std::max(th, 1e-300), opts);
            sup_left = std::max(sup_left, v.u_phi);
        }
        sup_left /= std::sin(alpha * eps);

        double inf_right = 1e300;
        for (int i = 0; i <= edge_samples; ++i) {
            const double th = alpha * i / edge_samples;
            const QuarterVelocity v =
                velocity_oddodd_analytic(full, alpha * kInvE, std::max(th, 1e-300), opts);
            inf_right = std::min(inf_right, v.u_phi);
        }
        inf_right /= std::sin(alpha * kInvE);

        const double ell = -std::log(eps);
        const double rhs =
            -h_times_log_from_ell(ell) + consts.C1 * f_from_ell(ell) + consts.C2 + inf_right;
        BoundaryMargin m{eps, alpha * eps, 0.0, rhs - sup_left, false};
        m.pass = m.margin >= tol * std::fabs(rhs);
        rep.left_edge = m;
        rep.all_pass = rep.all_pass && m.pass;
    }
    return rep;
}

}  // namespace spherevort
