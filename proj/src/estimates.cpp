#include "spherevort/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spherevort {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

constexpr double kGaussNode = 0.57735026918962576;  // 1/sqrt(3)

struct AxisNode {
    double x = 0.0;
    double w = 0.0;
    double sin_x = 0.0;
    double cos_x = 0.0;
};

// Cell edges on [lo, hi] refined geometrically toward each anchor from both
// sides; anchors outside the interval are clamped away.
std::vector<double> axis_edges(double lo, double hi, std::vector<double> anchors,
                               const GradedQuadOpts& opts) {
    std::vector<double> marks{lo, hi};
    for (double a : anchors) {
        if (a > lo && a < hi) marks.push_back(a);
    }
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

    std::vector<double> edges;
    for (size_t i = 0; i + 1 < marks.size(); ++i) {
        const double a = marks[i], b = marks[i + 1];
        const double width = b - a;
        edges.push_back(a);
        if (width <= 4.0 * opts.core) continue;
        std::vector<double> left, right;
        for (double off = opts.core; off < width / 2.0; off *= opts.ratio) {
            left.push_back(a + off);
            right.push_back(b - off);
        }
        edges.insert(edges.end(), left.begin(), left.end());
        edges.insert(edges.end(), right.rbegin(), right.rend());
    }
    edges.push_back(hi);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

std::vector<AxisNode> axis_nodes(const std::vector<double>& edges) {
    std::vector<AxisNode> nodes;
    nodes.reserve(2 * edges.size());
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        const double m = 0.5 * (edges[i] + edges[i + 1]);
        const double h = 0.5 * (edges[i + 1] - edges[i]);
        if (h <= 0.0) continue;
        for (int j = 0; j < 2; ++j) {
            AxisNode n;
            n.x = m + (j == 0 ? -kGaussNode : kGaussNode) * h;
            n.w = h;
            n.sin_x = std::sin(n.x);
            n.cos_x = std::cos(n.x);
            nodes.push_back(n);
        }
    }
    return nodes;
}

}  // namespace

double analytic_field_value(const AnalyticOddField& f, double phi, double theta) {
    const double sp = phi > 0.0 ? 1.0 : (phi < 0.0 ? -1.0 : 0.0);
    const double st = theta > 0.0 ? 1.0 : (theta < 0.0 ? -1.0 : 0.0);
    if (sp == 0.0 || st == 0.0) return 0.0;
    return sp * st * f.value(std::fabs(phi), std::fabs(theta));
}

double graded_integral(const std::function<double(double, double)>& f,
                       double phi_lo, double phi_hi, double theta_lo, double theta_hi,
                       const std::vector<double>& phi_anchors,
                       const std::vector<double>& theta_anchors,
                       const GradedQuadOpts& opts) {
    require(phi_hi > phi_lo && theta_hi > theta_lo, "graded_integral: empty rectangle");
    const auto pn = axis_nodes(axis_edges(phi_lo, phi_hi, phi_anchors, opts));
    const auto tn = axis_nodes(axis_edges(theta_lo, theta_hi, theta_anchors, opts));
    double total = 0.0;
    for (const AxisNode& t : tn) {
        double row = 0.0;
        for (const AxisNode& p : pn) row += p.w * f(p.x, t.x);
        total += t.w * row;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Quarter-kernel velocity for analytic fields
// ---------------------------------------------------------------------------

QuarterVelocity velocity_oddodd_analytic(const AnalyticOddField& f, double phi, double theta,
                                         const GradedQuadOpts& opts_in) {
    require(phi > -kPi && phi < kPi, "velocity: phi outside chart");
    require(std::fabs(theta) < kPi / 2.0, "velocity: theta at a pole");
    require(static_cast<bool>(f.value), "velocity: field has no evaluator");

    GradedQuadOpts opts = opts_in;
    const double scale = std::max(std::fabs(phi), std::fabs(theta));
    opts.core = std::max(opts.core, scale * 1e-12);
    if (opts.core <= 0.0) opts.core = 1e-12;

    const double ct = std::cos(theta);
    const double x1 = ct * std::cos(phi);
    const double x2 = ct * std::sin(phi);
    const double x3 = std::sin(theta);

    const auto pn =
        axis_nodes(axis_edges(0.0, kPi, {std::fabs(phi)}, opts));
    const auto tn =
        axis_nodes(axis_edges(0.0, kPi / 2.0, {std::fabs(theta)}, opts));

    double acc_phi = 0.0, acc_theta = 0.0;
    for (const AxisNode& t : tn) {
        const double y3 = t.sin_x;
        const double area = t.cos_x;  // cos(theta') surface weight
        double row_phi = 0.0, row_theta = 0.0;
        for (const AxisNode& p : pn) {
            const double w = f.value(p.x, t.x);
            if (w == 0.0) continue;
            const double y1 = t.cos_x * p.cos_x;
            const double y2 = t.cos_x * p.sin_x;
            const double d1 = x1 - y1;
            const double s2m = x2 - y2, s2p = x2 + y2;
            const double s3m = x3 - y3, s3p = x3 + y3;
            const double d2_yy = d1 * d1 + s2m * s2m + s3m * s3m;
            const double d2_yt = d1 * d1 + s2p * s2p + s3m * s3m;
            const double d2_yb = d1 * d1 + s2m * s2m + s3p * s3p;
            const double d2_ybt = d1 * d1 + s2p * s2p + s3p * s3p;
            if (d2_yy <= 0.0 || d2_yt <= 0.0 || d2_yb <= 0.0 || d2_ybt <= 0.0) continue;
            const double k_phi =
                2.0 * y2 * s3m / (d2_yy * d2_yt) - 2.0 * y2 * s3p / (d2_yb * d2_ybt);
            const double k_theta = y3 * (d1 * y2 - s2m * y1) / (d2_yy * d2_yb) +
                                   y3 * (s2p * x1 - d1 * x2) / (d2_yt * d2_ybt);
            row_phi += p.w * w * k_phi;
            row_theta += p.w * w * k_theta;
        }
        acc_phi += t.w * area * row_phi;
        acc_theta += t.w * area * row_theta;
    }

    // x2/sqrt(1-x3^2) = sin(phi), x3/sqrt(1-x3^2) = tan(theta): exact forms.
    QuarterVelocity v;
    v.u_phi = std::sin(phi) / kPi * acc_phi;
    v.u_theta = 2.0 * std::tan(theta) / kPi * acc_theta;
    return v;
}

// ---------------------------------------------------------------------------
// Leading term
// ---------------------------------------------------------------------------

namespace {

// Radial extent of the quarter rectangle along polar direction beta.
double quarter_rmax(double beta) {
    const double c = std::cos(beta), s = std::sin(beta);
    double r = 2.0 * kPi;
    if (c > 0.0) r = std::min(r, kPi / c);
    if (s > 0.0) r = std::min(r, (kPi / 2.0) / s);
    return r;
}

// Integral of y2 y3 / |y-x0|^4 * omega * cos(theta') over the annulus
// {sqrt(phi'^2+theta'^2) > r_in} in the quarter chart, polar coordinates with
// a log-radial composite Gauss rule (exact region, no cut cells).
double annulus_mass(const AnalyticOddField& f, double r_in) {
    require(r_in > 0.0 && r_in < kPi / 2.0, "annulus: inner radius outside (0, pi/2)");
    const int n_beta = 96;
    double total = 0.0;
    for (int ib = 0; ib < n_beta; ++ib) {
        const double b0 = (kPi / 2.0) * ib / n_beta;
        const double b1 = (kPi / 2.0) * (ib + 1) / n_beta;
        const double bm = 0.5 * (b0 + b1), bh = 0.5 * (b1 - b0);
        for (int jb = 0; jb < 2; ++jb) {
            const double beta = bm + (jb == 0 ? -kGaussNode : kGaussNode) * bh;
            const double rmax = quarter_rmax(beta);
            if (rmax <= r_in) continue;
            const double umax = std::log(rmax / r_in);
            const int n_u = std::max(24, static_cast<int>(umax / 0.03));
            double radial = 0.0;
            for (int iu = 0; iu < n_u; ++iu) {
                const double u0 = umax * iu / n_u;
                const double u1 = umax * (iu + 1) / n_u;
                const double um = 0.5 * (u0 + u1), uh = 0.5 * (u1 - u0);
                for (int ju = 0; ju < 2; ++ju) {
                    const double r = r_in * std::exp(um + (ju == 0 ? -kGaussNode : kGaussNode) * uh);
                    const double pc = r * std::cos(beta);
                    const double tc = r * std::sin(beta);
                    const double w = f.value(pc, tc);
                    if (w == 0.0) continue;
                    const double st = std::sin(tc), ctc = std::cos(tc);
                    const double y1 = ctc * std::cos(pc);
                    const double y2 = ctc * std::sin(pc);
                    const double dx = y1 - 1.0;
                    const double d2 = dx * dx + y2 * y2 + st * st;
                    if (d2 <= 0.0) continue;
                    radial += uh * (y2 * st * ctc / (d2 * d2)) * w * r * r;
                }
            }
            total += bh * radial;
        }
    }
    return total;
}

}  // namespace

double leading_term(const AnalyticOddField& f, double phi, double theta, LeadingRegion which,
                    const GradedQuadOpts& opts) {
    require(phi >= 0.0 && theta >= 0.0, "leading_term: negative corner");
    require(phi > 0.0 || theta > 0.0, "leading_term: undefined at the origin");
    require(static_cast<bool>(f.value), "leading_term: field has no evaluator");
    if (which == LeadingRegion::Qtilde) {
        const double r = std::hypot(phi, theta);
        return (4.0 / kPi) * annulus_mass(f, r);
    }
    const double k1 = 1.5 * phi, k2 = 1.5 * theta;
    require(k1 < kPi && k2 < kPi / 2.0, "leading_term: window leaves the quarter");
    auto integrand = [&](double p, double t) {
        const double w = f.value(p, t);
        if (w == 0.0) return 0.0;
        const double ct = std::cos(t), st = std::sin(t);
        const double y1 = ct * std::cos(p);
        const double y2 = ct * std::sin(p);
        const double dx = y1 - 1.0;
        const double d2 = dx * dx + y2 * y2 + st * st;
        if (d2 <= 0.0) return 0.0;
        return y2 * st * ct / (d2 * d2) * w;
    };
    const double val =
        graded_integral(integrand, k1, kPi, k2, kPi / 2.0, {k1}, {k2}, opts);
    return (4.0 / kPi) * val;
}

// ---------------------------------------------------------------------------
// Remainder reports
// ---------------------------------------------------------------------------

EstimateReport remainder_B(const AnalyticOddField& f, double phi, double theta,
                           VelocityComponent component, LeadingRegion which, double C1_fit,
                           const GradedQuadOpts& opts) {
    require(f.sup_norm > 0.0, "remainder_B: vanishing sup norm");
    require(phi > 0.0 && theta > 0.0, "remainder_B: needs an interior corner");
    require(phi <= 1.0 && theta <= 1.0, "remainder_B: outside the unit square");

    const QuarterVelocity v = velocity_oddodd_analytic(f, phi, theta, opts);
    const double lead = leading_term(f, phi, theta, which, opts);

    EstimateReport rep;
    rep.leading = lead;
    double min_term;
    if (component == VelocityComponent::phi) {
        const double m = f.grad_sup_window ? f.grad_sup_window(1.5 * theta, 1.5 * theta)
                                           : std::numeric_limits<double>::infinity();
        min_term = std::min(std::log1p(theta / phi), m / f.sup_norm * theta);
        rep.remainder = v.u_phi / std::sin(phi) + lead;
    } else {
        const double m = f.grad_sup_window ? f.grad_sup_window(1.5 * phi, 1.5 * phi)
                                           : std::numeric_limits<double>::infinity();
        min_term = std::min(std::log1p(phi / theta), m / f.sup_norm * phi);
        const double x1 = std::cos(theta) * std::cos(phi);
        rep.remainder = v.u_theta / std::tan(theta) - x1 * lead;
    }
    rep.bound = C1_fit * f.sup_norm * (1.0 + min_term);
    rep.ratio = std::fabs(rep.remainder) / (f.sup_norm * (1.0 + min_term));
    rep.pass = std::fabs(rep.remainder) <= rep.bound;
    return rep;
}

RemainderSweep remainder_sweep(const AnalyticOddField& f, int k_min, int k_max,
                               VelocityComponent component, LeadingRegion which, double C1_fit,
                               const GradedQuadOpts& opts) {
    require(k_min >= 0 && k_max >= k_min, "remainder_sweep: bad exponent range");
    RemainderSweep sweep;
    for (int i = k_min; i <= k_max; ++i) sweep.phis.push_back(std::ldexp(1.0, -i));
    sweep.thetas = sweep.phis;
    for (double p : sweep.phis) {
        for (double t : sweep.thetas) {
            EstimateReport rep = remainder_B(f, p, t, component, which, C1_fit, opts);
            sweep.max_ratio = std::max(sweep.max_ratio, rep.ratio);
            sweep.reports.push_back(rep);
        }
    }
    return sweep;
}

// ---------------------------------------------------------------------------
// Approach speed
// ---------------------------------------------------------------------------

double approach_speed(const AnalyticOddField& f, double eps, const GradedQuadOpts& opts_in) {
    require(eps > 0.0 && eps <= 1.0, "approach_speed: eps outside (0,1]");
    require(static_cast<bool>(f.value), "approach_speed: field has no evaluator");

    GradedQuadOpts opts = opts_in;
    opts.core = std::max(opts.core, eps * 1e-10);

    const double ce = std::cos(eps), se = std::sin(eps);
    const auto pn = axis_nodes(axis_edges(0.0, kPi, {eps}, opts));
    const auto tn = axis_nodes(axis_edges(0.0, kPi / 2.0, {eps}, opts));

    double acc = 0.0;
    for (const AxisNode& t : tn) {
        const double y3 = t.sin_x;
        const double area = t.cos_x;
        double row = 0.0;
        for (const AxisNode& p : pn) {
            const double w = f.value(p.x, t.x);
            if (w == 0.0) continue;
            const double y1 = t.cos_x * p.cos_x;
            const double y2 = t.cos_x * p.sin_x;
            // the four reflections of y against the fixed pair x_{1,eps}, x_{2,eps}
            double kernel = 0.0;
            for (int sy2 = 0; sy2 < 2; ++sy2) {
                const double ry2 = sy2 == 0 ? y2 : -y2;
                for (int sy3 = 0; sy3 < 2; ++sy3) {
                    const double ry3 = sy3 == 0 ? y3 : -y3;
                    const double dc = ce - y1;
                    const double a2 = dc * dc + (se + ry2) * (se + ry2) + ry3 * ry3;
                    const double b2 = dc * dc + (se - ry2) * (se - ry2) + ry3 * ry3;
                    if (a2 <= 0.0 || b2 <= 0.0) continue;
                    kernel += 1.0 / (a2 * b2);
                }
            }
            row += p.w * w * y2 * y3 * kernel;
        }
        acc += t.w * area * row;
    }
    return (2.0 * se / kPi) * acc;
}

// ---------------------------------------------------------------------------
// Double-exponential majorant
// ---------------------------------------------------------------------------

double upper_envelope(double grad0, double I, double t, double CI) {
    require(grad0 >= 0.0, "upper_envelope: negative gradient norm");
    require(I > 0.0 && I <= 4.0 * kPi * (1.0 + 1e-12), "upper_envelope: I outside (0, 4pi]");
    require(t >= 0.0, "upper_envelope: negative time");
    const double rate = 2.0 * t / kPi;
    const double outer = std::exp(rate + CI * (1.0 - std::exp(-rate)));
    const double base = std::max(grad0 > 0.0 ? std::log(grad0) : 1.0, 1.0);
    const double expo = outer * base;
    if (expo > 700.0) return std::numeric_limits<double>::infinity();
    return std::exp(expo);
}

double upper_envelope_log_log(double grad0, double I, double t, double CI) {
    require(grad0 >= 0.0, "upper_envelope: negative gradient norm");
    require(I > 0.0 && I <= 4.0 * kPi * (1.0 + 1e-12), "upper_envelope: I outside (0, 4pi]");
    require(t >= 0.0, "upper_envelope: negative time");
    const double rate = 2.0 * t / kPi;
    const double base = std::max(grad0 > 0.0 ? std::log(grad0) : 1.0, 1.0);
    return rate + CI * (1.0 - std::exp(-rate)) + std::log(base);
}

}  // namespace spherevort
