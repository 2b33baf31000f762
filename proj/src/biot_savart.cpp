#include "spherevort/biot_savart.hpp"

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
constexpr double kGaussResidualTol = 1e-6;

// Quadrature node set with premultiplied weights w = area * omega.
struct NodeSet {
    std::vector<double> y1, y2, y3, wo;
    std::vector<double> w;  // bare area weights (for kernels without omega)
};

NodeSet build_nodes(const VorticityField& field, const QuadratureSpec& q) {
    NodeSet n;
    const int np = field.n_phi, nt = field.n_theta;
    const double da = field.dphi() * field.dtheta();
    if (q.rule == QuadRule::midpoint) {
        n.y1.reserve(static_cast<size_t>(np) * nt);
        for (int j = 0; j < nt; ++j) {
            const double th = field.theta_node(j);
            const double ct = std::cos(th), st = std::sin(th);
            const double area = da * ct;
            for (int i = 0; i < np; ++i) {
                const double ph = field.phi_node(i);
                n.y1.push_back(ct * std::cos(ph));
                n.y2.push_back(ct * std::sin(ph));
                n.y3.push_back(st);
                n.w.push_back(area);
                n.wo.push_back(area * field.at(i, j));
            }
        }
        return n;
    }
    // gauss_composite: 2x2 Gauss-Legendre nodes per cell, field interpolated.
    const double hp = field.dphi() / 2.0, ht = field.dtheta() / 2.0;
    for (int j = 0; j < nt; ++j) {
        const double tc = field.theta_node(j);
        for (int sj = 0; sj < 2; ++sj) {
            const double th = tc + (sj == 0 ? -kGaussNode : kGaussNode) * ht;
            const double ct = std::cos(th), st = std::sin(th);
            const double area = (da / 4.0) * ct;
            for (int i = 0; i < np; ++i) {
                const double pc = field.phi_node(i);
                for (int si = 0; si < 2; ++si) {
                    const double ph = pc + (si == 0 ? -kGaussNode : kGaussNode) * hp;
                    n.y1.push_back(ct * std::cos(ph));
                    n.y2.push_back(ct * std::sin(ph));
                    n.y3.push_back(st);
                    n.w.push_back(area);
                    n.wo.push_back(area * sample(field, ph, th));
                }
            }
        }
    }
    return n;
}

// Weighted sum of y / |p-y|^2 outside the cutoff ball, fixed storage order.
Vec3 kernel_moment(const NodeSet& n, const Vec3& p, double cut2) {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;
    const size_t m = n.y1.size();
    for (size_t k = 0; k < m; ++k) {
        const double d1 = p.x - n.y1[k];
        const double d2c = p.y - n.y2[k];
        const double d3 = p.z - n.y3[k];
        const double d2 = d1 * d1 + d2c * d2c + d3 * d3;
        const double inv = d2 >= cut2 ? n.wo[k] / d2 : 0.0;
        a1 += inv * n.y1[k];
        a2 += inv * n.y2[k];
        a3 += inv * n.y3[k];
    }
    return Vec3{a1, a2, a3};
}

TangentVelocity finish_velocity(const Vec3& p, const Vec3& moment, bool gauss_warning) {
    TangentVelocity v;
    const Vec3 raw = cross(p, moment) * (1.0 / (2.0 * kPi));
    const double normal = dot(raw, p);
    v.tangency_residual = std::fabs(normal);
    v.cart = raw - p * normal;
    v.gauss_warning = gauss_warning;
    const double cos_t = std::hypot(p.x, p.y);
    if (cos_t > kGeomTol) {
        v.frame_valid = true;
        const double inv = 1.0 / cos_t;
        const Vec3 e_phi{-p.y * inv, p.x * inv, 0.0};
        const Vec3 e_theta{-p.z * p.x * inv, -p.z * p.y * inv, cos_t};
        v.u_phi = dot(v.cart, e_phi);
        v.u_theta = dot(v.cart, e_theta);
    }
    return v;
}

bool gauss_violated(const VorticityField& field) {
    const double l1 = lp_norm(field, 1.0);
    return gauss_residual(field) > kGaussResidualTol * std::max(l1, 1e-300);
}

}  // namespace

double cell_diagonal(int n_phi, int n_theta) {
    const double dp = 2.0 * kPi / n_phi;
    const double dt = kPi / n_theta;
    return std::hypot(dp, dt);
}

QuadratureSpec make_quadrature(int n_phi, int n_theta, double diagonals, QuadRule rule) {
    QuadratureSpec q;
    q.n_phi = n_phi;
    q.n_theta = n_theta;
    q.singularity_cutoff = diagonals * cell_diagonal(n_phi, n_theta);
    q.rule = rule;
    validate_quadrature(q);
    return q;
}

void validate_quadrature(const QuadratureSpec& q) {
    require(q.n_phi >= 4 && q.n_phi % 2 == 0, "quadrature: n_phi must be even and >= 4");
    require(q.n_theta >= 4 && q.n_theta % 2 == 0, "quadrature: n_theta must be even and >= 4");
    require(q.singularity_cutoff > 0.0, "quadrature: cutoff must be positive");
    require(q.singularity_cutoff >= cell_diagonal(q.n_phi, q.n_theta) * (1.0 - 1e-9),
            "quadrature: cutoff below one cell diagonal is unresolvable");
}

TangentVelocity velocity_full(const VorticityField& field, const Vec3& p, const QuadratureSpec& q) {
    validate_quadrature(q);
    require(q.n_phi == field.n_phi && q.n_theta == field.n_theta,
            "velocity: quadrature grid must match the field grid");
    const NodeSet nodes = build_nodes(field, q);
    const double cut2 = q.singularity_cutoff * q.singularity_cutoff;
    return finish_velocity(p, kernel_moment(nodes, p, cut2), gauss_violated(field));
}

TangentVelocity velocity_full(const VorticityField& field, double phi, double theta,
                              const QuadratureSpec& q) {
    return velocity_full(field, from_angles(phi, theta), q);
}

std::vector<TangentVelocity> velocity_grid(const VorticityField& field, const QuadratureSpec& q) {
    validate_quadrature(q);
    require(q.n_phi == field.n_phi && q.n_theta == field.n_theta,
            "velocity: quadrature grid must match the field grid");
    const NodeSet nodes = build_nodes(field, q);
    const double cut2 = q.singularity_cutoff * q.singularity_cutoff;
    const bool warn = gauss_violated(field);
    std::vector<TangentVelocity> out;
    out.reserve(static_cast<size_t>(field.n_phi) * field.n_theta);
    for (int j = 0; j < field.n_theta; ++j) {
        const double th = field.theta_node(j);
        const double ct = std::cos(th), st = std::sin(th);
        for (int i = 0; i < field.n_phi; ++i) {
            const double ph = field.phi_node(i);
            const Vec3 p{ct * std::cos(ph), ct * std::sin(ph), st};
            out.push_back(finish_velocity(p, kernel_moment(nodes, p, cut2), warn));
        }
    }
    return out;
}

TangentVelocity velocity_oddodd(const VorticityField& field, double phi, double theta,
                                const QuadratureSpec& q) {
    validate_quadrature(q);
    require(q.n_phi == field.n_phi && q.n_theta == field.n_theta,
            "velocity: quadrature grid must match the field grid");
    require(field.symmetry == Symmetry::odd_odd, "velocity_oddodd: field must be odd-odd");
    require(std::fabs(theta) < kPi / 2.0 - kGeomTol, "velocity_oddodd: theta at a pole");

    const double ct = std::cos(theta);
    const double x1 = ct * std::cos(phi);
    const double x2 = ct * std::sin(phi);
    const double x3 = std::sin(theta);
    const double cut2 = q.singularity_cutoff * q.singularity_cutoff;
    const double da = field.dphi() * field.dtheta();

    // Quarter nodes: phi in (0, pi), theta in (0, pi/2).
    const int np = field.n_phi, nt = field.n_theta;
    double acc_phi = 0.0, acc_theta = 0.0;
    for (int j = nt / 2; j < nt; ++j) {
        const double th = field.theta_node(j);
        const double cth = std::cos(th), y3 = std::sin(th);
        const double area = da * cth;
        double row_phi = 0.0, row_theta = 0.0;
        for (int i = np / 2; i < np; ++i) {
            const double w = field.at(i, j);
            if (w == 0.0) continue;
            const double ph = field.phi_node(i);
            const double y1 = cth * std::cos(ph);
            const double y2 = cth * std::sin(ph);
            const double d1 = x1 - y1;
            const double s2m = x2 - y2, s2p = x2 + y2;
            const double s3m = x3 - y3, s3p = x3 + y3;
            const double d2_yy = d1 * d1 + s2m * s2m + s3m * s3m;
            const double d2_yt = d1 * d1 + s2p * s2p + s3m * s3m;
            const double d2_yb = d1 * d1 + s2m * s2m + s3p * s3p;
            const double d2_ybt = d1 * d1 + s2p * s2p + s3p * s3p;
            // Each combined term merges one image pair; a term is dropped when
            // either of its distances enters the cutoff ball, mirroring the
            // node exclusion of the full-sphere route away from the symmetry
            // circles.
            const double m_yy_yt = (d2_yy >= cut2 && d2_yt >= cut2) ? 1.0 : 0.0;
            const double m_yb_ybt = (d2_yb >= cut2 && d2_ybt >= cut2) ? 1.0 : 0.0;
            const double m_yy_yb = (d2_yy >= cut2 && d2_yb >= cut2) ? 1.0 : 0.0;
            const double m_yt_ybt = (d2_yt >= cut2 && d2_ybt >= cut2) ? 1.0 : 0.0;
            const double k_phi = m_yy_yt * 2.0 * y2 * s3m / (d2_yy * d2_yt) -
                                 m_yb_ybt * 2.0 * y2 * s3p / (d2_yb * d2_ybt);
            const double k_theta = m_yy_yb * y3 * (d1 * y2 - s2m * y1) / (d2_yy * d2_yb) +
                                   m_yt_ybt * y3 * (s2p * x1 - d1 * x2) / (d2_yt * d2_ybt);
            row_phi += w * k_phi;
            row_theta += w * k_theta;
        }
        acc_phi += area * row_phi;
        acc_theta += area * row_theta;
    }

    TangentVelocity v;
    v.frame_valid = true;
    v.u_phi = std::sin(phi) / kPi * acc_phi;
    v.u_theta = 2.0 * std::tan(theta) / kPi * acc_theta;
    v.cart = frame_e_phi(phi) * v.u_phi + frame_e_theta(phi, theta) * v.u_theta;
    v.tangency_residual = 0.0;
    v.gauss_warning = false;
    return v;
}

double velocity_pole_component(const VorticityField& field, int pole, const QuadratureSpec& q) {
    validate_quadrature(q);
    require(q.n_phi == field.n_phi && q.n_theta == field.n_theta,
            "velocity: quadrature grid must match the field grid");
    require(pole == 1 || pole == -1, "velocity_pole_component: pole must be +-1");
    const Vec3 p{0.0, 0.0, static_cast<double>(pole)};
    const NodeSet nodes = build_nodes(field, q);
    const double cut2 = q.singularity_cutoff * q.singularity_cutoff;
    // u . e2 at the pole reduces to the integral of y1 / (2 pi |x-y|^2).
    double acc = 0.0;
    const size_t m = nodes.y1.size();
    for (size_t k = 0; k < m; ++k) {
        const double d1 = p.x - nodes.y1[k];
        const double d2c = p.y - nodes.y2[k];
        const double d3 = p.z - nodes.y3[k];
        const double d2 = d1 * d1 + d2c * d2c + d3 * d3;
        const double inv = d2 >= cut2 ? nodes.wo[k] / d2 : 0.0;
        acc += inv * nodes.y1[k];
    }
    return acc / (2.0 * kPi);
}

double stream_function(const VorticityField& field, const Vec3& p, KernelKind kernel,
                       const QuadratureSpec& q) {
    validate_quadrature(q);
    require(q.n_phi == field.n_phi && q.n_theta == field.n_theta,
            "stream: quadrature grid must match the field grid");
    if (kernel == KernelKind::hemisphere) {
        for (int j = 0; j < field.n_theta; ++j) {
            if (field.theta_node(j) > 0.0) continue;
            for (int i = 0; i < field.n_phi; ++i) {
                require(field.at(i, j) == 0.0,
                        "stream: hemisphere kernel needs upper-hemisphere support");
            }
        }
    }
    const NodeSet nodes = build_nodes(field, q);
    const double cut2 = q.singularity_cutoff * q.singularity_cutoff;
    double acc = 0.0;
    const size_t m = nodes.y1.size();
    for (size_t k = 0; k < m; ++k) {
        const double d1 = p.x - nodes.y1[k];
        const double d2c = p.y - nodes.y2[k];
        const double d3 = p.z - nodes.y3[k];
        const double d2 = d1 * d1 + d2c * d2c + d3 * d3;
        if (d2 < cut2) continue;
        double g = 0.5 * std::log(d2);
        if (kernel == KernelKind::hemisphere) {
            const double b3 = p.z + nodes.y3[k];
            const double b2 = d1 * d1 + d2c * d2c + b3 * b3;
            g -= 0.5 * std::log(b2);
        }
        acc += nodes.wo[k] * g;
    }
    return acc / (2.0 * kPi);
}

SpeedBoundReport speed_bound_check(const VorticityField& field, const QuadratureSpec& q) {
    const std::vector<TangentVelocity> grid = velocity_grid(field, q);
    SpeedBoundReport rep;
    rep.n_samples = static_cast<int>(grid.size());
    for (const TangentVelocity& v : grid) rep.max_speed = std::max(rep.max_speed, norm(v.cart));
    const double sup = lp_norm(field, std::numeric_limits<double>::infinity());
    rep.bound_constant = sup > 0.0 ? rep.max_speed / sup : 0.0;
    return rep;
}

}  // namespace spherevort
