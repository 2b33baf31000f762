#include "spherevort/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

namespace spherevort {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

QuadratureSpec resolve_quadrature(const SimulationConfig& cfg, const VorticityField& f) {
    QuadratureSpec q = cfg.quad;
    q.n_phi = f.n_phi;
    q.n_theta = f.n_theta;
    if (q.singularity_cutoff <= 0.0) q.singularity_cutoff = 2.0 * cell_diagonal(f.n_phi, f.n_theta);
    validate_quadrature(q);
    return q;
}

// Velocity frozen on the grid, with Cartesian components interpolable across
// the poles (a Cartesian component is a plain scalar under the pole fold).
struct FrozenVelocity {
    VorticityField ux, uy, uz;
    double max_speed = 0.0;

    Vec3 eval(const Vec3& p) const {
        const ChartAngles a = to_angles(p);
        const Vec3 raw{sample(ux, a.phi, a.theta), sample(uy, a.phi, a.theta),
                       sample(uz, a.phi, a.theta)};
        return tangent_project(p, raw);
    }
};

FrozenVelocity freeze_velocity(const VorticityField& f, const QuadratureSpec& q,
                               double omega_rate) {
    FrozenVelocity fv;
    fv.ux = make_field(f.n_phi, f.n_theta, Symmetry::none, Interp::bicubic);
    fv.uy = make_field(f.n_phi, f.n_theta, Symmetry::none, Interp::bicubic);
    fv.uz = make_field(f.n_phi, f.n_theta, Symmetry::none, Interp::bicubic);
    const std::vector<TangentVelocity> grid = velocity_grid(f, q);
    for (int j = 0; j < f.n_theta; ++j) {
        const double th = f.theta_node(j);
        const double ct = std::cos(th), st = std::sin(th);
        for (int i = 0; i < f.n_phi; ++i) {
            const double ph = f.phi_node(i);
            const Vec3 p{ct * std::cos(ph), ct * std::sin(ph), st};
            Vec3 u = grid[static_cast<size_t>(j) * f.n_phi + i].cart;
            if (omega_rate != 0.0) {
                // Rigid correction -Omega e3 x p on top of the induced field.
                u = u - Vec3{-p.y, p.x, 0.0} * omega_rate;
            }
            fv.ux.at(i, j) = u.x;
            fv.uy.at(i, j) = u.y;
            fv.uz.at(i, j) = u.z;
            fv.max_speed = std::max(fv.max_speed, norm(u));
        }
    }
    return fv;
}

Vec3 trace_back(const FrozenVelocity& fv, Vec3 p, double h, int substeps, Backtrace scheme) {
    for (int s = 0; s < substeps; ++s) {
        if (scheme == Backtrace::rk2) {
            const Vec3 k1 = fv.eval(p);
            const Vec3 k2 = fv.eval(renormalize(p - k1 * (0.5 * h)));
            p = renormalize(p - k2 * h);
        } else {
            const Vec3 k1 = fv.eval(p);
            const Vec3 k2 = fv.eval(renormalize(p - k1 * (0.5 * h)));
            const Vec3 k3 = fv.eval(renormalize(p - k2 * (0.5 * h)));
            const Vec3 k4 = fv.eval(renormalize(p - k3 * h));
            p = renormalize(p - (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0));
        }
    }
    return p;
}

VorticityField advect(const VorticityField& f, const SimulationConfig& cfg, double dt,
                      double omega_rate, double& sym_res_out) {
    const QuadratureSpec q = resolve_quadrature(cfg, f);
    const FrozenVelocity fv = freeze_velocity(f, q, omega_rate);

    const double min_spacing = std::min(f.dphi(), f.dtheta());
    int substeps = 1;
    if (fv.max_speed > 0.0) {
        const double limit = cfg.cfl_max * min_spacing;
        substeps = std::max(1, static_cast<int>(std::ceil(dt * fv.max_speed / limit)));
    }
    const double h = dt / substeps;

    VorticityField next = f;
    for (int j = 0; j < f.n_theta; ++j) {
        const double th = f.theta_node(j);
        const double ct = std::cos(th), st = std::sin(th);
        for (int i = 0; i < f.n_phi; ++i) {
            const double ph = f.phi_node(i);
            const Vec3 node{ct * std::cos(ph), ct * std::sin(ph), st};
            const Vec3 foot = trace_back(fv, node, h, substeps, cfg.backtrace);
            const ChartAngles a = to_angles(foot);
            next.at(i, j) = sample_clamped(f, a.phi, a.theta);
        }
    }

    sym_res_out = 0.0;
    if (next.symmetry == Symmetry::odd_odd) sym_res_out = antisymmetrize(next);
    return next;
}

void maybe_snapshot(const SimulationState& st, const SimulationConfig& config) {
    if (config.snapshot_every <= 0 || config.snapshot_prefix.empty()) return;
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%06lld.csv", st.steps_taken);
    write_field_csv(config.snapshot_prefix + suffix, st.field, st.time);
}

DiagnosticsRow make_row(const SimulationState& st) {
    DiagnosticsRow row;
    row.t = st.time;
    row.grad_sup = grad_sup_norm(st.field);
    row.l1 = lp_norm(st.field, 1.0);
    row.l2 = lp_norm(st.field, 2.0);
    row.linf = lp_norm(st.field, std::numeric_limits<double>::infinity());
    row.gauss_res = gauss_residual(st.field);
    row.sym_res = st.last_sym_residual;
    return row;
}

}  // namespace

SimulationState step(const SimulationState& state, const SimulationConfig& config) {
    SimulationState next = state;
    next.field = advect(state.field, config, config.dt, 0.0, next.last_sym_residual);
    next.time = state.time + config.dt;
    next.steps_taken = state.steps_taken + 1;
    return next;
}

SimulationState rotating_step(const SimulationState& state, const SimulationConfig& config) {
    SimulationState next = state;
    next.field =
        advect(state.field, config, config.dt, config.rotation_omega, next.last_sym_residual);
    next.time = state.time + config.dt;
    next.steps_taken = state.steps_taken + 1;
    return next;
}

SimulationState run(const SimulationConfig& config, const VorticityField& initial) {
    require(config.n_phi == initial.n_phi && config.n_theta == initial.n_theta,
            "run: config grid must match the initial field");
    require(config.dt > 0.0 && config.t_end >= 0.0, "run: need dt > 0 and t_end >= 0");
    require(config.diagnostics_every >= 1, "run: diagnostics_every must be >= 1");
    require(config.cfl_max > 0.0, "run: cfl_max must be positive");

    SimulationState st;
    st.field = initial;
    st.field.symmetry = config.symmetry;
    if (config.symmetry == Symmetry::odd_odd) st.last_sym_residual = antisymmetrize(st.field);
    st.diagnostics.push_back(make_row(st));
    maybe_snapshot(st, config);

    const double t_tol = 1e-12 * std::max(1.0, config.t_end);
    while (st.time < config.t_end - t_tol) {
        const double dt_step = std::min(config.dt, config.t_end - st.time);
        SimulationState next = st;
        next.field =
            advect(st.field, config, dt_step, config.rotation_omega, next.last_sym_residual);
        next.time = st.time + dt_step;
        next.steps_taken = st.steps_taken + 1;
        st = std::move(next);
        const bool last = st.time >= config.t_end - t_tol;
        if (last || st.steps_taken % config.diagnostics_every == 0) {
            st.diagnostics.push_back(make_row(st));
        }
        if (last || (config.snapshot_every > 0 &&
                     st.steps_taken % config.snapshot_every == 0)) {
            maybe_snapshot(st, config);
        }
    }
    return st;
}

VorticityField absolute_vorticity(const VorticityField& field, double omega_rate) {
    VorticityField out = field;
    if (omega_rate != 0.0) out.symmetry = Symmetry::none;
    for (int j = 0; j < out.n_theta; ++j) {
        const double add = 2.0 * omega_rate * std::sin(out.theta_node(j));
        for (int i = 0; i < out.n_phi; ++i) out.at(i, j) += add;
    }
    return out;
}

ConjugacyReport conjugacy_check(const VorticityField& initial_zeta, double omega_rate,
                                double t_end, const SimulationConfig& config) {
    require(config.n_phi == initial_zeta.n_phi && config.n_theta == initial_zeta.n_theta,
            "conjugacy: config grid must match the initial field");
    require(t_end > 0.0, "conjugacy: t_end must be positive");

    // Twin runs from the same absolute vorticity. The transported scalar obeys
    // the inertial equation in one frame and the rotating one in the other;
    // the two solutions differ by a rigid longitude shift Omega * t.
    SimulationConfig base = config;
    base.symmetry = Symmetry::none;
    base.t_end = t_end;

    SimulationState rot, inert;
    rot.field = initial_zeta;
    rot.field.symmetry = Symmetry::none;
    rot.field.interp = Interp::bicubic;
    inert.field = rot.field;

    const double sup0 = lp_norm(initial_zeta, std::numeric_limits<double>::infinity());
    const double scale = std::max(sup0, 1e-300);

    ConjugacyReport rep;
    auto record = [&](const SimulationState& a, const SimulationState& b) {
        double worst = 0.0;
        for (int j = 0; j < a.field.n_theta; ++j) {
            const double th = a.field.theta_node(j);
            for (int i = 0; i < a.field.n_phi; ++i) {
                const double ph = wrap_phi(a.field.phi_node(i) + omega_rate * a.time);
                const double ref = sample(b.field, ph, th);
                worst = std::max(worst, std::fabs(a.field.at(i, j) - ref));
            }
        }
        rep.times.push_back(a.time);
        rep.rel_discrepancy.push_back(worst / scale);
        rep.grad_norm_diff.push_back(std::fabs(grad_sup_norm(a.field) - grad_sup_norm(b.field)));
    };

    record(rot, inert);
    const double t_tol = 1e-12 * std::max(1.0, t_end);
    long long steps = 0;
    while (rot.time < t_end - t_tol) {
        const double dt_step = std::min(base.dt, t_end - rot.time);
        double sym_dummy = 0.0;
        rot.field = advect(rot.field, base, dt_step, omega_rate, sym_dummy);
        inert.field = advect(inert.field, base, dt_step, 0.0, sym_dummy);
        rot.time += dt_step;
        inert.time += dt_step;
        ++steps;
        const bool last = rot.time >= t_end - t_tol;
        if (last || steps % base.diagnostics_every == 0) record(rot, inert);
    }
    for (size_t k = 0; k < rep.times.size(); ++k) {
        rep.max_rel_discrepancy = std::max(rep.max_rel_discrepancy, rep.rel_discrepancy[k]);
        rep.max_grad_norm_diff = std::max(rep.max_grad_norm_diff, rep.grad_norm_diff[k]);
    }
    return rep;
}

void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("diagnostics: cannot open " + path);
    out << "t,grad_sup,l1,l2,linf,gauss_res,sym_res\n";
    for (const DiagnosticsRow& r : rows) {
        out << format_g17(r.t) << ',' << format_g17(r.grad_sup) << ',' << format_g17(r.l1) << ','
            << format_g17(r.l2) << ',' << format_g17(r.linf) << ',' << format_g17(r.gauss_res)
            << ',' << format_g17(r.sym_res) << '\n';
    }
    if (!out) throw std::runtime_error("diagnostics: write failed for " + path);
}

}  // namespace spherevort
