#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spherevort/solver.hpp"

using namespace spherevort;

namespace {

VorticityField solid_body(int np, int nt) {
    VorticityField f = make_field(np, nt);
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < np; ++i) f.at(i, j) = 2.0 * std::sin(f.theta_node(j));
    return f;
}

VorticityField smooth_oddodd(int np, int nt) {
    VorticityField f = make_field(np, nt, Symmetry::odd_odd, Interp::bicubic);
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < np; ++i)
            f.at(i, j) = std::sin(f.phi_node(i)) * std::sin(2.0 * f.theta_node(j));
    antisymmetrize(f);
    return f;
}

double linf_diff(const VorticityField& a, const VorticityField& b) {
    double m = 0.0;
    for (size_t k = 0; k < a.val.size(); ++k) m = std::max(m, std::abs(a.val[k] - b.val[k]));
    return m;
}

SimulationConfig base_config(int np, int nt) {
    SimulationConfig cfg;
    cfg.n_phi = np;
    cfg.n_theta = nt;
    cfg.dt = 0.05;
    cfg.t_end = 0.25;
    return cfg;
}

}  // namespace

TEST_CASE("zonal vorticity is a steady state of the transport step") {
    const VorticityField f0 = solid_body(64, 32);
    SimulationConfig cfg = base_config(64, 32);
    SimulationState st;
    st.field = f0;
    const SimulationState st1 = step(st, cfg);
    CHECK(st1.time == doctest::Approx(0.05));
    CHECK(st1.steps_taken == 1);
    // The induced flow rotates along latitude circles where the field is
    // constant, so only the quadrature's spurious meridional drift acts.
    CHECK(linf_diff(st1.field, f0) < 2e-3);
}

TEST_CASE("the zero field stays exactly zero") {
    SimulationConfig cfg = base_config(32, 16);
    const VorticityField z = make_field(32, 16);
    const SimulationState out = run(cfg, z);
    CHECK(out.steps_taken == 5);
    for (double v : out.field.val) CHECK(v == 0.0);
    for (const DiagnosticsRow& row : out.diagnostics) {
        CHECK(row.linf == 0.0);
        CHECK(row.gauss_res == 0.0);
        CHECK(row.sym_res == 0.0);
    }
}

TEST_CASE("declared odd-odd symmetry is enforced exactly and drifts little") {
    SimulationConfig cfg = base_config(64, 32);
    cfg.symmetry = Symmetry::odd_odd;
    const SimulationState out = run(cfg, smooth_oddodd(64, 32));
    CHECK(symmetry_residual(out.field) == 0.0);
    for (const DiagnosticsRow& row : out.diagnostics) {
        CHECK(row.sym_res < 1e-2);       // pre-enforcement drift per step
        CHECK(row.gauss_res < 1e-12);    // odd-odd integrals cancel
    }
}

TEST_CASE("sup norm never grows under the clamped transport") {
    SimulationConfig cfg = base_config(64, 32);
    cfg.symmetry = Symmetry::odd_odd;
    const VorticityField f0 = smooth_oddodd(64, 32);
    const double sup0 = lp_norm(f0, std::numeric_limits<double>::infinity());
    const SimulationState out = run(cfg, f0);
    for (const DiagnosticsRow& row : out.diagnostics) CHECK(row.linf <= sup0 + 1e-12);
}

TEST_CASE("diagnostics rows appear at start, cadence, and the end") {
    SimulationConfig cfg = base_config(32, 16);
    cfg.diagnostics_every = 2;
    const SimulationState out = run(cfg, smooth_oddodd(32, 16));
    REQUIRE(out.diagnostics.size() == 4);  // t = 0, 0.10, 0.20, 0.25
    CHECK(out.diagnostics.front().t == 0.0);
    CHECK(out.diagnostics[1].t == doctest::Approx(0.10));
    CHECK(out.diagnostics[2].t == doctest::Approx(0.20));
    CHECK(out.diagnostics.back().t == doctest::Approx(0.25));
}

TEST_CASE("a partial final step lands exactly on the requested horizon") {
    SimulationConfig cfg = base_config(32, 16);
    cfg.dt = 0.2;
    cfg.t_end = 0.5;
    const SimulationState out = run(cfg, smooth_oddodd(32, 16));
    CHECK(out.steps_taken == 3);  // 0.2 + 0.2 + 0.1
    CHECK(out.diagnostics.back().t == doctest::Approx(0.5));
}

TEST_CASE("time refinement converges on a fixed grid") {
    const VorticityField f0 = smooth_oddodd(64, 32);
    SimulationConfig cfg = base_config(64, 32);
    cfg.symmetry = Symmetry::odd_odd;
    cfg.t_end = 0.5;
    VorticityField sol[3];
    int k = 0;
    for (double dt : {0.1, 0.05, 0.025}) {
        cfg.dt = dt;
        sol[k++] = run(cfg, f0).field;
    }
    cfg.dt = 0.0125;
    const VorticityField ref = run(cfg, f0).field;
    const double e1 = linf_diff(sol[0], ref);
    const double e2 = linf_diff(sol[1], ref);
    const double e3 = linf_diff(sol[2], ref);
    CHECK(e2 < e1);
    CHECK(e3 < e2);
    // Splitting error shrinks like dt but re-interpolation error accumulates
    // like h^4/dt on a fixed grid, so the measured secant order sits between.
    const double order = std::log2(e1 / e2);
    CHECK(order > 0.5);
}

TEST_CASE("the CFL guard subdivides large outer steps instead of failing") {
    SimulationConfig cfg = base_config(48, 24);
    cfg.dt = 0.5;
    cfg.t_end = 0.5;
    const SimulationState out = run(cfg, solid_body(48, 24));
    CHECK(out.steps_taken == 1);
    const double sup0 = 2.0;
    CHECK(lp_norm(out.field, std::numeric_limits<double>::infinity()) <= sup0 + 1e-12);
    CHECK(linf_diff(out.field, solid_body(48, 24)) < 2e-2);
}

TEST_CASE("absolute vorticity shifts nodes by the planetary term and undoes exactly") {
    const VorticityField f = smooth_oddodd(32, 16);
    const VorticityField zeta = absolute_vorticity(f, 0.7);
    CHECK(zeta.symmetry == Symmetry::none);
    for (int j = 0; j < f.n_theta; ++j)
        for (int i = 0; i < f.n_phi; ++i)
            CHECK(zeta.at(i, j) ==
                  doctest::Approx(f.at(i, j) + 1.4 * std::sin(f.theta_node(j))).epsilon(1e-15));
    const VorticityField back = absolute_vorticity(zeta, -0.7);
    CHECK(linf_diff(back, f) < 1e-15);
    CHECK(absolute_vorticity(f, 0.0).symmetry == Symmetry::odd_odd);
}

TEST_CASE("rotating step with zero rate reduces to the inertial step bitwise") {
    SimulationConfig cfg = base_config(48, 24);
    cfg.rotation_omega = 0.0;
    SimulationState st;
    st.field = smooth_oddodd(48, 24);
    const SimulationState a = step(st, cfg);
    const SimulationState b = rotating_step(st, cfg);
    for (size_t k = 0; k < a.field.val.size(); ++k) CHECK(a.field.val[k] == b.field.val[k]);
}

TEST_CASE("rotating and inertial twins agree through the rigid longitude shift") {
    const int np = 48, nt = 24;
    const VorticityField zeta0 = absolute_vorticity(smooth_oddodd(np, nt), 0.5);
    SimulationConfig cfg = base_config(np, nt);
    cfg.dt = 0.05;
    const ConjugacyReport rep = conjugacy_check(zeta0, 0.5, 0.3, cfg);
    REQUIRE(rep.times.size() >= 2);
    CHECK(rep.times.front() == 0.0);
    CHECK(rep.times.back() == doctest::Approx(0.3));
    CHECK(rep.rel_discrepancy.front() < 1e-14);  // identical before any motion
    CHECK(rep.max_rel_discrepancy < 5e-2);
    CHECK(rep.max_grad_norm_diff < 0.5);
}

TEST_CASE("diagnostics CSV carries the full-precision rows") {
    std::vector<DiagnosticsRow> rows(2);
    rows[0].t = 0.0;
    rows[0].grad_sup = 1.0 / 3.0;
    rows[1].t = 0.1;
    rows[1].linf = 2.0;
    const std::string path = "diag_roundtrip_test.csv";
    write_diagnostics_csv(rows, path);
    std::ifstream in(path);
    std::string header, r0, r1;
    std::getline(in, header);
    std::getline(in, r0);
    std::getline(in, r1);
    CHECK(header == "t,grad_sup,l1,l2,linf,gauss_res,sym_res");
    CHECK(r0 == "0,0.33333333333333331,0,0,0,0,0");
    CHECK(r1 == "0.10000000000000001,0,0,0,2,0,0");
    std::remove(path.c_str());
}

TEST_CASE("configuration validation rejects mismatched grids and bad cadence") {
    SimulationConfig cfg = base_config(32, 16);
    CHECK_THROWS(run(cfg, make_field(64, 32)));
    cfg.diagnostics_every = 0;
    CHECK_THROWS(run(cfg, make_field(32, 16)));
    cfg.diagnostics_every = 1;
    cfg.dt = 0.0;
    CHECK_THROWS(run(cfg, make_field(32, 16)));
}
