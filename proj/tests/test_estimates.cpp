#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "spherevort/biot_savart.hpp"
#include "spherevort/estimates.hpp"
#include "spherevort/field.hpp"

using namespace spherevort;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Globally smooth odd-odd model: its quarter restriction extends seamlessly.
AnalyticOddField smooth_model() {
    AnalyticOddField f;
    f.value = [](double p, double t) { return std::sin(p) * std::sin(2.0 * t); };
    f.sup_norm = 1.0;
    f.grad_sup_window = [](double pm, double tm) {
        double m = 0.0;
        for (int i = 0; i <= 60; ++i)
            for (int j = 0; j <= 60; ++j) {
                const double p = pm * i / 60.0, t = tm * j / 60.0;
                m = std::max(m, std::hypot(std::cos(p) * std::sin(2.0 * t),
                                           2.0 * std::sin(p) * std::cos(2.0 * t)));
            }
        return m;
    };
    return f;
}

// Sharp maximal patch: 1 on the open quarter.
AnalyticOddField patch_model() {
    AnalyticOddField f;
    f.value = [](double, double) { return 1.0; };
    f.sup_norm = 1.0;
    f.grad_sup_window = [](double, double) { return 0.0; };
    return f;
}

}  // namespace

TEST_CASE("graded quadrature integrates smooth separable data to high accuracy") {
    GradedQuadOpts opts;
    const double got = graded_integral(
        [](double p, double t) { return std::sin(p) * std::sin(t); }, 0.0, kPi, 0.0, kPi / 2.0,
        {0.5}, {0.3}, opts);
    CHECK(got == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("graded quadrature resolves an integrable edge singularity") {
    GradedQuadOpts opts;
    const double got = graded_integral(
        [](double p, double) { return 0.5 / std::sqrt(p); }, 0.0, 1.0, 0.0, 1.0, {0.0}, {},
        opts);
    CHECK(got == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("analytic extension applies one sign flip per reflected axis") {
    const AnalyticOddField f = smooth_model();
    const double base = f.value(0.3, 0.4);
    CHECK(analytic_field_value(f, 0.3, 0.4) == base);
    CHECK(analytic_field_value(f, -0.3, 0.4) == -base);
    CHECK(analytic_field_value(f, 0.3, -0.4) == -base);
    CHECK(analytic_field_value(f, -0.3, -0.4) == base);
    CHECK(analytic_field_value(f, 0.0, 0.4) == 0.0);
    CHECK(analytic_field_value(f, 0.3, 0.0) == 0.0);
}

TEST_CASE("analytic-route velocity matches the grid route on a smooth field") {
    const AnalyticOddField f = smooth_model();
    VorticityField grid = make_field(128, 64, Symmetry::odd_odd);
    for (int j = 0; j < grid.n_theta; ++j)
        for (int i = 0; i < grid.n_phi; ++i)
            grid.at(i, j) = std::sin(grid.phi_node(i)) * std::sin(2.0 * grid.theta_node(j));
    const QuadratureSpec q = make_quadrature(128, 64, 2.0);
    GradedQuadOpts opts;
    for (const auto& pt : {std::pair{0.7, 0.5}, std::pair{1.3, 0.3}, std::pair{0.4, 1.0}}) {
        const QuarterVelocity a = velocity_oddodd_analytic(f, pt.first, pt.second, opts);
        const TangentVelocity b = velocity_oddodd(grid, pt.first, pt.second, q);
        const double scale = std::max(std::abs(a.u_phi), std::abs(a.u_theta));
        REQUIRE(scale > 1e-4);
        // The grid route carries its own O(h^2) discretization error here.
        CHECK(std::abs(a.u_phi - b.u_phi) / scale < 5e-2);
        CHECK(std::abs(a.u_theta - b.u_theta) / scale < 5e-2);
    }
}

TEST_CASE("analytic-route velocity vanishes on the symmetry circles") {
    const AnalyticOddField f = smooth_model();
    GradedQuadOpts opts;
    CHECK(velocity_oddodd_analytic(f, 0.0, 0.6, opts).u_phi == 0.0);
    CHECK(velocity_oddodd_analytic(f, 0.8, 0.0, opts).u_theta == 0.0);
}

TEST_CASE("normalized annulus leading term reproduces the attracting mass profile") {
    const AnalyticOddField patch = patch_model();
    GradedQuadOpts opts;
    const double s = 1e-6;
    const double lt = leading_term(patch, s, g_eval(s), LeadingRegion::Qtilde, opts);
    const double h = lt / std::abs(std::log(s));
    CHECK(h > 0.55);
    CHECK(h < 0.70);
    // Independent implementation of the same mass (different panelization).
    CHECK(h == doctest::Approx(h_eval(s, HMethod::sphere_quadrature)).epsilon(1e-3));
}

TEST_CASE("rectangular leading region nests inside the annular one") {
    const AnalyticOddField patch = patch_model();
    GradedQuadOpts opts;
    const double lt_q = leading_term(patch, 0.1, 0.15, LeadingRegion::Q, opts);
    const double lt_a = leading_term(patch, 0.1, 0.15, LeadingRegion::Qtilde, opts);
    CHECK(lt_q > 0.0);
    CHECK(lt_q < lt_a);
    CHECK(lt_a - lt_q < 4.0);
}

TEST_CASE("remainder stays within the fitted gain at a dyadic probe") {
    const AnalyticOddField f = smooth_model();
    GradedQuadOpts opts;
    const double p = std::pow(2.0, -4.0);
    for (VelocityComponent comp : {VelocityComponent::phi, VelocityComponent::theta}) {
        const EstimateReport rep = remainder_B(f, p, p, comp, LeadingRegion::Q, 2.0, opts);
        CHECK(rep.pass);
        CHECK(rep.ratio < 2.0);
        CHECK(rep.ratio > 0.0);
        CHECK(std::isfinite(rep.leading));
        CHECK(std::abs(rep.remainder) <= rep.bound);
    }
}

TEST_CASE("remainder sweep passes everywhere and its fitted gain is quadrature-stable") {
    const AnalyticOddField f = smooth_model();
    GradedQuadOpts coarse;
    const RemainderSweep sweep =
        remainder_sweep(f, 3, 5, VelocityComponent::phi, LeadingRegion::Q, 2.0, coarse);
    CHECK(sweep.reports.size() == 9);
    for (const EstimateReport& rep : sweep.reports) CHECK(rep.pass);
    CHECK(sweep.max_ratio > 0.0);
    CHECK(sweep.max_ratio < 2.0);

    GradedQuadOpts fine = coarse;
    fine.ratio = 1.22;  // denser ladders
    const RemainderSweep sweep2 =
        remainder_sweep(f, 3, 5, VelocityComponent::phi, LeadingRegion::Q, 2.0, fine);
    CHECK(std::abs(sweep2.max_ratio - sweep.max_ratio) / sweep.max_ratio < 0.05);
}

TEST_CASE("approach speed equals the mirrored edge-velocity difference") {
    const AnalyticOddField f = smooth_model();
    GradedQuadOpts opts;
    const double eps = 0.05;
    const double direct = approach_speed(f, eps, opts);
    // The phi-velocity is exactly odd across the meridian, so the two-point
    // difference collapses to -2 u_phi(eps, 0).
    const double via_kernel = -2.0 * velocity_oddodd_analytic(f, eps, 0.0, opts).u_phi;
    CHECK(direct == doctest::Approx(via_kernel).epsilon(1e-4));
    CHECK(direct > 0.0);  // mirror cells drift together for positive data
}

TEST_CASE("approach speed of the maximal patch obeys the logarithmic cap") {
    const AnalyticOddField patch = patch_model();
    GradedQuadOpts opts;
    for (double eps : {0.05, 0.01}) {
        const double v = approach_speed(patch, eps, opts);
        CHECK(v > 0.0);
        // (2/pi)(ln(1/eps) + C) * 2 eps with a generous offset.
        CHECK(v < 2.0 / kPi * (std::log(1.0 / eps) + 5.0) * 2.0 * eps);
        CHECK(v > 2.0 / kPi * std::log(1.0 / eps) * eps * 0.3);
    }
}

TEST_CASE("double-exponential majorant starts at the data and blows up honestly") {
    CHECK(upper_envelope(std::exp(1.0), 1.0, 0.0, 0.5) == doctest::Approx(std::exp(1.0)));
    double prev = 0.0;
    for (double t : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const double v = upper_envelope(10.0, 1.0, t, 0.5);
        CHECK(v > prev);
        prev = v;
    }
    CHECK(upper_envelope(10.0, 1.0, 50.0, 0.5) == kInf);
    CHECK_THROWS(upper_envelope(10.0, 20.0, 1.0, 0.5));  // impossible support size
    CHECK_THROWS(upper_envelope(10.0, 0.0, 1.0, 0.5));
    CHECK_THROWS(upper_envelope(-1.0, 1.0, 1.0, 0.5));
}

TEST_CASE("log-log form agrees with the direct form while the latter is finite") {
    for (double t : {0.0, 1.0, 2.0, 3.0}) {
        const double direct = upper_envelope(20.0, 2.0, t, 0.7);
        const double ll = upper_envelope_log_log(20.0, 2.0, t, 0.7);
        CHECK(std::log(std::log(direct)) == doctest::Approx(ll).epsilon(1e-12));
    }
    // Far beyond overflow the log-log slope settles at 2/pi.
    const double a = upper_envelope_log_log(20.0, 2.0, 1000.0, 0.7);
    const double b = upper_envelope_log_log(20.0, 2.0, 2000.0, 0.7);
    CHECK((b - a) / 1000.0 == doctest::Approx(kTwoOverPi).epsilon(1e-9));
}
