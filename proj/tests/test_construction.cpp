#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "spherevort/construction.hpp"

using namespace spherevort;

namespace {

constexpr double kEE = 15.154262241479262;  // e^e

double lambda_of(double s) { return std::log(kEE - 1.0 + std::abs(std::log(s))); }

}  // namespace

TEST_CASE("profile g hits 1 at the right endpoint and respects its domain") {
    CHECK(g_eval(kInvE) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS(g_eval(0.0));
    CHECK_THROWS(g_eval(-0.1));
    CHECK_THROWS(g_eval(0.4));  // past 1/e
    CHECK_NOTHROW(g_eval(1e-300));
    // The unrestricted variant continues smoothly past 1/e.
    CHECK(g_eval_extended(0.4) ==
          doctest::Approx(0.4 * std::log(kEE - 1.0 + std::abs(std::log(0.4)))));
    CHECK(g_eval_extended(kInvE) == doctest::Approx(g_eval(kInvE)));
}

TEST_CASE("profile g grows superlinearly toward zero: g(s)/s increases as s shrinks") {
    double prev = g_eval(kInvE) / kInvE;
    for (double s : {1e-2, 1e-4, 1e-8, 1e-16, 1e-32}) {
        const double lam = g_eval(s) / s;
        CHECK(lam > prev);
        prev = lam;
    }
    CHECK(g_eval(1e-2) / 1e-2 == doctest::Approx(lambda_of(1e-2)).epsilon(1e-13));
}

TEST_CASE("derivative of g lies strictly between 1 and g/s") {
    for (double s : {1e-2, 1e-6, 1e-12}) {
        const double d = gprime_eval(s);
        CHECK(d > 1.0);
        CHECK(d < g_eval(s) / s);
    }
    // Finite-difference agreement at a moderate point.
    const double s = 1e-3, h = 1e-6;
    const double fd = (g_eval(s + h) - g_eval(s - h)) / (2.0 * h);
    CHECK(gprime_eval(s) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("profile f majorizes the slowly varying factor of the outer gain") {
    CHECK(f_eval(kInvE) == doctest::Approx(3.0).epsilon(1e-14));
    double prev = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double s = kInvE * std::pow(10.0, -12.0 * k / 999.0);
        const double fv = f_eval(s);
        const double lam = lambda_of(s);
        CHECK(fv >= 3.0 - 1e-13);
        CHECK(1.0 + std::log1p(lam) <= fv + 1e-13);
        if (k > 0) CHECK(fv >= prev - 1e-13);  // decreasing in s = increasing here
        prev = fv;
    }
}

TEST_CASE("normalized annulus mass matches the frozen decade table") {
    const struct { double s, h; } table[] = {
        {1e-4, 0.612030}, {1e-5, 0.615468}, {1e-6, 0.617891},
        {1e-8, 0.621150}, {1e-10, 0.623289}, {1e-12, 0.624829},
    };
    double prev = 0.0;
    for (const auto& row : table) {
        const double h = h_eval(row.s, HMethod::flat_chart);
        CHECK(h == doctest::Approx(row.h).epsilon(2e-5));
        CHECK(h > prev);
        CHECK(h < kTwoOverPi);
        prev = h;
    }
    CHECK(std::abs(h_eval(1e-12, HMethod::flat_chart) - kTwoOverPi) ==
          doctest::Approx(0.011790).epsilon(1e-2));
}

TEST_CASE("outer constant of the closed form is exact") {
    CHECK(h_outer_constant() == 0.25 - 0.5 * std::log(std::sqrt(5.0) / 2.0));
    CHECK(h_outer_constant() == doctest::Approx(0.19421411).epsilon(1e-7));
}

TEST_CASE("log-space evaluation agrees with direct evaluation and reaches the limit") {
    for (double s : {1e-4, 1e-8, 1e-12}) {
        const double ell = -std::log(s);
        CHECK(h_times_log_from_ell(ell) ==
              doctest::Approx(h_eval(s, HMethod::flat_chart) * ell).epsilon(1e-12));
    }
    // Far beyond representable s the normalized mass approaches 2/pi from below.
    const double h_far = h_times_log_from_ell(1e6) / 1e6;
    CHECK(h_far < kTwoOverPi);
    CHECK(h_far == doctest::Approx(kTwoOverPi).epsilon(1e-5));
}

TEST_CASE("spherical and flat-chart masses differ by a bounded multiple of 1/|ln s|") {
    double lo = 1e300, hi = -1e300;
    for (double s : {1e-6, 1e-8, 1e-10}) {
        const double gap = (h_eval(s, HMethod::sphere_quadrature) -
                            h_eval(s, HMethod::flat_chart)) * std::abs(std::log(s));
        lo = std::min(lo, gap);
        hi = std::max(hi, gap);
        CHECK(gap == doctest::Approx(-0.411806).epsilon(2e-2));
    }
    CHECK(hi - lo < 2e-3);  // the scaled gap is essentially constant
}

TEST_CASE("derived constants assemble exactly from the fitted inputs") {
    const ConstructionConstants c = derive_constants(2.0, 1.0);
    CHECK(c.C1 == 2.0);
    CHECK(c.Cr == 1.0);
    CHECK(c.C2 == 3.0 * c.C1 + c.Cr + 1.0);
    CHECK(c.C3 == 2.0 * c.C2 / std::cos(1.0));
    CHECK(c.Cpp == (2.0 * c.C1 + c.C2) / std::cos(1.0) + 1.0);
    CHECK(c.s0 > 0.0);
    CHECK(c.s0 <= std::exp(-4.0));
    CHECK(c.rho0 > 0.0);
    CHECK(c.Cprime > 0.0);

    // The threshold is the first ladder point where the attraction margin
    // turns positive.
    const double ell0 = -std::log(c.s0);
    auto gap = [&](double ell) {
        const double f = 2.0 + std::log(std::log(kEE - 1.0 + ell));
        return h_times_log_from_ell(ell) -
               c.C1 / (std::cos(1.0) * std::cos(kInvE)) * f - c.Cr;
    };
    CHECK(gap(ell0) >= 0.0);
    CHECK(gap(ell0 - 0.25) < 0.0);

    // Extremizers sit at the threshold: the outer gap minimum has the closed
    // form s0/(Lambda*lambda - 1), the outer gain maximum is the fitted
    // product at s0.
    const double Lam = kEE - 1.0 + ell0, lam = std::log(Lam);
    CHECK(c.rho0 == doctest::Approx(c.s0 / (Lam * lam - 1.0)).epsilon(1e-10));
    CHECK(c.Cprime ==
          doctest::Approx(c.C1 / std::cos(1.0) * lam * (1.0 + std::log1p(lam))).epsilon(1e-10));
}

TEST_CASE("a larger remainder gain pushes the threshold deeper") {
    const double s0_lo = derive_constants(1.5, 1.0).s0;
    const double s0_hi = derive_constants(4.0, 1.0).s0;
    CHECK(s0_hi < s0_lo);
}

TEST_CASE("envelope with a constant right-hand side integrates exactly") {
    ConstructionConstants c;
    c.s0 = 1e-3;
    c.C3 = 0.5;      // contraction rate alone
    c.rho0 = 1.0;    // keeps the gain term zero since Cprime = 0
    EnvelopeParams params;
    params.consts = c;
    params.probe = [](double, double) { return 0.0; };
    EnvelopeState st;
    st.ln_alpha = 0.0;
    st.k = std::log(10.0);
    for (int i = 0; i < 100; ++i) st = envelope_step(st, 0.01, params);
    CHECK(st.t == doctest::Approx(1.0));
    CHECK(st.ln_alpha == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(st.k > std::log(10.0));  // the shrink bracket is positive at ell = 10
}

TEST_CASE("standalone envelope initialization starts on the ladder below threshold") {
    const ConstructionConstants c = derive_constants(2.0, 1.0);
    const EnvelopeState st = envelope_init(c);
    CHECK(st.ln_alpha == 0.0);
    CHECK(st.t == 0.0);
    CHECK(std::exp(st.k) >= -std::log(c.s0) * (1.0 - 1e-12));
    CHECK(envelope_dk_dt(st.k, c) > 0.0);
    // Slightly below the starting rung the shrink rate is not yet positive.
    CHECK(envelope_dk_dt(st.k - 0.35 / std::exp(st.k), c) <= 0.0);
}

TEST_CASE("standalone envelope contracts monotonically and never stalls") {
    ConstructionConstants c = derive_constants(2.0, 1.0);
    c.CI = 1.0;
    EnvelopeParams params;
    params.consts = c;
    EnvelopeState st = envelope_init(c);
    double prev_lnalpha = st.ln_alpha + 1.0, prev_k = st.k - 1.0;
    for (int i = 0; i < 200; ++i) {
        prev_lnalpha = st.ln_alpha;
        prev_k = st.k;
        st = envelope_step(st, 0.05, params);
        CHECK(st.ln_alpha < prev_lnalpha);
        CHECK(st.k >= prev_k);
    }
    CHECK(st.t == doctest::Approx(10.0));
    CHECK(st.ln_alpha < -1.0);
}

TEST_CASE("long-horizon shrink rate approaches 2/pi") {
    ConstructionConstants c = derive_constants(2.0, 1.0);
    c.CI = 1.0;
    EnvelopeParams params;
    params.consts = c;
    EnvelopeState st = envelope_init(c);
    while (st.t < 500.0 - 1e-9) st = envelope_step(st, 0.1, params);
    CHECK(st.k / 500.0 == doctest::Approx(kTwoOverPi).epsilon(0.1));
    // The rate itself has converged much closer than the secant.
    CHECK(envelope_dk_dt(st.k, c) == doctest::Approx(kTwoOverPi).epsilon(1e-3));
}

TEST_CASE("guarded steps reject corrupted states") {
    const ConstructionConstants c = derive_constants(2.0, 1.0);
    EnvelopeParams params;
    params.consts = c;
    EnvelopeState st = envelope_init(c);
    EnvelopeState bad = st;
    bad.k = std::log(-std::log(c.s0)) - 0.5;  // above s0: not yet trapped
    CHECK_THROWS(envelope_step(bad, 0.05, params));
}

TEST_CASE("near-meridian and far bands tile the open quarter exactly") {
    RegionSpec q;
    q.kind = RegionSpec::Kind::Q;
    q.k1 = 0.3;
    q.k2 = 0.1;
    RegionSpec q2 = q;
    q2.kind = RegionSpec::Kind::Q2;
    RegionSpec q3 = q;
    q3.kind = RegionSpec::Kind::Q3;
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> up(1e-9, kPi - 1e-9), ut(1e-9, kPi / 2 - 1e-9);
    for (int k = 0; k < 10000; ++k) {
        const double p = up(rng), t = ut(rng);
        const int hits = int(region_contains(q, p, t)) + int(region_contains(q2, p, t)) +
                         int(region_contains(q3, p, t));
        CHECK(hits == 1);
    }
    // Shared edges resolve to exactly one side.
    CHECK(region_contains(q2, 0.3, 0.4));
    CHECK(!region_contains(q, 0.3, 0.4));
    CHECK(region_contains(q3, 0.5, 0.1));
    CHECK(!region_contains(q, 0.5, 0.1));
}

TEST_CASE("mirrored bands tile the open quarter exactly") {
    RegionSpec q;
    q.kind = RegionSpec::Kind::Q;
    q.k1 = 0.2;
    q.k2 = 0.4;
    RegionSpec qt2 = q;
    qt2.kind = RegionSpec::Kind::Qt2;
    RegionSpec qt3 = q;
    qt3.kind = RegionSpec::Kind::Qt3;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> up(1e-9, kPi - 1e-9), ut(1e-9, kPi / 2 - 1e-9);
    for (int k = 0; k < 10000; ++k) {
        const double p = up(rng), t = ut(rng);
        const int hits = int(region_contains(q, p, t)) + int(region_contains(qt2, p, t)) +
                         int(region_contains(qt3, p, t));
        CHECK(hits == 1);
    }
}

TEST_CASE("low band splits into its local square and far parts") {
    RegionSpec q3;
    q3.kind = RegionSpec::Kind::Q3;
    q3.k1 = 0.1;
    q3.k2 = 0.3;
    RegionSpec q4 = q3;
    q4.kind = RegionSpec::Kind::Q4;
    RegionSpec q3p = q3;
    q3p.kind = RegionSpec::Kind::Q3p;
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> up(1e-9, kPi - 1e-9), ut(1e-9, kPi / 2 - 1e-9);
    for (int k = 0; k < 10000; ++k) {
        const double p = up(rng), t = ut(rng);
        const bool in3 = region_contains(q3, p, t);
        const bool split = region_contains(q4, p, t) || region_contains(q3p, p, t);
        CHECK(in3 == split);
        CHECK(!(region_contains(q4, p, t) && region_contains(q3p, p, t)));
    }
    // Mirrored version.
    RegionSpec qt3;
    qt3.kind = RegionSpec::Kind::Qt3;
    qt3.k1 = 0.3;
    qt3.k2 = 0.1;
    RegionSpec qt4 = qt3;
    qt4.kind = RegionSpec::Kind::Qt4;
    RegionSpec qt3p = qt3;
    qt3p.kind = RegionSpec::Kind::Qt3p;
    for (int k = 0; k < 10000; ++k) {
        const double p = up(rng), t = ut(rng);
        const bool in3 = region_contains(qt3, p, t);
        const bool split = region_contains(qt4, p, t) || region_contains(qt3p, p, t);
        CHECK(in3 == split);
        CHECK(!(region_contains(qt4, p, t) && region_contains(qt3p, p, t)));
    }
}

TEST_CASE("annulus, trapped set, and graph membership behave as defined") {
    RegionSpec ann;
    ann.kind = RegionSpec::Kind::Qtilde;
    ann.r = 0.5;
    CHECK(region_contains(ann, 0.6, 0.3));
    CHECK(!region_contains(ann, 0.3, 0.2));
    CHECK(!region_contains(ann, 3.2, 0.3));  // outside the quarter

    RegionSpec om;
    om.kind = RegionSpec::Kind::Omega_eps;
    om.eps = 0.01;
    CHECK(region_contains(om, 0.1, 0.5 * g_eval(0.1)));
    CHECK(!region_contains(om, 0.005, 0.001));       // left of eps
    CHECK(!region_contains(om, 0.1, 1.1 * g_eval(0.1)));
    CHECK(!region_contains(om, 0.5, 0.1));           // past 1/e

    RegionSpec ds;
    ds.kind = RegionSpec::Kind::D_s;
    ds.s = 0.05;
    CHECK(region_contains(ds, 0.2, 0.05));
    CHECK(!region_contains(ds, 0.03, 0.02));  // inside the inner radius
    CHECK(!region_contains(ds, 0.35, 0.2));   // outside e^{-1} circle
    const double gs = g_eval(0.2);
    CHECK(!region_contains(ds, 0.2, gs * 1.05));  // above the graph
}

TEST_CASE("scaling a region by alpha is exact membership conjugation") {
    RegionSpec om;
    om.kind = RegionSpec::Kind::Omega_eps;
    om.eps = 0.01;
    RegionSpec scaled;
    scaled.kind = RegionSpec::Kind::scaled;
    scaled.alpha = 0.5;
    scaled.base = &om;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> up(1e-6, 0.5), ut(1e-6, 0.5);
    for (int k = 0; k < 5000; ++k) {
        const double p = up(rng), t = ut(rng);
        CHECK(region_contains(scaled, 0.5 * p, 0.5 * t) == region_contains(om, p, t));
    }
}

TEST_CASE("boundary sign conditions hold for the maximal patch at desk scale") {
    const ConstructionConstants c = derive_constants(2.0, 1.0);
    const double eps = std::exp(-28.0);  // below the threshold s0
    REQUIRE(eps < c.s0);
    const BoundaryFluxReport rep = boundary_flux_check(0.5, eps, c, 4);
    CHECK(rep.graph_uphi.size() == 4);
    CHECK(rep.graph_utheta.size() == 4);
    CHECK(rep.outer.size() == 4);
    for (const auto& m : rep.graph_uphi) CHECK(m.pass);
    for (const auto& m : rep.graph_utheta) CHECK(m.pass);
    for (const auto& m : rep.outer) CHECK(m.pass);
    CHECK(rep.left_edge.pass);
    CHECK(rep.all_pass);
    CHECK(rep.worst_graph_margin >= -1e-6);
}
