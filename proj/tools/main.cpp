// Command-line front end: numerical laboratory for vorticity transport on the
// sphere. Every run is driven by a flat JSON config; the run record (command,
// config path, seed, and the resolved parameter set) is echoed to
// <out_dir>/manifest.json so any run can be reproduced exactly.
//
// Exit codes: 0 success, 1 a numerical check failed or a runtime error
// occurred, 2 the config or command line is invalid (the offending key is
// named on stderr).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spherevort/biot_savart.hpp"
#include "spherevort/construction.hpp"
#include "spherevort/estimates.hpp"
#include "spherevort/field.hpp"
#include "spherevort/geometry.hpp"
#include "spherevort/solver.hpp"

using nlohmann::json;
using namespace spherevort;

namespace {

struct ConfigError {
    std::string key;
    std::string what;
};

// ---------------------------------------------------------------------------
// Flat-config schema: one shared key set, validated strictly
// ---------------------------------------------------------------------------

enum class KeyType { integer, number, text };

struct SchemaKey {
    const char* name;
    KeyType type;
    json fallback;  // null = no default; must be supplied when a command uses it
};

// Union of every accepted key. Fitted constants carry no code default: they
// are read from the config file or not at all.
const std::vector<SchemaKey>& schema() {
    static const std::vector<SchemaKey> keys = {
        // grid / time stepping
        {"n_phi", KeyType::integer, {}},
        {"n_theta", KeyType::integer, {}},
        // benchmark grid for verify-kernel; absent means the working grid
        {"bench_n_phi", KeyType::integer, {}},
        {"bench_n_theta", KeyType::integer, {}},
        {"dt", KeyType::number, {}},
        {"t_end", KeyType::number, {}},
        {"rotation_omega", KeyType::number, 0.0},
        {"symmetry", KeyType::text, "none"},
        {"backtrace", KeyType::text, "rk4"},
        {"cfl_max", KeyType::number, 0.5},
        {"diagnostics_every", KeyType::integer, 1},
        {"snapshot_every", KeyType::integer, 0},
        // initial data
        {"initial_kind", KeyType::text, {}},
        {"epsilon0", KeyType::number, 0.05},
        {"transition_width", KeyType::number, 0.04},
        {"initial_snapshot", KeyType::text, ""},
        // quadrature
        {"quad_rule", KeyType::text, "midpoint"},
        {"cutoff_diagonals", KeyType::number, 2.0},
        {"quad_ratio", KeyType::number, 1.35},
        {"quad_core", KeyType::number, 1e-30},
        // randomized checks
        {"seed", KeyType::integer, 1},
        {"n_points", KeyType::integer, 50},
        // check tolerances
        {"tolerance_benchmark", KeyType::number, 1e-3},
        {"tolerance_dual", KeyType::number, 1e-4},
        {"tolerance_vanishing", KeyType::number, 1e-6},
        {"tolerance_conjugacy", KeyType::number, 1e-2},
        // estimate sweep
        {"k_min", KeyType::integer, 2},
        {"k_max", KeyType::integer, 6},
        {"component", KeyType::text, "both"},
        {"region", KeyType::text, "Q"},
        {"model", KeyType::text, "smooth"},
        // envelope integration
        {"sample_every", KeyType::integer, 20},
        // output
        {"out_dir", KeyType::text, "out"},
        // fitted constants (frozen in fixtures/default.json)
        {"remainder_gain", KeyType::number, {}},
        {"approach_offset", KeyType::number, {}},
        {"growth_offset", KeyType::number, {}},
        {"window_slack", KeyType::number, {}},
        {"boundary_offset", KeyType::number, {}},
        {"shrink_offset", KeyType::number, {}},
        {"outer_speed_gain", KeyType::number, {}},
        {"outer_gap_min", KeyType::number, {}},
        {"speed_cap", KeyType::number, {}},
        {"chord_equiv_lo", KeyType::number, {}},
        {"chord_equiv_hi", KeyType::number, {}},
        {"s0", KeyType::number, {}},
    };
    return keys;
}

const SchemaKey* find_key(const std::string& name) {
    for (const SchemaKey& k : schema())
        if (name == k.name) return &k;
    return nullptr;
}

// Validates every present key against the shared schema, enforces the
// command's required list, and materializes defaults for the keys the
// command consumes. Unconsumed keys pass through verbatim.
json resolve_config(const json& cfg, const std::vector<const char*>& required,
                    const std::vector<const char*>& uses) {
    if (!cfg.is_object()) throw ConfigError{"<root>", "config must be a JSON object"};
    for (const auto& item : cfg.items()) {
        const SchemaKey* k = find_key(item.key());
        if (k == nullptr) throw ConfigError{item.key(), "unknown key"};
        const json& v = item.value();
        switch (k->type) {
            case KeyType::integer:
                if (!v.is_number_integer()) throw ConfigError{item.key(), "expected an integer"};
                break;
            case KeyType::number:
                if (!v.is_number()) throw ConfigError{item.key(), "expected a number"};
                break;
            case KeyType::text:
                if (!v.is_string()) throw ConfigError{item.key(), "expected a string"};
                break;
        }
    }
    for (const char* name : required)
        if (!cfg.contains(name)) throw ConfigError{name, "missing required key"};
    json out = cfg;
    for (const char* name : uses) {
        if (out.contains(name)) continue;
        const SchemaKey* k = find_key(name);
        if (k == nullptr || k->fallback.is_null())
            throw ConfigError{name, "missing required key"};
        out[name] = k->fallback;
    }
    return out;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError{"--config", "cannot open " + path};
    try {
        return json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError{"--config", std::string("parse failure: ") + e.what()};
    }
}

// Run context shared by all commands.
struct RunContext {
    std::string config_path;
    std::string out_dir;  // resolved: --out-dir flag beats config, beats default
};

std::string resolve_out_dir(const json& cfg, const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (cfg.is_object() && cfg.contains("out_dir")) {
        if (!cfg.at("out_dir").is_string()) throw ConfigError{"out_dir", "expected a string"};
        return cfg.at("out_dir").get<std::string>();
    }
    return "out";
}

void write_manifest(const RunContext& ctx, const std::string& command, const json& resolved) {
    std::filesystem::create_directories(ctx.out_dir);
    json manifest;
    manifest["command"] = command;
    manifest["config_path"] = ctx.config_path;
    manifest["out_dir"] = ctx.out_dir;
    manifest["seed"] = resolved.contains("seed") ? resolved.at("seed") : json(1);
    manifest["config"] = resolved;
    std::ofstream out(ctx.out_dir + "/manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + ctx.out_dir);
    out << manifest.dump(2) << '\n';
}

void write_json(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Shared builders
// ---------------------------------------------------------------------------

void check_grid(const json& cfg) {
    const int np = cfg.at("n_phi").get<int>(), nt = cfg.at("n_theta").get<int>();
    if (np < 4 || np % 2 != 0) throw ConfigError{"n_phi", "must be even and >= 4"};
    if (nt < 4 || nt % 2 != 0) throw ConfigError{"n_theta", "must be even and >= 4"};
}

QuadRule parse_rule(const json& cfg) {
    const std::string rule = cfg.at("quad_rule").get<std::string>();
    if (rule == "midpoint") return QuadRule::midpoint;
    if (rule == "gauss_composite") return QuadRule::gauss_composite;
    throw ConfigError{"quad_rule", "must be midpoint or gauss_composite"};
}

QuadratureSpec quad_from(const json& cfg) {
    check_grid(cfg);
    try {
        return make_quadrature(cfg.at("n_phi").get<int>(), cfg.at("n_theta").get<int>(),
                               cfg.at("cutoff_diagonals").get<double>(), parse_rule(cfg));
    } catch (const std::invalid_argument& e) {
        throw ConfigError{"cutoff_diagonals", e.what()};
    }
}

VorticityField solid_body_field(int np, int nt) {
    VorticityField f = make_field(np, nt);
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < np; ++i) f.at(i, j) = 2.0 * std::sin(f.theta_node(j));
    return f;
}

// Smooth odd-odd reference data, resolved on any admissible grid.
VorticityField smooth_test_field(int np, int nt) {
    VorticityField f = make_field(np, nt, Symmetry::odd_odd);
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < np; ++i)
            f.at(i, j) = std::sin(f.phi_node(i)) * std::sin(2.0 * f.theta_node(j));
    antisymmetrize(f);
    return f;
}

VorticityField initial_from(const json& cfg) {
    check_grid(cfg);
    const int np = cfg.at("n_phi").get<int>();
    const int nt = cfg.at("n_theta").get<int>();
    const std::string kind = cfg.at("initial_kind").get<std::string>();
    try {
        if (kind == "sandwiched_bump" || kind == "patch_sign") {
            InitialDataSpec spec;
            spec.kind = kind == "patch_sign" ? InitialDataSpec::Kind::patch_sign
                                             : InitialDataSpec::Kind::sandwiched_bump;
            spec.epsilon0 = cfg.at("epsilon0").get<double>();
            spec.transition_width = cfg.at("transition_width").get<double>();
            return build_initial_data(spec, np, nt);
        }
        if (kind == "solid_body") return solid_body_field(np, nt);
        if (kind == "smooth_test") return smooth_test_field(np, nt);
        if (kind == "snapshot") {
            const std::string path = cfg.at("initial_snapshot").get<std::string>();
            if (path.empty()) throw ConfigError{"initial_snapshot", "missing snapshot path"};
            VorticityField f = read_field_csv(path);
            if (f.n_phi != np || f.n_theta != nt)
                throw ConfigError{"initial_snapshot", "snapshot grid does not match n_phi/n_theta"};
            return f;
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError{"epsilon0", e.what()};
    }
    throw ConfigError{"initial_kind",
                      "must be sandwiched_bump, patch_sign, solid_body, smooth_test, or snapshot"};
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const json& raw, const RunContext& ctx) {
    json cfg = resolve_config(
        raw, {"n_phi", "n_theta", "dt", "t_end", "initial_kind"},
        {"n_phi", "n_theta", "dt", "t_end", "rotation_omega", "symmetry", "backtrace", "cfl_max",
         "diagnostics_every", "snapshot_every", "initial_kind", "epsilon0", "transition_width",
         "initial_snapshot", "quad_rule", "cutoff_diagonals", "seed", "out_dir"});
    cfg["out_dir"] = ctx.out_dir;

    SimulationConfig sim;
    sim.n_phi = cfg.at("n_phi").get<int>();
    sim.n_theta = cfg.at("n_theta").get<int>();
    sim.dt = cfg.at("dt").get<double>();
    sim.t_end = cfg.at("t_end").get<double>();
    sim.rotation_omega = cfg.at("rotation_omega").get<double>();
    sim.quad = quad_from(cfg);
    sim.cfl_max = cfg.at("cfl_max").get<double>();
    sim.diagnostics_every = cfg.at("diagnostics_every").get<int>();
    sim.snapshot_every = cfg.at("snapshot_every").get<int>();
    if (sim.snapshot_every > 0) sim.snapshot_prefix = ctx.out_dir + "/snapshot";
    const std::string symmetry = cfg.at("symmetry").get<std::string>();
    if (symmetry == "odd_odd")
        sim.symmetry = Symmetry::odd_odd;
    else if (symmetry == "none")
        sim.symmetry = Symmetry::none;
    else
        throw ConfigError{"symmetry", "must be none or odd_odd"};
    const std::string backtrace = cfg.at("backtrace").get<std::string>();
    if (backtrace == "rk2")
        sim.backtrace = Backtrace::rk2;
    else if (backtrace == "rk4")
        sim.backtrace = Backtrace::rk4;
    else
        throw ConfigError{"backtrace", "must be rk2 or rk4"};
    if (sim.symmetry == Symmetry::odd_odd && sim.rotation_omega != 0.0)
        throw ConfigError{"symmetry", "the planetary term breaks the odd-odd class; use none"};
    if (sim.dt <= 0.0) throw ConfigError{"dt", "must be positive"};
    if (sim.t_end < 0.0) throw ConfigError{"t_end", "must be nonnegative"};
    if (sim.diagnostics_every < 1) throw ConfigError{"diagnostics_every", "must be >= 1"};
    if (sim.cfl_max <= 0.0) throw ConfigError{"cfl_max", "must be positive"};

    const VorticityField initial = initial_from(cfg);
    write_manifest(ctx, "simulate", cfg);

    const SimulationState out = run(sim, initial);
    write_diagnostics_csv(out.diagnostics, ctx.out_dir + "/diagnostics.csv");
    write_field_csv(ctx.out_dir + "/final_field.csv", out.field, out.time);
    std::cout << "simulated to t = " << format_g17(out.time) << " in " << out.steps_taken
              << " steps\n";
    return 0;
}

// ---------------------------------------------------------------------------
// verify-kernel
// ---------------------------------------------------------------------------

int cmd_verify_kernel(const json& raw, const RunContext& ctx) {
    json cfg = resolve_config(
        raw, {"n_phi", "n_theta"},
        {"n_phi", "n_theta", "cutoff_diagonals", "quad_rule", "n_points", "seed",
         "tolerance_benchmark", "tolerance_dual", "tolerance_vanishing", "out_dir"});
    cfg["out_dir"] = ctx.out_dir;
    const QuadratureSpec q = quad_from(cfg);
    write_manifest(ctx, "verify-kernel", cfg);

    const int np = cfg.at("n_phi").get<int>(), nt = cfg.at("n_theta").get<int>();

    // The closed-form benchmark certifies a fixed tolerance, so it may need a
    // finer grid than the working one the dual-route check samples on.
    const int bnp = cfg.contains("bench_n_phi") ? cfg.at("bench_n_phi").get<int>() : np;
    const int bnt = cfg.contains("bench_n_theta") ? cfg.at("bench_n_theta").get<int>() : nt;
    if (bnp < 4 || bnp % 2 != 0) throw ConfigError{"bench_n_phi", "must be even and >= 4"};
    if (bnt < 4 || bnt % 2 != 0) throw ConfigError{"bench_n_theta", "must be even and >= 4"};
    const QuadratureSpec qb =
        (bnp == np && bnt == nt)
            ? q
            : make_quadrature(bnp, bnt, cfg.at("cutoff_diagonals").get<double>(),
                              parse_rule(cfg));

    // Closed-form benchmark: solid-body data against rigid rotation.
    const VorticityField sb = solid_body_field(bnp, bnt);
    const std::vector<TangentVelocity> grid = velocity_grid(sb, qb);
    double err2 = 0.0, ref2 = 0.0;
    for (int j = 0; j < bnt; ++j) {
        const double w = sb.dphi() * sb.dtheta() * std::cos(sb.theta_node(j));
        for (int i = 0; i < bnp; ++i) {
            const Vec3 x = from_angles(sb.phi_node(i), sb.theta_node(j));
            const Vec3 ue = cross(x, Vec3{0.0, 0.0, 1.0});
            const Vec3 d = grid[static_cast<size_t>(j) * bnp + i].cart - ue;
            err2 += w * dot(d, d);
            ref2 += w * dot(ue, ue);
        }
    }
    const double rel_l2 = std::sqrt(err2 / ref2);

    // Velocity snapshot of the benchmark evaluation.
    {
        std::ofstream csv(ctx.out_dir + "/velocity_snapshot.csv");
        if (!csv) throw std::runtime_error("cannot write velocity_snapshot.csv");
        csv << "phi,theta,u_phi,u_theta,residual\n";
        for (int j = 0; j < bnt; ++j)
            for (int i = 0; i < bnp; ++i) {
                const TangentVelocity& v = grid[static_cast<size_t>(j) * bnp + i];
                csv << format_g17(sb.phi_node(i)) << ',' << format_g17(sb.theta_node(j)) << ','
                    << format_g17(v.u_phi) << ',' << format_g17(v.u_theta) << ','
                    << format_g17(v.tangency_residual) << '\n';
            }
    }

    // Dual-route agreement on a random quarter patch, targets clear of every
    // mirror copy of the support so neither route loses a populated node.
    std::mt19937_64 rng(static_cast<unsigned long long>(cfg.at("seed").get<long long>()));
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    const double plo = 0.8, phi_hi = 1.6, tlo = 0.4, thi = 0.9;
    VorticityField patch = make_field(np, nt, Symmetry::odd_odd);
    for (int j = nt / 2; j < nt; ++j)
        for (int i = np / 2; i < np; ++i) {
            const double p = patch.phi_node(i), t = patch.theta_node(j);
            if (p > plo && p < phi_hi && t > tlo && t < thi) {
                const double v = amp(rng);
                patch.at(i, j) = v;
                patch.at(np - 1 - i, j) = -v;
                patch.at(i, nt - 1 - j) = -v;
                patch.at(np - 1 - i, nt - 1 - j) = v;
            }
        }
    std::uniform_real_distribution<double> up(0.05, kPi - 0.1), ut(0.05, kPi / 2.0 - 0.1);
    double dual_max = 0.0;
    int tested = 0;
    const int n_points = cfg.at("n_points").get<int>();
    while (tested < n_points) {
        const double p = up(rng), t = ut(rng);
        const double dp = std::max({plo - std::abs(p), std::abs(p) - phi_hi, 0.0});
        const double dt = std::max({tlo - std::abs(t), std::abs(t) - thi, 0.0});
        if (std::hypot(dp, dt) <= 2.5 * q.singularity_cutoff) continue;
        const TangentVelocity a = velocity_full(patch, p, t, q);
        const TangentVelocity b = velocity_oddodd(patch, p, t, q);
        const double scale = std::max({std::abs(a.u_phi), std::abs(a.u_theta), 1e-8});
        dual_max = std::max({dual_max, std::abs(a.u_phi - b.u_phi) / scale,
                             std::abs(a.u_theta - b.u_theta) / scale});
        ++tested;
    }

    // Symmetry-forced vanishing identities.
    double vanish = 0.0;
    for (double th : {0.25, 0.8, 1.2})
        vanish = std::max(vanish, std::abs(velocity_full(patch, 0.0, th, q).u_phi));
    for (double ph : {0.5, 1.5, 2.7})
        vanish = std::max(vanish, std::abs(velocity_full(patch, ph, 0.0, q).u_theta));
    vanish = std::max(vanish, std::abs(velocity_pole_component(patch, +1, q)));
    vanish = std::max(vanish, std::abs(velocity_pole_component(patch, -1, q)));

    const bool pass = rel_l2 <= cfg.at("tolerance_benchmark").get<double>() &&
                      dual_max <= cfg.at("tolerance_dual").get<double>() &&
                      vanish <= cfg.at("tolerance_vanishing").get<double>();
    json report;
    report["solid_body_rel_l2"] = rel_l2;
    report["dual_route_max_rel"] = dual_max;
    report["vanishing_max"] = vanish;
    report["pass"] = pass;
    write_json(ctx.out_dir + "/kernel_report.json", report);
    std::cout << (pass ? "kernel checks passed" : "kernel checks FAILED") << "\n";
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify-estimates
// ---------------------------------------------------------------------------

AnalyticOddField model_field(const std::string& name) {
    AnalyticOddField f;
    if (name == "smooth") {
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
    if (name == "patch") {
        f.value = [](double, double) { return 1.0; };
        f.sup_norm = 1.0;
        // The sharp edge makes the window gradient unbounded; reporting
        // infinity routes the bound to its logarithmic branch.
        f.grad_sup_window = [](double, double) {
            return std::numeric_limits<double>::infinity();
        };
        return f;
    }
    throw ConfigError{"model", "must be smooth or patch"};
}

int cmd_verify_estimates(const json& raw, const RunContext& ctx) {
    json cfg = resolve_config(
        raw, {"remainder_gain"},
        {"k_min", "k_max", "component", "region", "model", "remainder_gain", "quad_ratio",
         "quad_core", "seed", "out_dir"});
    cfg["out_dir"] = ctx.out_dir;
    write_manifest(ctx, "verify-estimates", cfg);

    const std::string region = cfg.at("region").get<std::string>();
    if (region != "Q" && region != "Qtilde")
        throw ConfigError{"region", "must be Q or Qtilde"};
    const LeadingRegion which = region == "Q" ? LeadingRegion::Q : LeadingRegion::Qtilde;
    const std::string comp = cfg.at("component").get<std::string>();
    if (comp != "phi" && comp != "theta" && comp != "both")
        throw ConfigError{"component", "must be phi, theta, or both"};

    GradedQuadOpts opts;
    opts.ratio = cfg.at("quad_ratio").get<double>();
    opts.core = cfg.at("quad_core").get<double>();
    const AnalyticOddField f = model_field(cfg.at("model").get<std::string>());
    const double gain = cfg.at("remainder_gain").get<double>();
    const int k_min = cfg.at("k_min").get<int>(), k_max = cfg.at("k_max").get<int>();
    if (k_min < 1 || k_max < k_min) throw ConfigError{"k_min", "need 1 <= k_min <= k_max"};

    int n_pass = 0, n_total = 0;
    double max_ratio = 0.0;
    for (const std::string& c : {std::string("phi"), std::string("theta")}) {
        if (comp != "both" && comp != c) continue;
        const VelocityComponent vc =
            c == "phi" ? VelocityComponent::phi : VelocityComponent::theta;
        const RemainderSweep sweep = remainder_sweep(f, k_min, k_max, vc, which, gain, opts);
        std::ofstream csv(ctx.out_dir + "/sweep_" + c + ".csv");
        if (!csv) throw std::runtime_error("cannot write sweep CSV");
        csv << "phi,theta,leading,remainder,bound,pass\n";
        for (size_t i = 0; i < sweep.reports.size(); ++i) {
            const EstimateReport& rep = sweep.reports[i];
            n_total += 1;
            n_pass += rep.pass ? 1 : 0;
            csv << format_g17(sweep.phis[i]) << ',' << format_g17(sweep.thetas[i]) << ','
                << format_g17(rep.leading) << ',' << format_g17(rep.remainder) << ','
                << format_g17(rep.bound) << ',' << (rep.pass ? 1 : 0) << '\n';
        }
        max_ratio = std::max(max_ratio, sweep.max_ratio);
    }
    const bool pass = n_pass == n_total;
    json report;
    report["max_ratio"] = max_ratio;
    report["n_pass"] = n_pass;
    report["n_total"] = n_total;
    report["pass"] = pass;
    write_json(ctx.out_dir + "/estimates_report.json", report);
    std::cout << (pass ? "estimate checks passed" : "estimate checks FAILED")
              << " (max ratio " << format_g17(max_ratio) << ")\n";
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// envelope
// ---------------------------------------------------------------------------

int cmd_envelope(const json& raw, const RunContext& ctx) {
    json cfg = resolve_config(
        raw, {"remainder_gain", "window_slack", "growth_offset", "t_end"},
        {"remainder_gain", "window_slack", "growth_offset", "t_end", "sample_every",
         "seed", "out_dir"});
    if (!cfg.contains("dt")) cfg["dt"] = 0.05;
    cfg["out_dir"] = ctx.out_dir;
    write_manifest(ctx, "envelope", cfg);

    ConstructionConstants consts =
        derive_constants(cfg.at("remainder_gain").get<double>(),
                         cfg.at("window_slack").get<double>());
    consts.CI = cfg.at("growth_offset").get<double>();
    EnvelopeParams params;
    params.consts = consts;

    const double dt = cfg.at("dt").get<double>();
    const double t_end = cfg.at("t_end").get<double>();
    const int every = cfg.at("sample_every").get<int>();
    if (dt <= 0.0) throw ConfigError{"dt", "must be positive"};
    if (t_end <= 0.0) throw ConfigError{"t_end", "must be positive"};
    if (every < 1) throw ConfigError{"sample_every", "must be >= 1"};

    std::ofstream csv(ctx.out_dir + "/envelope.csv");
    if (!csv) throw std::runtime_error("cannot write envelope.csv");
    csv << "t,alpha,eps,k,kprime\n";
    EnvelopeState st = envelope_init(consts);
    auto emit = [&](const EnvelopeState& s) {
        csv << format_g17(s.t) << ',' << format_g17(s.alpha()) << ',' << format_g17(s.eps())
            << ',' << format_g17(s.k) << ',' << format_g17(envelope_dk_dt(s.k, consts)) << '\n';
    };
    emit(st);
    long long steps = 0;
    const double t_tol = 1e-12 * std::max(1.0, t_end);
    while (st.t < t_end - t_tol) {
        st = envelope_step(st, std::min(dt, t_end - st.t), params);
        ++steps;
        if (steps % every == 0 || st.t >= t_end - t_tol) emit(st);
    }
    std::cout << "envelope integrated to t = " << format_g17(st.t)
              << ", k/t = " << format_g17(st.k / std::max(st.t, 1e-300)) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------------

int cmd_constants(const json& raw, const RunContext& ctx) {
    json cfg = resolve_config(raw, {"remainder_gain", "window_slack"},
                              {"remainder_gain", "window_slack", "seed", "out_dir"});
    cfg["out_dir"] = ctx.out_dir;
    write_manifest(ctx, "constants", cfg);

    const ConstructionConstants c =
        derive_constants(cfg.at("remainder_gain").get<double>(),
                         cfg.at("window_slack").get<double>());
    json doc;
    doc["remainder_gain"] = c.C1;
    doc["window_slack"] = c.Cr;
    doc["s0"] = c.s0;
    doc["s0_log"] = std::log(c.s0);
    doc["outer_speed_gain"] = c.Cprime;
    doc["outer_gap_min"] = c.rho0;
    doc["boundary_offset"] = c.C2;
    doc["contraction_gain"] = c.C3;
    doc["shrink_offset"] = c.Cpp;
    write_json(ctx.out_dir + "/constants.json", doc);
    std::cout << "constants written (s0 = " << format_g17(c.s0) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// conjugacy
// ---------------------------------------------------------------------------

int cmd_conjugacy(const json& raw, const RunContext& ctx) {
    json cfg = resolve_config(
        raw, {"n_phi", "n_theta", "dt", "t_end", "rotation_omega"},
        {"n_phi", "n_theta", "dt", "t_end", "rotation_omega", "epsilon0", "transition_width",
         "quad_rule", "cutoff_diagonals", "diagnostics_every", "tolerance_conjugacy", "seed",
         "out_dir"});
    if (!cfg.contains("initial_kind")) cfg["initial_kind"] = "smooth_test";
    cfg["out_dir"] = ctx.out_dir;
    check_grid(cfg);
    write_manifest(ctx, "conjugacy", cfg);

    const int np = cfg.at("n_phi").get<int>(), nt = cfg.at("n_theta").get<int>();
    const std::string kind = cfg.at("initial_kind").get<std::string>();
    VorticityField omega0;
    if (kind == "smooth_test") {
        omega0 = smooth_test_field(np, nt);
    } else if (kind == "sandwiched_bump") {
        InitialDataSpec spec;
        spec.epsilon0 = cfg.at("epsilon0").get<double>();
        spec.transition_width = cfg.at("transition_width").get<double>();
        try {
            omega0 = build_initial_data(spec, np, nt);
        } catch (const std::invalid_argument& e) {
            throw ConfigError{"epsilon0", e.what()};
        }
    } else {
        throw ConfigError{"initial_kind", "must be smooth_test or sandwiched_bump"};
    }
    const double omega_rate = cfg.at("rotation_omega").get<double>();
    const VorticityField zeta0 = absolute_vorticity(omega0, omega_rate);

    SimulationConfig sim;
    sim.n_phi = np;
    sim.n_theta = nt;
    sim.dt = cfg.at("dt").get<double>();
    sim.quad = quad_from(cfg);
    sim.diagnostics_every = cfg.at("diagnostics_every").get<int>();
    if (sim.dt <= 0.0) throw ConfigError{"dt", "must be positive"};
    const ConjugacyReport rep =
        conjugacy_check(zeta0, omega_rate, cfg.at("t_end").get<double>(), sim);

    std::ofstream csv(ctx.out_dir + "/conjugacy.csv");
    if (!csv) throw std::runtime_error("cannot write conjugacy.csv");
    csv << "t,rel_discrepancy,grad_norm_diff\n";
    for (size_t k = 0; k < rep.times.size(); ++k)
        csv << format_g17(rep.times[k]) << ',' << format_g17(rep.rel_discrepancy[k]) << ','
            << format_g17(rep.grad_norm_diff[k]) << '\n';

    const bool pass = rep.max_rel_discrepancy <= cfg.at("tolerance_conjugacy").get<double>();
    json report;
    report["max_rel_discrepancy"] = rep.max_rel_discrepancy;
    report["max_grad_norm_diff"] = rep.max_grad_norm_diff;
    report["pass"] = pass;
    write_json(ctx.out_dir + "/conjugacy_report.json", report);
    std::cout << (pass ? "conjugacy check passed" : "conjugacy check FAILED") << " (max rel "
              << format_g17(rep.max_rel_discrepancy) << ")\n";
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vorticity transport laboratory on the unit sphere"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* desc;
        int (*fn)(const json&, const RunContext&);
    };
    const std::vector<Sub> subs = {
        {"simulate", "advect vorticity and record growth diagnostics", cmd_simulate},
        {"verify-kernel", "velocity benchmarks and dual-route agreement", cmd_verify_kernel},
        {"verify-estimates", "remainder sweep against the fitted gain", cmd_verify_estimates},
        {"envelope", "integrate the contraction/shrink envelope system", cmd_envelope},
        {"constants", "derive the bookkeeping constants from fitted gains", cmd_constants},
        {"conjugacy", "rotating-frame versus shifted inertial twin runs", cmd_conjugacy},
    };

    std::string config_path = "fixtures/default.json";
    std::string out_dir_flag;
    std::string sweep_mode = "log";
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.desc);
        sub->add_option("--config", config_path, "flat JSON config file")
            ->capture_default_str();
        sub->add_option("--out-dir", out_dir_flag, "override the config's out_dir");
        if (std::string(s.name) == "verify-estimates")
            sub->add_option("--sweep", sweep_mode, "sweep point spacing")
                ->check(CLI::IsMember({"log"}))
                ->capture_default_str();
        // final_callback: fires only after the whole command line validates,
        // so a stray argument is a usage error before any work starts.
        sub->final_callback([&, fn = s.fn] {
            const json cfg = load_config(config_path);
            RunContext ctx;
            ctx.config_path = config_path;
            ctx.out_dir = resolve_out_dir(cfg, out_dir_flag);
            const int rc = fn(cfg, ctx);
            if (rc != 0) throw CLI::RuntimeError(rc);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::RuntimeError& e) {
        return e.get_exit_code();
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.key << ": " << e.what << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
