#include "spherevort/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "spherevort/construction.hpp"

namespace spherevort {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Quintic smoothstep: 0 below 0, 1 above 1, C^2 across the joins.
double sstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
    return 0.5 * (2.0 * p1 + t * ((-p0 + p2) +
                  t * ((2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) +
                  t * (-p0 + 3.0 * p1 - 3.0 * p2 + p3))));
}

int wrap_index(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

}  // namespace

double VorticityField::value_fold(int i, int j) const {
    while (j < 0 || j >= n_theta) {
        if (j < 0) {
            j = -1 - j;
        } else {
            j = 2 * n_theta - 1 - j;
        }
        i += n_phi / 2;
    }
    return at(wrap_index(i, n_phi), j);
}

VorticityField make_field(int n_phi, int n_theta, Symmetry symmetry, Interp interp) {
    require(n_phi >= 4 && n_theta >= 4, "grid sizes must be at least 4");
    require(n_phi % 2 == 0 && n_theta % 2 == 0, "grid sizes must be even");
    VorticityField f;
    f.n_phi = n_phi;
    f.n_theta = n_theta;
    f.symmetry = symmetry;
    f.interp = interp;
    f.val.assign(static_cast<size_t>(n_phi) * n_theta, 0.0);
    return f;
}

double sample(const VorticityField& f, double phi, double theta) {
    const double u = (wrap_phi(phi) + kPi) / f.dphi() - 0.5;
    const double v = (theta + kPi / 2.0) / f.dtheta() - 0.5;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    const double a = u - i0, b = v - j0;
    if (f.interp == Interp::bilinear) {
        const double w00 = f.value_fold(i0, j0), w10 = f.value_fold(i0 + 1, j0);
        const double w01 = f.value_fold(i0, j0 + 1), w11 = f.value_fold(i0 + 1, j0 + 1);
        return (1 - a) * ((1 - b) * w00 + b * w01) + a * ((1 - b) * w10 + b * w11);
    }
    double rows[4];
    for (int r = -1; r <= 2; ++r) {
        rows[r + 1] = catmull_rom(f.value_fold(i0 - 1, j0 + r), f.value_fold(i0, j0 + r),
                                  f.value_fold(i0 + 1, j0 + r), f.value_fold(i0 + 2, j0 + r), a);
    }
    return catmull_rom(rows[0], rows[1], rows[2], rows[3], b);
}

double sample_clamped(const VorticityField& f, double phi, double theta) {
    const double u = (wrap_phi(phi) + kPi) / f.dphi() - 0.5;
    const double v = (theta + kPi / 2.0) / f.dtheta() - 0.5;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    const double a = u - i0, b = v - j0;
    double rows[4];
    for (int r = -1; r <= 2; ++r) {
        rows[r + 1] = catmull_rom(f.value_fold(i0 - 1, j0 + r), f.value_fold(i0, j0 + r),
                                  f.value_fold(i0 + 1, j0 + r), f.value_fold(i0 + 2, j0 + r), a);
    }
    const double raw = catmull_rom(rows[0], rows[1], rows[2], rows[3], b);
    const double w00 = f.value_fold(i0, j0), w10 = f.value_fold(i0 + 1, j0);
    const double w01 = f.value_fold(i0, j0 + 1), w11 = f.value_fold(i0 + 1, j0 + 1);
    const double lo = std::min(std::min(w00, w10), std::min(w01, w11));
    const double hi = std::max(std::max(w00, w10), std::max(w01, w11));
    return std::clamp(raw, lo, hi);
}

double antisymmetrize(VorticityField& f) {
    double residual = 0.0;
    std::vector<double> out(f.val.size());
    for (int j = 0; j < f.n_theta; ++j) {
        const int mj = f.n_theta - 1 - j;
        for (int i = 0; i < f.n_phi; ++i) {
            const int mi = f.n_phi - 1 - i;
            // Difference-of-differences grouping: both mirror maps negate each
            // inner difference exactly, so the projection is odd to the last bit.
            const double w =
                0.25 * ((f.at(i, j) - f.at(mi, j)) - (f.at(i, mj) - f.at(mi, mj)));
            out[static_cast<size_t>(j) * f.n_phi + i] = w;
            residual = std::max(residual, std::abs(w - f.at(i, j)));
        }
    }
    f.val = std::move(out);
    return residual;
}

double symmetry_residual(const VorticityField& f) {
    double residual = 0.0;
    for (int j = 0; j < f.n_theta; ++j) {
        const int mj = f.n_theta - 1 - j;
        for (int i = 0; i < f.n_phi; ++i) {
            const int mi = f.n_phi - 1 - i;
            const double w =
                0.25 * ((f.at(i, j) - f.at(mi, j)) - (f.at(i, mj) - f.at(mi, mj)));
            residual = std::max(residual, std::abs(w - f.at(i, j)));
        }
    }
    return residual;
}

double integral(const VorticityField& f) {
    const double cell = f.dphi() * f.dtheta();
    double total = 0.0;
    for (int j = 0; j < f.n_theta; ++j) {
        const double w = cell * std::cos(f.theta_node(j));
        double row = 0.0;
        for (int i = 0; i < f.n_phi; ++i) row += f.at(i, j);
        total += w * row;
    }
    return total;
}

double gauss_residual(const VorticityField& f) { return std::abs(integral(f)); }

double lp_norm(const VorticityField& f, double p) {
    require(p >= 1.0, "p must be at least 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.val) m = std::max(m, std::abs(v));
        return m;
    }
    const double cell = f.dphi() * f.dtheta();
    double total = 0.0;
    for (int j = 0; j < f.n_theta; ++j) {
        const double w = cell * std::cos(f.theta_node(j));
        double row = 0.0;
        for (int i = 0; i < f.n_phi; ++i) row += std::pow(std::abs(f.at(i, j)), p);
        total += w * row;
    }
    return std::pow(total, 1.0 / p);
}

namespace {

double grad_mag_at(const VorticityField& f, int i, int j) {
    const int n = f.n_phi;
    const double dp = (f.at(wrap_index(i + 1, n), j) - f.at(wrap_index(i - 1, n), j)) /
                      (2.0 * f.dphi());
    double dt;
    if (j == 0) {
        dt = (-3.0 * f.at(i, 0) + 4.0 * f.at(i, 1) - f.at(i, 2)) / (2.0 * f.dtheta());
    } else if (j == f.n_theta - 1) {
        dt = (3.0 * f.at(i, j) - 4.0 * f.at(i, j - 1) + f.at(i, j - 2)) / (2.0 * f.dtheta());
    } else {
        dt = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * f.dtheta());
    }
    return std::hypot(dp, dt);
}

}  // namespace

double grad_sup_norm(const VorticityField& f) {
    require(f.n_phi >= 4 && f.n_theta >= 4, "grid too small for gradients");
    double m = 0.0;
    for (int j = 0; j < f.n_theta; ++j)
        for (int i = 0; i < f.n_phi; ++i) m = std::max(m, grad_mag_at(f, i, j));
    return m;
}

double grad_sup_window(const VorticityField& f, double phi_max, double theta_max) {
    double m = 0.0;
    for (int j = 0; j < f.n_theta; ++j) {
        const double th = f.theta_node(j);
        if (th < 0.0 || th > theta_max) continue;
        for (int i = 0; i < f.n_phi; ++i) {
            const double ph = f.phi_node(i);
            if (ph < 0.0 || ph > phi_max) continue;
            m = std::max(m, grad_mag_at(f, i, j));
        }
    }
    return m;
}

bool in_trapping_region(double phi, double theta, double eps) {
    constexpr double kInvE = 0.36787944117144233;  // 1/e
    if (phi <= eps || phi >= kInvE) return false;
    if (theta <= 0.0 || theta >= 1.0) return false;
    return theta < g_eval(phi);
}

VorticityField build_initial_data(const InitialDataSpec& spec, int n_phi, int n_theta) {
    constexpr double kInvE = 0.36787944117144233;
    require(spec.kind != InitialDataSpec::Kind::custom,
            "custom initial data is constructed directly, not through the builder");
    VorticityField f = make_field(n_phi, n_theta, Symmetry::odd_odd, Interp::bicubic);
    if (spec.kind == InitialDataSpec::Kind::patch_sign) {
        for (int j = 0; j < n_theta; ++j)
            for (int i = 0; i < n_phi; ++i) {
                const double sp = f.phi_node(i) > 0.0 ? 1.0 : -1.0;
                const double st = f.theta_node(j) > 0.0 ? 1.0 : -1.0;
                f.at(i, j) = sp * st;
            }
        return f;
    }
    const double e0 = spec.epsilon0, w = spec.transition_width;
    require(e0 > 0.0 && e0 < kInvE, "epsilon0 must lie in (0, 1/e)");
    require(w > 0.0, "transition width must be positive");
    // The top and right ramps must die out before the quarter-chart boundary,
    // otherwise the bump cannot vanish there and the sandwich is infeasible.
    require(1.0 + w < kPi / 2.0 && kInvE + w < kPi, "transition width too large");
    // Left foot: quarter-sine rise from the meridian, reaching 1 exactly at
    // epsilon0.  With seam jump K = 1/dtheta, the profile keeps
    // (L K)^2 + L'^2 <= K^2 pointwise whenever pi/(2 epsilon0) <= K, so the
    // initial gradient sup sits at the equator-seam value instead of a
    // grid-alignment corner spike that the first resampling would erase.
    // Its odd extension through phi = 0 is analytic.
    // Fill the open quarter, then mirror by exact negation so the declared
    // odd-odd symmetry holds bitwise.
    for (int j = n_theta / 2; j < n_theta; ++j) {
        const double ta = f.theta_node(j);
        const int mj = n_theta - 1 - j;
        for (int i = n_phi / 2; i < n_phi; ++i) {
            const double pa = f.phi_node(i);
            const int mi = n_phi - 1 - i;
            const double left = pa >= e0 ? 1.0 : std::sin(kPi * pa / (2.0 * e0));
            const double right = 1.0 - sstep((pa - kInvE) / w);
            const double cap = std::min(g_eval_extended(pa), 1.0);
            const double top = 1.0 - sstep((ta - cap) / w);
            const double v = left * right * top;
            f.at(i, j) = v;
            f.at(mi, j) = -v;
            f.at(i, mj) = -v;
            f.at(mi, mj) = v;
        }
    }
    return f;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string sidecar_path(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
        return path.substr(0, path.size() - 4) + ".json";
    return path + ".json";
}

}  // namespace

void write_field_csv(const std::string& path, const VorticityField& f, double time) {
    std::ofstream out(path);
    require(out.good(), "cannot open snapshot path for writing");
    out << "phi,theta,omega\n";
    for (int j = 0; j < f.n_theta; ++j)
        for (int i = 0; i < f.n_phi; ++i)
            out << format_g17(f.phi_node(i)) << ',' << format_g17(f.theta_node(j)) << ','
                << format_g17(f.at(i, j)) << '\n';
    nlohmann::json side;
    side["n_phi"] = f.n_phi;
    side["n_theta"] = f.n_theta;
    side["symmetry"] = f.symmetry == Symmetry::odd_odd ? "odd_odd" : "none";
    side["time"] = time;
    std::ofstream sj(sidecar_path(path));
    sj << side.dump(2) << '\n';
}

VorticityField read_field_csv(const std::string& path) {
    std::ifstream sj(sidecar_path(path));
    require(sj.good(), "snapshot sidecar missing");
    nlohmann::json side = nlohmann::json::parse(sj);
    VorticityField f = make_field(side.at("n_phi").get<int>(), side.at("n_theta").get<int>(),
                                  side.at("symmetry").get<std::string>() == "odd_odd"
                                      ? Symmetry::odd_odd
                                      : Symmetry::none);
    std::ifstream in(path);
    require(in.good(), "cannot open snapshot path for reading");
    std::string line;
    std::getline(in, line);  // header
    for (int j = 0; j < f.n_theta; ++j)
        for (int i = 0; i < f.n_phi; ++i) {
            require(static_cast<bool>(std::getline(in, line)), "snapshot truncated");
            const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
            require(c1 != std::string::npos && c2 != std::string::npos, "malformed snapshot row");
            f.at(i, j) = std::strtod(line.c_str() + c2 + 1, nullptr);
        }
    return f;
}

}  // namespace spherevort
