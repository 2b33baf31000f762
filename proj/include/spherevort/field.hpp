#pragma once

#include <string>
#include <vector>

#include "spherevort/geometry.hpp"

namespace spherevort {

enum class Symmetry { none, odd_odd };
enum class Interp { bilinear, bicubic };

// Scalar samples on a uniform cell-centered (phi, theta) grid:
//   phi_i   = -pi   + (i + 1/2) * dphi,   i = 0..n_phi-1,   dphi = 2*pi/n_phi
//   theta_j = -pi/2 + (j + 1/2) * dtheta, j = 0..n_theta-1, dtheta = pi/n_theta
// Cell-centered placement keeps the poles off the grid and makes the two
// mirror maps exact index permutations, so declared odd-odd symmetry holds to
// the last bit. Grid sizes must be even (mirrors and the pole fold need it).
struct VorticityField {
    int n_phi = 0;
    int n_theta = 0;
    Symmetry symmetry = Symmetry::none;
    Interp interp = Interp::bilinear;
    std::vector<double> val;  // theta-outer rows: index j * n_phi + i

    double dphi() const { return 2.0 * kPi / n_phi; }
    double dtheta() const { return kPi / n_theta; }
    double phi_node(int i) const { return -kPi + (i + 0.5) * dphi(); }
    double theta_node(int j) const { return -kPi / 2.0 + (j + 0.5) * dtheta(); }
    double& at(int i, int j) { return val[static_cast<size_t>(j) * n_phi + i]; }
    double at(int i, int j) const { return val[static_cast<size_t>(j) * n_phi + i]; }

    // Value with periodic wrap in i and the pole fold in j: continuing past a
    // pole lands on the antipodal meridian of the same physical field.
    double value_fold(int i, int j) const;
};

VorticityField make_field(int n_phi, int n_theta, Symmetry symmetry = Symmetry::none,
                          Interp interp = Interp::bilinear);

// Interpolated value at an arbitrary chart position (bilinear or bicubic per
// the field's interp setting); reproduces stored values at grid nodes.
double sample(const VorticityField& f, double phi, double theta);

// Bicubic sample clamped to the range of the four surrounding nodes
// (monotone-limited; used by the transport scheme to conserve sup bounds).
double sample_clamped(const VorticityField& f, double phi, double theta);

// Projects the grid onto the odd-odd class (odd in phi and in theta) and
// returns the max absolute change — the pre-enforcement symmetry residual.
double antisymmetrize(VorticityField& f);

// Max distance of the grid from its odd-odd projection, without modifying.
double symmetry_residual(const VorticityField& f);

// Integral of the field against the area element cos(theta) dphi dtheta.
double integral(const VorticityField& f);

// |integral| — the Gauss-constraint residual.
double gauss_residual(const VorticityField& f);

// L^p norm over the sphere, p in [1, inf]; pass p = infinity for the sup.
double lp_norm(const VorticityField& f, double p);

// Max over grid nodes of |(d_phi, d_theta)| by centered second-order
// differences (periodic in phi, one-sided at the theta edges).
double grad_sup_norm(const VorticityField& f);

// Same maximum restricted to nodes with 0 <= phi <= phi_max and
// 0 <= theta <= theta_max (the window that remainder bounds reference).
double grad_sup_window(const VorticityField& f, double phi_max, double theta_max);

// Smooth bump sandwiched between the indicator of the trapping region and the
// indicator of the quarter chart, extended odd-odd to the whole sphere.
struct InitialDataSpec {
    enum class Kind { sandwiched_bump, patch_sign, custom };
    double epsilon0 = 0.0;          // left end of the trapped phi range
    double transition_width = 0.0;  // mollification scale of the bump edges
    Kind kind = Kind::sandwiched_bump;
};

// Builds the field on an n_phi x n_theta grid. For sandwiched_bump the grid
// values satisfy, at every node of the open quarter (0,pi)x(0,pi/2),
//   indicator(trapping region) <= value <= 1,
// with smoothstep collars of the given width past the top and right edges and
// a quarter-sine foot rising from the meridian to the left edge. patch_sign
// fills the whole quarter with 1 (sharp patch). Throws on an infeasible
// sandwich or kind = custom.
VorticityField build_initial_data(const InitialDataSpec& spec, int n_phi, int n_theta);

// Membership test for the trapping region: eps < phi < 1/e, 0 < theta < g(phi),
// intersected with the unit chart square.
bool in_trapping_region(double phi, double theta, double eps);

// Snapshot I/O: CSV `phi,theta,omega` in theta-outer row order, plus a JSON
// sidecar (same path with extension .json) holding grid sizes, symmetry, time.
void write_field_csv(const std::string& path, const VorticityField& f, double time);
VorticityField read_field_csv(const std::string& path);

// All CSV output in this project renders numbers with this format.
std::string format_g17(double v);

}  // namespace spherevort
