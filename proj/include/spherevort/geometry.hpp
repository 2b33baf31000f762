#pragma once

#include <array>
#include <cmath>

namespace spherevort {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGeomTol = 1e-12;

// Cartesian 3-vector with just the operations the library needs.
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

// Chart angles: longitude phi in [-pi, pi), latitude theta in [-pi/2, pi/2].
struct ChartAngles {
    double phi = 0.0;
    double theta = 0.0;
};

// Wraps phi into [-pi, pi).
double wrap_phi(double phi);

// Folds a chart position whose theta strayed past a pole back into the chart:
// theta > pi/2 maps to (phi + pi, pi - theta), mirrored for theta < -pi/2,
// then phi is wrapped. Idempotent on in-chart input.
ChartAngles chart_fold(double phi, double theta);

// Unit sphere embedding x = (cos t cos p, cos t sin p, sin t).
Vec3 from_angles(double phi, double theta);
Vec3 from_angles(const ChartAngles& a);

// Inverse chart map; phi = 0 at the poles by convention.
ChartAngles to_angles(const Vec3& p);

// Euclidean distance in R^3 between two unit vectors (and its square,
// computed from coordinate differences so it stays accurate for very
// close pairs).
double chord(const Vec3& p, const Vec3& q);
double chord2(const Vec3& p, const Vec3& q);

// Reflections: tilde negates x2 (phi -> -phi), bar negates x3 (theta -> -theta).
Vec3 reflect_tilde(const Vec3& p);
Vec3 reflect_bar(const Vec3& p);

// Rotation about e3 by alpha: shifts longitude by alpha.
Vec3 rotate_z(const Vec3& p, double alpha);

// Local orthonormal frame of the chart. Undefined at the poles; callers
// working near |theta| = pi/2 must stay in Cartesian form.
Vec3 frame_e_phi(double phi);
Vec3 frame_e_theta(double phi, double theta);

// Removes the radial component of v at the unit vector p.
Vec3 tangent_project(const Vec3& p, const Vec3& v);

// Normalizes p back onto the unit sphere.
Vec3 renormalize(const Vec3& p);

}  // namespace spherevort
