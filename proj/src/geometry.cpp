#include "spherevort/geometry.hpp"

namespace spherevort {

double wrap_phi(double phi) {
    double w = std::fmod(phi + kPi, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    return w - kPi;
}

ChartAngles chart_fold(double phi, double theta) {
    // A characteristic can overshoot a pole at most marginally per step, but
    // loop for robustness with arbitrary input.
    while (theta > kPi / 2.0 || theta < -kPi / 2.0) {
        if (theta > kPi / 2.0) {
            theta = kPi - theta;
        } else {
            theta = -kPi - theta;
        }
        phi += kPi;
    }
    return {wrap_phi(phi), theta};
}

Vec3 from_angles(double phi, double theta) {
    const double ct = std::cos(theta);
    return {ct * std::cos(phi), ct * std::sin(phi), std::sin(theta)};
}

Vec3 from_angles(const ChartAngles& a) { return from_angles(a.phi, a.theta); }

ChartAngles to_angles(const Vec3& p) {
    const double r = std::hypot(p.x, p.y);
    if (r < kGeomTol) return {0.0, p.z >= 0.0 ? kPi / 2.0 : -kPi / 2.0};
    return {wrap_phi(std::atan2(p.y, p.x)), std::atan2(p.z, r)};
}

double chord2(const Vec3& p, const Vec3& q) {
    const Vec3 d = p - q;
    return dot(d, d);
}

double chord(const Vec3& p, const Vec3& q) { return std::sqrt(chord2(p, q)); }

Vec3 reflect_tilde(const Vec3& p) { return {p.x, -p.y, p.z}; }

Vec3 reflect_bar(const Vec3& p) { return {p.x, p.y, -p.z}; }

Vec3 rotate_z(const Vec3& p, double alpha) {
    const double c = std::cos(alpha), s = std::sin(alpha);
    return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

Vec3 frame_e_phi(double phi) { return {-std::sin(phi), std::cos(phi), 0.0}; }

Vec3 frame_e_theta(double phi, double theta) {
    const double st = std::sin(theta);
    return {-st * std::cos(phi), -st * std::sin(phi), std::cos(theta)};
}

Vec3 tangent_project(const Vec3& p, const Vec3& v) { return v - dot(v, p) * p; }

Vec3 renormalize(const Vec3& p) {
    const double n = norm(p);
    return n > 0.0 ? p * (1.0 / n) : Vec3{1.0, 0.0, 0.0};
}

}  // namespace spherevort
