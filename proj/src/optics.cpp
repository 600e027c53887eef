#include "phpol/optics.hpp"

#include <algorithm>
#include <cmath>

namespace phpol::optics {

UnitVector3 normal_from_gradient(const Gradient2& g) {
    return UnitVector3::normalised(-g.zx, -g.zy, 1.0);
}

double rho_from_zenith(double theta, const RefractiveIndex& eta) {
    if (!(theta >= 0.0) || !(theta < M_PI / 2))
        throw ValidationError("zenith_out_of_range", "zenith angle must lie in [0, pi/2)");
    const double n = eta.value();
    const double s2 = std::sin(theta) * std::sin(theta);
    const double num = (n - 1.0 / n) * (n - 1.0 / n) * s2;
    const double den = 2.0 + 2.0 * n * n - (n + 1.0 / n) * (n + 1.0 / n) * s2 +
                       4.0 * std::cos(theta) * std::sqrt(n * n - s2);
    return num / den;
}

double rho_max(const RefractiveIndex& eta) {
    const double n2 = eta.value() * eta.value();
    return (n2 - 1.0) / (n2 + 1.0);
}

namespace {

double f_closed_form(double r, double n) {
    const double n2 = n * n;
    const double n4 = n2 * n2;
    const double r2 = r * r;
    const double num = n4 * (1.0 - r2) + 2.0 * n2 * (2.0 * r2 + r - 1.0) + r2 + 2.0 * r -
                       4.0 * n2 * n * r * std::sqrt(1.0 - r2) + 1.0;
    const double den = (r + 1.0) * (r + 1.0) * (n4 + 1.0) + 2.0 * n2 * (3.0 * r2 + 2.0 * r - 1.0);
    // The radicand can dip a few ulps below zero as rho approaches rho_max.
    return std::sqrt(std::max(0.0, num / den));
}

}  // namespace

double f_of_rho(double rho, const RefractiveIndex& eta) {
    if (!(rho >= 0.0) || !(rho < rho_max(eta)))
        throw ValidationError("rho_out_of_range", "degree of polarisation outside the invertible range");
    return f_closed_form(rho, eta.value());
}

double f_of_rho_clamped(double rho, const RefractiveIndex& eta, bool* clamped) {
    const double hi = rho_max(eta);
    bool moved = false;
    if (!(rho >= 0.0)) {
        rho = 0.0;
        moved = true;
    } else if (rho >= hi) {
        rho = hi;
        moved = true;
    }
    if (clamped) *clamped = moved;
    return f_closed_form(rho, eta.value());
}

double lambert_intensity(const Gradient2& g, const UnitVector3& s, double albedo) {
    const double shade = (-g.zx * s.x() - g.zy * s.y() + s.z()) /
                         std::sqrt(1.0 + g.zx * g.zx + g.zy * g.zy);
    return albedo * std::max(0.0, shade);
}

}  // namespace phpol::optics
