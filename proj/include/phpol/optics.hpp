#pragma once

#include "phpol/types.hpp"

namespace phpol::optics {

/// Unit outward normal [-zx, -zy, 1] / sqrt(1 + |grad z|^2).
UnitVector3 normal_from_gradient(const Gradient2& g);

/// Degree of diffuse polarisation for zenith angle `theta` (radians, [0, pi/2)).
/// Throws ValidationError outside that range.
double rho_from_zenith(double theta, const RefractiveIndex& eta);

/// Supremum of the diffuse degree of polarisation, reached at grazing view:
/// (eta^2 - 1) / (eta^2 + 1).
double rho_max(const RefractiveIndex& eta);

/// Cosine of the zenith angle from the degree of diffuse polarisation, by the
/// closed-form inverse. Valid for rho in [0, rho_max(eta)); throws otherwise.
double f_of_rho(double rho, const RefractiveIndex& eta);

/// f_of_rho with rho clamped into the invertible range. `clamped` is set when
/// the input had to be moved.
double f_of_rho_clamped(double rho, const RefractiveIndex& eta, bool* clamped = nullptr);

/// Lambertian intensity albedo * max(0, n . s) written in terms of the gradient.
double lambert_intensity(const Gradient2& g, const UnitVector3& s, double albedo);

/// Zenith angle cap (radians) applied wherever tan(theta) is formed.
inline constexpr double kMaxZenith = 89.5 * M_PI / 180.0;

}  // namespace phpol::optics
